#include "nasenc/search_space.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace nasenc {

std::int64_t SearchSpaceSpec::max_paths() const {
  // paths[j] = number of paths from node 0 to node j in the complete DAG
  std::vector<std::int64_t> paths(n_nodes, 0);
  paths[0] = 1;
  for (int j = 1; j < n_nodes; ++j)
    for (int i = 0; i < j; ++i) paths[j] += paths[i];
  return paths[n_nodes - 1];
}

SpecPtr make_spec(int n_nodes, int max_edges, int num_ops,
                  std::vector<std::string> op_names) {
  if (n_nodes < 2 || n_nodes > kMaxNodes)
    throw ConfigError("n_nodes must lie in [2, " + std::to_string(kMaxNodes) + "]");
  const int slots = n_nodes * (n_nodes - 1) / 2;
  if (max_edges < 1 || max_edges > slots)
    throw ConfigError("max_edges must lie in [1, n(n-1)/2]");
  if (num_ops < 1 || num_ops > 250) throw ConfigError("num_ops must lie in [1, 250]");
  if (op_names.empty()) {
    for (int o = 0; o < num_ops; ++o) op_names.push_back("op" + std::to_string(o));
  }
  if (static_cast<int>(op_names.size()) != num_ops)
    throw ConfigError("op_names must list exactly num_ops labels");
  auto spec = std::make_shared<SearchSpaceSpec>();
  spec->n_nodes = n_nodes;
  spec->max_edges = max_edges;
  spec->num_ops = num_ops;
  spec->op_names = std::move(op_names);
  return spec;
}

std::pair<int, int> edge_at(int n, int index) {
  for (int i = 0; i < n - 1; ++i) {
    const int row = n - i - 1;
    if (index < row) return {i, i + 1 + index};
    index -= row;
  }
  throw Error("edge index out of range");
}

// ---------------------------------------------------------------------------
// Architecture

Architecture::Architecture(SpecPtr spec, std::vector<std::uint64_t> succ,
                           std::vector<int> ops, bool checked)
    : spec_(std::move(spec)), succ_(std::move(succ)), ops_(std::move(ops)) {
  if (!spec_) throw Error("architecture needs a search space");
  if (checked) return;
  const int n = spec_->n_nodes;
  if (static_cast<int>(succ_.size()) != n) throw Error("successor table has wrong size");
  if (static_cast<int>(ops_.size()) != n - 2) throw Error("expected n-2 interior operations");
  for (int i = 0; i < n; ++i) {
    const std::uint64_t allowed = (i + 1 >= 64) ? 0 : (~0ULL << (i + 1));
    const std::uint64_t in_range = n == 64 ? ~0ULL : ((1ULL << n) - 1);
    if (succ_[i] & ~(allowed & in_range)) throw Error("edges must satisfy i < j < n");
  }
  for (int o : ops_)
    if (o < 0 || o >= spec_->num_ops) throw Error("operation index out of range");
  if (edge_count() > spec_->max_edges) throw NotRealizable("too many edges for search space");
}

Architecture::Architecture(SpecPtr spec, std::span<const Edge> edges, std::vector<int> ops)
    : Architecture(spec, [&] {
        if (!spec) throw Error("architecture needs a search space");
        std::vector<std::uint64_t> succ(spec->n_nodes, 0);
        for (auto [i, j] : edges) {
          if (i < 0 || j <= i || j >= spec->n_nodes) throw Error("edges must satisfy i < j < n");
          succ[i] |= 1ULL << j;
        }
        return succ;
      }(), std::move(ops), false) {}

Architecture Architecture::from_masks(SpecPtr spec, std::vector<std::uint64_t> succ,
                                      std::vector<int> ops) {
  return Architecture(std::move(spec), std::move(succ), std::move(ops), false);
}

int Architecture::edge_count() const {
  int count = 0;
  for (auto s : succ_) count += std::popcount(s);
  return count;
}

std::vector<Edge> Architecture::edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < n(); ++i)
    for (std::uint64_t s = succ_[i]; s; s &= s - 1) out.emplace_back(i, std::countr_zero(s));
  return out;
}

std::string Architecture::to_text() const {
  const int nn = n();
  std::string out = std::to_string(nn) + ";";
  for (int i = 0; i < nn; ++i)
    for (int j = i + 1; j < nn; ++j) out.push_back(has_edge(i, j) ? '1' : '0');
  out.push_back(';');
  for (std::size_t k = 0; k < ops_.size(); ++k) {
    if (k) out.push_back(',');
    out += std::to_string(ops_[k]);
  }
  return out;
}

Architecture Architecture::from_text(SpecPtr spec, std::string_view text) {
  const auto first = text.find(';');
  const auto second = first == std::string_view::npos ? first : text.find(';', first + 1);
  if (second == std::string_view::npos) throw Error("architecture text needs two ';'");
  int n = 0;
  const auto head = text.substr(0, first);
  if (std::from_chars(head.data(), head.data() + head.size(), n).ec != std::errc{} ||
      n != spec->n_nodes)
    throw Error("architecture node count does not match search space");
  const auto bits = text.substr(first + 1, second - first - 1);
  if (static_cast<int>(bits.size()) != spec->edge_slots()) throw Error("edge bitstring has wrong length");
  std::vector<std::uint64_t> succ(n, 0);
  int z = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++z) {
      if (bits[z] == '1') succ[i] |= 1ULL << j;
      else if (bits[z] != '0') throw Error("edge bitstring must be 0/1");
    }
  std::vector<int> ops;
  auto rest = text.substr(second + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto tok = rest.substr(0, comma);
    int v = 0;
    if (std::from_chars(tok.data(), tok.data() + tok.size(), v).ec != std::errc{})
      throw Error("bad operation index in architecture text");
    ops.push_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return Architecture(std::move(spec), std::move(succ), std::move(ops), false);
}

bool Architecture::operator==(const Architecture& other) const {
  return *spec_ == *other.spec_ && succ_ == other.succ_ && ops_ == other.ops_;
}

// ---------------------------------------------------------------------------
// paths

namespace {

std::uint64_t forward_reach(std::span<const std::uint64_t> succ) {
  std::uint64_t reach = 1;
  for (std::size_t i = 0; i < succ.size(); ++i)
    if ((reach >> i) & 1U) reach |= succ[i];
  return reach;
}

std::uint64_t backward_reach(std::span<const std::uint64_t> succ) {
  const int n = static_cast<int>(succ.size());
  std::uint64_t reach = 1ULL << (n - 1);
  for (int i = n - 2; i >= 0; --i)
    if (succ[i] & reach) reach |= 1ULL << i;
  return reach;
}

}  // namespace

bool is_valid(const Architecture& arch) {
  std::uint64_t reach = 1;
  for (int i = 0; i < arch.n(); ++i)
    if ((reach >> i) & 1U) reach |= arch.successors(i);
  return (reach >> (arch.n() - 1)) & 1U;
}

std::uint64_t live_nodes(const Architecture& arch) {
  std::vector<std::uint64_t> succ(arch.n());
  for (int i = 0; i < arch.n(); ++i) succ[i] = arch.successors(i);
  return forward_reach(succ) & backward_reach(succ);
}

std::vector<OpSeq> extract_paths(const Architecture& arch) {
  if (!is_valid(arch)) throw Error("no input-output path");
  const int out = arch.n() - 1;
  const std::uint64_t live = live_nodes(arch);
  std::vector<OpSeq> paths;
  OpSeq current;
  auto dfs = [&](auto&& self, int node) -> void {
    for (std::uint64_t s = arch.successors(node) & live; s; s &= s - 1) {
      const int next = std::countr_zero(s);
      if (next == out) {
        paths.push_back(current);
        continue;
      }
      current.push_back(arch.op(next));
      self(self, next);
      current.pop_back();
    }
  };
  dfs(dfs, 0);
  std::sort(paths.begin(), paths.end(), [](const OpSeq& a, const OpSeq& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return paths;
}

// ---------------------------------------------------------------------------
// canonical form

namespace {

// Live subgraph relabelled onto 0..m-1 preserving node order.
struct Compact {
  int m = 2;
  std::vector<std::uint64_t> succ;
  std::vector<int> original;  // compact id -> original node id
};

Compact compact_live(std::span<const std::uint64_t> succ) {
  const int n = static_cast<int>(succ.size());
  const std::uint64_t live = forward_reach(succ) & backward_reach(succ);
  Compact c;
  std::vector<int> remap(n, -1);
  c.original.push_back(0);
  remap[0] = 0;
  for (int i = 1; i < n - 1; ++i)
    if ((live >> i) & 1U) {
      remap[i] = static_cast<int>(c.original.size());
      c.original.push_back(i);
    }
  remap[n - 1] = static_cast<int>(c.original.size());
  c.original.push_back(n - 1);
  c.m = static_cast<int>(c.original.size());
  c.succ.assign(c.m, 0);
  if (!live) return c;  // invalid: nothing survives pruning
  for (int a = 0; a < c.m; ++a) {
    for (std::uint64_t s = succ[c.original[a]] & live; s; s &= s - 1)
      c.succ[a] |= 1ULL << remap[std::countr_zero(s)];
  }
  return c;
}

// Relabelings of the compact interior that keep every edge forward and give
// the minimal edge bitstring. label[t] is the new id of compact node t.
struct EdgeCanon {
  std::string bits;
  std::vector<std::vector<int>> labels;
};

EdgeCanon minimal_edge_labelings(const Compact& c) {
  const int m = c.m;
  const int interior = m - 2;
  if (interior > 10) throw Error("canonical form limited to 10 live interior nodes");
  std::vector<int> label(m);
  std::iota(label.begin(), label.end(), 0);
  EdgeCanon best;
  std::string bits(static_cast<std::size_t>(m * (m - 1) / 2), '0');
  do {
    bool forward = true;
    for (int a = 0; a < m && forward; ++a)
      for (std::uint64_t s = c.succ[a]; s; s &= s - 1)
        if (label[a] >= label[std::countr_zero(s)]) {
          forward = false;
          break;
        }
    if (!forward) continue;
    std::fill(bits.begin(), bits.end(), '0');
    for (int a = 0; a < m; ++a)
      for (std::uint64_t s = c.succ[a]; s; s &= s - 1)
        bits[edge_index(m, label[a], label[std::countr_zero(s)])] = '1';
    if (best.labels.empty() || bits < best.bits) {
      best.bits = bits;
      best.labels.assign(1, label);
    } else if (bits == best.bits) {
      best.labels.push_back(label);
    }
  } while (std::next_permutation(label.begin() + 1, label.end() - 1));
  return best;
}

std::vector<int> minimal_ops(const EdgeCanon& canon, const Compact& c,
                             std::span<const int> interior_ops) {
  const int interior = c.m - 2;
  std::vector<int> best, ops(interior);
  for (const auto& label : canon.labels) {
    for (int t = 1; t <= interior; ++t) ops[label[t] - 1] = interior_ops[c.original[t] - 1];
    if (best.empty() || ops < best) best = ops;
  }
  return best;
}

CanonicalKey serialize_key(int m, const std::string& bits, std::span<const int> ops) {
  CanonicalKey key;
  key.push_back(static_cast<char>(m));
  unsigned char byte = 0;
  int filled = 0;
  for (char b : bits) {
    byte = static_cast<unsigned char>((byte << 1) | (b == '1'));
    if (++filled == 8) {
      key.push_back(static_cast<char>(byte));
      byte = 0;
      filled = 0;
    }
  }
  if (filled) key.push_back(static_cast<char>(byte << (8 - filled)));
  for (int o : ops) key.push_back(static_cast<char>(o));
  return key;
}

std::vector<std::uint64_t> succ_of(const Architecture& arch) {
  std::vector<std::uint64_t> succ(arch.n());
  for (int i = 0; i < arch.n(); ++i) succ[i] = arch.successors(i);
  return succ;
}

}  // namespace

CanonicalKey canonical_form(const Architecture& arch) {
  const Compact c = compact_live(succ_of(arch));
  const EdgeCanon canon = minimal_edge_labelings(c);
  return serialize_key(c.m, canon.bits, minimal_ops(canon, c, arch.ops()));
}

Architecture canonical_representative(const Architecture& arch) {
  const Compact c = compact_live(succ_of(arch));
  const EdgeCanon canon = minimal_edge_labelings(c);
  const auto ops = minimal_ops(canon, c, arch.ops());
  const int n = arch.n();
  const int m = c.m;
  auto place = [&](int compact_id) { return compact_id == m - 1 ? n - 1 : compact_id; };
  std::vector<std::uint64_t> succ(n, 0);
  int z = 0;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b, ++z)
      if (canon.bits[z] == '1') succ[place(a)] |= 1ULL << place(b);
  std::vector<int> full_ops(n - 2, 0);
  std::copy(ops.begin(), ops.end(), full_ops.begin());
  return Architecture::from_masks(arch.spec_ptr(), std::move(succ), std::move(full_ops));
}

// ---------------------------------------------------------------------------
// enumeration

void enumerate_space(const SpecPtr& spec, const EnumerateOptions& options,
                     const std::function<void(const Architecture&)>& visit) {
  const int n = spec->n_nodes;
  const int q = spec->num_ops;
  const int slots = spec->edge_slots();
  const int interior = n - 2;
  const double labelings = std::pow(static_cast<double>(q), interior);
  const double size = options.fixed_edges ? labelings : labelings * std::pow(2.0, slots);
  if (size > options.ceiling || slots > 62) throw ConfigError("space too large to enumerate");

  std::vector<std::uint64_t> edge_sets;
  if (options.fixed_edges) {
    std::uint64_t mask = 0;
    for (auto [i, j] : *options.fixed_edges) {
      if (i < 0 || j <= i || j >= n) throw Error("edges must satisfy i < j < n");
      mask |= 1ULL << edge_index(n, i, j);
    }
    edge_sets.push_back(mask);
  }

  std::unordered_set<CanonicalKey> seen;
  std::vector<std::uint64_t> succ(n);
  std::vector<int> ops(interior);

  auto process = [&](std::uint64_t mask) {
    if (std::popcount(mask) > spec->max_edges) return;
    std::fill(succ.begin(), succ.end(), 0);
    for (std::uint64_t s = mask; s; s &= s - 1) {
      auto [i, j] = edge_at(n, std::countr_zero(s));
      succ[i] |= 1ULL << j;
    }
    const std::uint64_t live = forward_reach(succ) & backward_reach(succ);
    if (!((live >> (n - 1)) & 1U)) return;

    std::vector<int> free_nodes;  // interior positions whose op is enumerated
    for (int t = 1; t <= interior; ++t)
      if (!options.dedup || ((live >> t) & 1U)) free_nodes.push_back(t);

    Compact c;
    EdgeCanon canon;
    if (options.dedup) {
      c = compact_live(succ);
      canon = minimal_edge_labelings(c);
    }
    std::fill(ops.begin(), ops.end(), 0);
    while (true) {
      bool emit = true;
      if (options.dedup)
        emit = seen.insert(serialize_key(c.m, canon.bits, minimal_ops(canon, c, ops))).second;
      if (emit) visit(Architecture::from_masks(spec, succ, ops));
      // odometer, last free node fastest
      int k = static_cast<int>(free_nodes.size()) - 1;
      while (k >= 0 && ++ops[free_nodes[k] - 1] == q) ops[free_nodes[k--] - 1] = 0;
      if (k < 0) break;
    }
  };

  if (options.fixed_edges) {
    process(edge_sets.front());
  } else {
    const std::uint64_t total = 1ULL << slots;
    for (std::uint64_t mask = 0; mask < total; ++mask) process(mask);
  }
}

std::vector<Architecture> enumerate_space(const SpecPtr& spec, const EnumerateOptions& options) {
  std::vector<Architecture> out;
  enumerate_space(spec, options, [&](const Architecture& a) { out.push_back(a); });
  return out;
}

}  // namespace nasenc
