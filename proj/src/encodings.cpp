#include "nasenc/encodings.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace nasenc {

namespace {

constexpr std::string_view kFamilyNames[] = {
    "adj_onehot", "adj_categorical", "adj_continuous",
    "path_onehot", "path_categorical", "path_continuous",
};

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

std::vector<double> op_features(const Architecture& arch) {
  std::vector<double> out;
  out.reserve(arch.n());
  out.push_back(input_op_code(arch.spec()));
  for (int o : arch.ops()) out.push_back(o);
  out.push_back(output_op_code(arch.spec()));
  return out;
}

std::vector<int> parse_ops(std::span<const double> slots, const SearchSpaceSpec& s) {
  if (slots.front() != input_op_code(s) || slots.back() != output_op_code(s))
    throw Error("malformed feature vector: reserved input/output slot changed");
  std::vector<int> ops;
  ops.reserve(slots.size() - 2);
  for (std::size_t t = 1; t + 1 < slots.size(); ++t) {
    const double v = slots[t];
    if (!is_integer(v) || v < 0 || v >= s.num_ops)
      throw Error("malformed feature vector: operation feature out of range");
    ops.push_back(static_cast<int>(v));
  }
  return ops;
}

// Indices of the `count` largest values, ties to the lower index, ascending.
std::vector<std::int64_t> top_k(std::span<const double> values, std::int64_t count) {
  std::vector<std::int64_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int64_t a, std::int64_t b) { return values[a] > values[b]; });
  order.resize(static_cast<std::size_t>(std::min<std::int64_t>(count, order.size())));
  std::sort(order.begin(), order.end());
  return order;
}

void check_unit(std::span<const double> values) {
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0)) throw Error("malformed feature vector: continuous feature outside [0,1]");
}

void check_binary(std::span<const double> values) {
  for (double v : values)
    if (v != 0.0 && v != 1.0) throw Error("malformed feature vector: one-hot feature not in {0,1}");
}

}  // namespace

std::string_view family_name(Family f) { return kFamilyNames[static_cast<int>(f)]; }

std::optional<Family> parse_family(std::string_view name) {
  for (int f = 0; f < 6; ++f)
    if (kFamilyNames[f] == name) return static_cast<Family>(f);
  return std::nullopt;
}

std::int64_t path_feature_count(int q, int max_len) {
  std::int64_t total = 0, power = 1;
  for (int i = 0; i <= max_len; ++i) {
    total += power;
    power *= q;
  }
  return total;
}

// ---------------------------------------------------------------------------
// EncodingKind

EncodingKind::EncodingKind(Family family, SpecPtr spec) : family_(family), spec_(std::move(spec)) {
  if (!spec_) throw Error("encoding needs a search space");
}

std::int64_t EncodingKind::path_sequences() const {
  return path_feature_count(spec_->num_ops, spec_->n_nodes - 2);
}

std::int64_t EncodingKind::visible_paths() const {
  return kept_ ? static_cast<std::int64_t>(*kept_) : path_sequences();
}

EncodingKind EncodingKind::truncated_to_bits(std::size_t bits) const {
  const std::size_t full = is_path() ? static_cast<std::size_t>(path_sequences())
                                     : dimension(untruncated());
  if (bits > full) throw Error("truncation larger than the encoding");
  EncodingKind out = untruncated();
  if (bits < full) out.kept_ = bits;
  return out;
}

EncodingKind EncodingKind::truncated_to_path_length(int x) const {
  if (!is_path()) throw Error("path-length truncation applies to path encodings only");
  if (x < 0 || x > spec_->n_nodes - 2) throw Error("path truncation length must lie in [0, n-2]");
  return truncated_to_bits(static_cast<std::size_t>(path_feature_count(spec_->num_ops, x)));
}

std::string EncodingKind::tag() const {
  std::string out(family_name(family_));
  if (kept_) out += ":bits=" + std::to_string(*kept_);
  return out;
}

EncodingKind EncodingKind::parse(std::string_view tag, SpecPtr spec) {
  const auto colon = tag.find(':');
  const auto fam = parse_family(tag.substr(0, colon));
  if (!fam) throw ConfigError("unknown encoding '" + std::string(tag) + "'");
  EncodingKind kind(*fam, std::move(spec));
  if (colon == std::string_view::npos) return kind;
  const auto opt = tag.substr(colon + 1);
  const auto eq = opt.find('=');
  int value = -1;
  if (eq != std::string_view::npos) {
    const auto num = opt.substr(eq + 1);
    std::from_chars(num.data(), num.data() + num.size(), value);
  }
  if (value < 0) throw ConfigError("bad truncation in encoding '" + std::string(tag) + "'");
  const auto name = opt.substr(0, eq);
  if (name == "bits") return kind.truncated_to_bits(static_cast<std::size_t>(value));
  if (name == "len") return kind.truncated_to_path_length(value);
  throw ConfigError("truncation must be bits=B or len=X in '" + std::string(tag) + "'");
}

bool EncodingKind::operator==(const EncodingKind& other) const {
  return family_ == other.family_ && *spec_ == *other.spec_ && kept_ == other.kept_;
}

// ---------------------------------------------------------------------------
// dimensions and domains

std::vector<FeatureDomain> feature_domains(const EncodingKind& kind) {
  using T = FeatureDomain::Type;
  const auto& s = kind.space();
  const int n = s.n_nodes;
  const int slots = s.edge_slots();
  std::vector<FeatureDomain> d;
  auto add_ops = [&] {
    d.push_back({T::Fixed, input_op_code(s), input_op_code(s)});
    for (int t = 0; t < n - 2; ++t) d.push_back({T::Categorical, 0, s.num_ops - 1});
    d.push_back({T::Fixed, output_op_code(s), output_op_code(s)});
  };
  switch (kind.family()) {
    case Family::AdjOneHot:
      d.assign(slots, {T::Binary, 0, 1});
      add_ops();
      break;
    case Family::AdjCategorical:
      d.assign(s.max_edges, {T::Categorical, 0, slots, true});
      add_ops();
      break;
    case Family::AdjContinuous:
      d.assign(slots, {T::Continuous, 0, 1});
      add_ops();
      d.push_back({T::Count, 1, s.max_edges});
      break;
    case Family::PathOneHot:
      d.assign(kind.visible_paths(), {T::Binary, 0, 1});
      break;
    case Family::PathCategorical:
      d.assign(s.max_paths(), {T::Categorical, 0, static_cast<int>(kind.visible_paths()), true});
      break;
    case Family::PathContinuous: {
      const auto visible = kind.visible_paths();
      d.assign(visible, {T::Continuous, 0, 1});
      d.push_back({T::Count, kind.is_truncated() ? 0 : 1,
                   static_cast<int>(std::min<std::int64_t>(s.max_paths(), visible))});
      break;
    }
  }
  if (!kind.is_path() && kind.truncation()) d.resize(*kind.truncation());
  return d;
}

std::size_t dimension(const EncodingKind& kind) {
  const auto& s = kind.space();
  const auto n = static_cast<std::size_t>(s.n_nodes);
  const auto slots = static_cast<std::size_t>(s.edge_slots());
  std::size_t full = 0;
  switch (kind.family()) {
    case Family::AdjOneHot: full = slots + n; break;
    case Family::AdjCategorical: full = static_cast<std::size_t>(s.max_edges) + n; break;
    case Family::AdjContinuous: full = slots + n + 1; break;
    case Family::PathOneHot: return static_cast<std::size_t>(kind.visible_paths());
    case Family::PathCategorical: return static_cast<std::size_t>(s.max_paths());
    case Family::PathContinuous: return static_cast<std::size_t>(kind.visible_paths()) + 1;
  }
  return kind.truncation() ? *kind.truncation() : full;
}

// ---------------------------------------------------------------------------
// paths

std::int64_t path_index(std::span<const int> seq, int q) {
  const int len = static_cast<int>(seq.size());
  std::int64_t index = path_feature_count(q, len - 1);
  std::int64_t offset = 0;
  for (int op : seq) {
    if (op < 0 || op >= q) throw Error("operation out of range in path");
    offset = offset * q + op;
  }
  return index + offset;
}

OpSeq path_from_index(std::int64_t index, int q) {
  if (index < 0) throw Error("negative path index");
  int len = 0;
  std::int64_t power = 1;
  while (index >= power) {
    index -= power;
    power *= q;
    ++len;
  }
  OpSeq seq(len);
  for (int j = len - 1; j >= 0; --j) {
    seq[j] = static_cast<int>(index % q);
    index /= q;
  }
  return seq;
}

std::vector<std::int64_t> path_index_set(const Architecture& arch) {
  std::vector<std::int64_t> out;
  for (const auto& p : extract_paths(arch)) out.push_back(path_index(p, arch.spec().num_ops));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// encode

FeatureVector encode(const Architecture& arch, const EncodingKind& kind) {
  if (!(arch.spec() == kind.space())) throw Error("architecture and encoding use different search spaces");
  if (!is_valid(arch)) throw Error("cannot encode an invalid architecture");
  const auto& s = arch.spec();
  const int n = s.n_nodes;
  std::vector<double> v;
  switch (kind.family()) {
    case Family::AdjOneHot:
    case Family::AdjContinuous: {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) v.push_back(arch.has_edge(i, j) ? 1.0 : 0.0);
      const auto ops = op_features(arch);
      v.insert(v.end(), ops.begin(), ops.end());
      if (kind.family() == Family::AdjContinuous) v.push_back(arch.edge_count());
      break;
    }
    case Family::AdjCategorical: {
      for (auto [i, j] : arch.edges()) v.push_back(edge_index(n, i, j));
      std::sort(v.begin(), v.end());
      v.resize(s.max_edges, s.edge_slots());
      const auto ops = op_features(arch);
      v.insert(v.end(), ops.begin(), ops.end());
      break;
    }
    case Family::PathOneHot:
    case Family::PathContinuous:
    case Family::PathCategorical: {
      const auto visible = kind.visible_paths();
      auto paths = path_index_set(arch);
      std::erase_if(paths, [&](std::int64_t p) { return p >= visible; });
      if (static_cast<std::int64_t>(paths.size()) > s.max_paths())
        throw Error("more paths than the space allows");
      if (kind.family() == Family::PathCategorical) {
        v.assign(paths.begin(), paths.end());
        v.resize(s.max_paths(), static_cast<double>(visible));
      } else {
        v.assign(visible, 0.0);
        for (auto p : paths) v[p] = 1.0;
        if (kind.family() == Family::PathContinuous) v.push_back(paths.size());
      }
      break;
    }
  }
  if (!kind.is_path() && kind.truncation()) v.resize(*kind.truncation());
  return {std::move(v), kind};
}

// ---------------------------------------------------------------------------
// decode

namespace {

std::optional<Architecture> decode_adjacency(const FeatureVector& fv, const Architecture* fill) {
  const EncodingKind full_kind = fv.kind.untruncated();
  const auto& s = fv.kind.space();
  const int n = s.n_nodes;
  const int slots = s.edge_slots();
  std::vector<double> v = fv.values;
  bool count_from_edges = false;
  if (fv.kind.is_truncated()) {
    std::vector<double> base;
    if (fill) {
      base = encode(*fill, full_kind).values;
    } else {
      // zero fill; reserved slots keep their constants
      base.assign(dimension(full_kind), 0.0);
      const std::size_t op_start =
          fv.kind.family() == Family::AdjCategorical ? s.max_edges : slots;
      if (fv.kind.family() == Family::AdjCategorical)
        std::fill(base.begin(), base.begin() + s.max_edges, slots);
      base[op_start] = input_op_code(s);
      base[op_start + n - 1] = output_op_code(s);
      count_from_edges = fv.kind.family() == Family::AdjContinuous;
    }
    std::copy(v.begin(), v.end(), base.begin());
    v = std::move(base);
  }
  if (v.size() != dimension(full_kind)) throw Error("feature vector has wrong dimension");

  std::vector<std::uint64_t> succ(n, 0);
  std::span<const double> all(v);
  switch (fv.kind.family()) {
    case Family::AdjOneHot: {
      check_binary(all.first(slots));
      for (int z = 0; z < slots; ++z)
        if (v[z] == 1.0) {
          auto [i, j] = edge_at(n, z);
          succ[i] |= 1ULL << j;
        }
      break;
    }
    case Family::AdjCategorical: {
      for (int t = 0; t < s.max_edges; ++t) {
        const double e = v[t];
        if (!is_integer(e) || e < 0 || e > slots)
          throw Error("malformed feature vector: edge index out of range");
        if (e == slots) continue;
        auto [i, j] = edge_at(n, static_cast<int>(e));
        succ[i] |= 1ULL << j;
      }
      break;
    }
    case Family::AdjContinuous: {
      check_unit(all.first(slots));
      double count = v.back();
      if (count_from_edges) {
        // K was truncated away: keep every positive edge feature
        count = static_cast<double>(std::count_if(v.begin(), v.begin() + slots,
                                                  [](double e) { return e > 0.0; }));
        if (count > s.max_edges) return std::nullopt;
      }
      if (!is_integer(count) || count < 0 || count > s.max_edges)
        throw Error("malformed feature vector: edge count out of range");
      for (auto z : top_k(all.first(slots), static_cast<std::int64_t>(count))) {
        auto [i, j] = edge_at(n, static_cast<int>(z));
        succ[i] |= 1ULL << j;
      }
      break;
    }
    default: break;
  }
  const std::size_t op_start = fv.kind.family() == Family::AdjCategorical ? s.max_edges : slots;
  auto ops = parse_ops(all.subspan(op_start, n), s);
  int edges = 0;
  for (auto m : succ) edges += std::popcount(m);
  if (edges > s.max_edges) return std::nullopt;
  return Architecture::from_masks(fv.kind.spec(), std::move(succ), std::move(ops));
}

std::vector<std::int64_t> visible_path_set(const FeatureVector& fv) {
  const auto visible = fv.kind.visible_paths();
  const auto& v = fv.values;
  if (v.size() != dimension(fv.kind)) throw Error("feature vector has wrong dimension");
  std::vector<std::int64_t> paths;
  switch (fv.kind.family()) {
    case Family::PathOneHot:
      check_binary(v);
      for (std::int64_t p = 0; p < visible; ++p)
        if (v[p] == 1.0) paths.push_back(p);
      break;
    case Family::PathCategorical:
      for (double p : v) {
        if (!is_integer(p) || p < 0 || p > static_cast<double>(visible))
          throw Error("malformed feature vector: path index out of range");
        if (p < static_cast<double>(visible)) paths.push_back(static_cast<std::int64_t>(p));
      }
      std::sort(paths.begin(), paths.end());
      paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
      break;
    case Family::PathContinuous: {
      std::span<const double> feats(v.data(), static_cast<std::size_t>(visible));
      check_unit(feats);
      const double count = v.back();
      if (!is_integer(count) || count < 0 || count > static_cast<double>(visible))
        throw Error("malformed feature vector: path count out of range");
      paths = top_k(feats, static_cast<std::int64_t>(count));
      break;
    }
    default: break;
  }
  return paths;
}

}  // namespace

std::optional<Architecture> try_decode(const FeatureVector& fv, const Architecture* fill) {
  if (!fv.kind.is_path()) return decode_adjacency(fv, fill);
  auto paths = visible_path_set(fv);
  if (fv.kind.is_truncated() && fill) {
    const auto visible = fv.kind.visible_paths();
    for (auto p : path_index_set(*fill))
      if (p >= visible) paths.push_back(p);
    std::sort(paths.begin(), paths.end());
  }
  if (paths.empty()) return std::nullopt;
  return realize_path_set(fv.kind.spec(), paths);
}

Architecture decode(const FeatureVector& fv) {
  auto arch = try_decode(fv);
  if (!arch) throw NotRealizable("not realizable in spec");
  return std::move(*arch);
}

// ---------------------------------------------------------------------------
// truncation

FeatureVector truncate(const FeatureVector& fv, std::size_t bits) {
  const auto& kind = fv.kind;
  if (!kind.is_path()) {
    if (bits > fv.values.size()) throw Error("truncation larger than the encoding");
    FeatureVector out{{fv.values.begin(), fv.values.begin() + static_cast<std::ptrdiff_t>(bits)},
                      kind.truncated_to_bits(bits)};
    return out;
  }
  if (static_cast<std::int64_t>(bits) > kind.visible_paths())
    throw Error("truncation larger than the encoding");
  const EncodingKind target = kind.truncated_to_bits(bits);
  const auto kept = static_cast<std::int64_t>(bits);
  std::vector<double> v;
  switch (kind.family()) {
    case Family::PathOneHot:
      v.assign(fv.values.begin(), fv.values.begin() + kept);
      break;
    case Family::PathCategorical: {
      for (double p : fv.values)
        if (p < static_cast<double>(kept)) v.push_back(p);
      std::sort(v.begin(), v.end());
      v.resize(fv.values.size(), static_cast<double>(kept));
      break;
    }
    case Family::PathContinuous: {
      const auto selected = visible_path_set(fv);
      v.assign(fv.values.begin(), fv.values.begin() + kept);
      v.push_back(static_cast<double>(
          std::count_if(selected.begin(), selected.end(), [&](auto p) { return p < kept; })));
      break;
    }
    default: break;
  }
  return {std::move(v), target};
}

FeatureVector truncate_paths(const FeatureVector& fv, int x) {
  if (!fv.kind.is_path()) throw Error("path-length truncation applies to path encodings only");
  const auto& s = fv.kind.space();
  if (x < 0 || x > s.n_nodes - 2) throw Error("path truncation length must lie in [0, n-2]");
  return truncate(fv, static_cast<std::size_t>(path_feature_count(s.num_ops, x)));
}

// ---------------------------------------------------------------------------
// distance and serialization

double edit_distance(std::span<const double> a, std::span<const double> b,
                     std::span<const FeatureDomain> domains) {
  if (a.size() != b.size() || a.size() != domains.size())
    throw Error("edit distance needs vectors of one dimension");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d += domains[i].discrete() ? (a[i] != b[i] ? 1.0 : 0.0) : std::abs(a[i] - b[i]);
  return d;
}

double edit_distance(const FeatureVector& a, const FeatureVector& b) {
  if (!(a.kind == b.kind) || a.values.size() != b.values.size())
    throw Error("edit distance needs vectors of one encoding and dimension");
  const auto domains = feature_domains(a.kind);
  return edit_distance(a.values, b.values, domains);
}

std::string to_csv(const FeatureVector& fv) {
  std::string out = fv.kind.tag() + "," + std::to_string(fv.values.size());
  char buf[32];
  for (double v : fv.values) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out += buf;
  }
  return out;
}

FeatureVector from_csv(std::string_view line, SpecPtr spec) {
  std::vector<std::string_view> fields;
  while (true) {
    const auto comma = line.find(',');
    fields.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line = line.substr(comma + 1);
  }
  if (fields.size() < 2) throw Error("feature vector CSV needs a tag and a dimension");
  EncodingKind kind = EncodingKind::parse(fields[0], std::move(spec));
  std::size_t dim = 0;
  std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), dim);
  if (dim != fields.size() - 2 || dim != dimension(kind))
    throw Error("feature vector CSV dimension mismatch");
  std::vector<double> values;
  for (std::size_t i = 2; i < fields.size(); ++i)
    values.push_back(std::stod(std::string(fields[i])));
  return {std::move(values), std::move(kind)};
}

}  // namespace nasenc
