#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "nasenc/encodings.hpp"

namespace nasenc {

namespace {

constexpr int kInput = 0;
constexpr int kOutput = 1;

// Small mutable DAG over arbitrary node ids; 0 = input, 1 = output.
struct WorkGraph {
  std::vector<int> op;  // -1 for input/output
  std::vector<std::vector<int>> succ, pred;
  std::vector<char> alive;

  int add_node(int o) {
    op.push_back(o);
    succ.emplace_back();
    pred.emplace_back();
    alive.push_back(1);
    return static_cast<int>(op.size()) - 1;
  }
  void add_edge(int a, int b) {
    if (std::find(succ[a].begin(), succ[a].end(), b) != succ[a].end()) return;
    succ[a].push_back(b);
    pred[b].push_back(a);
  }
  bool reaches(int from, int to) const {
    std::vector<char> seen(op.size(), 0);
    std::vector<int> stack{from};
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      if (x == to) return true;
      for (int y : succ[x])
        if (!seen[y]) {
          seen[y] = 1;
          stack.push_back(y);
        }
    }
    return false;
  }
  // v is folded into u
  void merge(int u, int v) {
    for (int s : succ[v]) {
      std::erase(pred[s], v);
      add_edge(u, s);
    }
    for (int p : pred[v]) {
      std::erase(succ[p], v);
      add_edge(p, u);
    }
    succ[v].clear();
    pred[v].clear();
    alive[v] = 0;
  }
};

class PathChecker {
 public:
  PathChecker(std::span<const std::int64_t> indices, int q, std::int64_t limit)
      : q_(q), limit_(limit) {
    member_.assign(static_cast<std::size_t>(indices.back()) + 1, 0);
    for (auto p : indices) member_[p] = 1;
    offsets_.push_back(0);
    std::int64_t power = 1;
    for (int len = 1; len < 64 && offsets_.back() <= indices.back(); ++len) {
      offsets_.push_back(offsets_.back() + power);
      power *= q;
    }
  }

  // Every input-output path spells a member sequence.
  bool only_members(const WorkGraph& g) {
    visited_ = 0;
    return walk(g, kInput, 0, 0);
  }

 private:
  bool walk(const WorkGraph& g, int node, int len, std::int64_t code) {
    for (int next : g.succ[node]) {
      if (++visited_ > limit_) return false;
      if (next == kOutput) {
        const std::int64_t index = offsets_[len] + code;
        if (index >= static_cast<std::int64_t>(member_.size()) || !member_[index]) return false;
        continue;
      }
      if (len + 1 >= static_cast<int>(offsets_.size())) return false;
      if (!walk(g, next, len + 1, code * q_ + g.op[next])) return false;
    }
    return true;
  }

  int q_;
  std::int64_t limit_;
  std::int64_t visited_ = 0;
  std::vector<char> member_;
  std::vector<std::int64_t> offsets_;
};

// Chains for every path with shared prefixes (reverse = shared suffixes).
WorkGraph build_trie(std::span<const OpSeq> paths, bool reverse) {
  WorkGraph g;
  g.add_node(-1);
  g.add_node(-1);
  std::map<std::pair<int, int>, int> child;
  for (const auto& p : paths) {
    if (p.empty()) {
      g.add_edge(kInput, kOutput);
      continue;
    }
    int at = reverse ? kOutput : kInput;
    for (std::size_t t = 0; t < p.size(); ++t) {
      const int o = reverse ? p[p.size() - 1 - t] : p[t];
      auto [it, fresh] = child.try_emplace({at, o}, -1);
      if (fresh) {
        it->second = g.add_node(o);
        if (reverse) g.add_edge(it->second, at);
        else g.add_edge(at, it->second);
      }
      at = it->second;
    }
    if (reverse) g.add_edge(kInput, at);
    else g.add_edge(at, kOutput);
  }
  return g;
}

void greedy_merge(WorkGraph& g, PathChecker& checker) {
  bool changed = true;
  while (changed) {
    changed = false;
    const int count = static_cast<int>(g.op.size());
    for (int u = 2; u < count; ++u) {
      if (!g.alive[u]) continue;
      for (int v = u + 1; v < count; ++v) {
        if (!g.alive[v] || g.op[v] != g.op[u]) continue;
        if (g.reaches(u, v) || g.reaches(v, u)) continue;
        WorkGraph trial = g;
        trial.merge(u, v);
        if (checker.only_members(trial)) {
          g = std::move(trial);
          changed = true;
        }
      }
    }
  }
}

std::optional<Architecture> to_architecture(const WorkGraph& g, const SpecPtr& spec) {
  const int n = spec->n_nodes;
  const int count = static_cast<int>(g.op.size());
  int interior = 0, edges = 0;
  for (int v = 0; v < count; ++v) {
    if (!g.alive[v]) continue;
    if (v >= 2) ++interior;
    edges += static_cast<int>(g.succ[v].size());
  }
  if (interior > n - 2 || edges > spec->max_edges) return std::nullopt;

  // Kahn's order, smallest id first
  std::vector<int> indegree(count, 0), order;
  for (int v = 0; v < count; ++v)
    if (g.alive[v])
      for (int s : g.succ[v]) ++indegree[s];
  std::vector<int> ready;
  for (int v = 2; v < count; ++v)
    if (g.alive[v] && indegree[v] == 0) ready.push_back(v);
  for (int s : g.succ[kInput])
    if (--indegree[s] == 0 && s != kOutput) ready.push_back(s);
  while (!ready.empty()) {
    auto it = std::min_element(ready.begin(), ready.end());
    const int v = *it;
    ready.erase(it);
    order.push_back(v);
    for (int s : g.succ[v])
      if (--indegree[s] == 0 && s != kOutput) ready.push_back(s);
  }
  std::vector<int> position(count, -1);
  position[kInput] = 0;
  position[kOutput] = n - 1;
  std::vector<int> ops(n - 2, 0);
  for (std::size_t t = 0; t < order.size(); ++t) {
    position[order[t]] = static_cast<int>(t) + 1;
    ops[t] = g.op[order[t]];
  }
  std::vector<std::uint64_t> succ(n, 0);
  for (int v = 0; v < count; ++v)
    if (g.alive[v])
      for (int s : g.succ[v]) succ[position[v]] |= 1ULL << position[s];
  return Architecture::from_masks(spec, std::move(succ), std::move(ops));
}

std::string set_key(std::span<const std::int64_t> indices) {
  std::string key;
  key.reserve(indices.size() * sizeof(std::int64_t));
  for (auto p : indices) key.append(reinterpret_cast<const char*>(&p), sizeof p);
  return key;
}

using RealizationTable = std::unordered_map<std::string, Architecture>;

// Exact path-set lookup for spaces small enough to enumerate; first class met
// in enumeration order wins. Built once per spec.
const RealizationTable* realization_table(const SpecPtr& spec) {
  constexpr double kTableCeiling = 4e6;
  const double size = std::pow(static_cast<double>(spec->num_ops), spec->n_nodes - 2) *
                      std::pow(2.0, spec->edge_slots());
  if (size > kTableCeiling) return nullptr;
  static std::mutex mutex;
  static std::map<std::string, std::unique_ptr<RealizationTable>> tables;
  const std::string id = std::to_string(spec->n_nodes) + "/" + std::to_string(spec->max_edges) +
                         "/" + std::to_string(spec->num_ops);
  std::lock_guard lock(mutex);
  auto& table = tables[id];
  if (!table) {
    auto built = std::make_unique<RealizationTable>();
    enumerate_space(spec, {.dedup = true}, [&](const Architecture& a) {
      built->try_emplace(set_key(path_index_set(a)), a);
    });
    table = std::move(built);
  }
  return table.get();
}

Architecture rebind(const Architecture& a, const SpecPtr& spec) {
  std::vector<std::uint64_t> succ(spec->n_nodes);
  for (int i = 0; i < spec->n_nodes; ++i) succ[i] = a.successors(i);
  return Architecture::from_masks(spec, std::move(succ), {a.ops().begin(), a.ops().end()});
}

std::optional<Architecture> realize_uncached(const SpecPtr& spec,
                                             std::span<const std::int64_t> indices);

}  // namespace

std::optional<Architecture> realize_path_set(const SpecPtr& spec,
                                             std::span<const std::int64_t> indices) {
  constexpr std::size_t kMemoLimit = 1 << 18;
  thread_local std::unordered_map<std::string, std::optional<Architecture>> memo;
  std::string key = std::to_string(spec->n_nodes) + "/" + std::to_string(spec->max_edges) + "/" +
                    std::to_string(spec->num_ops) + "|" + set_key(indices);
  if (auto it = memo.find(key); it != memo.end()) {
    if (!it->second) return std::nullopt;
    return rebind(*it->second, spec);
  }
  auto result = realize_uncached(spec, indices);
  if (memo.size() >= kMemoLimit) memo.clear();
  memo.emplace(std::move(key), result);
  return result;
}

namespace {

std::optional<Architecture> realize_uncached(const SpecPtr& spec,
                                             std::span<const std::int64_t> indices) {
  if (indices.empty()) return std::nullopt;
  if (static_cast<std::int64_t>(indices.size()) > spec->max_paths()) return std::nullopt;
  const int q = spec->num_ops;
  std::vector<OpSeq> paths;
  paths.reserve(indices.size());
  for (auto p : indices) {
    paths.push_back(path_from_index(p, q));
    if (static_cast<int>(paths.back().size()) > spec->n_nodes - 2) return std::nullopt;
  }
  PathChecker checker(indices, q, 64 * spec->max_paths() + 1024);
  for (bool reverse : {false, true}) {
    WorkGraph g = build_trie(paths, reverse);
    greedy_merge(g, checker);
    if (auto arch = to_architecture(g, spec)) return arch;
  }
  if (const auto* table = realization_table(spec)) {
    const auto it = table->find(set_key(indices));
    if (it != table->end()) return rebind(it->second, spec);
  }
  return std::nullopt;
}

}  // namespace

}  // namespace nasenc
