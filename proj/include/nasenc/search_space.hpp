#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nasenc/common.hpp"

namespace nasenc {

/// Largest supported node count (successor sets are 64-bit masks).
inline constexpr int kMaxNodes = 64;

/// Cell search space: n ordered nodes (0 = input, n-1 = output), at most
/// `max_edges` forward edges, and `num_ops` operation labels on the n-2
/// interior nodes.
struct SearchSpaceSpec {
  int n_nodes = 2;
  int max_edges = 1;
  int num_ops = 1;
  std::vector<std::string> op_names;

  int interior_nodes() const { return n_nodes - 2; }
  int edge_slots() const { return n_nodes * (n_nodes - 1) / 2; }
  /// Input-output path count of the complete DAG on n_nodes nodes.
  std::int64_t max_paths() const;

  bool operator==(const SearchSpaceSpec&) const = default;
};

using SpecPtr = std::shared_ptr<const SearchSpaceSpec>;

/// Validates and shares a spec. Empty `op_names` become "op0", "op1", ...
SpecPtr make_spec(int n_nodes, int max_edges, int num_ops,
                  std::vector<std::string> op_names = {});

/// Row-major position of edge (i, j) in the flattened upper triangle.
constexpr int edge_index(int n, int i, int j) {
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}
std::pair<int, int> edge_at(int n, int index);

using OpSeq = std::vector<int>;
using Edge = std::pair<int, int>;

class Architecture {
 public:
  Architecture(SpecPtr spec, std::span<const Edge> edges, std::vector<int> ops);
  /// `succ[i]` is the successor bitmask of node i; only bits j > i may be set.
  static Architecture from_masks(SpecPtr spec, std::vector<std::uint64_t> succ,
                                 std::vector<int> ops);

  const SearchSpaceSpec& spec() const { return *spec_; }
  const SpecPtr& spec_ptr() const { return spec_; }
  int n() const { return spec_->n_nodes; }

  bool has_edge(int i, int j) const { return (succ_[i] >> j) & 1U; }
  std::uint64_t successors(int i) const { return succ_[i]; }
  int edge_count() const;
  std::vector<Edge> edges() const;

  /// Operations of interior nodes 1..n-2, in node order.
  std::span<const int> ops() const { return ops_; }
  int op(int node) const { return ops_[node - 1]; }

  /// `n;edge-bitstring;op-csv`, edge bits in row-major upper-triangle order.
  std::string to_text() const;
  static Architecture from_text(SpecPtr spec, std::string_view text);

  bool operator==(const Architecture& other) const;

 private:
  Architecture(SpecPtr spec, std::vector<std::uint64_t> succ, std::vector<int> ops,
               bool checked);

  SpecPtr spec_;
  std::vector<std::uint64_t> succ_;
  std::vector<int> ops_;
};

/// True iff a directed path input -> output exists.
bool is_valid(const Architecture& arch);

/// Nodes lying on at least one input -> output path.
std::uint64_t live_nodes(const Architecture& arch);

/// Every input -> output path as its interior operation sequence, ordered by
/// length then lexicographically. Duplicated sequences are kept.
std::vector<OpSeq> extract_paths(const Architecture& arch);

/// Isomorphism-class key: dead interior nodes are pruned, then the minimal
/// (edges, ops) serialization over all order-preserving relabelings is taken.
using CanonicalKey = std::string;
CanonicalKey canonical_form(const Architecture& arch);

/// The class member that `canonical_form` serializes, embedded in the
/// architecture's own spec (unused interior nodes isolated, op 0).
Architecture canonical_representative(const Architecture& arch);

struct EnumerateOptions {
  /// One architecture per isomorphism class (first met in enumeration order).
  bool dedup = false;
  /// Enumerate op labelings of this edge set only.
  std::optional<std::vector<Edge>> fixed_edges = std::nullopt;
  /// Guard on q^(n-2) * 2^(n(n-1)/2) (or q^(n-2) with fixed edges).
  double ceiling = 1e8;
};

/// Visits every valid architecture with at most max_edges edges. Edge sets are
/// visited in increasing bitmask order, op labelings lexicographically.
void enumerate_space(const SpecPtr& spec, const EnumerateOptions& options,
                     const std::function<void(const Architecture&)>& visit);
std::vector<Architecture> enumerate_space(const SpecPtr& spec,
                                          const EnumerateOptions& options = {});

}  // namespace nasenc
