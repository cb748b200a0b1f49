#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nasenc/search_space.hpp"

namespace nasenc {

enum class Family {
  AdjOneHot,
  AdjCategorical,
  AdjContinuous,
  PathOneHot,
  PathCategorical,
  PathContinuous,
};

inline bool is_path_family(Family f) {
  return f == Family::PathOneHot || f == Family::PathCategorical || f == Family::PathContinuous;
}
std::string_view family_name(Family f);
std::optional<Family> parse_family(std::string_view name);

/// Number of operation sequences of length 0..max_len: sum_{i<=max_len} q^i.
std::int64_t path_feature_count(int q, int max_len);

/// An encoding scheme over one search space, optionally truncated.
///
/// Truncation is stored as a count of kept leading features. For adjacency
/// families it is a prefix of the whole vector; for path families it is a
/// prefix of the path-feature index order (length-major), so truncating to
/// op-length x keeps path_feature_count(q, x) features.
class EncodingKind {
 public:
  EncodingKind(Family family, SpecPtr spec);

  EncodingKind truncated_to_bits(std::size_t bits) const;
  EncodingKind truncated_to_path_length(int x) const;
  EncodingKind untruncated() const { return EncodingKind(family_, spec_); }

  Family family() const { return family_; }
  bool is_path() const { return is_path_family(family_); }
  const SpecPtr& spec() const { return spec_; }
  const SearchSpaceSpec& space() const { return *spec_; }
  bool is_truncated() const { return kept_.has_value(); }
  std::optional<std::size_t> truncation() const { return kept_; }

  /// Distinct operation sequences (path families) indexed by path_index.
  std::int64_t path_sequences() const;
  /// Path features still visible after truncation (path families).
  std::int64_t visible_paths() const;

  /// `family` or `family:bits=B`; parse also accepts `family:len=X`.
  std::string tag() const;
  static EncodingKind parse(std::string_view tag, SpecPtr spec);

  bool operator==(const EncodingKind& other) const;

 private:
  Family family_;
  SpecPtr spec_;
  std::optional<std::size_t> kept_;
};

/// Sampling range of one feature.
struct FeatureDomain {
  enum class Type { Binary, Categorical, Continuous, Count, Fixed };
  Type type = Type::Binary;
  int lo = 0;  // Count: smallest value; Fixed: the value
  int hi = 1;  // Categorical: values 0..hi; Count: largest value
  bool hi_is_absent = false;  // Categorical padding: hi marks an empty slot

  bool discrete() const { return type != Type::Continuous; }
};

std::size_t dimension(const EncodingKind& kind);
std::vector<FeatureDomain> feature_domains(const EncodingKind& kind);

/// Reserved op-feature values of the input and output slots.
inline int input_op_code(const SearchSpaceSpec& s) { return s.num_ops; }
inline int output_op_code(const SearchSpaceSpec& s) { return s.num_ops + 1; }

struct FeatureVector {
  std::vector<double> values;
  EncodingKind kind;
};

/// index = sum_{i<L} q^i + sum_j seq[j] q^(L-1-j)
std::int64_t path_index(std::span<const int> seq, int q);
OpSeq path_from_index(std::int64_t index, int q);

/// Sorted distinct path indices of a valid architecture.
std::vector<std::int64_t> path_index_set(const Architecture& arch);

FeatureVector encode(const Architecture& arch, const EncodingKind& kind);

/// Inverse of encode. Adjacency families invert exactly (truncated features
/// read as zero). Path families build the canonical member of the class:
/// see realize_path_set. Throws NotRealizable or Error (malformed vector).
Architecture decode(const FeatureVector& fv);

/// Like decode, but features removed by truncation are taken from `fill`.
/// Returns nullopt when no architecture in the space matches.
std::optional<Architecture> try_decode(const FeatureVector& fv, const Architecture* fill = nullptr);

/// Prefix truncation by feature count (path families: path features).
FeatureVector truncate(const FeatureVector& fv, std::size_t bits);
/// Path families only: keep paths of op-length <= x.
FeatureVector truncate_paths(const FeatureVector& fv, int x);

/// Sum of |a_i - b_i| over continuous features and [a_i != b_i] over discrete.
double edit_distance(const FeatureVector& a, const FeatureVector& b);
/// Same, for raw value spans sharing one domain list.
double edit_distance(std::span<const double> a, std::span<const double> b,
                     std::span<const FeatureDomain> domains);

/// `tag,dimension,v0,v1,...` with round-trip precision.
std::string to_csv(const FeatureVector& fv);
FeatureVector from_csv(std::string_view line, SpecPtr spec);

/// Builds one architecture whose set of input-output operation sequences is
/// exactly `indices` (sorted, distinct): a fresh interior chain per path,
/// prefix-shared, then interior nodes merged greedily while the path set is
/// unchanged (then the same from shared suffixes). When both overshoot the
/// space and the space is small enough to enumerate, an exact path-set table
/// settles it. Returns nullopt when no member fits.
std::optional<Architecture> realize_path_set(const SpecPtr& spec,
                                             std::span<const std::int64_t> indices);

}  // namespace nasenc
