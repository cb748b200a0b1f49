#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nasenc/encodings.hpp"
#include "nasenc/search_space.hpp"

namespace nasenc {

/// Errors are percentages, train_time is seconds.
struct BenchmarkRecord {
  double val_error = 0;
  double test_error = 0;
  double train_time = 1;

  bool operator==(const BenchmarkRecord&) const = default;
};

/// Knobs of the synthetic objective.
struct SyntheticParams {
  std::uint64_t seed = 0;
  double noise_std = 0.5;
  /// Paths with at most this many ops carry a weight.
  int weighted_path_length = 3;
  double base_error = 45;
  /// Per-path weights are uniform in [weight_lo, weight_hi].
  double weight_lo = -3;
  double weight_hi = 6;
  double depth_weight = 0.8;
  double edge_weight = 0.3;
  double node_weight = 0.2;
  double min_train_time = 100;
  double max_train_time = 2000;

  bool operator==(const SyntheticParams&) const = default;
};

/// Canonical-form-keyed table of architectures and their errors.
class TabularBenchmark {
 public:
  struct Entry {
    CanonicalKey key;
    Architecture arch;  // canonical representative
    BenchmarkRecord record;
  };

  TabularBenchmark(SpecPtr spec, std::string name, std::vector<Entry> entries);

  static TabularBenchmark generate_synthetic(SpecPtr spec, const SyntheticParams& params);
  /// JSON lines of {"arch","val_error","test_error","train_time"}.
  static TabularBenchmark load(const std::filesystem::path& path, SpecPtr spec);
  void save(const std::filesystem::path& path) const;

  const SpecPtr& spec() const { return spec_; }
  const std::string& name() const { return name_; }
  /// name plus a digest of the table contents; two benchmarks are the same
  /// objective iff their ids match.
  const std::string& id() const { return id_; }
  std::size_t size() const { return entries_.size(); }
  /// Sorted by key.
  const std::vector<Entry>& entries() const { return entries_; }

  /// Throws Error("unknown architecture") when absent or outside the spec.
  const BenchmarkRecord& query(const Architecture& arch) const;
  const BenchmarkRecord& query_key(const CanonicalKey& key) const;
  const Entry& entry(const CanonicalKey& key) const;
  std::optional<BenchmarkRecord> find(const Architecture& arch) const;

  /// Entry with the lowest validation error (lowest key on ties).
  const Entry& best() const;

 private:
  SpecPtr spec_;
  std::string name_;
  std::string id_;
  std::vector<Entry> entries_;
  std::unordered_map<CanonicalKey, std::size_t> index_;
};

struct ClassStats {
  /// Mean over architectures of the std of their class; never increases
  /// when classes are refined.
  double mean_within_std = 0;
  /// Unweighted mean over classes (singletons contribute 0).
  double class_mean_within_std = 0;
  std::size_t class_count = 0;
  double overall_std = 0;
};

/// Groups records by their encoding under `kind` (population std of val_error).
ClassStats equivalence_class_stats(const TabularBenchmark& bench, const EncodingKind& kind);

struct TruncationRow {
  std::size_t bits;
  std::optional<int> path_length;  // path families, when bits is a whole length
  ClassStats stats;
};

/// Path families: 0 bits, then every op-length 0..n-2. Adjacency families:
/// every prefix length 0..d in steps of `stride`, always ending at d.
std::vector<TruncationRow> class_stats_sweep(const TabularBenchmark& bench, Family family,
                                             std::size_t stride = 1);

}  // namespace nasenc
