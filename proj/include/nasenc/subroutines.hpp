#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nasenc/encodings.hpp"

namespace nasenc {

inline constexpr std::int64_t kSampleCeiling = 100'000;
inline constexpr std::int64_t kPerturbCeiling = 10'000;

/// One uniform draw per feature domain.
std::vector<double> random_features(std::span<const FeatureDomain> domains, Rng& rng);

/// Uniform over every feature of `kind`, decoded, redrawn until valid and
/// within the edge budget (RejectionCeiling after `ceiling` draws). Features
/// removed by truncation come from an untruncated one-hot adjacency sample.
Architecture sample_random(const EncodingKind& kind, Rng& rng, std::int64_t ceiling = kSampleCeiling);
Architecture sample_random(const EncodingKind& kind, std::uint64_t seed,
                           std::int64_t ceiling = kSampleCeiling);

/// Uniform over isomorphism classes of an enumerable space.
class UniformSpaceSampler {
 public:
  explicit UniformSpaceSampler(const SpecPtr& spec, double ceiling = 1e8);
  const Architecture& sample(Rng& rng) const;
  std::size_t size() const { return members_.size(); }
  const std::vector<Architecture>& members() const { return members_; }

 private:
  std::vector<Architecture> members_;
};

struct PerturbResult {
  Architecture arch;
  bool exhausted = false;  // ceiling hit; arch is the input
  std::int64_t attempts = 0;
};

/// Resamples each feature with probability m / dimension, redrawing the whole
/// perturbation until the decoded architecture is valid. Truncated features
/// are refilled from a fresh random reference on every attempt.
PerturbResult perturb(const Architecture& arch, const EncodingKind& kind, double m, Rng& rng,
                      std::int64_t ceiling = kPerturbCeiling);
PerturbResult perturb(const Architecture& arch, const EncodingKind& kind, double m,
                      std::uint64_t seed, std::int64_t ceiling = kPerturbCeiling);

/// Valid architectures one feature change away, excluding arch's own class,
/// one per class, ordered by canonical key. Padded categorical slots only
/// switch between empty and an unused value; continuous features try 0 and 1.
std::vector<Architecture> neighbors(const Architecture& arch, const EncodingKind& kind);

}  // namespace nasenc
