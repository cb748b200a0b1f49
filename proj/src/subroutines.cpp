#include "nasenc/subroutines.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace nasenc {

namespace {

double unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double draw(const FeatureDomain& d, Rng& rng) {
  using T = FeatureDomain::Type;
  switch (d.type) {
    case T::Binary: return static_cast<double>(rng() >> 63);
    case T::Categorical:
    case T::Count: return uniform_int(rng, d.lo, d.hi);
    case T::Continuous: return unit(rng);
    case T::Fixed: return d.lo;
  }
  return 0;
}

bool acceptable(const std::optional<Architecture>& a) { return a && is_valid(*a); }

// Stand-in for features a truncated encoding no longer carries.
std::optional<Architecture> fill_for(const EncodingKind& kind, Rng& rng, std::int64_t ceiling) {
  if (!kind.is_truncated()) return std::nullopt;
  return sample_random(EncodingKind(Family::AdjOneHot, kind.spec()), rng, ceiling);
}

}  // namespace

std::vector<double> random_features(std::span<const FeatureDomain> domains, Rng& rng) {
  std::vector<double> v(domains.size());
  for (std::size_t i = 0; i < domains.size(); ++i) v[i] = draw(domains[i], rng);
  return v;
}

Architecture sample_random(const EncodingKind& kind, Rng& rng, std::int64_t ceiling) {
  const auto domains = feature_domains(kind);
  for (std::int64_t attempt = 0; attempt < ceiling; ++attempt) {
    const auto fill = fill_for(kind, rng, ceiling);
    FeatureVector fv{random_features(domains, rng), kind};
    auto arch = try_decode(fv, fill ? &*fill : nullptr);
    if (acceptable(arch)) return std::move(*arch);
  }
  throw RejectionCeiling("no valid architecture after " + std::to_string(ceiling) +
                         " draws of " + kind.tag());
}

Architecture sample_random(const EncodingKind& kind, std::uint64_t seed, std::int64_t ceiling) {
  Rng rng(seed);
  return sample_random(kind, rng, ceiling);
}

UniformSpaceSampler::UniformSpaceSampler(const SpecPtr& spec, double ceiling) {
  enumerate_space(spec, {.dedup = true, .ceiling = ceiling},
                  [&](const Architecture& a) { members_.push_back(canonical_representative(a)); });
  if (members_.empty()) throw Error("search space has no valid architecture");
}

const Architecture& UniformSpaceSampler::sample(Rng& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, members_.size() - 1);
  return members_[pick(rng)];
}

PerturbResult perturb(const Architecture& arch, const EncodingKind& kind, double m, Rng& rng,
                      std::int64_t ceiling) {
  const auto base = encode(arch, kind).values;
  const auto domains = feature_domains(kind);
  const double d = static_cast<double>(base.size());
  if (m < 0 || (d > 0 && m > d)) throw ConfigError("mutation factor must lie in [0, dimension]");
  const double rate = d > 0 ? m / d : 0;
  for (std::int64_t attempt = 1; attempt <= ceiling; ++attempt) {
    FeatureVector fv{base, kind};
    bool touched = false;
    for (std::size_t i = 0; i < base.size(); ++i)
      if (unit(rng) < rate) {
        fv.values[i] = draw(domains[i], rng);
        touched = true;
      }
    if (!touched && !kind.is_truncated()) return {arch, false, attempt};
    const auto fill = fill_for(kind, rng, kSampleCeiling);
    auto out = try_decode(fv, fill ? &*fill : nullptr);
    if (acceptable(out)) return {std::move(*out), false, attempt};
  }
  return {arch, true, ceiling};
}

PerturbResult perturb(const Architecture& arch, const EncodingKind& kind, double m,
                      std::uint64_t seed, std::int64_t ceiling) {
  Rng rng(seed);
  return perturb(arch, kind, m, rng, ceiling);
}

std::vector<Architecture> neighbors(const Architecture& arch, const EncodingKind& kind) {
  using T = FeatureDomain::Type;
  const auto base = encode(arch, kind).values;
  const auto domains = feature_domains(kind);
  const CanonicalKey own = canonical_form(arch);
  std::set<double> used;  // values held by padded categorical slots
  for (std::size_t i = 0; i < base.size(); ++i)
    if (domains[i].hi_is_absent && base[i] != domains[i].hi) used.insert(base[i]);
  bool empty_slot_done = false;  // every empty slot offers the same additions
  std::map<CanonicalKey, Architecture> found;
  auto consider = [&](std::size_t i, double value) {
    FeatureVector fv{base, kind};
    fv.values[i] = value;
    auto out = try_decode(fv, &arch);
    if (!acceptable(out)) return;
    auto key = canonical_form(*out);
    if (key != own) found.try_emplace(std::move(key), std::move(*out));
  };
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto& d = domains[i];
    const double current = base[i];
    switch (d.type) {
      case T::Fixed: break;
      case T::Binary: consider(i, 1 - current); break;
      case T::Continuous:
        for (double v : {0.0, 1.0})
          if (v != current) consider(i, v);
        break;
      case T::Count:
        for (int v = d.lo; v <= d.hi; ++v)
          if (v != current) consider(i, v);
        break;
      case T::Categorical:
        if (!d.hi_is_absent) {
          for (int v = d.lo; v <= d.hi; ++v)
            if (v != current) consider(i, v);
        } else if (current != d.hi) {
          consider(i, d.hi);
        } else if (!empty_slot_done) {
          empty_slot_done = true;
          for (int v = d.lo; v < d.hi; ++v)
            if (!used.contains(v)) consider(i, v);
        }
        break;
    }
  }
  std::vector<Architecture> out;
  out.reserve(found.size());
  for (auto& [key, a] : found) out.push_back(std::move(a));
  return out;
}

}  // namespace nasenc
