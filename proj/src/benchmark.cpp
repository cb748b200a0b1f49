#include "nasenc/benchmark.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "json.hpp"
#include "nasenc/io.hpp"
#include "nasenc/stats.hpp"

namespace nasenc {

namespace {

double unit_from(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void check_record(const BenchmarkRecord& r) {
  auto percent = [](double v) { return std::isfinite(v) && v >= 0 && v <= 100; };
  if (!percent(r.val_error) || !percent(r.test_error))
    throw Error("errors must lie in [0, 100]");
  if (!(r.train_time > 0) || !std::isfinite(r.train_time))
    throw Error("train_time must be positive");
}

}  // namespace

TabularBenchmark::TabularBenchmark(SpecPtr spec, std::string name, std::vector<Entry> entries)
    : spec_(std::move(spec)), name_(std::move(name)), entries_(std::move(entries)) {
  if (entries_.empty()) throw Error("benchmark has no records");
  std::sort(entries_.begin(), entries_.end(),
            [](const Entry& a, const Entry& b) { return a.key < b.key; });
  std::uint64_t digest = fnv1a(name_);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    check_record(e.record);
    if (!index_.emplace(e.key, i).second) throw Error("duplicate architecture in benchmark");
    digest = fnv1a(e.key, digest);
    for (double v : {e.record.val_error, e.record.test_error, e.record.train_time})
      digest = fnv1a(format_double(v), digest);
  }
  id_ = name_ + "@" + hex64(digest);
}

TabularBenchmark TabularBenchmark::generate_synthetic(SpecPtr spec, const SyntheticParams& p) {
  if (p.noise_std < 0) throw ConfigError("noise_std must be >= 0");
  if (!(p.min_train_time > 0) || p.max_train_time < p.min_train_time)
    throw ConfigError("train time range must satisfy 0 < min <= max");
  const int q = spec->num_ops;
  const std::int64_t weighted =
      path_feature_count(q, std::clamp(p.weighted_path_length, 0, spec->n_nodes - 2));
  auto weight = [&](std::int64_t path) {
    return p.weight_lo + (p.weight_hi - p.weight_lo) *
                             unit_from(mix64(derive_seed(p.seed, static_cast<std::uint64_t>(path))));
  };

  std::vector<Entry> entries;
  enumerate_space(spec, {.dedup = true}, [&](const Architecture& arch) {
    Architecture rep = canonical_representative(arch);
    CanonicalKey key = canonical_form(rep);
    const auto paths = path_index_set(rep);
    double val = p.base_error;
    for (auto path : paths)
      if (path < weighted) val -= weight(path);
    const int depth = static_cast<int>(path_from_index(paths.back(), q).size());
    const int interior = std::popcount(live_nodes(rep)) - 2;
    val += -p.depth_weight * depth + p.edge_weight * rep.edge_count() + p.node_weight * interior;
    val = std::clamp(val, 2.0, 95.0);

    Rng rng(derive_seed(p.seed, fnv1a(key)));
    const double noise = p.noise_std > 0 ? std::normal_distribution<double>(0, p.noise_std)(rng) : 0;
    const double log_lo = std::log(p.min_train_time), log_hi = std::log(p.max_train_time);
    const double time = std::exp(log_lo + (log_hi - log_lo) * unit_from(rng()));
    entries.push_back({std::move(key), std::move(rep),
                       {val, std::clamp(val + noise, 0.0, 100.0), time}});
  });
  char name[96];
  std::snprintf(name, sizeof name, "synthetic-n%d-k%d-q%d-s%llu", spec->n_nodes, spec->max_edges, q,
                static_cast<unsigned long long>(p.seed));
  return TabularBenchmark(std::move(spec), name, std::move(entries));
}

TabularBenchmark TabularBenchmark::load(const std::filesystem::path& path, SpecPtr spec) {
  std::istringstream in(read_file(path));
  std::map<CanonicalKey, Entry> table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& what) {
      return Error(path.string() + ": line " + std::to_string(line_no) + ": " + what);
    };
    BenchmarkRecord record;
    std::string text;
    try {
      const auto j = nlohmann::json::parse(line);
      text = j.at("arch").get<std::string>();
      record = {j.at("val_error").get<double>(), j.at("test_error").get<double>(),
                j.at("train_time").get<double>()};
    } catch (const nlohmann::json::exception& e) {
      throw fail(std::string("parse error: ") + e.what());
    }
    std::optional<Architecture> arch;
    try {
      arch = Architecture::from_text(spec, text);
      check_record(record);
    } catch (const Error& e) {
      throw fail(e.what());
    }
    if (!is_valid(*arch)) throw fail("invalid architecture '" + text + "'");
    Architecture rep = canonical_representative(*arch);
    CanonicalKey key = canonical_form(rep);
    auto [it, fresh] = table.try_emplace(key, Entry{key, rep, record});
    if (!fresh && !(it->second.record == record))
      throw fail("duplicate architecture with a conflicting record");
  }
  std::vector<Entry> entries;
  for (auto& [key, e] : table) entries.push_back(std::move(e));
  return TabularBenchmark(std::move(spec), path.stem().string(), std::move(entries));
}

void TabularBenchmark::save(const std::filesystem::path& path) const {
  std::string out;
  for (const auto& e : entries_) {
    out += "{\"arch\":\"" + e.arch.to_text() + "\",\"val_error\":" + format_double(e.record.val_error) +
           ",\"test_error\":" + format_double(e.record.test_error) +
           ",\"train_time\":" + format_double(e.record.train_time) + "}\n";
  }
  write_file_atomic(path, out);
}

std::optional<BenchmarkRecord> TabularBenchmark::find(const Architecture& arch) const {
  if (!(arch.spec() == *spec_) || !is_valid(arch)) return std::nullopt;
  const auto it = index_.find(canonical_form(arch));
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].record;
}

const BenchmarkRecord& TabularBenchmark::query(const Architecture& arch) const {
  if (!(arch.spec() == *spec_)) throw Error("unknown architecture: outside the benchmark's space");
  if (!is_valid(arch)) throw Error("unknown architecture: no input-output path");
  return query_key(canonical_form(arch));
}

const BenchmarkRecord& TabularBenchmark::query_key(const CanonicalKey& key) const {
  return entry(key).record;
}

const TabularBenchmark::Entry& TabularBenchmark::entry(const CanonicalKey& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) throw Error("unknown architecture");
  return entries_[it->second];
}

const TabularBenchmark::Entry& TabularBenchmark::best() const {
  return *std::min_element(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    return a.record.val_error < b.record.val_error;
  });
}

ClassStats equivalence_class_stats(const TabularBenchmark& bench, const EncodingKind& kind) {
  std::map<std::vector<double>, std::vector<double>> classes;
  std::vector<double> all;
  all.reserve(bench.size());
  for (const auto& e : bench.entries()) {
    classes[encode(e.arch, kind).values].push_back(e.record.val_error);
    all.push_back(e.record.val_error);
  }
  ClassStats out;
  out.class_count = classes.size();
  out.overall_std = stats::population_std(all);
  double weighted = 0, unweighted = 0;
  for (const auto& [features, vals] : classes) {
    const double s = stats::population_std(vals);
    weighted += s * static_cast<double>(vals.size());
    unweighted += s;
  }
  out.mean_within_std = weighted / static_cast<double>(all.size());
  out.class_mean_within_std = unweighted / static_cast<double>(classes.size());
  return out;
}

std::vector<TruncationRow> class_stats_sweep(const TabularBenchmark& bench, Family family,
                                             std::size_t stride) {
  const EncodingKind full(family, bench.spec());
  std::vector<TruncationRow> rows;
  if (full.is_path()) {
    rows.push_back({0, std::nullopt, equivalence_class_stats(bench, full.truncated_to_bits(0))});
    for (int x = 0; x <= bench.spec()->n_nodes - 2; ++x) {
      const auto kind = full.truncated_to_path_length(x);
      rows.push_back({static_cast<std::size_t>(path_feature_count(bench.spec()->num_ops, x)), x,
                      equivalence_class_stats(bench, kind)});
    }
    return rows;
  }
  const std::size_t d = dimension(full);
  stride = std::max<std::size_t>(stride, 1);
  for (std::size_t bits = 0;; bits = std::min(d, bits + stride)) {
    rows.push_back({bits, std::nullopt, equivalence_class_stats(bench, full.truncated_to_bits(bits))});
    if (bits == d) break;
  }
  return rows;
}

}  // namespace nasenc
