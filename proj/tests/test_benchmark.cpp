#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "nasenc/benchmark.hpp"
#include "nasenc/io.hpp"

using namespace nasenc;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("nasenc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("synthetic benchmark covers every class, deterministically") {
  const auto spec = make_spec(5, 10, 3);
  const auto a = TabularBenchmark::generate_synthetic(spec, {.seed = 3});
  const auto b = TabularBenchmark::generate_synthetic(spec, {.seed = 3});
  const auto c = TabularBenchmark::generate_synthetic(spec, {.seed = 4});
  CHECK(a.size() == enumerate_space(spec, {.dedup = true}).size());
  CHECK(a.id() == b.id());
  CHECK(a.id() != c.id());
  for (const auto& e : a.entries()) {
    CHECK(e.record.val_error >= 2);
    CHECK(e.record.val_error <= 95);
    CHECK(e.record.train_time >= 100);
    CHECK(e.record.train_time <= 2000);
    CHECK(a.query(e.arch) == e.record);
  }
  CHECK(a.best().record.val_error <= a.entries().front().record.val_error);
}

TEST_CASE("every class member maps to its class record") {
  const auto spec = make_spec(5, 10, 2);
  const auto bench = TabularBenchmark::generate_synthetic(spec, {.seed = 1});
  for (const auto& a : enumerate_space(spec)) {
    const auto rec = bench.query(a);
    CHECK(rec == bench.entry(canonical_form(a)).record);
  }
}

TEST_CASE("save and load round-trip") {
  const auto spec = make_spec(5, 6, 2);
  const auto bench = TabularBenchmark::generate_synthetic(spec, {.seed = 9});
  const auto dir = scratch_dir("roundtrip");
  bench.save(dir / "table.jsonl");
  const auto back = TabularBenchmark::load(dir / "table.jsonl", spec);
  REQUIRE(back.size() == bench.size());
  for (std::size_t i = 0; i < bench.size(); ++i) {
    CHECK(back.entries()[i].key == bench.entries()[i].key);
    CHECK(back.entries()[i].record == bench.entries()[i].record);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("load reports the failing line") {
  const auto spec = make_spec(4, 6, 2);
  const auto dir = scratch_dir("bad");
  const std::string good = R"({"arch":"4;100010;0,0","val_error":10,"test_error":11,"train_time":5})";
  write_text(dir / "a.jsonl", good + "\n{not json}\n");
  try {
    TabularBenchmark::load(dir / "a.jsonl", spec);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  // isomorphic duplicate with a different record
  write_text(dir / "b.jsonl",
             good + "\n" + R"({"arch":"4;010001;1,0","val_error":10,"test_error":11,"train_time":5})" + "\n" +
                 R"({"arch":"4;010001;1,0","val_error":12,"test_error":11,"train_time":5})" + "\n");
  CHECK_THROWS_WITH_AS(TabularBenchmark::load(dir / "b.jsonl", spec),
                       doctest::Contains("conflicting"), Error);
  write_text(dir / "c.jsonl", R"({"arch":"4;000000;0,0","val_error":10,"test_error":11,"train_time":5})");
  CHECK_THROWS_AS(TabularBenchmark::load(dir / "c.jsonl", spec), Error);
  write_text(dir / "d.jsonl", R"({"arch":"4;100010;0,0","val_error":140,"test_error":11,"train_time":5})");
  CHECK_THROWS_AS(TabularBenchmark::load(dir / "d.jsonl", spec), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("queries outside the table fail") {
  const auto spec = make_spec(4, 6, 2);
  const auto bench = TabularBenchmark::generate_synthetic(spec, {});
  const Architecture dead(spec, std::vector<Edge>{{0, 1}}, {0, 0});
  CHECK_THROWS_WITH_AS(bench.query(dead), doctest::Contains("unknown architecture"), Error);
  const auto other = make_spec(5, 6, 2);
  const Architecture foreign(other, std::vector<Edge>{{0, 4}}, {0, 0, 0});
  CHECK_THROWS_AS(bench.query(foreign), Error);
  CHECK_FALSE(bench.find(foreign));
}

TEST_CASE("class statistics agree with grouping by path set") {
  const auto spec = make_spec(5, 10, 3);
  const auto bench = TabularBenchmark::generate_synthetic(spec, {.seed = 2});
  std::map<std::vector<std::int64_t>, std::vector<double>> groups;
  double sum = 0, sum_sq = 0;
  for (const auto& e : bench.entries()) {
    groups[path_index_set(e.arch)].push_back(e.record.val_error);
    sum += e.record.val_error;
    sum_sq += e.record.val_error * e.record.val_error;
  }
  const double count = static_cast<double>(bench.size());
  const double overall = std::sqrt(sum_sq / count - (sum / count) * (sum / count));
  double weighted = 0;
  for (const auto& [key, vals] : groups) {
    double m = 0;
    for (double v : vals) m += v;
    m /= static_cast<double>(vals.size());
    double var = 0;
    for (double v : vals) var += (v - m) * (v - m);
    weighted += std::sqrt(var / static_cast<double>(vals.size())) * static_cast<double>(vals.size());
  }
  const auto s = equivalence_class_stats(bench, {Family::PathOneHot, spec});
  CHECK(s.class_count == groups.size());
  CHECK(s.overall_std == doctest::Approx(overall).epsilon(1e-9));
  CHECK(s.mean_within_std == doctest::Approx(weighted / count).epsilon(1e-9));
  CHECK(s.mean_within_std < s.overall_std);
  // distinct canonical representatives never share an adjacency code
  const auto adj = equivalence_class_stats(bench, {Family::AdjOneHot, spec});
  CHECK(adj.class_count == bench.size());
  CHECK(adj.mean_within_std == 0);
}

TEST_CASE("refining classes never raises the weighted within-class spread") {
  const auto spec = make_spec(5, 10, 3);
  const auto bench = TabularBenchmark::generate_synthetic(spec, {.seed = 5});
  for (Family f : {Family::PathOneHot, Family::AdjOneHot}) {
    const auto rows = class_stats_sweep(bench, f, 3);
    REQUIRE(rows.size() >= 2);
    CHECK(rows.front().bits == 0);
    CHECK(rows.front().stats.class_count == 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i].bits >= rows[i - 1].bits);
      CHECK(rows[i].stats.mean_within_std <= rows[i - 1].stats.mean_within_std + 1e-12);
      CHECK(rows[i].stats.class_count >= rows[i - 1].stats.class_count);
    }
  }
}
