#include "nasenc/experiment_config.hpp"

#include <array>
#include <filesystem>
#include <set>

#include "json.hpp"

namespace nasenc {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 5> kKindNames{"ablation", "truncation", "outside-ss", "bcurve",
                                                     "tune"};

// Reads known keys of one JSON object; leftover keys are reported by finish().
class Fields {
 public:
  Fields(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    const Json* v = take(key);
    if (v) out = convert<T>(*v, key);
  }

  template <class T>
  void read(const char* key, std::optional<T>& out) {
    const Json* v = take(key);
    if (!v) return;
    if (v->is_null()) out.reset();
    else out = convert<T>(*v, key);
  }

  // Nested object handled by `fn(json, path)`.
  template <class Fn>
  void nested(const char* key, Fn&& fn) {
    if (const Json* v = take(key)) fn(*v, path(key));
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
  }

 private:
  const Json* take(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  T convert(const Json& v, const char* key) const {
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path(key) + ": wrong type");
    }
  }

  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Json optional_json(const auto& v) { return v ? Json(*v) : Json(nullptr); }

Algorithm algorithm_from(const std::string& name, const std::string& where) {
  if (auto a = parse_algorithm(name)) return *a;
  throw ConfigError(where + ": unknown algorithm '" + name + "'");
}

// -- params ------------------------------------------------------------------

Json to_json(const GpParams& p) { return {{"length_scales", p.length_scales}, {"noise", p.noise}}; }

void from_json(const Json& j, const std::string& where, GpParams& p) {
  Fields f(j, where);
  f.read("length_scales", p.length_scales);
  f.read("noise", p.noise);
  f.finish();
}

Json to_json(const EnsembleParams& p) {
  return {{"members", p.members},       {"hidden", p.hidden},
          {"learning_rate", p.learning_rate}, {"epochs", p.epochs},
          {"batch_size", p.batch_size}, {"seed", p.seed},
          {"identical_members", p.identical_members}};
}

void from_json(const Json& j, const std::string& where, EnsembleParams& p) {
  Fields f(j, where);
  f.read("members", p.members);
  f.read("hidden", p.hidden);
  f.read("learning_rate", p.learning_rate);
  f.read("epochs", p.epochs);
  f.read("batch_size", p.batch_size);
  f.read("seed", p.seed);
  f.read("identical_members", p.identical_members);
  f.finish();
}

Json to_json(const AlgorithmParams& p) {
  return {{"population", p.population},
          {"tournament", p.tournament},
          {"mutation", p.mutation},
          {"initial_queries", p.initial_queries},
          {"pool_random", p.pool_random},
          {"pool_mutations", p.pool_mutations},
          {"parents", p.parents},
          {"mutations_per_parent", p.mutations_per_parent},
          {"batch_size", p.batch_size},
          {"acquisition", std::string(acquisition_name(p.acquisition))},
          {"lcb_weight", p.lcb_weight},
          {"gp", to_json(p.gp)},
          {"ensemble", to_json(p.ensemble)}};
}

void from_json(const Json& j, const std::string& where, AlgorithmParams& p) {
  Fields f(j, where);
  f.read("population", p.population);
  f.read("tournament", p.tournament);
  f.read("mutation", p.mutation);
  f.read("initial_queries", p.initial_queries);
  f.read("pool_random", p.pool_random);
  f.read("pool_mutations", p.pool_mutations);
  f.read("parents", p.parents);
  f.read("mutations_per_parent", p.mutations_per_parent);
  f.read("batch_size", p.batch_size);
  std::string acquisition(acquisition_name(p.acquisition));
  f.read("acquisition", acquisition);
  if (auto a = parse_acquisition(acquisition)) p.acquisition = *a;
  else throw ConfigError(f.path("acquisition") + ": unknown acquisition '" + acquisition + "'");
  f.read("lcb_weight", p.lcb_weight);
  f.nested("gp", [&](const Json& v, const std::string& w) { from_json(v, w, p.gp); });
  f.nested("ensemble", [&](const Json& v, const std::string& w) { from_json(v, w, p.ensemble); });
  f.finish();
}

Json to_json(const SyntheticParams& p) {
  return {{"seed", p.seed},
          {"noise_std", p.noise_std},
          {"weighted_path_length", p.weighted_path_length},
          {"base_error", p.base_error},
          {"weight_lo", p.weight_lo},
          {"weight_hi", p.weight_hi},
          {"depth_weight", p.depth_weight},
          {"edge_weight", p.edge_weight},
          {"node_weight", p.node_weight},
          {"min_train_time", p.min_train_time},
          {"max_train_time", p.max_train_time}};
}

void from_json(const Json& j, const std::string& where, SyntheticParams& p) {
  Fields f(j, where);
  f.read("seed", p.seed);
  f.read("noise_std", p.noise_std);
  f.read("weighted_path_length", p.weighted_path_length);
  f.read("base_error", p.base_error);
  f.read("weight_lo", p.weight_lo);
  f.read("weight_hi", p.weight_hi);
  f.read("depth_weight", p.depth_weight);
  f.read("edge_weight", p.edge_weight);
  f.read("node_weight", p.node_weight);
  f.read("min_train_time", p.min_train_time);
  f.read("max_train_time", p.max_train_time);
  f.finish();
}

Json to_json(const BenchmarkSource& s) {
  return {{"synthetic", s.synthetic ? to_json(*s.synthetic) : Json(nullptr)},
          {"file", optional_json(s.file)}};
}

void from_json(const Json& j, const std::string& where, BenchmarkSource& s) {
  Fields f(j, where);
  bool synthetic_given = false;
  f.nested("synthetic", [&](const Json& v, const std::string& w) {
    synthetic_given = true;
    if (v.is_null()) {
      s.synthetic.reset();
      return;
    }
    SyntheticParams p;
    from_json(v, w, p);
    s.synthetic = p;
  });
  f.read("file", s.file);
  f.finish();
  // a file alone replaces the default generator
  if (s.file && !synthetic_given) s.synthetic.reset();
  if (s.synthetic.has_value() == s.file.has_value())
    throw ConfigError(where + ": give exactly one of 'synthetic' or 'file'");
}

Json to_json(const Budget& b) {
  return {{"seconds", optional_json(b.seconds)}, {"queries", optional_json(b.queries)}};
}

void from_json(const Json& j, const std::string& where, Budget& b) {
  Fields f(j, where);
  f.read("seconds", b.seconds);
  f.read("queries", b.queries);
  f.finish();
}

Json to_json(const CellConfig& c) {
  return {{"label", c.label},
          {"algorithm", std::string(algorithm_name(c.algorithm))},
          {"sample", optional_json(c.sample)},
          {"perturb", optional_json(c.perturb)},
          {"predictor", optional_json(c.predictor)},
          {"params", to_json(c.params)}};
}

void from_json(const Json& j, const std::string& where, CellConfig& c) {
  Fields f(j, where);
  f.read("label", c.label);
  std::string algorithm(algorithm_name(c.algorithm));
  f.read("algorithm", algorithm);
  c.algorithm = algorithm_from(algorithm, f.path("algorithm"));
  f.read("sample", c.sample);
  f.read("perturb", c.perturb);
  f.read("predictor", c.predictor);
  f.nested("params", [&](const Json& v, const std::string& w) { from_json(v, w, c.params); });
  f.finish();
}

// -- experiment sections -----------------------------------------------------

Json to_json(const SpaceConfig& s) {
  return {{"n_nodes", s.n_nodes}, {"max_edges", s.max_edges}, {"num_ops", s.num_ops},
          {"op_names", s.op_names}};
}

void from_json(const Json& j, const std::string& where, SpaceConfig& s) {
  Fields f(j, where);
  f.read("n_nodes", s.n_nodes);
  f.read("max_edges", s.max_edges);
  f.read("num_ops", s.num_ops);
  f.read("op_names", s.op_names);
  f.finish();
}

Json to_json(const TruncationSettings& t) {
  return {{"algorithm", std::string(algorithm_name(t.algorithm))},
          {"sample", t.sample},
          {"bits", t.bits},
          {"params", to_json(t.params)}};
}

void from_json(const Json& j, const std::string& where, TruncationSettings& t) {
  Fields f(j, where);
  std::string algorithm(algorithm_name(t.algorithm));
  f.read("algorithm", algorithm);
  t.algorithm = algorithm_from(algorithm, f.path("algorithm"));
  f.read("sample", t.sample);
  f.read("bits", t.bits);
  f.nested("params", [&](const Json& v, const std::string& w) { from_json(v, w, t.params); });
  f.finish();
}

Json to_json(const OutsideSettings& o) {
  return {{"train_max_nodes", o.train_max_nodes},
          {"train_max_edges", o.train_max_edges},
          {"test_nodes", o.test_nodes},
          {"test_min_edges", o.test_min_edges},
          {"test_max_edges", o.test_max_edges},
          {"train_size", o.train_size},
          {"test_size", o.test_size},
          {"top", o.top},
          {"encodings", o.encodings},
          {"ensemble", to_json(o.ensemble)}};
}

void from_json(const Json& j, const std::string& where, OutsideSettings& o) {
  Fields f(j, where);
  f.read("train_max_nodes", o.train_max_nodes);
  f.read("train_max_edges", o.train_max_edges);
  f.read("test_nodes", o.test_nodes);
  f.read("test_min_edges", o.test_min_edges);
  f.read("test_max_edges", o.test_max_edges);
  f.read("train_size", o.train_size);
  f.read("test_size", o.test_size);
  f.read("top", o.top);
  f.read("encodings", o.encodings);
  f.nested("ensemble", [&](const Json& v, const std::string& w) { from_json(v, w, o.ensemble); });
  f.finish();
}

Json to_json(const BCurveSettings& b) {
  Json grid = Json::array();
  for (const auto& p : b.grid) grid.push_back({{"n", p.n}, {"k", p.k}});
  return {{"grid", grid}, {"mc_trials", b.mc_trials}, {"c", b.c}};
}

void from_json(const Json& j, const std::string& where, BCurveSettings& b) {
  Fields f(j, where);
  f.nested("grid", [&](const Json& v, const std::string& w) {
    if (!v.is_array()) throw ConfigError(w + ": expected an array");
    b.grid.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      Fields point(v[i], w + "[" + std::to_string(i) + "]");
      BCurvePoint p{0, 0};
      point.read("n", p.n);
      point.read("k", p.k);
      point.finish();
      b.grid.push_back(p);
    }
  });
  f.read("mc_trials", b.mc_trials);
  f.read("c", b.c);
  f.finish();
}

Json to_json(const TuneSettings& t) {
  return {{"cell", to_json(t.cell)},
          {"iterations", t.iterations},
          {"trials", t.trials},
          {"queries", t.queries},
          {"evaluation", to_json(t.evaluation)}};
}

void from_json(const Json& j, const std::string& where, TuneSettings& t) {
  Fields f(j, where);
  f.nested("cell", [&](const Json& v, const std::string& w) { from_json(v, w, t.cell); });
  f.read("iterations", t.iterations);
  f.read("trials", t.trials);
  f.read("queries", t.queries);
  f.nested("evaluation", [&](const Json& v, const std::string& w) { from_json(v, w, t.evaluation); });
  f.finish();
}

}  // namespace

std::string_view experiment_kind_name(ExperimentKind kind) { return kKindNames[static_cast<int>(kind)]; }

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  if (name == "b-curve") return ExperimentKind::BCurve;
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<ExperimentKind>(i);
  return std::nullopt;
}

TabularBenchmark BenchmarkSource::load(const SpecPtr& spec) const {
  if (file) return TabularBenchmark::load(*file, spec);
  if (synthetic) return TabularBenchmark::generate_synthetic(spec, *synthetic);
  throw ConfigError("benchmark source is empty");
}

std::string CellConfig::display_label() const {
  if (!label.empty()) return label;
  std::string out(algorithm_name(algorithm));
  for (const auto* slot : {&sample, &perturb, &predictor}) out += "/" + slot->value_or("-");
  return out;
}

AlgorithmConfig CellConfig::resolve(const SpecPtr& spec) const {
  AlgorithmConfig c;
  c.algorithm = algorithm;
  auto kind = [&](const std::optional<std::string>& tag) -> std::optional<EncodingKind> {
    if (!tag) return std::nullopt;
    return EncodingKind::parse(*tag, spec);
  };
  c.encodings = {kind(sample), kind(perturb), kind(predictor)};
  c.params = params;
  return c;
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Fields f(j, "config");
  std::string kind(experiment_kind_name(c.kind));
  f.read("kind", kind);
  if (auto k = parse_experiment_kind(kind)) c.kind = *k;
  else throw ConfigError("config.kind: unknown experiment '" + kind + "'");
  f.nested("space", [&](const Json& v, const std::string& w) { from_json(v, w, c.space); });
  f.nested("benchmark", [&](const Json& v, const std::string& w) { from_json(v, w, c.benchmark); });
  f.nested("cells", [&](const Json& v, const std::string& w) {
    if (!v.is_array()) throw ConfigError(w + ": expected an array");
    c.cells.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      CellConfig cell;
      from_json(v[i], w + "[" + std::to_string(i) + "]", cell);
      c.cells.push_back(std::move(cell));
    }
  });
  f.read("trials", c.trials);
  f.nested("budget", [&](const Json& v, const std::string& w) { from_json(v, w, c.budget); });
  f.read("seed", c.seed);
  f.read("output", c.output);
  f.read("query_cache", c.query_cache);
  f.read("checkpoints", c.checkpoints);
  f.nested("truncation", [&](const Json& v, const std::string& w) { from_json(v, w, c.truncation); });
  f.nested("outside", [&](const Json& v, const std::string& w) { from_json(v, w, c.outside); });
  f.nested("bcurve", [&](const Json& v, const std::string& w) { from_json(v, w, c.bcurve); });
  f.nested("tune", [&](const Json& v, const std::string& w) { from_json(v, w, c.tune); });
  f.finish();
  if (c.trials < 1) throw ConfigError("config.trials must be >= 1");
  if (c.checkpoints < 1) throw ConfigError("config.checkpoints must be >= 1");
  return c;
}

std::string to_json_text(const ExperimentConfig& c) {
  Json cells = Json::array();
  for (const auto& cell : c.cells) cells.push_back(to_json(cell));
  const Json j = {{"kind", std::string(experiment_kind_name(c.kind))},
                  {"space", to_json(c.space)},
                  {"benchmark", to_json(c.benchmark)},
                  {"cells", cells},
                  {"trials", c.trials},
                  {"budget", to_json(c.budget)},
                  {"seed", c.seed},
                  {"output", c.output},
                  {"query_cache", c.query_cache},
                  {"checkpoints", c.checkpoints},
                  {"truncation", to_json(c.truncation)},
                  {"outside", to_json(c.outside)},
                  {"bcurve", to_json(c.bcurve)},
                  {"tune", to_json(c.tune)}};
  return j.dump(2) + "\n";
}

std::string to_json_text(const AlgorithmParams& params) { return to_json(params).dump(2) + "\n"; }

}  // namespace nasenc
