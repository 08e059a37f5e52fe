#pragma once

#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "sabre/presets.hpp"
#include "sabre/scenario.hpp"

namespace sabre {

using Json = nlohmann::ordered_json;

inline constexpr int kConfigSchemaVersion = 1;

namespace detail {

inline void check_keys(const Json& obj, const std::set<std::string>& allowed,
                       const std::string& context) {
  if (!obj.is_object())
    throw ConfigError(context + " must be a JSON object");
  for (const auto& [key, val] : obj.items())
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in " + context);
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (Algorithm a : {Algorithm::Sabre, Algorithm::BayP2PFL,
                      Algorithm::TrimmedMean, Algorithm::Clipping,
                      Algorithm::Zeno})
    if (algorithm_name(a) == s) return a;
  throw ConfigError("unknown algorithm '" + s + "'");
}

inline AttackKind parse_attack_kind(const std::string& s) {
  for (AttackKind k : {AttackKind::LabelFlipBias, AttackKind::Trojan,
                       AttackKind::BitFlip, AttackKind::GeneralRandom,
                       AttackKind::Alie})
    if (attack_kind_name(k) == s) return k;
  throw ConfigError("unknown attack kind '" + s + "'");
}

inline Json edges_to_json(const Adjacency& a) {
  Json edges = Json::array();
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (a(i, j)) edges.push_back(Json::array({i, j}));
  return edges;
}

inline Adjacency edges_from_json(int n, const Json& edges) {
  Adjacency a = Adjacency::Zero(n, n);
  for (const auto& e : edges) {
    if (!e.is_array() || e.size() != 2)
      throw ConfigError("edge must be a [receiver, sender] pair");
    const int i = e[0].get<int>(), j = e[1].get<int>();
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw ConfigError("edge endpoint out of range");
    if (i != j) a(i, j) = 1;
  }
  return a;
}

}  // namespace detail

inline Json topology_to_json(const Topology& t) {
  Json j;
  j["nodes"] = t.nodes;
  switch (t.kind) {
    case Topology::Kind::Static:
      j["kind"] = "static";
      j["edges"] = detail::edges_to_json(t.base);
      break;
    case Topology::Kind::RandomDrop:
      j["kind"] = "random-drop";
      j["edges"] = detail::edges_to_json(t.base);
      j["drop_fraction"] = t.drop_fraction;
      j["reshuffle_period"] = t.reshuffle_period;
      j["seed"] = t.seed;
      break;
    case Topology::Kind::Scripted:
      j["kind"] = "scripted";
      j["script"] = Json::array();
      for (const auto& frame : t.script)
        j["script"].push_back(detail::edges_to_json(frame));
      break;
  }
  return j;
}

inline Topology topology_from_json(const Json& j) {
  detail::check_keys(j,
                     {"kind", "nodes", "edges", "drop_fraction",
                      "reshuffle_period", "seed", "script"},
                     "topology");
  const std::string kind = j.at("kind").get<std::string>();
  const int n = j.at("nodes").get<int>();
  if (n < 1) throw ConfigError("topology.nodes must be >= 1");
  Topology t;
  t.nodes = n;
  if (kind == "static") {
    t.kind = Topology::Kind::Static;
    t.base = detail::edges_from_json(n, j.at("edges"));
  } else if (kind == "random-drop") {
    t.kind = Topology::Kind::RandomDrop;
    t.base = detail::edges_from_json(n, j.at("edges"));
    t.drop_fraction = j.at("drop_fraction").get<double>();
    t.reshuffle_period = j.at("reshuffle_period").get<int>();
    t.seed = j.at("seed").get<std::uint64_t>();
    if (!(t.drop_fraction >= 0.0 && t.drop_fraction < 1.0))
      throw ConfigError("drop_fraction must be in [0, 1)");
  } else if (kind == "scripted") {
    t.kind = Topology::Kind::Scripted;
    for (const auto& frame : j.at("script"))
      t.script.push_back(detail::edges_from_json(n, frame));
    if (t.script.empty()) throw ConfigError("scripted topology needs frames");
  } else {
    throw ConfigError("unknown topology kind '" + kind + "'");
  }
  return t;
}

inline Json attack_to_json(const AttackSpec& a) {
  Json j;
  j["kind"] = attack_kind_name(a.kind);
  switch (a.kind) {
    case AttackKind::LabelFlipBias:
      j["bias"] = a.bias;
      break;
    case AttackKind::Trojan:
      j["trigger"] = std::vector<double>(
          a.trigger.data(), a.trigger.data() + a.trigger.size());
      j["target_label"] = a.target_label;
      j["trigger_fraction"] = a.trigger_fraction;
      break;
    case AttackKind::BitFlip:
      j["bit_index"] = a.bit_index;
      j["flip_fraction"] = a.flip_fraction;
      break;
    case AttackKind::GeneralRandom:
      j["tampered_fraction"] = a.tampered_fraction;
      j["multiplier"] = a.multiplier;
      break;
    case AttackKind::Alie:
      j["z"] = a.alie_z;
      break;
  }
  return j;
}

inline AttackSpec attack_from_json(const Json& j) {
  detail::check_keys(j,
                     {"kind", "bias", "trigger", "target_label",
                      "trigger_fraction", "bit_index", "flip_fraction",
                      "tampered_fraction", "multiplier", "z"},
                     "attack");
  AttackSpec a;
  a.kind = detail::parse_attack_kind(j.at("kind").get<std::string>());
  if (j.contains("bias")) a.bias = j["bias"].get<double>();
  if (j.contains("trigger")) {
    const auto v = j["trigger"].get<std::vector<double>>();
    a.trigger = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  }
  if (j.contains("target_label")) a.target_label = j["target_label"].get<double>();
  if (j.contains("trigger_fraction"))
    a.trigger_fraction = j["trigger_fraction"].get<double>();
  if (j.contains("bit_index")) a.bit_index = j["bit_index"].get<int>();
  if (j.contains("flip_fraction"))
    a.flip_fraction = j["flip_fraction"].get<double>();
  if (j.contains("tampered_fraction"))
    a.tampered_fraction = j["tampered_fraction"].get<double>();
  if (j.contains("multiplier")) a.multiplier = j["multiplier"].get<double>();
  if (j.contains("z")) a.alie_z = j["z"].get<double>();
  return a;
}

inline Json scenario_to_json(const Scenario& sc) {
  Json j;
  j["name"] = sc.name;
  j["algorithm"] = algorithm_name(sc.algorithm);
  j["kappa"] = sc.kappa;
  j["sigma_thr"] = sc.sigma_thr;
  j["t_max"] = sc.t_max;
  j["seed"] = sc.seed;
  j["batch_size"] = sc.batch_size;
  j["sigma0"] = sc.sigma0;
  j["diagonal_covariance"] = sc.diagonal_covariance;
  j["fault_tolerant"] = sc.fault_tolerant;
  j["cycle_lengths"] = sc.cycle_lengths;

  Json task;
  task["theta_star"] = std::vector<double>(
      sc.task.theta_star.data(),
      sc.task.theta_star.data() + sc.task.theta_star.size());
  task["clients"] = Json::array();
  for (int i = 0; i < sc.num_clients(); ++i) {
    Json c;
    c["id"] = i;
    c["noise_variance"] = sc.task.noise(i);
    c["support"] = std::vector<int>(sc.task.support(i).begin(),
                                    sc.task.support(i).end());
    const auto fd = sc.task.feature_dist(i);
    c["feature_lo"] = fd.lo;
    c["feature_hi"] = fd.hi;
    task["clients"].push_back(std::move(c));
  }
  j["task"] = std::move(task);
  j["topology"] = topology_to_json(sc.topology);

  j["attacks"] = Json::array();
  for (const auto& [id, spec] : sc.attacks) {
    Json a = attack_to_json(spec);
    a["client"] = id;
    j["attacks"].push_back(std::move(a));
  }

  j["baseline"] = {{"trim_count", sc.baseline.trim_count},
                   {"clip_tau", sc.baseline.clip_tau},
                   {"zeno_drop", sc.baseline.zeno_drop},
                   {"zeno_rho", sc.baseline.zeno_rho},
                   {"zeno_validation_size", sc.baseline.zeno_validation_size}};
  j["freeze"] = {{"enabled", sc.freeze.enabled},
                 {"patience", sc.freeze.patience}};
  return j;
}

inline Scenario scenario_from_json(const Json& j) {
  detail::check_keys(
      j,
      {"name", "algorithm", "kappa", "sigma_thr", "t_max", "seed",
       "batch_size", "sigma0", "diagonal_covariance", "fault_tolerant",
       "cycle_lengths", "task", "topology", "attacks", "baseline", "freeze"},
      "scenario");
  Scenario sc;
  sc.name = j.value("name", std::string{});
  sc.algorithm = detail::parse_algorithm(j.at("algorithm").get<std::string>());
  sc.kappa = j.at("kappa").get<double>();
  sc.sigma_thr = j.at("sigma_thr").get<double>();
  sc.t_max = j.at("t_max").get<long>();
  sc.seed = j.at("seed").get<std::uint64_t>();
  sc.batch_size = j.at("batch_size").get<int>();
  sc.sigma0 = j.at("sigma0").get<double>();
  sc.diagonal_covariance = j.at("diagonal_covariance").get<bool>();
  sc.fault_tolerant = j.value("fault_tolerant", false);
  sc.cycle_lengths = j.at("cycle_lengths").get<std::vector<long>>();

  const Json& task = j.at("task");
  detail::check_keys(task, {"theta_star", "clients"}, "task");
  {
    const auto v = task.at("theta_star").get<std::vector<double>>();
    sc.task.theta_star = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  }
  for (const auto& c : task.at("clients")) {
    detail::check_keys(
        c, {"id", "noise_variance", "support", "feature_lo", "feature_hi"},
        "task client");
    const int id = c.at("id").get<int>();
    sc.task.noise_variance[id] = c.at("noise_variance").get<double>();
    const auto supp = c.at("support").get<std::vector<int>>();
    sc.task.support_sets[id] = std::set<int>(supp.begin(), supp.end());
    FeatureDistribution fd;
    fd.lo = c.value("feature_lo", fd.lo);
    fd.hi = c.value("feature_hi", fd.hi);
    sc.task.features[id] = fd;
  }

  sc.topology = topology_from_json(j.at("topology"));

  if (j.contains("attacks")) {
    for (const auto& a : j["attacks"]) {
      if (!a.contains("client"))
        throw ConfigError("attack entry is missing 'client'");
      Json spec = a;
      const int id = spec.at("client").get<int>();
      spec.erase("client");
      sc.attacks[id] = attack_from_json(spec);
    }
  }

  if (j.contains("baseline")) {
    const Json& b = j["baseline"];
    detail::check_keys(b,
                       {"trim_count", "clip_tau", "zeno_drop", "zeno_rho",
                        "zeno_validation_size"},
                       "baseline");
    sc.baseline.trim_count = b.value("trim_count", sc.baseline.trim_count);
    sc.baseline.clip_tau = b.value("clip_tau", sc.baseline.clip_tau);
    sc.baseline.zeno_drop = b.value("zeno_drop", sc.baseline.zeno_drop);
    sc.baseline.zeno_rho = b.value("zeno_rho", sc.baseline.zeno_rho);
    sc.baseline.zeno_validation_size =
        b.value("zeno_validation_size", sc.baseline.zeno_validation_size);
  }
  if (j.contains("freeze")) {
    const Json& f = j["freeze"];
    detail::check_keys(f, {"enabled", "patience"}, "freeze");
    sc.freeze.enabled = f.value("enabled", sc.freeze.enabled);
    sc.freeze.patience = f.value("patience", sc.freeze.patience);
  }

  sc.validate();
  return sc;
}

// Applies a dotted-path override such as "kappa=3" or
// "baseline.trim_count=30". The value is parsed as JSON when possible and
// treated as a string otherwise.
inline void apply_override(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like path.to.key=value: " +
                      assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  Json* node = &j;
  std::size_t pos = 0;
  for (;;) {
    const auto dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot - pos);
    if (key.empty()) throw ConfigError("empty key in override path: " + path);
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    pos = dot + 1;
  }
}

// A run configuration: a preset name and/or inline scenario, plus run
// options. `resolve()` produces the fully expanded scenario; serializing
// the resolved form reruns byte-identically.
struct RunConfig {
  std::string preset_name;
  Json scenario_overrides = Json::object();
  int workers = 1;
  std::string out_dir = ".";
  std::string format = "csv";  // csv or json summary format

  static RunConfig from_json(const Json& j) {
    RunConfig cfg = from_json_lenient(j);
    if (cfg.preset_name.empty() && cfg.scenario_overrides.empty())
      throw ConfigError("config needs a preset, a scenario, or both");
    return cfg;
  }

  // Allows a config with neither preset nor scenario; the CLI supplies them
  // from flags afterwards.
  static RunConfig from_json_lenient(const Json& j) {
    detail::check_keys(j, {"schema_version", "preset", "scenario", "run"},
                       "config");
    if (!j.contains("schema_version"))
      throw ConfigError("config is missing schema_version");
    if (j["schema_version"].get<int>() != kConfigSchemaVersion)
      throw ConfigError("unsupported schema_version (expected " +
                        std::to_string(kConfigSchemaVersion) + ")");
    RunConfig cfg;
    if (j.contains("preset")) cfg.preset_name = j["preset"].get<std::string>();
    if (j.contains("scenario")) cfg.scenario_overrides = j["scenario"];
    if (j.contains("run")) {
      const Json& r = j["run"];
      detail::check_keys(r, {"workers", "out_dir", "format"}, "run");
      cfg.workers = r.value("workers", cfg.workers);
      cfg.out_dir = r.value("out_dir", cfg.out_dir);
      cfg.format = r.value("format", cfg.format);
    }
    if (cfg.workers < 1) throw ConfigError("run.workers must be >= 1");
    if (cfg.format != "csv" && cfg.format != "json")
      throw ConfigError("run.format must be csv or json");
    return cfg;
  }

  Scenario resolve() const {
    Json base;
    if (!preset_name.empty())
      base = scenario_to_json(preset(preset_name));
    else if (scenario_overrides.is_object() && !scenario_overrides.empty())
      return scenario_from_json(scenario_overrides);
    else
      throw ConfigError("config needs a preset, a scenario, or both");
    if (scenario_overrides.is_object())
      for (const auto& [key, val] : scenario_overrides.items())
        base[key] = val;
    return scenario_from_json(base);
  }

  Json resolved_json() const {
    Json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["scenario"] = scenario_to_json(resolve());
    j["run"] = {{"workers", workers}, {"out_dir", out_dir}, {"format", format}};
    return j;
  }
};

}  // namespace sabre
