#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sabre/runner.hpp"

using namespace sabre;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("sabre-test-" + std::to_string(std::rand()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("presets carry the documented parameters") {
  Scenario sc = preset("p2p5-benign");
  REQUIRE(sc.task.dim() == 3);
  CHECK(sc.task.theta_star(0) == -0.7179);
  CHECK(sc.task.theta_star(1) == 1.3171);
  CHECK(sc.task.theta_star(2) == -0.6441);
  CHECK(sc.task.support_sets.at(0) == std::set<int>{0});
  CHECK(sc.task.support_sets.at(1) == std::set<int>{0, 1});
  CHECK(sc.task.support_sets.at(2) == std::set<int>{0, 1, 2});
  CHECK(sc.task.support_sets.at(3) == std::set<int>{1, 2});
  CHECK(sc.task.support_sets.at(4) == std::set<int>{2});
  CHECK(sc.attacks.empty());

  Scenario maj = preset("p2p5-majority-compromised");
  std::set<int> keys;
  for (const auto& [id, spec] : maj.attacks) keys.insert(id);
  CHECK(keys == std::set<int>{0, 2, 4});  // nodes 1, 3, 5

  Scenario drop = preset("graph-drop20");
  CHECK(drop.topology.kind == Topology::Kind::RandomDrop);
  CHECK(drop.topology.drop_fraction == 0.2);
  CHECK(drop.topology.reshuffle_period == 0);

  Scenario tv = preset("graph-timevarying");
  CHECK(tv.topology.reshuffle_period == 100);

  CHECK_THROWS_AS(preset("no-such-preset"), ConfigError);
  try {
    preset("no-such-preset");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("p2p5-benign") != std::string::npos);
  }
}

TEST_CASE("every preset satisfies its run assumptions") {
  for (const auto& name : preset_names()) {
    Scenario sc = preset(name);
    VerifyReport rep = verify_scenario(sc, 100, 50);
    INFO(name);
    CHECK(rep.sufficiency);
    CHECK(rep.full_graph.satisfied);
    CHECK(rep.benign_subgraph.satisfied);
    CHECK(rep.disjoint_pairs.empty());
  }
}

TEST_CASE("verify flags a disjoint benign-compromised pair") {
  Scenario sc;
  sc.name = "disjoint";
  sc.task.theta_star = Eigen::VectorXd::Zero(2);
  sc.task.support_sets[0] = {0};
  sc.task.support_sets[1] = {1};
  sc.task.noise_variance[0] = sc.task.noise_variance[1] = 0.01;
  sc.topology = Topology::complete(2);
  sc.cycle_lengths = {1, 1};
  AttackSpec flip;
  flip.kind = AttackKind::LabelFlipBias;
  sc.attacks[1] = flip;
  VerifyReport rep = verify_scenario(sc, 20, 10);
  REQUIRE(rep.disjoint_pairs.size() == 1);
  CHECK(rep.disjoint_pairs[0] == std::pair<ClientId, ClientId>{0, 1});
  CHECK_FALSE(rep.ok());
}

TEST_CASE("verify reports the general-random detection probability") {
  Scenario sc = preset("n50-generalrandom-10");
  VerifyReport rep = verify_scenario(sc, 20, 10);
  REQUIRE_FALSE(rep.detection.empty());
  for (const auto& [id, p] : rep.detection)
    CHECK(p == detection_probability(20, 14.0 / 20.0, 0.3));
}

TEST_CASE("scenario json round trip preserves the resolved run") {
  for (const std::string name : {"p2p5-node4-labelflip", "n50-trojan-10"}) {
    Scenario sc = preset(name);
    Json j = scenario_to_json(sc);
    Scenario back = scenario_from_json(j);
    CHECK(scenario_to_json(back) == j);
    CHECK(back.seed == sc.seed);
    CHECK(back.algorithm == sc.algorithm);
    CHECK(back.attacks.size() == sc.attacks.size());
    CHECK((back.task.theta_star.array() == sc.task.theta_star.array()).all());
  }
}

TEST_CASE("unknown config keys are errors, not warnings") {
  Json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["preset"] = "p2p5-benign";
  j["typo_key"] = 1;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);

  Json sc = scenario_to_json(preset("p2p5-benign"));
  sc["kapa"] = 3.0;  // misspelled
  CHECK_THROWS_AS(scenario_from_json(sc), ConfigError);
}

TEST_CASE("schema version is mandatory and checked") {
  Json j;
  j["preset"] = "p2p5-benign";
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  j["schema_version"] = 99;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  j["schema_version"] = kConfigSchemaVersion;
  CHECK_NOTHROW(RunConfig::from_json(j));
}

TEST_CASE("dotted-path overrides reach nested fields") {
  RunConfig cfg;
  cfg.preset_name = "p2p5-benign";
  apply_override(cfg.scenario_overrides, "kappa=3.5");
  apply_override(cfg.scenario_overrides, "baseline.trim_count=2");
  apply_override(cfg.scenario_overrides, "algorithm=trimmed-mean");
  Scenario sc = cfg.resolve();
  CHECK(sc.kappa == 3.5);
  CHECK(sc.baseline.trim_count == 2);
  CHECK(sc.algorithm == Algorithm::TrimmedMean);
  CHECK_THROWS_AS(apply_override(cfg.scenario_overrides, "no-equals"),
                  ConfigError);
}

TEST_CASE("run artifacts land on disk and rerun byte-identically") {
  TempDir tmp;
  RunConfig cfg;
  cfg.preset_name = "p2p5-benign";
  apply_override(cfg.scenario_overrides, "t_max=60");
  cfg.out_dir = tmp.path.string();
  cfg.format = "json";
  RunOutputs out = execute_run(cfg);
  CHECK_FALSE(out.result.breached);
  CHECK(std::filesystem::exists(out.record_path));
  CHECK(std::filesystem::exists(out.summary_path));
  CHECK(std::filesystem::exists(out.config_path));

  // replay from the emitted resolved config
  std::ifstream cf(out.config_path);
  RunConfig resolved = RunConfig::from_json(Json::parse(cf));
  SimResult again = run_scenario(resolved.resolve(), 1);
  std::ostringstream fresh;
  write_run_record(again.record, fresh);
  std::ifstream rf(out.record_path, std::ios::binary);
  std::ostringstream stored;
  stored << rf.rdbuf();
  CHECK(fresh.str() == stored.str());
}

TEST_CASE("summary numbers are recomputable from the record") {
  Scenario sc = preset("p2p5-benign");
  sc.t_max = 50;
  SimResult res = run_scenario(sc);
  Json summary = run_summary(sc, res);
  std::map<int, const RunRecordRow*> finals;
  for (const auto& r : res.record.rows) finals[r.client] = &r;
  for (const auto& [id, row] : finals) {
    const Json& c = summary["clients"][std::to_string(id)];
    CHECK(c["final_sq_err"].get<double>() == row->sq_err);
    CHECK(c["cycles"].get<long>() == row->cycle);
  }
}

TEST_CASE("n50 presets pin their compromised sets and supports") {
  Scenario a = preset("n50-labelflip-10");
  Scenario b = preset("n50-labelflip-10");
  CHECK(a.compromised_clients() == b.compromised_clients());
  CHECK(a.task.support_sets == b.task.support_sets);
  CHECK(a.compromised_clients().size() == 10);
  // supports pairwise intersect so trust checks always have a shared
  // coordinate to compare on
  for (int i = 0; i < 50; ++i)
    for (int j = i + 1; j < 50; ++j) {
      bool meets = false;
      for (int k : a.task.support_sets.at(i))
        if (a.task.support_sets.at(j).count(k)) {
          meets = true;
          break;
        }
      if (!meets) {
        INFO("clients " << i << " and " << j << " share no coordinate");
        CHECK(meets);
      }
    }
}
