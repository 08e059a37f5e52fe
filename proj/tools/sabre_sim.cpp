#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sabre/sabre.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset_name;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string format;
  int workers = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration file");
  cmd->add_option("--preset", o.preset_name, "named scenario preset");
  cmd->add_option("--set", o.overrides,
                  "scenario override, e.g. --set kappa=3 or "
                  "--set baseline.trim_count=10");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--workers", o.workers, "worker thread count");
  cmd->add_option("--format", o.format, "summary format: csv or json");
  cmd->add_option("--seed", o.seed, "master seed override")
      ->each([&o](const std::string&) { o.seed_set = true; });
}

sabre::RunConfig build_config(const CommonOpts& o) {
  sabre::Json j;
  if (!o.config_path.empty()) {
    std::ifstream f(o.config_path, std::ios::binary);
    if (!f) throw sabre::IoError("cannot open " + o.config_path);
    j = sabre::Json::parse(f, nullptr, true);
  } else {
    j["schema_version"] = sabre::kConfigSchemaVersion;
  }
  sabre::RunConfig cfg = sabre::RunConfig::from_json_lenient(j);
  if (!o.preset_name.empty()) cfg.preset_name = o.preset_name;
  for (const auto& a : o.overrides)
    sabre::apply_override(cfg.scenario_overrides, a);
  if (o.seed_set)
    sabre::apply_override(cfg.scenario_overrides,
                          "seed=" + std::to_string(o.seed));
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (o.workers > 0) cfg.workers = o.workers;
  if (!o.format.empty()) {
    if (o.format != "csv" && o.format != "json")
      throw sabre::ConfigError("--format must be csv or json");
    cfg.format = o.format;
  }
  return cfg;
}

int cmd_run(const CommonOpts& o) {
  sabre::RunConfig cfg = build_config(o);
  sabre::RunOutputs out = sabre::execute_run(cfg);
  std::cout << sabre::run_summary(cfg.resolve(), out.result).dump(2) << "\n";
  std::cout << "record:  " << out.record_path << "\n"
            << "summary: " << out.summary_path << "\n"
            << "config:  " << out.config_path << "\n";
  if (out.result.breached) {
    std::cerr << "invariant breach: " << out.result.breach_message << "\n";
    return 3;
  }
  return 0;
}

int cmd_verify(const CommonOpts& o, long horizon, long window_limit) {
  sabre::RunConfig cfg = build_config(o);
  const sabre::Scenario sc = cfg.resolve();
  const auto report = sabre::verify_scenario(sc, horizon, window_limit);
  std::cout << sabre::verify_report_to_json(report).dump(2) << "\n";
  if (!report.ok()) {
    std::cerr << "scenario '" << sc.name << "' violates a run assumption\n";
    return 2;
  }
  return 0;
}

int cmd_presets() {
  for (const auto& name : sabre::preset_names()) std::cout << name << "\n";
  return 0;
}

int cmd_replay(const std::string& config_path, const std::string& record_path,
               int workers) {
  std::ifstream cf(config_path, std::ios::binary);
  if (!cf) throw sabre::IoError("cannot open " + config_path);
  const auto cfg =
      sabre::RunConfig::from_json(sabre::Json::parse(cf, nullptr, true));
  const sabre::Scenario sc = cfg.resolve();
  sabre::SimResult res =
      sabre::run_scenario(sc, workers > 0 ? workers : cfg.workers);

  std::ostringstream fresh;
  sabre::write_run_record(res.record, fresh);
  std::ifstream rf(record_path, std::ios::binary);
  if (!rf) throw sabre::IoError("cannot open " + record_path);
  std::ostringstream stored;
  stored << rf.rdbuf();
  if (fresh.str() != stored.str()) {
    std::cerr << "replay mismatch: regenerated record differs from "
              << record_path << "\n";
    return 3;
  }
  std::cout << "replay ok: " << record_path << " reproduced byte-for-byte\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"peer-to-peer robust Bayesian learning simulator"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  if (const char* env = std::getenv("SABRE_OUT_DIR")) run_opts.out_dir = env;
  auto* run = app.add_subcommand("run", "execute a scenario");
  add_common(run, run_opts);

  CommonOpts verify_opts;
  long horizon = 200, window_limit = 50;
  auto* verify =
      app.add_subcommand("verify", "check scenario assumptions without running");
  add_common(verify, verify_opts);
  verify->add_option("--horizon", horizon, "ticks to examine");
  verify->add_option("--window-limit", window_limit,
                     "max connectivity window length");

  auto* presets = app.add_subcommand("presets", "list named presets");

  std::string replay_config, replay_record;
  int replay_workers = 0;
  auto* replay = app.add_subcommand(
      "replay", "re-run a resolved config and compare against a stored record");
  replay->add_option("--config", replay_config, "resolved config JSON")
      ->required();
  replay->add_option("--record", replay_record, "stored record CSV")
      ->required();
  replay->add_option("--workers", replay_workers, "worker thread count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (verify->parsed()) return cmd_verify(verify_opts, horizon, window_limit);
    if (presets->parsed()) return cmd_presets();
    if (replay->parsed())
      return cmd_replay(replay_config, replay_record, replay_workers);
  } catch (const sabre::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sabre::InvariantBreach& e) {
    std::cerr << "invariant breach: " << e.what() << "\n";
    return 3;
  } catch (const sabre::AnalysisError& e) {
    std::cerr << "analysis error: " << e.what() << "\n";
    return 3;
  } catch (const sabre::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
