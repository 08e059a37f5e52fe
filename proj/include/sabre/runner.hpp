#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "sabre/analysis.hpp"
#include "sabre/config.hpp"
#include "sabre/simulator.hpp"

namespace sabre {

struct VerifyReport {
  bool sufficiency = false;
  ConnectivityVerdict full_graph;
  ConnectivityVerdict benign_subgraph;
  // (benign, compromised) in-neighbor pairs with disjoint supports; these
  // break the shared-coordinate assumption the exclusion guarantee needs.
  std::vector<std::pair<ClientId, ClientId>> disjoint_pairs;
  // per compromised model attacker: probability that a random tampered
  // coordinate set hits the least-observant benign neighbor
  std::map<ClientId, double> detection;

  bool ok() const {
    return sufficiency && full_graph.satisfied && benign_subgraph.satisfied &&
           disjoint_pairs.empty();
  }
};

inline VerifyReport verify_scenario(const Scenario& sc, long horizon = 200,
                                    long window_limit = 50) {
  sc.validate();
  VerifyReport rep;
  const auto benign = sc.benign_clients();
  rep.sufficiency = datasets_sufficient(sc.task, benign);
  rep.full_graph = check_relaxed_connectivity(sc.topology, horizon, window_limit);
  rep.benign_subgraph =
      check_relaxed_connectivity(sc.topology, horizon, window_limit, benign);

  const Adjacency adj = sc.topology.adjacency(0);
  for (const auto& [cid, spec] : sc.attacks) {
    for (ClientId b : benign) {
      if (!adj(b, cid)) continue;
      const auto& sb = sc.task.support(b);
      const auto& scmp = sc.task.support(cid);
      bool meets = false;
      for (int k : sb)
        if (scmp.count(k)) {
          meets = true;
          break;
        }
      if (!meets && spec.is_data_attack()) rep.disjoint_pairs.emplace_back(b, cid);
    }
    if (spec.kind == AttackKind::GeneralRandom) {
      const long long K = sc.task.dim();
      double worst = 1.0;
      for (ClientId b : benign) {
        if (!adj(b, cid)) continue;
        const double L =
            static_cast<double>(sc.task.support(b).size()) / static_cast<double>(K);
        worst = std::min(worst,
                         detection_probability(K, L, spec.tampered_fraction));
      }
      rep.detection[cid] = worst;
    }
  }
  return rep;
}

inline Json verify_report_to_json(const VerifyReport& rep) {
  auto verdict = [](const ConnectivityVerdict& v) {
    Json j;
    j["satisfied"] = v.satisfied;
    j["windows"] = Json::array();
    for (auto [a, b] : v.windows) j["windows"].push_back(Json::array({a, b}));
    if (!v.satisfied) {
      j["failed_prefix_start"] = v.failed_prefix_start;
      j["failed_prefix_length"] = v.failed_prefix_length;
    }
    return j;
  };
  Json j;
  j["ok"] = rep.ok();
  j["sufficiency"] = rep.sufficiency;
  j["full_graph"] = verdict(rep.full_graph);
  j["benign_subgraph"] = verdict(rep.benign_subgraph);
  j["disjoint_pairs"] = Json::array();
  for (auto [b, c] : rep.disjoint_pairs)
    j["disjoint_pairs"].push_back(Json::array({b, c}));
  j["detection_probability"] = Json::object();
  for (auto [id, p] : rep.detection)
    j["detection_probability"][std::to_string(id)] = p;
  return j;
}

struct RunOutputs {
  SimResult result;
  std::string record_path;
  std::string summary_path;
  std::string config_path;
};

inline Json run_summary(const Scenario& sc, const SimResult& result) {
  Json j;
  j["scenario"] = sc.name;
  j["algorithm"] = algorithm_name(sc.algorithm);
  j["ticks_run"] = result.ticks_run;
  j["breached"] = result.breached;
  if (result.breached) j["breach_message"] = result.breach_message;
  j["rows"] = result.record.rows.size();

  Json clients = Json::object();
  std::map<int, const RunRecordRow*> finals;
  std::map<int, long> degraded;
  for (const auto& r : result.record.rows) {
    finals[r.client] = &r;
    degraded[r.client] += r.degraded_attack;
  }
  for (auto [id, row] : finals) {
    Json c;
    c["cycles"] = row->cycle;
    c["final_sq_err"] = row->sq_err;
    c["final_sigma_bar_trace"] = row->sigma_bar_trace();
    c["terminated_by_threshold"] =
        row->terminated == 1 && row->cycle < sc.t_max;
    c["compromised"] = sc.attacks.count(id) > 0;
    if (degraded[id] > 0) c["degraded_attack_cycles"] = degraded[id];
    clients[std::to_string(id)] = std::move(c);
  }
  j["clients"] = std::move(clients);
  return j;
}

inline RunOutputs execute_run(const RunConfig& cfg) {
  const Scenario sc = cfg.resolve();
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir);
  const std::string stem =
      cfg.out_dir + "/" + (sc.name.empty() ? "run" : sc.name);

  RunOutputs out;
  out.result = run_scenario(sc, cfg.workers);

  out.record_path = stem + "-record.csv";
  write_run_record(out.result.record, out.record_path);

  out.config_path = stem + "-config.json";
  {
    std::ofstream f(out.config_path, std::ios::binary);
    if (!f) throw IoError("cannot open " + out.config_path);
    f << cfg.resolved_json().dump(2) << "\n";
  }

  out.summary_path = stem + "-summary." + cfg.format;
  {
    std::ofstream f(out.summary_path, std::ios::binary);
    if (!f) throw IoError("cannot open " + out.summary_path);
    const Json summary = run_summary(sc, out.result);
    if (cfg.format == "json") {
      f << summary.dump(2) << "\n";
    } else {
      f << "client,cycles,final_sq_err,final_sigma_bar_trace,compromised\n";
      for (const auto& [id, c] : summary["clients"].items())
        f << id << "," << c["cycles"] << ","
          << detail::fmt_double(c["final_sq_err"].get<double>()) << ","
          << detail::fmt_double(c["final_sigma_bar_trace"].get<double>())
          << "," << (c["compromised"].get<bool>() ? 1 : 0) << "\n";
    }
  }
  return out;
}

}  // namespace sabre
