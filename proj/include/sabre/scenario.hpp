#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sabre/attacks.hpp"
#include "sabre/linear_task.hpp"
#include "sabre/topology.hpp"

namespace sabre {

enum class Algorithm { Sabre, BayP2PFL, TrimmedMean, Clipping, Zeno };

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Sabre: return "sabre";
    case Algorithm::BayP2PFL: return "bayp2pfl";
    case Algorithm::TrimmedMean: return "trimmed-mean";
    case Algorithm::Clipping: return "clipping";
    case Algorithm::Zeno: return "zeno";
  }
  return "?";
}

struct BaselineParams {
  int trim_count = -1;     // -1: number of compromised clients
  double clip_tau = -1.0;  // <= 0: median of received update norms
  int zeno_drop = -1;      // -1: number of compromised clients
  double zeno_rho = 1e-3;
  int zeno_validation_size = 50;
};

struct FreezeParams {
  bool enabled = false;  // exact Bayes never overfits; off by default
  int patience = 20;
};

// A fully pinned run description: everything a run needs except the worker
// count and output paths.
struct Scenario {
  std::string name;
  LinearTask task;
  Topology topology;
  std::vector<long> cycle_lengths;  // per client, in joint-clock units
  Algorithm algorithm = Algorithm::Sabre;
  std::map<ClientId, AttackSpec> attacks;

  double kappa = 2.0;
  double sigma_thr = 1e-6;
  long t_max = 8000;
  std::uint64_t seed = 1;
  int batch_size = 1;
  double sigma0 = 10.0;  // initial belief variance per coordinate
  bool diagonal_covariance = true;
  BaselineParams baseline;
  FreezeParams freeze;
  // Tolerate non-finite beliefs in benign clients instead of faulting.
  // Defaults on for the non-Bayesian baselines, which have no exclusion
  // mechanism and are expected to blow up under model poisoning.
  bool fault_tolerant = false;

  int num_clients() const { return topology.nodes; }

  std::vector<ClientId> benign_clients() const {
    std::vector<ClientId> out;
    for (int i = 0; i < num_clients(); ++i)
      if (!attacks.count(i)) out.push_back(i);
    return out;
  }
  std::vector<ClientId> compromised_clients() const {
    std::vector<ClientId> out;
    for (const auto& [id, spec] : attacks) out.push_back(id);
    return out;
  }

  void validate() const {
    const int n = num_clients();
    if (n < 1) throw ConfigError("scenario has no clients");
    if (task.dim() < 1) throw ConfigError("theta_star is empty");
    if (static_cast<int>(cycle_lengths.size()) != n)
      throw ConfigError("cycle_lengths size does not match client count");
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    if (!(sigma_thr > 0.0)) throw ConfigError("sigma_thr must be positive");
    if (t_max < 1) throw ConfigError("t_max must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(sigma0 > 0.0)) throw ConfigError("sigma0 must be positive");
    for (int i = 0; i < n; ++i) {
      task.support(i);  // throws on missing/empty
      if (!(task.noise(i) >= 0.0))
        throw ConfigError("negative noise variance for client " +
                          std::to_string(i));
    }
    for (const auto& [id, spec] : attacks) {
      if (id < 0 || id >= n)
        throw ConfigError("attack assigned to unknown client " +
                          std::to_string(id));
      spec.validate(task.dim());
    }
  }
};

}  // namespace sabre
