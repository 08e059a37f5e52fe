#pragma once

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sabre/scenario.hpp"

namespace sabre {

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "p2p5-benign",
      "p2p5-node4-labelflip",
      "p2p5-majority-compromised",
      "p2p5-bayp2pfl-labelflip",
      "n50-benign-0",
      "n50-labelflip-10",
      "n50-labelflip-30",
      "n50-labelflip-40",
      "n50-trojan-10",
      "n50-bitflip-10",
      "n50-generalrandom-10",
      "n50-alie-10",
      "graph-drop20",
      "graph-timevarying",
  };
  return names;
}

namespace detail {

// 5-node regression example: theta* = [-0.7179, 1.3171, -0.6441] with
// support sets {1}, {1,2}, {1,2,3}, {2,3}, {3} (1-based).
inline Scenario p2p5_base() {
  Scenario sc;
  Eigen::VectorXd theta(3);
  theta << -0.7179, 1.3171, -0.6441;
  sc.task.theta_star = theta;
  const std::vector<std::set<int>> supports = {
      {0}, {0, 1}, {0, 1, 2}, {1, 2}, {2}};
  for (int i = 0; i < 5; ++i) {
    sc.task.support_sets[i] = supports[i];
    sc.task.noise_variance[i] = 0.01;
    sc.task.features[i] = FeatureDistribution{};
  }
  // Connected 5-node graph whose benign subgraph stays connected in both
  // attack settings, with every communicating benign/compromised pair
  // sharing at least one observed coordinate.
  sc.topology = Topology::from_edges(
      5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {1, 3}, {2, 4}});
  sc.cycle_lengths.assign(5, 1);
  sc.algorithm = Algorithm::Sabre;
  sc.kappa = 2.0;
  sc.sigma_thr = 1e-6;
  sc.t_max = 2000;
  sc.seed = 42;
  sc.batch_size = 1;
  sc.diagonal_covariance = true;
  return sc;
}

inline AttackSpec label_flip(double b = 1.0) {
  AttackSpec a;
  a.kind = AttackKind::LabelFlipBias;
  a.bias = b;
  return a;
}

// 50-client sweep family: K = 20, support sets of size 14 drawn so that any
// two clients share at least one coordinate (automatic at this size) and the
// whole collection covers every coordinate. Smaller supports leave some
// coordinates with so few benign observers that the consensus value can
// stall outside the benign clients' confidence bands.
inline Scenario n50_base(std::uint64_t seed = 7) {
  const int n = 50, dim = 20, supp_size = 14;
  Scenario sc;
  RngStream rng(seed, 0xba5eULL);
  sc.task.theta_star.resize(dim);
  for (int k = 0; k < dim; ++k)
    sc.task.theta_star(k) = rng.uniform(-2.0, 2.0);

  std::vector<std::set<int>> supports;
  for (int i = 0; i < n; ++i) {
    for (;;) {
      std::set<int> s;
      while (static_cast<int>(s.size()) < supp_size)
        s.insert(static_cast<int>(rng.below(dim)));
      bool ok = true;
      for (const auto& prev : supports) {
        bool meets = false;
        for (int k : s)
          if (prev.count(k)) {
            meets = true;
            break;
          }
        if (!meets) {
          ok = false;
          break;
        }
      }
      if (ok) {
        supports.push_back(std::move(s));
        break;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    sc.task.support_sets[i] = supports[i];
    sc.task.noise_variance[i] = 0.01;
    sc.task.features[i] = FeatureDistribution{};
  }
  std::set<int> covered;
  for (const auto& s : supports) covered.insert(s.begin(), s.end());
  if (static_cast<int>(covered.size()) != dim)
    throw ConfigError("n50 preset: drawn supports do not cover the model");

  sc.topology = Topology::complete(n);
  sc.cycle_lengths.assign(n, 1);
  sc.algorithm = Algorithm::Sabre;
  // Looser bound than the 5-client presets: at 20 dimensions the cross-
  // coordinate consensus has to outrun the shrinking confidence interval,
  // and kappa = 2 deadlocks benign clients against each other. kappa = 3.5
  // keeps the benign clique mutually accepting even when a large majority
  // of the network is compromised or a fifth of the edges are missing.
  sc.kappa = 3.5;
  sc.sigma_thr = 1e-6;
  sc.t_max = 1000;
  sc.seed = 9;
  sc.batch_size = 1;
  sc.diagonal_covariance = true;
  return sc;
}

inline AttackSpec n50_attack(const std::string& kind, int dim) {
  AttackSpec a;
  if (kind == "labelflip") {
    a = label_flip(1.0);
  } else if (kind == "trojan") {
    a.kind = AttackKind::Trojan;
    a.trigger = Eigen::VectorXd::Zero(dim);
    // Seven trigger coordinates: wide enough that every size-14 support
    // observes at least one of them, so no client is blind to the pattern.
    for (int k : {0, 3, 5, 8, 10, 13, 16})
      if (k < dim) a.trigger(k) = 0.8;
    a.target_label = 10.0;
    a.trigger_fraction = 0.5;
  } else if (kind == "bitflip") {
    a.kind = AttackKind::BitFlip;
    a.bit_index = 62;
    a.flip_fraction = 0.1;
  } else if (kind == "generalrandom") {
    a.kind = AttackKind::GeneralRandom;
    a.tampered_fraction = 0.3;
    a.multiplier = 1e10;
  } else if (kind == "alie") {
    a.kind = AttackKind::Alie;
    a.alie_z = 1.5;
  } else {
    throw ConfigError("unknown n50 attack kind: " + kind);
  }
  return a;
}

// The compromised set is chosen uniformly at random but pinned by the
// preset seed.
inline void compromise_clients(Scenario& sc, const AttackSpec& spec,
                               int count) {
  RngStream rng(sc.seed, 0xc03fULL);
  std::vector<int> idx(sc.num_clients());
  for (int i = 0; i < sc.num_clients(); ++i) idx[i] = i;
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
    sc.attacks[idx[i]] = spec;
  }
}

}  // namespace detail

inline Scenario preset(const std::string& name) {
  using namespace detail;
  Scenario sc;
  if (name == "p2p5-benign") {
    sc = p2p5_base();
  } else if (name == "p2p5-node4-labelflip") {
    sc = p2p5_base();
    sc.attacks[3] = label_flip(1.0);  // 1-based node 4
  } else if (name == "p2p5-majority-compromised") {
    sc = p2p5_base();
    for (int i : {0, 2, 4}) sc.attacks[i] = label_flip(1.0);  // nodes 1, 3, 5
    // The two surviving benign clients are each other's only source for one
    // coordinate; kappa = 2 locks them out of each other's confidence sets
    // before that coordinate can circulate.
    sc.kappa = 3.0;
  } else if (name == "p2p5-bayp2pfl-labelflip") {
    sc = p2p5_base();
    sc.attacks[3] = label_flip(1.0);
    sc.algorithm = Algorithm::BayP2PFL;
  } else if (name.rfind("n50-", 0) == 0) {
    std::stringstream ss(name.substr(4));
    std::string kind, count_str;
    if (!std::getline(ss, kind, '-') || !std::getline(ss, count_str))
      throw ConfigError("bad n50 preset name: " + name +
                        " (expected n50-<attack>-<count>)");
    int count = 0;
    try {
      count = std::stoi(count_str);
    } catch (...) {
      throw ConfigError("bad n50 preset count: " + count_str);
    }
    sc = n50_base();
    if (kind != "benign" && count > 0)
      compromise_clients(sc, n50_attack(kind, sc.task.dim()), count);
    else if (kind != "benign")
      throw ConfigError("n50 attack preset needs a positive count");
  } else if (name == "graph-drop20") {
    sc = n50_base();
    compromise_clients(sc, label_flip(1.0), 10);
    sc.topology = Topology::random_drop(50, 0.2, 0, 99);  // static drop
  } else if (name == "graph-timevarying") {
    sc = n50_base();
    compromise_clients(sc, label_flip(1.0), 10);
    sc.topology = Topology::random_drop(50, 0.2, 100, 99);  // reshuffled
  } else {
    std::string msg = "unknown preset '" + name + "'; available:";
    for (const auto& p : preset_names()) msg += " " + p;
    throw ConfigError(msg);
  }
  sc.name = name;
  sc.validate();
  return sc;
}

}  // namespace sabre
