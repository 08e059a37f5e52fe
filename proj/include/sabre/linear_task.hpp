#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sabre/errors.hpp"
#include "sabre/rng.hpp"

namespace sabre {

using ClientId = int;
using Sample = std::pair<Eigen::VectorXd, double>;  // (feature, label)

// Feature sampler: active coordinates drawn uniform on (lo, hi), all other
// coordinates exactly zero.
struct FeatureDistribution {
  double lo = 0.1;
  double hi = 1.1;
};

// Ground-truth linear data model. Labels are y = <theta_star, x> + eta with
// eta ~ N(0, noise_variance) and x supported on the client's support set.
struct LinearTask {
  Eigen::VectorXd theta_star;
  std::map<ClientId, double> noise_variance;          // per-client label noise
  std::map<ClientId, std::set<int>> support_sets;     // 0-based coordinates
  std::map<ClientId, FeatureDistribution> features;

  int dim() const { return static_cast<int>(theta_star.size()); }

  const std::set<int>& support(ClientId c) const {
    auto it = support_sets.find(c);
    if (it == support_sets.end())
      throw ConfigError("unknown client id " + std::to_string(c));
    if (it->second.empty())
      throw ConfigError("empty support set for client " + std::to_string(c));
    return it->second;
  }

  double noise(ClientId c) const {
    auto it = noise_variance.find(c);
    if (it == noise_variance.end())
      throw ConfigError("unknown client id " + std::to_string(c));
    return it->second;
  }

  FeatureDistribution feature_dist(ClientId c) const {
    auto it = features.find(c);
    return it == features.end() ? FeatureDistribution{} : it->second;
  }
};

inline Eigen::VectorXd sample_feature(const LinearTask& task, ClientId client,
                                      RngStream& rng) {
  const auto& supp = task.support(client);
  const auto dist = task.feature_dist(client);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(task.dim());
  for (int k : supp) x(k) = rng.uniform(dist.lo, dist.hi);
  return x;
}

inline std::vector<Sample> sample_batch(const LinearTask& task, ClientId client,
                                        int batch_size, RngStream& rng) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  const double noise_var = task.noise(client);
  std::vector<Sample> batch;
  batch.reserve(batch_size);
  for (int s = 0; s < batch_size; ++s) {
    Eigen::VectorXd x = sample_feature(task, client, rng);
    double y = task.theta_star.dot(x);
    if (noise_var > 0.0) y += rng.normal(0.0, std::sqrt(noise_var));
    batch.emplace_back(std::move(x), y);
  }
  return batch;
}

// Assumption "Sufficiency": the union of benign support sets covers every
// coordinate.
inline bool datasets_sufficient(const LinearTask& task,
                                const std::vector<ClientId>& benign) {
  std::set<int> covered;
  for (ClientId c : benign) {
    const auto& s = task.support(c);
    covered.insert(s.begin(), s.end());
  }
  for (int k = 0; k < task.dim(); ++k)
    if (!covered.count(k)) return false;
  return true;
}

}  // namespace sabre
