#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "sabre/attacks.hpp"
#include "sabre/errors.hpp"
#include "sabre/linear_task.hpp"
#include "sabre/record.hpp"

namespace sabre {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

// OLS of log (Sigma_bar)_kk against log t over the cycle range.
inline RateFit mse_rate_fit(const RunRecord& record, ClientId client,
                            int coordinate, long t_lo, long t_hi) {
  std::vector<double> xs, ys;
  for (const auto& r : record.rows) {
    if (r.client != client || r.cycle < t_lo || r.cycle > t_hi) continue;
    const double v = r.sigma_bar_diag(coordinate);
    if (!(v > 0.0))
      throw AnalysisError("non-positive covariance entry at cycle " +
                          std::to_string(r.cycle));
    xs.push_back(std::log(static_cast<double>(r.cycle)));
    ys.push_back(std::log(v));
  }
  if (xs.size() < 10)
    throw AnalysisError("mse_rate_fit: only " + std::to_string(xs.size()) +
                        " rows in range for client " + std::to_string(client));
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  RateFit fit;
  fit.points = static_cast<int>(xs.size());
  if (sxx == 0.0) throw AnalysisError("mse_rate_fit: degenerate time range");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

enum class BiasVerdict { Clean, Biased, Indeterminate };

inline std::string bias_verdict_name(BiasVerdict v) {
  switch (v) {
    case BiasVerdict::Clean: return "clean";
    case BiasVerdict::Biased: return "biased";
    case BiasVerdict::Indeterminate: return "indeterminate";
  }
  return "?";
}

struct BiasEstimate {
  Eigen::VectorXd c_hat;
  Eigen::VectorXd final_mean;
  BiasVerdict verdict = BiasVerdict::Indeterminate;
};

// Per-client window mean of theta_bar over the last `window` cycles.
inline std::map<ClientId, Eigen::VectorXd> final_window_means(
    const RunRecord& record, long window) {
  std::map<ClientId, std::vector<const RunRecordRow*>> per_client;
  for (const auto& r : record.rows) per_client[r.client].push_back(&r);
  std::map<ClientId, Eigen::VectorXd> out;
  for (auto& [id, rows] : per_client) {
    const std::size_t n = rows.size();
    const std::size_t take = std::min<std::size_t>(n, window);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(record.dim);
    for (std::size_t i = n - take; i < n; ++i) sum += rows[i]->theta_bar;
    out[id] = sum / static_cast<double>(take);
  }
  return out;
}

// c_hat = (window mean of theta_bar - theta_star) / b.
inline std::map<ClientId, BiasEstimate> bias_vector_estimate(
    const RunRecord& record, const Eigen::VectorXd& theta_star, double b,
    long final_window, double eps_c = 0.02, double eps_clean = 0.05) {
  if (b == 0.0) throw AnalysisError("bias_vector_estimate: b must be nonzero");
  if (record.rows.empty()) throw AnalysisError("empty run record");
  std::map<ClientId, BiasEstimate> out;
  for (auto& [id, mean] : final_window_means(record, final_window)) {
    BiasEstimate est;
    est.final_mean = mean;
    est.c_hat = (mean - theta_star) / b;
    const bool all_positive = (est.c_hat.array() > eps_c).all();
    const bool close = (mean - theta_star).cwiseAbs().maxCoeff() < eps_clean;
    est.verdict = close             ? BiasVerdict::Clean
                  : all_positive    ? BiasVerdict::Biased
                                    : BiasVerdict::Indeterminate;
    out[id] = std::move(est);
  }
  return out;
}

struct ExclusionStats {
  long permanent_from_cycle = -1;  // -1: never permanently excluded
  long exclusion_count = 0;
};

// Per (observer, observed) confidence-set history: total exclusions and the
// first cycle after which the observed client never re-enters the set.
inline std::map<std::pair<ClientId, ClientId>, ExclusionStats> exclusion_events(
    const RunRecord& record) {
  struct Hist {
    long last_accept = -1;
    std::vector<long> exclusions;
  };
  std::map<std::pair<ClientId, ClientId>, Hist> hist;
  for (const auto& r : record.rows) {
    for (int j : r.accepted) {
      auto& h = hist[{r.client, j}];
      h.last_accept = std::max(h.last_accept, r.cycle);
    }
    for (int j : r.excluded) hist[{r.client, j}].exclusions.push_back(r.cycle);
  }
  std::map<std::pair<ClientId, ClientId>, ExclusionStats> out;
  for (auto& [key, h] : hist) {
    ExclusionStats s;
    s.exclusion_count = static_cast<long>(h.exclusions.size());
    for (long t : h.exclusions) {
      if (t > h.last_accept) {
        s.permanent_from_cycle = t;
        break;
      }
    }
    out[key] = s;
  }
  return out;
}

// Trojan: fraction of triggered test inputs predicted within 0.1 of the
// target, averaged over benign clients. Other attacks: clean-test mean
// squared prediction error of the benign clients' final social means.
inline double attack_success(const RunRecord& record, const LinearTask& task,
                             const AttackSpec& spec,
                             const std::vector<Sample>& test_set,
                             const std::vector<ClientId>& benign) {
  if (test_set.empty()) throw AnalysisError("attack_success: empty test set");
  if (benign.empty()) throw AnalysisError("attack_success: no benign clients");
  std::map<ClientId, Eigen::VectorXd> finals;
  for (const auto& r : record.rows) finals[r.client] = r.theta_bar;

  double total = 0.0;
  for (ClientId id : benign) {
    auto it = finals.find(id);
    if (it == finals.end())
      throw AnalysisError("no rows for benign client " + std::to_string(id));
    const Eigen::VectorXd& theta = it->second;
    double score = 0.0;
    if (spec.kind == AttackKind::Trojan) {
      for (const auto& [x, y] : test_set) {
        const Eigen::VectorXd xt = (x + spec.trigger).cwiseMax(0.0);
        if (std::abs(theta.dot(xt) - spec.target_label) < 0.1) score += 1.0;
      }
      score /= static_cast<double>(test_set.size());
    } else {
      for (const auto& [x, y] : test_set) {
        const double e = y - theta.dot(x);
        score += e * e;
      }
      score /= static_cast<double>(test_set.size());
      if (!std::isfinite(score))
        score = std::numeric_limits<double>::infinity();
    }
    total += score;
  }
  return total / static_cast<double>(benign.size());
}

// Clean-test MSE without any attack semantics; used for benign baselines.
inline double clean_test_mse(const RunRecord& record,
                             const std::vector<Sample>& test_set,
                             const std::vector<ClientId>& clients) {
  AttackSpec none;
  none.kind = AttackKind::LabelFlipBias;  // non-trojan path
  LinearTask dummy;
  return attack_success(record, dummy, none, test_set, clients);
}

}  // namespace sabre
