#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "sabre/belief.hpp"
#include "sabre/errors.hpp"
#include "sabre/linear_task.hpp"

namespace sabre {

struct ConfidenceParams {
  double kappa = 2.0;
  // Coordinates checked; empty means all of {0..K-1}.
  std::vector<int> comparison_set;
};

struct TrustWeights {
  std::map<ClientId, double> weights;
  std::set<ClientId> accepted;
};

// Bounded-confidence test of one transmitted mean against the local belief.
// A non-finite coordinate always fails, so bit-flipped NaN/Inf senders are
// excluded rather than propagated.
inline bool within_confidence(const GaussianBelief& local,
                              const Eigen::VectorXd& candidate_mean,
                              const ConfidenceParams& params) {
  if (candidate_mean.size() != local.vec.size())
    throw ConfigError("confidence test: dimension mismatch");
  auto check = [&](int k) {
    const double bound = params.kappa * std::sqrt(local.mat(k, k));
    const double dev = std::abs(local.vec(k) - candidate_mean(k));
    return std::isfinite(dev) && dev <= bound;
  };
  if (params.comparison_set.empty()) {
    for (int k = 0; k < local.dim(); ++k)
      if (!check(k)) return false;
  } else {
    for (int k : params.comparison_set)
      if (!check(k)) return false;
  }
  return true;
}

// The confidence set I: neighbors whose transmitted social mean is within
// kappa local standard deviations of the local mean on every compared
// coordinate. The client's own social belief is tested like any other entry.
inline std::set<ClientId> confidence_set(
    const GaussianBelief& local,
    const std::map<ClientId, GaussianBelief>& received,
    const ConfidenceParams& params) {
  std::set<ClientId> accepted;
  for (const auto& [id, belief] : received)
    if (within_confidence(local, belief.vec, params)) accepted.insert(id);
  return accepted;
}

// Uniform trust over the accepted set.
inline TrustWeights uniform_trust(const std::set<ClientId>& accepted) {
  TrustWeights t;
  t.accepted = accepted;
  if (!accepted.empty()) {
    const double w = 1.0 / static_cast<double>(accepted.size());
    for (ClientId id : accepted) t.weights[id] = w;
  }
  return t;
}

// Precision-weighted fusion over the trusted set:
//   Z' = sum_j T_j Z_j,  theta' = Z'^-1 sum_j T_j Z_j theta_j
// Falls back to own_social unchanged when the accepted set is empty.
inline GaussianBelief sabre_aggregate(
    const GaussianBelief& own_social,
    const std::map<ClientId, GaussianBelief>& received,
    const TrustWeights& trust, FloorStats* floors = nullptr) {
  if (trust.accepted.empty()) return own_social;

  // Identical inputs are a fixed point bit-for-bit; skipping the inversion
  // round-trip keeps self-aggregation exact.
  {
    auto first = received.find(*trust.accepted.begin());
    if (first == received.end())
      throw ConfigError("trusted neighbor " +
                        std::to_string(*trust.accepted.begin()) +
                        " has no received belief");
    auto bits_equal = [](const auto& a, const auto& b) {
      return a.rows() == b.rows() && a.cols() == b.cols() &&
             std::memcmp(a.data(), b.data(),
                         sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
    };
    bool all_same = true;
    for (ClientId id : trust.accepted) {
      auto it = received.find(id);
      if (it == received.end() || !bits_equal(it->second.vec, first->second.vec) ||
          !bits_equal(it->second.mat, first->second.mat)) {
        all_same = false;
        break;
      }
    }
    if (all_same) return first->second;
  }

  const int n = own_social.dim();
  Eigen::MatrixXd z_sum = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd eta_sum = Eigen::VectorXd::Zero(n);
  for (ClientId id : trust.accepted) {
    auto it = received.find(id);
    if (it == received.end())
      throw ConfigError("trusted neighbor " + std::to_string(id) +
                        " has no received belief");
    const GaussianBelief info = to_information_form(it->second, floors);
    const double w = trust.weights.at(id);
    z_sum += w * info.mat;
    eta_sum += w * info.mat * it->second.vec;
  }
  GaussianBelief out = to_moment_form(
      GaussianBelief(std::move(eta_sum), std::move(z_sum),
                     GaussianBelief::Form::Information, own_social.diagonal),
      floors);
  return out;
}

// Per-coordinate overwrite: any coordinate of the social mean outside the
// confidence bound of the local belief is replaced by the local mean. The
// covariance is left untouched.
inline GaussianBelief overwrite_rule(const GaussianBelief& local,
                                     const GaussianBelief& social,
                                     const ConfidenceParams& params,
                                     std::vector<int>* fired = nullptr) {
  if (local.dim() != social.dim())
    throw ConfigError("overwrite_rule: dimension mismatch");
  GaussianBelief out = social;
  for (int k = 0; k < local.dim(); ++k) {
    const double bound = params.kappa * std::sqrt(local.mat(k, k));
    const double dev = std::abs(local.vec(k) - social.vec(k));
    if (!(dev <= bound)) {  // non-finite deviation also fires
      out.vec(k) = local.vec(k);
      if (fired) fired->push_back(k);
    }
  }
  return out;
}

// ---- baseline rules ----

// Coordinate-wise mean after discarding the k largest and k smallest values
// per coordinate.
inline Eigen::VectorXd trimmed_mean(const std::vector<Eigen::VectorXd>& updates,
                                    int trim_count) {
  if (updates.empty()) throw ConfigError("trimmed_mean: empty update set");
  const int n = static_cast<int>(updates.size());
  if (2 * trim_count >= n)
    throw ConfigError("trimmed_mean: trim count " + std::to_string(trim_count) +
                      " >= half of " + std::to_string(n) + " updates");
  const int dim = static_cast<int>(updates[0].size());
  Eigen::VectorXd out(dim);
  std::vector<double> col(n);
  for (int k = 0; k < dim; ++k) {
    for (int i = 0; i < n; ++i) col[i] = updates[i](k);
    std::sort(col.begin(), col.end(), [](double a, double b) {
      if (std::isnan(a)) return false;  // NaNs sort last
      if (std::isnan(b)) return true;
      return a < b;
    });
    double sum = 0.0;
    for (int i = trim_count; i < n - trim_count; ++i) sum += col[i];
    out(k) = sum / (n - 2 * trim_count);
  }
  return out;
}

// Mean of the updates after scaling each to norm <= tau.
inline Eigen::VectorXd clipped_mean(const std::vector<Eigen::VectorXd>& updates,
                                    double tau) {
  if (updates.empty()) throw ConfigError("clipped_mean: empty update set");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(updates[0].size());
  for (const auto& u : updates) {
    const double norm = u.norm();
    if (std::isfinite(norm) && norm > tau && norm > 0.0)
      sum += u * (tau / norm);
    else
      sum += u;
  }
  return sum / static_cast<double>(updates.size());
}

inline double median_norm(const std::vector<Eigen::VectorXd>& updates) {
  std::vector<double> norms;
  norms.reserve(updates.size());
  for (const auto& u : updates) norms.push_back(u.norm());
  std::sort(norms.begin(), norms.end(), [](double a, double b) {
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
  });
  return norms[norms.size() / 2];
}

inline double validation_loss(const Eigen::VectorXd& theta,
                              const std::vector<Sample>& validation) {
  double loss = 0.0;
  for (const auto& [x, y] : validation) {
    const double e = y - theta.dot(x);
    loss += e * e;
  }
  return loss / static_cast<double>(validation.size());
}

// Zeno-style scoring: score = (own validation loss - candidate validation
// loss) - rho * ||candidate - own||^2; the `drop_count` worst-scoring
// candidates are excluded and the rest averaged.
inline Eigen::VectorXd zeno_aggregate(const Eigen::VectorXd& own,
                                      const std::vector<Eigen::VectorXd>& updates,
                                      const std::vector<Sample>& validation,
                                      int drop_count, double rho) {
  if (updates.empty()) return own;
  if (validation.empty()) throw ConfigError("zeno: empty validation set");
  const double own_loss = validation_loss(own, validation);
  std::vector<std::pair<double, int>> scored;
  scored.reserve(updates.size());
  for (int i = 0; i < static_cast<int>(updates.size()); ++i) {
    double score = own_loss - validation_loss(updates[i], validation) -
                   rho * (updates[i] - own).squaredNorm();
    if (std::isnan(score)) score = -std::numeric_limits<double>::infinity();
    scored.emplace_back(score, i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const int keep =
      std::max(1, static_cast<int>(updates.size()) - std::max(0, drop_count));
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(own.size());
  for (int i = 0; i < keep; ++i) sum += updates[scored[i].second];
  return sum / static_cast<double>(keep);
}

}  // namespace sabre
