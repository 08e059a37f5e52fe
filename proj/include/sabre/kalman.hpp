#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "sabre/belief.hpp"
#include "sabre/errors.hpp"

namespace sabre {

struct ObservationUpdate {
  Eigen::VectorXd feature;
  double label = 0.0;
  double noise_variance = 1.0;
};

// Conjugate (rank-1 Kalman) update of a moment-form belief:
//   theta <- theta + Sigma x (y - x'theta) / (x'Sigma x + s)
//   Sigma <- Sigma - Sigma x x'Sigma / (x'Sigma x + s)
// In diagonal mode only the covariance diagonal is kept; the mean update is
// unchanged.
inline GaussianBelief kalman_update(const GaussianBelief& belief,
                                    const ObservationUpdate& obs) {
  if (belief.form != GaussianBelief::Form::Moment)
    throw InvariantBreach("kalman_update expects moment form");
  if (obs.feature.size() != belief.vec.size())
    throw ConfigError("kalman_update: feature dimension mismatch");
  if (!(obs.noise_variance > 0.0))
    throw ConfigError("kalman_update: noise variance must be positive");

  const Eigen::VectorXd& x = obs.feature;
  if (x.isZero(0.0)) return belief;  // uninformative observation

  GaussianBelief out = belief;
  const Eigen::VectorXd sx = belief.mat * x;
  const double denom = x.dot(sx) + obs.noise_variance;
  const double residual = obs.label - x.dot(belief.vec);
  out.vec += sx * (residual / denom);
  if (belief.diagonal) {
    for (int k = 0; k < out.dim(); ++k)
      out.mat(k, k) -= sx(k) * sx(k) / denom;
  } else {
    out.mat -= (sx * sx.transpose()) / denom;
    out.mat = ((out.mat + out.mat.transpose()) / 2.0).eval();  // re-symmetrize
  }
  return out;
}

// Same update in information form: Z' = Z + x x' / s, eta' = eta + x y / s.
// Exact Bayes, so it matches kalman_update after conversion.
inline GaussianBelief information_update(const GaussianBelief& belief,
                                         const ObservationUpdate& obs) {
  if (belief.form != GaussianBelief::Form::Information)
    throw InvariantBreach("information_update expects information form");
  if (obs.feature.size() != belief.vec.size())
    throw ConfigError("information_update: feature dimension mismatch");
  if (!(obs.noise_variance > 0.0))
    throw ConfigError("information_update: noise variance must be positive");

  const Eigen::VectorXd& x = obs.feature;
  GaussianBelief out = belief;
  if (belief.diagonal) {
    for (int k = 0; k < out.dim(); ++k)
      out.mat(k, k) += x(k) * x(k) / obs.noise_variance;
  } else {
    out.mat += (x * x.transpose()) / obs.noise_variance;
  }
  out.vec += x * (obs.label / obs.noise_variance);
  return out;
}

// Local-model freeze check: true once the best validation error has not
// improved for `patience` entries. Stateless; the simulator latches it.
inline bool should_freeze_local(const std::vector<double>& history,
                                int patience = 20) {
  if (history.empty()) throw ConfigError("should_freeze_local: empty history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i)
    if (history[i] < history[best]) best = i;
  return history.size() - 1 - best >= static_cast<std::size_t>(patience);
}

}  // namespace sabre
