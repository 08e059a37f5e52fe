#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "sabre/errors.hpp"

namespace sabre {

// Eigenvalues of a covariance below this are floored before inversion.
inline constexpr double kEigenvalueFloor = 1e-12;

struct FloorStats {
  int events = 0;
};

// A Gaussian over the model parameter. Moment form stores (mean,
// covariance); information form stores (precision * mean, precision).
// In diagonal mode all off-diagonal entries are exactly zero and every
// operation preserves that.
struct GaussianBelief {
  enum class Form { Moment, Information };

  Eigen::VectorXd vec;  // mean, or precision-weighted mean
  Eigen::MatrixXd mat;  // covariance, or precision
  Form form = Form::Moment;
  bool diagonal = false;

  GaussianBelief() = default;
  GaussianBelief(Eigen::VectorXd v, Eigen::MatrixXd m, Form f = Form::Moment,
                 bool diag = false)
      : vec(std::move(v)), mat(std::move(m)), form(f), diagonal(diag) {}

  static GaussianBelief isotropic(int dim, double variance, bool diag = false) {
    return GaussianBelief(Eigen::VectorXd::Zero(dim),
                          variance * Eigen::MatrixXd::Identity(dim, dim),
                          Form::Moment, diag);
  }

  int dim() const { return static_cast<int>(vec.size()); }

  const Eigen::VectorXd& mean() const {
    if (form != Form::Moment) throw InvariantBreach("belief not in moment form");
    return vec;
  }
  const Eigen::MatrixXd& covariance() const {
    if (form != Form::Moment) throw InvariantBreach("belief not in moment form");
    return mat;
  }
  const Eigen::MatrixXd& precision() const {
    if (form != Form::Information)
      throw InvariantBreach("belief not in information form");
    return mat;
  }

  double trace() const { return mat.trace(); }

  bool finite() const { return vec.allFinite() && mat.allFinite(); }
};

namespace detail {

// Inverts an SPD matrix, flooring tiny eigenvalues. Throws on a
// non-positive eigenvalue. For diagonal matrices only the diagonal is
// touched.
inline Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& m, bool diagonal,
                                  FloorStats* floors) {
  const int n = static_cast<int>(m.rows());
  if (diagonal) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
      double d = m(k, k);
      if (!(d > 0.0))
        throw InvariantBreach("matrix not positive definite: eigenvalue " +
                              std::to_string(d) + " at coordinate " +
                              std::to_string(k));
      if (d < kEigenvalueFloor) {
        d = kEigenvalueFloor;
        if (floors) ++floors->events;
      }
      out(k, k) = 1.0 / d;
    }
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues();
  for (int k = 0; k < n; ++k) {
    if (!(ev(k) > 0.0))
      throw InvariantBreach("matrix not positive definite: eigenvalue " +
                            std::to_string(ev(k)));
    if (ev(k) < kEigenvalueFloor) {
      ev(k) = kEigenvalueFloor;
      if (floors) ++floors->events;
    }
  }
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace detail

inline GaussianBelief to_information_form(const GaussianBelief& b,
                                          FloorStats* floors = nullptr) {
  if (b.form == GaussianBelief::Form::Information) return b;
  Eigen::MatrixXd z = detail::invert_spd(b.mat, b.diagonal, floors);
  Eigen::VectorXd eta = z * b.vec;
  return GaussianBelief(std::move(eta), std::move(z),
                        GaussianBelief::Form::Information, b.diagonal);
}

inline GaussianBelief to_moment_form(const GaussianBelief& b,
                                     FloorStats* floors = nullptr) {
  if (b.form == GaussianBelief::Form::Moment) return b;
  Eigen::MatrixXd cov = detail::invert_spd(b.mat, b.diagonal, floors);
  Eigen::VectorXd mean = cov * b.vec;
  return GaussianBelief(std::move(mean), std::move(cov),
                        GaussianBelief::Form::Moment, b.diagonal);
}

}  // namespace sabre
