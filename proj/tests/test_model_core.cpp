#include <catch2/catch_amalgamated.hpp>

#include "sabre/belief.hpp"
#include "sabre/linear_task.hpp"
#include "sabre/rng.hpp"

using namespace sabre;

namespace {

LinearTask p2p5_task() {
  LinearTask task;
  task.theta_star.resize(3);
  task.theta_star << -0.7179, 1.3171, -0.6441;
  const std::vector<std::set<int>> supports = {
      {0}, {0, 1}, {0, 1, 2}, {1, 2}, {2}};
  for (int i = 0; i < 5; ++i) {
    task.support_sets[i] = supports[i];
    task.noise_variance[i] = 0.01;
  }
  return task;
}

Eigen::MatrixXd random_spd(int n, RngStream& rng) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal(0.0, 1.0);
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("feature support is exactly the client's support set") {
  LinearTask task = p2p5_task();
  RngStream rng(11, 0);
  // client 0 observes coordinate 0 only
  for (int s = 0; s < 100; ++s) {
    Eigen::VectorXd x = sample_feature(task, 0, rng);
    CHECK(x(1) == 0.0);
    CHECK(x(2) == 0.0);
    CHECK(x(0) > 0.0);
  }
}

TEST_CASE("noiseless label is the exact inner product") {
  LinearTask task = p2p5_task();
  task.noise_variance[0] = 0.0;
  task.support_sets[0] = {0, 1, 2};
  RngStream rng(3, 0);
  auto batch = sample_batch(task, 0, 4, rng);
  for (const auto& [x, y] : batch) CHECK(y == task.theta_star.dot(x));

  // fixed x = e1 reproduces the first coordinate of theta_star
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
  e1(0) = 1.0;
  CHECK(task.theta_star.dot(e1) == -0.7179);
}

TEST_CASE("sampling is deterministic given the rng state") {
  LinearTask task = p2p5_task();
  RngStream a(99, 4), b(99, 4);
  auto ba = sample_batch(task, 2, 16, a);
  auto bb = sample_batch(task, 2, 16, b);
  REQUIRE(ba.size() == bb.size());
  for (std::size_t i = 0; i < ba.size(); ++i) {
    CHECK(ba[i].second == bb[i].second);
    CHECK((ba[i].first.array() == bb[i].first.array()).all());
  }
}

TEST_CASE("unknown client id is a configuration error") {
  LinearTask task = p2p5_task();
  RngStream rng(1, 0);
  CHECK_THROWS_AS(sample_batch(task, 7, 1, rng), ConfigError);
  CHECK_THROWS_AS(task.support(-1), ConfigError);
}

TEST_CASE("feature sampler marginal support over many draws") {
  LinearTask task = p2p5_task();
  RngStream rng(5, 1);
  for (int s = 0; s < 10000; ++s) {
    Eigen::VectorXd x = sample_feature(task, 3, rng);
    CHECK(x(0) == 0.0);
    CHECK(x(1) > 0.0);
    CHECK(x(2) > 0.0);
  }
}

TEST_CASE("sufficiency equals the brute-force union") {
  LinearTask task = p2p5_task();
  CHECK(datasets_sufficient(task, {0, 1, 2, 3, 4}));
  CHECK(datasets_sufficient(task, {0, 3}));       // {0} u {1,2}
  CHECK_FALSE(datasets_sufficient(task, {0, 1})); // coordinate 2 uncovered
  CHECK_FALSE(datasets_sufficient(task, {4}));

  // exhaustive cross-check against a direct union on random tasks
  RngStream rng(17, 0);
  for (int trial = 0; trial < 50; ++trial) {
    LinearTask t;
    const int dim = 1 + static_cast<int>(rng.below(8));
    t.theta_star = Eigen::VectorXd::Zero(dim);
    const int n = 1 + static_cast<int>(rng.below(5));
    std::vector<ClientId> all;
    for (int i = 0; i < n; ++i) {
      std::set<int> s;
      const int sz = 1 + static_cast<int>(rng.below(dim));
      while (static_cast<int>(s.size()) < sz)
        s.insert(static_cast<int>(rng.below(dim)));
      t.support_sets[i] = s;
      t.noise_variance[i] = 0.01;
      all.push_back(i);
    }
    std::set<int> u;
    for (int i = 0; i < n; ++i)
      u.insert(t.support_sets[i].begin(), t.support_sets[i].end());
    CHECK(datasets_sufficient(t, all) == (static_cast<int>(u.size()) == dim));
  }
}

TEST_CASE("information form of the identity is the identity") {
  Eigen::VectorXd m(3);
  m << 1.0, -2.0, 0.5;
  GaussianBelief b(m, Eigen::MatrixXd::Identity(3, 3));
  GaussianBelief info = to_information_form(b);
  CHECK(info.precision().isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-14));
  CHECK(info.vec.isApprox(m, 1e-14));
}

TEST_CASE("diagonal covariance inverts to scalar reciprocals") {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
  cov(0, 0) = 2.0;
  cov(1, 1) = 4.0;
  GaussianBelief b(m, cov, GaussianBelief::Form::Moment, true);
  GaussianBelief info = to_information_form(b);
  CHECK(info.mat(0, 0) == 0.5);
  CHECK(info.mat(1, 1) == 0.25);
  CHECK(info.mat(0, 1) == 0.0);
}

TEST_CASE("precision times covariance is the identity") {
  RngStream rng(23, 0);
  Eigen::MatrixXd cov = random_spd(3, rng);
  Eigen::VectorXd m(3);
  m << 0.3, -1.1, 2.0;
  GaussianBelief b(m, cov);
  GaussianBelief info = to_information_form(b);
  CHECK((info.precision() * cov - Eigen::MatrixXd::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() < 1e-8);
}

TEST_CASE("moment-information round trip") {
  RngStream rng(29, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(4));
    Eigen::MatrixXd cov = random_spd(n, rng);
    Eigen::VectorXd m(n);
    for (int k = 0; k < n; ++k) m(k) = rng.normal(0.0, 2.0);
    GaussianBelief b(m, cov);
    GaussianBelief back = to_moment_form(to_information_form(b));
    CHECK(back.vec.isApprox(m, 1e-8));
    CHECK(back.mat.isApprox(cov, 1e-8));
    CHECK(std::abs((back.mat - back.mat.transpose()).maxCoeff()) <= 1e-10);
  }
}

TEST_CASE("non-positive-definite covariance names the eigenvalue") {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2);
  cov(1, 1) = -3.0;
  GaussianBelief b(Eigen::VectorXd::Zero(2), cov, GaussianBelief::Form::Moment,
                   true);
  try {
    to_information_form(b);
    FAIL("expected InvariantBreach");
  } catch (const InvariantBreach& e) {
    CHECK(std::string(e.what()).find("-3") != std::string::npos);
  }
}

TEST_CASE("eigenvalue floor is recorded, not silent") {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2);
  cov(0, 0) = 1e-15;
  GaussianBelief b(Eigen::VectorXd::Zero(2), cov, GaussianBelief::Form::Moment,
                   true);
  FloorStats floors;
  GaussianBelief info = to_information_form(b, &floors);
  CHECK(floors.events == 1);
  CHECK(info.mat(0, 0) == 1.0 / kEigenvalueFloor);
}

TEST_CASE("trace positivity for belief and its information form") {
  RngStream rng(31, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd cov = random_spd(3, rng);
    GaussianBelief b(Eigen::VectorXd::Zero(3), cov);
    CHECK(b.trace() > 0.0);
    CHECK(to_information_form(b).trace() > 0.0);
  }
}

TEST_CASE("diagonal mode keeps off-diagonals exactly zero") {
  GaussianBelief b = GaussianBelief::isotropic(4, 10.0, true);
  GaussianBelief info = to_information_form(b);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) {
        CHECK(b.mat(i, j) == 0.0);
        CHECK(info.mat(i, j) == 0.0);
      }
}
