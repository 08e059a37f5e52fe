#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

#include "sabre/attacks.hpp"
#include "sabre/rng.hpp"

using namespace sabre;

namespace {

std::vector<Sample> make_batch(std::initializer_list<double> labels) {
  std::vector<Sample> batch;
  for (double y : labels) {
    Eigen::VectorXd x(2);
    x << 0.5, 0.5;
    batch.emplace_back(x, y);
  }
  return batch;
}

}  // namespace

TEST_CASE("label-flip shifts every label by the bias") {
  AttackSpec spec;
  spec.kind = AttackKind::LabelFlipBias;
  spec.bias = 1.0;
  RngStream rng(1, 0);
  auto out = poison_data(make_batch({0.2, -0.5}), spec, rng);
  CHECK(out[0].second == Catch::Approx(1.2).margin(1e-15));
  CHECK(out[1].second == Catch::Approx(0.5).margin(1e-15));
  CHECK((out[0].first.array() == 0.5).all());  // features untouched

  spec.bias = 0.0;
  auto null_out = poison_data(make_batch({0.2, -0.5}), spec, rng);
  CHECK(null_out[0].second == 0.2);
  CHECK(null_out[1].second == -0.5);
}

TEST_CASE("trojan triggers exactly the configured fraction") {
  AttackSpec spec;
  spec.kind = AttackKind::Trojan;
  spec.trigger = Eigen::VectorXd::Zero(2);
  spec.trigger(0) = 1.0;
  spec.target_label = 9.0;
  spec.trigger_fraction = 0.5;
  RngStream rng(2, 0);
  std::vector<Sample> batch;
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd x(2);
    x << 0.3, 0.3;
    batch.emplace_back(x, 0.0);
  }
  auto out = poison_data(batch, spec, rng);
  int triggered = 0;
  for (const auto& [x, y] : out) {
    if (y == 9.0) {
      ++triggered;
      CHECK(x(0) == Catch::Approx(1.3).margin(1e-15));
      CHECK(x(0) >= 0.0);
    }
  }
  CHECK(triggered == 50);
}

TEST_CASE("model attack kinds are rejected by poison_data") {
  AttackSpec spec;
  spec.kind = AttackKind::BitFlip;
  RngStream rng(3, 0);
  CHECK_THROWS_AS(poison_data(make_batch({0.0}), spec, rng), ConfigError);
}

TEST_CASE("flipping the sign bit negates the value") {
  CHECK(detail::flip_bit(1.0, 63) == -1.0);
  CHECK(detail::flip_bit(-2.5, 63) == 2.5);
}

TEST_CASE("bit flip is an involution") {
  RngStream rng(5, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const double v = rng.normal(0.0, 10.0);
    const int bit = static_cast<int>(rng.below(64));
    CHECK(detail::flip_bit(detail::flip_bit(v, bit), bit) == v);
  }
}

TEST_CASE("bit-flip perturbs the configured share of coordinates") {
  AttackSpec spec;
  spec.kind = AttackKind::BitFlip;
  spec.bit_index = 62;
  spec.flip_fraction = 0.1;
  GaussianBelief b = GaussianBelief::isotropic(20, 1.0, true);
  b.vec.setConstant(1.0);
  RngStream rng(7, 0);
  auto res = poison_model(b, {}, spec, rng);
  CHECK_FALSE(res.degraded);
  int changed = 0;
  for (int k = 0; k < 20; ++k)
    if (res.belief.vec(k) != 1.0) ++changed;
  CHECK(changed == 2);  // ceil(0.1 * 20)
  CHECK((res.belief.mat.array() == b.mat.array()).all());
}

TEST_CASE("general-random multiplies a seeded index subset") {
  AttackSpec spec;
  spec.kind = AttackKind::GeneralRandom;
  spec.tampered_fraction = 1.0 / 3.0;
  spec.multiplier = 1e10;
  GaussianBelief b = GaussianBelief::isotropic(3, 1.0, true);
  b.vec.setConstant(1.0);
  RngStream rng(11, 0);
  auto res = poison_model(b, {}, spec, rng);
  int big = 0;
  for (int k = 0; k < 3; ++k) {
    if (res.belief.vec(k) == 1e10) ++big;
    else CHECK(res.belief.vec(k) == 1.0);
  }
  CHECK(big == 1);
}

TEST_CASE("general-random tampered set size and uniformity") {
  const int dim = 10;
  AttackSpec spec;
  spec.kind = AttackKind::GeneralRandom;
  spec.tampered_fraction = 0.3;
  spec.multiplier = 100.0;
  std::vector<int> hits(dim, 0);
  const int trials = 10000;
  RngStream rng(13, 0);
  for (int t = 0; t < trials; ++t) {
    GaussianBelief b = GaussianBelief::isotropic(dim, 1.0, true);
    b.vec.setConstant(1.0);
    auto res = poison_model(b, {}, spec, rng);
    int count = 0;
    for (int k = 0; k < dim; ++k)
      if (res.belief.vec(k) == 100.0) {
        ++count;
        ++hits[k];
      }
    REQUIRE(count == 3);  // ceil(0.3 * 10)
  }
  // chi-square against uniform marginal inclusion (expected 3000 per index)
  const double expected = trials * 3.0 / dim;
  double chi2 = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double d = hits[k] - expected;
    chi2 += d * d / expected;
  }
  // 9 degrees of freedom, p = 0.01 critical value 21.67
  CHECK(chi2 < 21.67);
}

TEST_CASE("ALIE transmits mean minus z sample standard deviations") {
  AttackSpec spec;
  spec.kind = AttackKind::Alie;
  spec.alie_z = 1.0;
  GaussianBelief b = GaussianBelief::isotropic(1, 1.0, true);
  b.vec.setConstant(42.0);
  std::vector<Eigen::VectorXd> context;
  for (double v : {0.0, 1.0, 2.0}) {
    Eigen::VectorXd m(1);
    m << v;
    context.push_back(m);
  }
  RngStream rng(17, 0);
  auto res = poison_model(b, context, spec, rng);
  CHECK_FALSE(res.degraded);
  // sample std of {0,1,2} is 1
  CHECK(res.belief.vec(0) == Catch::Approx(1.0 - 1.0 * 1.0).margin(1e-12));
}

TEST_CASE("ALIE output stays within z std of the benign mean") {
  AttackSpec spec;
  spec.kind = AttackKind::Alie;
  spec.alie_z = 1.5;
  RngStream rng(19, 0);
  const int dim = 4;
  std::vector<Eigen::VectorXd> context;
  for (int i = 0; i < 7; ++i) {
    Eigen::VectorXd m(dim);
    for (int k = 0; k < dim; ++k) m(k) = rng.normal(0.0, 2.0);
    context.push_back(m);
  }
  GaussianBelief b = GaussianBelief::isotropic(dim, 1.0, true);
  auto res = poison_model(b, context, spec, rng);
  for (int k = 0; k < dim; ++k) {
    double mean = 0.0;
    for (const auto& m : context) mean += m(k);
    mean /= context.size();
    double var = 0.0;
    for (const auto& m : context) var += (m(k) - mean) * (m(k) - mean);
    const double sd = std::sqrt(var / (context.size() - 1));
    CHECK(std::abs(res.belief.vec(k) - mean) <= 1.5 * sd + 1e-12);
  }
}

TEST_CASE("ALIE with no benign context degrades to the clean message") {
  AttackSpec spec;
  spec.kind = AttackKind::Alie;
  GaussianBelief b = GaussianBelief::isotropic(2, 1.0, true);
  b.vec << 0.4, -0.6;
  RngStream rng(23, 0);
  auto res = poison_model(b, {}, spec, rng);
  CHECK(res.degraded);
  CHECK((res.belief.vec.array() == b.vec.array()).all());
}

TEST_CASE("detection probability closed-form cases") {
  CHECK(detection_probability(5, 1.0, 0.2) == 1.0);
  CHECK(detection_probability(3, 1.0 / 3.0, 1.0 / 3.0) ==
        Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(detection_probability(10, 0.0, 0.5), ConfigError);
  CHECK_THROWS_AS(detection_probability(10, 0.5, 1.5), ConfigError);
  CHECK_THROWS_AS(detection_probability(0, 0.5, 0.5), ConfigError);
}

TEST_CASE("detection probability matches Monte-Carlo intersection") {
  const int K = 20;
  const double L = 0.4, C = 0.3;
  const double p = detection_probability(K, L, C);
  RngStream rng(29, 0);
  const int trials = 100000;
  int hits = 0;
  const int l = 8, c = 6;
  for (int t = 0; t < trials; ++t) {
    auto obs = detail::sample_indices(K, l, rng);
    auto tam = detail::sample_indices(K, c, rng);
    std::set<int> o(obs.begin(), obs.end());
    bool inter = false;
    for (int k : tam)
      if (o.count(k)) {
        inter = true;
        break;
      }
    if (inter) ++hits;
  }
  CHECK(std::abs(static_cast<double>(hits) / trials - p) < 0.02);
}

TEST_CASE("detection probability is monotone in L and C") {
  const int K = 50;
  for (double l = 0.1; l < 0.95; l += 0.1)
    for (double c = 0.1; c < 0.85; c += 0.1) {
      CHECK(detection_probability(K, l + 0.1, c) >=
            detection_probability(K, l, c) - 1e-12);
      CHECK(detection_probability(K, l, c + 0.1) >=
            detection_probability(K, l, c) - 1e-12);
    }
}

TEST_CASE("large-model detection probability does not overflow") {
  const double p = detection_probability(1000000, 0.2, 0.2);
  CHECK(p >= 0.999);
  CHECK(p <= 1.0);
}

TEST_CASE("attack spec validation") {
  AttackSpec trojan;
  trojan.kind = AttackKind::Trojan;
  trojan.trigger = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(trojan.validate(3), ConfigError);  // dimension mismatch
  trojan.trigger = Eigen::VectorXd::Zero(3);
  CHECK_NOTHROW(trojan.validate(3));

  AttackSpec bits;
  bits.kind = AttackKind::BitFlip;
  bits.bit_index = 64;
  CHECK_THROWS_AS(bits.validate(3), ConfigError);

  AttackSpec gr;
  gr.kind = AttackKind::GeneralRandom;
  gr.multiplier = 0.5;
  CHECK_THROWS_AS(gr.validate(3), ConfigError);
}
