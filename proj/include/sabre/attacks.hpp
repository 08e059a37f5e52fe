#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sabre/belief.hpp"
#include "sabre/errors.hpp"
#include "sabre/linear_task.hpp"

namespace sabre {

enum class AttackKind {
  LabelFlipBias,   // data: every label shifted by a common bias b
  Trojan,          // data: trigger added to x, label replaced by a target
  BitFlip,         // model: flip one bit of selected mean coordinates
  GeneralRandom,   // model: multiply a random coordinate subset by M
  Alie             // model: hide within z std of the benign update cloud
};

inline std::string attack_kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::LabelFlipBias: return "label-flip-bias";
    case AttackKind::Trojan: return "trojan";
    case AttackKind::BitFlip: return "bit-flip";
    case AttackKind::GeneralRandom: return "general-random";
    case AttackKind::Alie: return "a-little-is-enough";
  }
  return "?";
}

struct AttackSpec {
  AttackKind kind = AttackKind::LabelFlipBias;

  // label-flip
  double bias = 1.0;
  // trojan
  Eigen::VectorXd trigger;
  double target_label = 0.0;
  double trigger_fraction = 0.5;
  // bit-flip
  int bit_index = 62;
  double flip_fraction = 0.1;
  // general-random
  double tampered_fraction = 0.1;
  double multiplier = 1e10;
  // a-little-is-enough
  double alie_z = 1.5;

  bool tamper_covariance = false;  // model attacks touch the mean only

  bool is_data_attack() const {
    return kind == AttackKind::LabelFlipBias || kind == AttackKind::Trojan;
  }

  void validate(int dim) const {
    switch (kind) {
      case AttackKind::Trojan:
        if (trigger.size() != dim)
          throw ConfigError("trojan trigger dimension mismatch");
        if (!(trigger_fraction > 0.0 && trigger_fraction <= 1.0))
          throw ConfigError("trojan trigger fraction must be in (0, 1]");
        break;
      case AttackKind::BitFlip:
        if (bit_index < 0 || bit_index > 63)
          throw ConfigError("bit index must be in [0, 63]");
        if (!(flip_fraction > 0.0 && flip_fraction <= 1.0))
          throw ConfigError("flip fraction must be in (0, 1]");
        break;
      case AttackKind::GeneralRandom:
        if (!(tampered_fraction > 0.0 && tampered_fraction <= 1.0))
          throw ConfigError("tampered fraction must be in (0, 1]");
        if (!(multiplier > 1.0)) throw ConfigError("multiplier must be > 1");
        break;
      default:
        break;
    }
  }
};

namespace detail {

// First `count` entries of a seeded permutation of [0, n).
inline std::vector<int> sample_indices(int n, int count, RngStream& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < count && i < n; ++i) {
    const int j = i + static_cast<int>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(std::min(count, n));
  return idx;
}

inline double flip_bit(double value, int bit) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  bits ^= (std::uint64_t{1} << bit);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline std::vector<Sample> poison_data(const std::vector<Sample>& batch,
                                       const AttackSpec& spec, RngStream& rng) {
  if (!spec.is_data_attack())
    throw ConfigError("poison_data: " + attack_kind_name(spec.kind) +
                      " is not a data attack");
  std::vector<Sample> out = batch;
  if (spec.kind == AttackKind::LabelFlipBias) {
    for (auto& [x, y] : out) y += spec.bias;
    return out;
  }
  // trojan: a fixed fraction of the batch gets the trigger and target label
  const int count = static_cast<int>(
      std::lround(spec.trigger_fraction * static_cast<double>(out.size())));
  for (int i : detail::sample_indices(static_cast<int>(out.size()), count, rng)) {
    out[i].first = (out[i].first + spec.trigger).cwiseMax(0.0);
    out[i].second = spec.target_label;
  }
  return out;
}

struct PoisonModelResult {
  GaussianBelief belief;
  bool degraded = false;  // ALIE with no benign context falls back to benign
};

// Transforms only the outbound wire message; the attacker's internal state
// is untouched.
inline PoisonModelResult poison_model(
    const GaussianBelief& outgoing,
    const std::vector<Eigen::VectorXd>& benign_means, const AttackSpec& spec,
    RngStream& rng) {
  PoisonModelResult res{outgoing, false};
  const int dim = outgoing.dim();
  switch (spec.kind) {
    case AttackKind::BitFlip: {
      const int count =
          std::max(1, static_cast<int>(std::ceil(spec.flip_fraction * dim)));
      for (int k : detail::sample_indices(dim, count, rng))
        res.belief.vec(k) = detail::flip_bit(res.belief.vec(k), spec.bit_index);
      break;
    }
    case AttackKind::GeneralRandom: {
      const int count =
          std::max(1, static_cast<int>(std::ceil(spec.tampered_fraction * dim)));
      for (int k : detail::sample_indices(dim, count, rng))
        res.belief.vec(k) *= spec.multiplier;
      break;
    }
    case AttackKind::Alie: {
      if (benign_means.empty()) {
        res.degraded = true;
        break;
      }
      const double n = static_cast<double>(benign_means.size());
      for (int k = 0; k < dim; ++k) {
        double mean = 0.0;
        for (const auto& m : benign_means) mean += m(k);
        mean /= n;
        double var = 0.0;
        for (const auto& m : benign_means) var += (m(k) - mean) * (m(k) - mean);
        const double std = n > 1.0 ? std::sqrt(var / (n - 1.0)) : 0.0;
        res.belief.vec(k) = mean - spec.alie_z * std;
      }
      break;
    }
    default:
      throw ConfigError("poison_model: " + attack_kind_name(spec.kind) +
                        " is not a model attack");
  }
  return res;
}

// Probability that a random tampered set of size C*K intersects a client's
// observed set of size L*K:  P = 1 - C((1-L)K, CK) / C(K, CK).
// Evaluated in log-gamma arithmetic so K up to 1e7 is exact to double
// precision.
inline double detection_probability(long long K, double L, double C) {
  if (K < 1) throw ConfigError("detection_probability: K must be >= 1");
  if (!(L > 0.0 && L <= 1.0))
    throw ConfigError("detection_probability: L must be in (0, 1]");
  if (!(C > 0.0 && C <= 1.0))
    throw ConfigError("detection_probability: C must be in (0, 1]");
  const long long l = std::llround(L * static_cast<double>(K));
  const long long c = std::llround(C * static_cast<double>(K));
  if (l <= 0 || c <= 0) throw ConfigError("detection_probability: empty set");
  if (K - l < c) return 1.0;  // intersection guaranteed
  auto lchoose = [](long long n, long long k) {
    return std::lgamma(static_cast<double>(n + 1)) -
           std::lgamma(static_cast<double>(k + 1)) -
           std::lgamma(static_cast<double>(n - k + 1));
  };
  return 1.0 - std::exp(lchoose(K - l, c) - lchoose(K, c));
}

}  // namespace sabre
