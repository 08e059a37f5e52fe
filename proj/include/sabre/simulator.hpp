#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sabre/aggregation.hpp"
#include "sabre/attacks.hpp"
#include "sabre/belief.hpp"
#include "sabre/kalman.hpp"
#include "sabre/linear_task.hpp"
#include "sabre/record.hpp"
#include "sabre/scenario.hpp"
#include "sabre/topology.hpp"

namespace sabre {

struct ClientState {
  ClientId id = 0;
  GaussianBelief local_belief;
  GaussianBelief social_belief;
  long local_clock = 0;
  long cycle_length = 1;
  std::optional<AttackSpec> compromise;
  RngStream rng_stream;
  bool local_model_frozen = false;
  bool terminated = false;
  std::vector<double> validation_errors;
  std::vector<Sample> validation_set;  // clean, for Zeno scoring / freezing
};

struct SimResult {
  RunRecord record;
  bool breached = false;
  std::string breach_message;
  long ticks_run = 0;
};

// Deterministic discrete-event engine. Within a joint tick every client is
// processed independently against an immutable snapshot of its mailbox, so
// output is byte-identical for any worker count.
class Simulator {
 public:
  explicit Simulator(Scenario scenario)
      : sc_(std::move(scenario)), clock_(sc_.cycle_lengths) {
    sc_.validate();
    const int n = sc_.num_clients();
    const int dim = sc_.task.dim();
    clients_.resize(n);
    mailbox_.resize(n);
    pending_degraded_.assign(n, 0);
    for (int i = 0; i < n; ++i) {
      ClientState& c = clients_[i];
      c.id = i;
      c.cycle_length = sc_.cycle_lengths[i];
      // The local belief is exact Bayes and keeps its full covariance; the
      // diagonal restriction applies to the social belief, which is what gets
      // transmitted and fused coordinate-wise.
      c.local_belief = GaussianBelief::isotropic(dim, sc_.sigma0, false);
      c.social_belief =
          GaussianBelief::isotropic(dim, sc_.sigma0, sc_.diagonal_covariance);
      c.rng_stream = RngStream(sc_.seed, static_cast<std::uint64_t>(i));
      auto it = sc_.attacks.find(i);
      if (it != sc_.attacks.end()) c.compromise = it->second;
      if (needs_validation_set()) {
        RngStream vrng(sc_.seed, 0x5a110000ULL + i);
        LinearTask clean = sc_.task;
        for (auto& [id, v] : clean.noise_variance) v = 0.0;
        c.validation_set = sample_batch(
            clean, i, std::max(1, sc_.baseline.zeno_validation_size), vrng);
      }
    }
  }

  const Scenario& scenario() const { return sc_; }
  const std::vector<ClientState>& clients() const { return clients_; }

  SimResult run(int workers = 1) {
    SimResult result;
    result.record.dim = sc_.task.dim();
    long tick = 0;
    while (!all_terminated()) {
      if (!step(tick, workers, result)) break;  // invariant breach
      ++tick;
    }
    result.ticks_run = tick;
    return result;
  }

  // One joint tick. Returns false when a strict-mode invariant breach ends
  // the run.
  bool step(long tick, int workers, SimResult& result) {
    const int n = sc_.num_clients();
    const Adjacency adj = sc_.topology.adjacency(tick);

    std::vector<std::vector<RunRecordRow>> rows(n);
    std::vector<std::optional<GaussianBelief>> outbound(n);
    std::vector<std::string> breaches(n);

    auto work = [&](int lo, int hi) {
      for (int i = lo; i < hi; ++i) {
        try {
          process_client(i, tick, adj, rows[i], outbound[i]);
        } catch (const InvariantBreach& e) {
          breaches[i] = e.what();
        }
      }
    };
    if (workers <= 1 || n == 1) {
      work(0, n);
    } else {
      const int w = std::min(workers, n);
      std::vector<std::thread> pool;
      for (int t = 0; t < w; ++t) {
        const int lo = n * t / w, hi = n * (t + 1) / w;
        pool.emplace_back(work, lo, hi);
      }
      for (auto& t : pool) t.join();
    }

    // deterministic merge: (joint_tick, client, cycle) order
    for (int i = 0; i < n; ++i)
      for (auto& r : rows[i]) result.record.rows.push_back(std::move(r));

    for (int i = 0; i < n; ++i) {
      if (!breaches[i].empty()) {
        result.breached = true;
        result.breach_message = "client " + std::to_string(i) + " tick " +
                                std::to_string(tick) + ": " + breaches[i];
        return false;
      }
    }

    deliver_messages(tick, adj, outbound);
    return true;
  }

  bool all_terminated() const {
    for (const auto& c : clients_)
      if (!c.terminated) return false;
    return true;
  }

 private:
  bool needs_validation_set() const {
    return sc_.algorithm == Algorithm::Zeno || sc_.freeze.enabled;
  }

  bool strict_faults() const {
    return !sc_.fault_tolerant && sc_.algorithm == Algorithm::Sabre;
  }

  void process_client(int i, long tick, const Adjacency& adj,
                      std::vector<RunRecordRow>& rows,
                      std::optional<GaussianBelief>& outbound) {
    ClientState& c = clients_[i];
    if (c.terminated) return;
    const long cycles = clock_.cycles_in_tick(i, tick);

    for (long cyc = 0; cyc < cycles && !c.terminated; ++cyc) {
      ++c.local_clock;

      auto batch = sample_batch(sc_.task, i, sc_.batch_size, c.rng_stream);
      if (c.compromise && c.compromise->is_data_attack())
        batch = poison_data(batch, *c.compromise, c.rng_stream);

      for (const auto& [x, y] : batch) {
        ObservationUpdate obs{x, y, std::max(sc_.task.noise(i), 1e-12)};
        if (!c.local_model_frozen)
          c.local_belief = kalman_update(c.local_belief, obs);
        c.social_belief = kalman_update(c.social_belief, obs);
      }
      if (sc_.freeze.enabled) update_freeze(c);

      const GaussianBelief pre_agg = c.social_belief;
      outbound = pre_agg;  // only the last local slot's message survives

      // inbound snapshot: own pre-aggregation belief plus the latest
      // persisted message per in-neighbor
      std::map<ClientId, GaussianBelief> received;
      received.emplace(i, pre_agg);
      for (int j = 0; j < sc_.num_clients(); ++j) {
        if (j == i || !adj(i, j)) continue;
        auto it = mailbox_[i].find(j);
        if (it != mailbox_[i].end()) received.emplace(j, it->second);
      }

      RunRecordRow row;
      row.joint_tick = tick;
      row.client = i;
      row.cycle = c.local_clock;
      if (pending_degraded_[i]) {
        row.degraded_attack = 1;
        pending_degraded_[i] = 0;
      }
      FloorStats floors;
      aggregate(c, received, pre_agg, row, floors);
      row.floor_events = floors.events;

      row.theta_bar = c.social_belief.vec;
      row.sigma_bar_diag = c.social_belief.mat.diagonal();
      row.theta_hat = c.local_belief.vec;
      row.sigma_hat_diag = c.local_belief.mat.diagonal();
      row.sq_err = (c.social_belief.vec - sc_.task.theta_star).squaredNorm();

      if (!c.compromise && strict_faults() &&
          (!c.social_belief.finite() || !c.local_belief.finite()))
        throw InvariantBreach("non-finite belief in benign client");

      const double trace = c.social_belief.mat.trace();
      if (trace <= sc_.sigma_thr || c.local_clock >= sc_.t_max)
        c.terminated = true;
      row.terminated = c.terminated ? 1 : 0;
      rows.push_back(std::move(row));
    }
  }

  void aggregate(ClientState& c, const std::map<ClientId, GaussianBelief>& received,
                 const GaussianBelief& pre_agg, RunRecordRow& row,
                 FloorStats& floors) {
    const int i = c.id;
    switch (sc_.algorithm) {
      case Algorithm::Sabre: {
        ConfidenceParams params{sc_.kappa, {}};
        auto accepted = confidence_set(c.local_belief, received, params);
        c.social_belief = sabre_aggregate(pre_agg, received,
                                          uniform_trust(accepted), &floors);
        std::vector<int> fired;
        c.social_belief =
            overwrite_rule(c.local_belief, c.social_belief, params, &fired);
        row.overwritten = std::move(fired);
        for (const auto& [id, b] : received)
          (accepted.count(id) ? row.accepted : row.excluded).push_back(id);
        break;
      }
      case Algorithm::BayP2PFL: {
        std::set<ClientId> all;
        for (const auto& [id, b] : received) {
          all.insert(id);
          row.accepted.push_back(id);
        }
        c.social_belief =
            sabre_aggregate(pre_agg, received, uniform_trust(all), &floors);
        break;
      }
      case Algorithm::TrimmedMean:
      case Algorithm::Clipping:
      case Algorithm::Zeno: {
        std::vector<Eigen::VectorXd> means;
        for (const auto& [id, b] : received) {
          means.push_back(b.vec);
          row.accepted.push_back(id);
        }
        c.social_belief = pre_agg;  // covariance stays data-trained
        if (sc_.algorithm == Algorithm::TrimmedMean) {
          int k = sc_.baseline.trim_count >= 0
                      ? sc_.baseline.trim_count
                      : static_cast<int>(sc_.attacks.size());
          // an oversized trim count is capped, not fatal, mid-run
          k = std::min(k, (static_cast<int>(means.size()) - 1) / 2);
          c.social_belief.vec = trimmed_mean(means, std::max(0, k));
        } else if (sc_.algorithm == Algorithm::Clipping) {
          const double tau = sc_.baseline.clip_tau > 0.0
                                 ? sc_.baseline.clip_tau
                                 : median_norm(means);
          c.social_belief.vec = clipped_mean(means, tau);
        } else {
          const int drop = sc_.baseline.zeno_drop >= 0
                               ? sc_.baseline.zeno_drop
                               : static_cast<int>(sc_.attacks.size());
          c.social_belief.vec =
              zeno_aggregate(pre_agg.vec, means, c.validation_set, drop,
                             sc_.baseline.zeno_rho);
        }
        break;
      }
    }
  }

  void update_freeze(ClientState& c) {
    if (c.local_model_frozen) return;
    c.validation_errors.push_back(
        validation_loss(c.local_belief.vec, c.validation_set));
    if (should_freeze_local(c.validation_errors, sc_.freeze.patience))
      c.local_model_frozen = true;  // latched
  }

  void deliver_messages(long tick, const Adjacency& adj,
                        std::vector<std::optional<GaussianBelief>>& outbound) {
    const int n = sc_.num_clients();
    // model-poisoning transforms see a snapshot of this tick's benign
    // outbound means
    std::vector<Eigen::VectorXd> benign_means;
    for (int j = 0; j < n; ++j)
      if (outbound[j] && !clients_[j].compromise)
        benign_means.push_back(outbound[j]->vec);

    for (int j = 0; j < n; ++j) {
      if (!outbound[j]) continue;
      ClientState& c = clients_[j];
      if (c.compromise && !c.compromise->is_data_attack()) {
        auto res = poison_model(*outbound[j], benign_means, *c.compromise,
                                c.rng_stream);
        outbound[j] = std::move(res.belief);
        if (res.degraded) mark_degraded(j, tick);
      }
      for (int i = 0; i < n; ++i)
        if (adj(i, j)) mailbox_[i][j] = *outbound[j];
    }
  }

  void mark_degraded(int client, long tick) {
    degraded_events_.emplace_back(client, tick);
    pending_degraded_[client] = 1;  // surfaces on the client's next row
  }

 public:
  const std::vector<std::pair<int, long>>& degraded_attack_events() const {
    return degraded_events_;
  }

 private:
  Scenario sc_;
  JointClock clock_;
  std::vector<ClientState> clients_;
  std::vector<std::map<ClientId, GaussianBelief>> mailbox_;
  std::vector<std::pair<int, long>> degraded_events_;
  std::vector<char> pending_degraded_;
};

inline SimResult run_scenario(const Scenario& scenario, int workers = 1) {
  Simulator sim(scenario);
  return sim.run(workers);
}

}  // namespace sabre
