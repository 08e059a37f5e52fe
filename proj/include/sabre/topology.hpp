#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "sabre/errors.hpp"
#include "sabre/rng.hpp"

namespace sabre {

// Boolean adjacency; entry (i, j) = 1 iff j can send to i throughout the
// tick. Self-loops are implicit (a node always keeps its own state) and are
// never stored.
using Adjacency = Eigen::MatrixXi;

inline Adjacency complete_adjacency(int n) {
  Adjacency a = Adjacency::Ones(n, n);
  a.diagonal().setZero();
  return a;
}

// Time-varying directed topology with a deterministic schedule.
struct Topology {
  enum class Kind { Static, RandomDrop, Scripted };

  Kind kind = Kind::Static;
  int nodes = 0;
  Adjacency base;                   // Static / RandomDrop
  double drop_fraction = 0.0;       // RandomDrop
  int reshuffle_period = 0;         // RandomDrop: 0 = drop once, statically
  std::uint64_t seed = 0;           // RandomDrop
  std::vector<Adjacency> script;    // Scripted, cycled over ticks

  static Topology complete(int n) {
    Topology t;
    t.kind = Kind::Static;
    t.nodes = n;
    t.base = complete_adjacency(n);
    return t;
  }

  static Topology from_edges(int n,
                             const std::vector<std::pair<int, int>>& edges,
                             bool bidirectional = true) {
    Topology t;
    t.kind = Kind::Static;
    t.nodes = n;
    t.base = Adjacency::Zero(n, n);
    for (auto [i, j] : edges) {
      if (i < 0 || j < 0 || i >= n || j >= n)
        throw ConfigError("edge endpoint out of range");
      t.base(i, j) = 1;  // j sends to i
      if (bidirectional) t.base(j, i) = 1;
    }
    t.base.diagonal().setZero();
    return t;
  }

  static Topology random_drop(int n, double fraction, int period,
                              std::uint64_t seed) {
    Topology t = complete(n);
    t.kind = Kind::RandomDrop;
    t.drop_fraction = fraction;
    t.reshuffle_period = period;
    t.seed = seed;
    return t;
  }

  static Topology scripted(std::vector<Adjacency> frames) {
    if (frames.empty()) throw ConfigError("scripted topology needs frames");
    Topology t;
    t.kind = Kind::Scripted;
    t.nodes = static_cast<int>(frames[0].rows());
    t.script = std::move(frames);
    return t;
  }

  Adjacency adjacency(long tick) const {
    switch (kind) {
      case Kind::Static:
        return base;
      case Kind::Scripted:
        return script[static_cast<std::size_t>(tick) % script.size()];
      case Kind::RandomDrop: {
        const long epoch =
            reshuffle_period > 0 ? tick / reshuffle_period : 0;
        RngStream rng(seed, static_cast<std::uint64_t>(epoch) + 0x7070ULL);
        Adjacency a = base;
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i < nodes; ++i)
          for (int j = 0; j < nodes; ++j)
            if (a(i, j)) edges.emplace_back(i, j);
        const int drop = static_cast<int>(
            std::lround(drop_fraction * static_cast<double>(edges.size())));
        // partial Fisher-Yates: the first `drop` entries are removed
        for (int i = 0; i < drop; ++i) {
          const int j =
              i + static_cast<int>(rng.below(edges.size() - i));
          std::swap(edges[i], edges[j]);
          a(edges[i].first, edges[i].second) = 0;
        }
        return a;
      }
    }
    throw ConfigError("bad topology kind");
  }
};

// In-neighbors of `client` during a joint tick, including the client itself.
inline std::set<int> neighbors_in(const Topology& topo, long tick, int client) {
  if (client < 0 || client >= topo.nodes)
    throw ConfigError("unknown client " + std::to_string(client));
  if (tick < 0) throw ConfigError("tick must be >= 0");
  const Adjacency a = topo.adjacency(tick);
  std::set<int> in{client};
  for (int j = 0; j < topo.nodes; ++j)
    if (a(client, j)) in.insert(j);
  return in;
}

// Joint clock: tick length is the longest client cycle; a client with cycle
// length c completes floor(((t+1)J)/c) - floor((tJ)/c) local cycles during
// joint tick t.
struct JointClock {
  std::vector<long> cycle_lengths;
  long tick_length = 1;

  explicit JointClock(std::vector<long> lengths)
      : cycle_lengths(std::move(lengths)) {
    for (long c : cycle_lengths)
      if (c < 1) throw ConfigError("cycle length must be >= 1");
    tick_length =
        *std::max_element(cycle_lengths.begin(), cycle_lengths.end());
  }

  long cycles_in_tick(int client, long tick) const {
    const long c = cycle_lengths.at(client);
    return (tick + 1) * tick_length / c - tick * tick_length / c;
  }
};

struct ConnectivityVerdict {
  bool satisfied = false;
  std::vector<std::pair<long, long>> windows;  // inclusive [start, end] ticks
  long failed_prefix_start = -1;
  long failed_prefix_length = 0;
};

namespace detail {

inline bool strongly_connected(const Eigen::MatrixXi& reach,
                               const std::vector<int>& nodes) {
  // BFS over the boolean matrix from nodes[0], forward and backward.
  const int n = static_cast<int>(nodes.size());
  for (int dir = 0; dir < 2; ++dir) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        const int a = nodes[dir ? v : u], b = nodes[dir ? u : v];
        if (!seen[v] && reach(a, b)) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    if (std::count(seen.begin(), seen.end(), 1) != n) return false;
  }
  return true;
}

}  // namespace detail

// Greedy witness construction for the relaxed connectivity constraint: each
// window's boolean adjacency product (self-loops added) must be strongly
// connected. `restrict_to` limits the check to a node subset (e.g. the
// benign subgraph); empty means all nodes.
inline ConnectivityVerdict check_relaxed_connectivity(
    const Topology& topo, long horizon, long window_search_limit,
    const std::vector<int>& restrict_to = {}) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  std::vector<int> nodes = restrict_to;
  if (nodes.empty()) {
    nodes.resize(topo.nodes);
    std::iota(nodes.begin(), nodes.end(), 0);
  }
  const int n = topo.nodes;

  ConnectivityVerdict verdict;
  long window_start = 0;
  Eigen::MatrixXi prod = Eigen::MatrixXi::Identity(n, n);
  for (long t = 0; t < horizon; ++t) {
    Adjacency a = topo.adjacency(t);
    if (!restrict_to.empty()) {
      // edges through non-member nodes do not count
      Adjacency masked = Adjacency::Zero(n, n);
      for (int i : nodes)
        for (int j : nodes) masked(i, j) = a(i, j);
      a = masked;
    }
    for (int i = 0; i < n; ++i) a(i, i) = 1;
    prod = (prod * a).unaryExpr([](int v) { return v ? 1 : 0; }).eval();
    if (detail::strongly_connected(prod, nodes)) {
      verdict.windows.emplace_back(window_start, t);
      window_start = t + 1;
      prod = Eigen::MatrixXi::Identity(n, n);
      continue;
    }
    if (t - window_start + 1 >= window_search_limit) {
      verdict.satisfied = false;
      verdict.failed_prefix_start = window_start;
      verdict.failed_prefix_length = t - window_start + 1;
      return verdict;
    }
  }
  // Satisfied when at least one witness window closed and the trailing
  // partial window stayed under the search limit.
  verdict.satisfied = !verdict.windows.empty();
  if (!verdict.satisfied) {
    verdict.failed_prefix_start = 0;
    verdict.failed_prefix_length = horizon;
  }
  return verdict;
}

}  // namespace sabre
