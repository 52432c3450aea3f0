#pragma once

// Link capacities and the weighted sum-rate objective for a given schedule.
//
//   hop 1:  c1(i,j) = log2(1 + 1[i active] P_i h1(i,j) / (noise + sum_{k != i, active} P_k h1(k,j)))
//   hop 2:  c2(j)   = log2(1 + P_j h2(j) / noise)
//   rate:   r_i     = max(0, min(c1(i,u_i), c2(u_i) - relay_traffic(u_i)))
//
// Interference at an inner UE counts every active outer UE, whichever relay
// it is assigned to. Hop 2 is interference free.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sidelink/model.hpp"

namespace sidelink {

// Relay of one outer UE; std::nullopt means "not scheduled". The ordering of
// std::optional puts nullopt first, so vectors of Relay compare in the
// lexicographic order NONE < 0 < 1 < ...
using Relay = std::optional<std::size_t>;

struct Schedule {
  std::vector<Relay> assign;

  static Schedule none(std::size_t n_outer) { return {std::vector<Relay>(n_outer)}; }

  std::size_t size() const noexcept { return assign.size(); }

  std::size_t active_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(assign.begin(), assign.end(), [](const Relay& r) { return r.has_value(); }));
  }

  // Every relay index is in range and no relay serves two outer UEs.
  bool is_valid(std::size_t n_inner) const {
    std::vector<bool> used(n_inner, false);
    for (const Relay& r : assign) {
      if (!r) continue;
      if (*r >= n_inner || used[*r]) return false;
      used[*r] = true;
    }
    return true;
  }

  friend bool operator==(const Schedule&, const Schedule&) = default;
  friend auto operator<=>(const Schedule&, const Schedule&) = default;
};

struct RateReport {
  Matrix c1;               // hop-1 capacity of every (outer, inner) pair under the schedule
  std::vector<double> c2;  // hop-2 capacity of every inner UE
  std::vector<double> r1;  // achieved rate of every outer UE
  double weighted_sum = 0.0;
};

inline void check_schedule(const ProblemInstance& inst, const Schedule& sched) {
  if (sched.size() != inst.n_outer()) {
    throw std::invalid_argument("schedule length does not match the number of outer UEs");
  }
  if (!sched.is_valid(inst.n_inner())) {
    throw std::invalid_argument("schedule is not an injective assignment to existing relays");
  }
}

inline double feasible_rate(double c1_ij, double c2_j, double relay_traffic) {
  return std::max(0.0, std::min(c1_ij, c2_j - relay_traffic));
}

inline double hop2_capacity(double power, double gain, double noise) {
  return std::log2(1.0 + power * gain / noise);
}

inline std::vector<double> hop2_capacities(const ProblemInstance& inst) {
  std::vector<double> c2(inst.n_inner());
  for (std::size_t j = 0; j < c2.size(); ++j) {
    c2[j] = hop2_capacity(inst.gains.p_inner[j], inst.gains.h2[j], inst.gains.noise);
  }
  return c2;
}

namespace detail {

// Hop-1 capacity of (i, j) under `assign`. The interference sum runs over
// outer UEs in index order; every objective evaluation goes through here so
// that identical schedules give bit-identical values.
inline double link_capacity(const GainTable& g, const std::vector<Relay>& assign, std::size_t i,
                            std::size_t j) {
  if (!assign[i]) return 0.0;
  double denom = g.noise;
  for (std::size_t k = 0; k < assign.size(); ++k) {
    if (k != i && assign[k]) denom += g.p_outer[k] * g.h1(k, j);
  }
  return std::log2(1.0 + g.p_outer[i] * g.h1(i, j) / denom);
}

}  // namespace detail

inline Matrix hop1_capacities(const ProblemInstance& inst, const Schedule& sched) {
  check_schedule(inst, sched);
  Matrix c1(inst.n_outer(), inst.n_inner());
  for (std::size_t i = 0; i < inst.n_outer(); ++i) {
    for (std::size_t j = 0; j < inst.n_inner(); ++j) {
      c1(i, j) = detail::link_capacity(inst.gains, sched.assign, i, j);
    }
  }
  return c1;
}

// Objective only, skipping the full capacity matrix. `c2` must come from
// hop2_capacities(inst). The schedule is assumed valid.
inline double weighted_sum_rate(const ProblemInstance& inst, const Schedule& sched,
                                const std::vector<double>& c2) {
  double total = 0.0;
  for (std::size_t i = 0; i < sched.size(); ++i) {
    const Relay& r = sched.assign[i];
    if (!r) continue;
    const double c1 = detail::link_capacity(inst.gains, sched.assign, i, *r);
    total += inst.weights[i] * feasible_rate(c1, c2[*r], inst.relay_traffic[*r]);
  }
  return total;
}

inline RateReport evaluate(const ProblemInstance& inst, const Schedule& sched) {
  RateReport rep;
  rep.c1 = hop1_capacities(inst, sched);
  rep.c2 = hop2_capacities(inst);
  rep.r1.assign(inst.n_outer(), 0.0);
  for (std::size_t i = 0; i < sched.size(); ++i) {
    const Relay& r = sched.assign[i];
    if (!r) continue;
    rep.r1[i] = feasible_rate(rep.c1(i, *r), rep.c2[*r], inst.relay_traffic[*r]);
    rep.weighted_sum += inst.weights[i] * rep.r1[i];
  }
  return rep;
}

}  // namespace sidelink
