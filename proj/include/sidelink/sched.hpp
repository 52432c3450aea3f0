#pragma once

// Slotted fair-scheduling simulator. Every slot the greedy solver runs on the
// episode's fixed channels with per-UE weights taken from the policy:
//
//   GREEDY_STATIC  w = 1 throughout
//   WAIT_TIME      idle: w + 1        served: max(w - 1, 1)
//   QUEUE          idle: w + a        served: max(w + a - r, 0)   (w is the backlog)
//
// where a is the slot's arrival and r the achieved link rate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "sidelink/model.hpp"
#include "sidelink/rate.hpp"
#include "sidelink/rng.hpp"
#include "sidelink/solvers.hpp"
#include "sidelink/stats.hpp"

namespace sidelink {

enum class PolicyKind { GreedyStatic, WaitTime, Queue };

inline constexpr std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::GreedyStatic: return "GREEDY_STATIC";
    case PolicyKind::WaitTime: return "WAIT_TIME";
    case PolicyKind::Queue: return "QUEUE";
  }
  return "?";
}

inline std::optional<PolicyKind> parse_policy(std::string_view name) {
  for (PolicyKind k : {PolicyKind::GreedyStatic, PolicyKind::WaitTime, PolicyKind::Queue}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

struct FairPolicy {
  PolicyKind kind = PolicyKind::GreedyStatic;
  std::vector<double> arrival_rates;  // Bernoulli parameter per outer UE, QUEUE only

  void validate(std::size_t n_outer) const {
    if (kind != PolicyKind::Queue) return;
    if (arrival_rates.size() != n_outer) {
      throw std::invalid_argument("QUEUE policy needs one arrival rate per outer UE");
    }
    for (double l : arrival_rates) {
      if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("arrival rates must lie in [0, 1]");
    }
  }
};

// Per-UE arrival rates drawn from Uniform[0, 2 * total / n], so the expected
// total arrival rate is `total`.
inline std::vector<double> draw_arrival_rates(std::size_t n_outer, double total, Rng& rng) {
  std::vector<double> rates(n_outer, 0.0);
  if (n_outer == 0) return rates;
  const double hi = std::min(1.0, 2.0 * total / static_cast<double>(n_outer));
  std::uniform_real_distribution<double> u(0.0, hi);
  for (double& r : rates) r = u(rng);
  return rates;
}

inline double update_weight_wait(double w, bool activated) {
  return activated ? std::max(w - 1.0, 1.0) : w + 1.0;
}

inline double update_weight_queue(double w, double arrival, bool activated, double served) {
  return activated ? std::max(w + arrival - served, 0.0) : w + arrival;
}

// Arrivals and service of one UE in one slot; only slots with activity are logged.
struct SlotFlow {
  std::size_t slot = 0;
  double arrived = 0.0;
  double served = 0.0;
};

struct EpisodeState {
  std::size_t slot = 0;
  std::vector<double> weights;
  std::vector<double> queues;
  std::vector<std::vector<std::size_t>> activation_history;
  std::vector<std::vector<SlotFlow>> packet_log;
  std::vector<double> arrived_total;
  std::vector<double> served_total;
  double queue_area = 0.0;   // sum over slots of the total post-arrival backlog
  double arrivals = 0.0;     // total arrivals over all UEs
};

struct EpisodeMetrics {
  std::vector<double> admission_ratio;
  double mean_admission = 0.0;
  double var_admission = 0.0;
  double sum_rate_time_avg = 0.0;
  std::optional<std::size_t> max_wait;
  std::optional<double> avg_delay;  // QUEUE only
};

struct Episode {
  EpisodeState state;
  EpisodeMetrics metrics;
};

struct TraceRow {
  std::size_t slot = 0;
  std::size_t ue = 0;
  bool activated = false;
  double rate = 0.0;
  double weight = 0.0;  // weight used for scheduling in this slot
  double queue = 0.0;   // backlog at the end of the slot
};

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << "slot,ue,activated,rate,weight,queue\n";
  char buf[160];
  for (const TraceRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%d,%.9g,%.9g,%.9g\n", r.slot, r.ue,
                  r.activated ? 1 : 0, r.rate, r.weight, r.queue);
    os << buf;
  }
}

inline std::pair<double, double> admission_stats(
    const std::vector<std::vector<std::size_t>>& histories, std::size_t slots) {
  if (histories.empty()) throw std::invalid_argument("no UEs");
  if (slots == 0) throw std::invalid_argument("slots must be >= 1");
  std::vector<double> ratios;
  ratios.reserve(histories.size());
  for (const auto& h : histories) {
    ratios.push_back(static_cast<double>(h.size()) / static_cast<double>(slots));
  }
  const stats::Summary s = stats::summarize(ratios);
  return {s.mean, s.variance};
}

// Longest gap between activations. Per UE the gaps are the first activation
// slot + 1, the differences of consecutive activation slots, and
// slots - last activation slot. UEs never activated are skipped.
inline std::optional<std::size_t> max_wait(
    const std::vector<std::vector<std::size_t>>& histories, std::size_t slots) {
  std::optional<std::size_t> worst;
  for (const auto& h : histories) {
    if (h.empty()) continue;
    std::size_t m = h.front() + 1;
    for (std::size_t t = 1; t < h.size(); ++t) m = std::max(m, h[t] - h[t - 1]);
    m = std::max(m, slots - h.back());
    worst = std::max(worst.value_or(0), m);
  }
  return worst;
}

// Little's-law delay: time-averaged backlog over the realized arrival rate.
inline double avg_delay(const EpisodeState& state, const FairPolicy& policy, std::size_t slots) {
  if (policy.kind != PolicyKind::Queue) {
    throw std::invalid_argument("average delay is defined for the QUEUE policy only");
  }
  if (slots == 0 || state.arrivals <= 0.0) return 0.0;
  const double backlog = state.queue_area / static_cast<double>(slots);
  const double rate = state.arrivals / static_cast<double>(slots);
  return backlog / rate;
}

// Runs one episode of `slots` slots on the fixed instance. The optional trace
// receives one row per (slot, UE).
inline Episode run_episode_full(const ProblemInstance& inst, const FairPolicy& policy,
                                std::size_t slots, Rng& rng,
                                std::vector<TraceRow>* trace = nullptr) {
  if (slots == 0) throw std::invalid_argument("slots must be >= 1");
  const std::size_t n = inst.n_outer();
  policy.validate(n);

  Episode ep;
  EpisodeState& st = ep.state;
  st.weights.assign(n, policy.kind == PolicyKind::Queue ? 0.0 : 1.0);
  st.queues.assign(n, 0.0);
  st.activation_history.assign(n, {});
  st.packet_log.assign(n, {});
  st.arrived_total.assign(n, 0.0);
  st.served_total.assign(n, 0.0);

  ProblemInstance slot_inst = inst;
  std::vector<double> arrived(n, 0.0);
  std::vector<double> backlog_before(n, 0.0);
  stats::CompensatedSum sum_rate;

  for (st.slot = 0; st.slot < slots; ++st.slot) {
    if (policy.kind == PolicyKind::Queue) {
      for (std::size_t i = 0; i < n; ++i) {
        arrived[i] = std::bernoulli_distribution(policy.arrival_rates[i])(rng) ? 1.0 : 0.0;
        backlog_before[i] = st.queues[i];
        st.queues[i] += arrived[i];
        st.arrived_total[i] += arrived[i];
        st.arrivals += arrived[i];
        st.queue_area += st.queues[i];
      }
      // The scheduling weight is the post-arrival backlog.
      slot_inst.weights = st.queues;
    } else {
      slot_inst.weights = st.weights;
    }

    const SolveResult sol = solve_greedy(slot_inst);
    double slot_rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool on = sol.schedule.assign[i].has_value();
      const double r = sol.report.r1[i];
      const double used_weight = slot_inst.weights[i];
      if (on) {
        st.activation_history[i].push_back(st.slot);
        slot_rate += r;
      }
      switch (policy.kind) {
        case PolicyKind::GreedyStatic:
          break;
        case PolicyKind::WaitTime:
          st.weights[i] = update_weight_wait(st.weights[i], on);
          break;
        case PolicyKind::Queue: {
          const double after =
              update_weight_queue(backlog_before[i], arrived[i], on, on ? r : 0.0);
          const double served = st.queues[i] - after;
          st.queues[i] = after;
          st.weights[i] = after;
          st.served_total[i] += served;
          if (arrived[i] > 0.0 || served > 0.0) {
            st.packet_log[i].push_back({st.slot, arrived[i], served});
          }
          break;
        }
      }
      if (trace) trace->push_back({st.slot, i, on, r, used_weight, st.queues[i]});
    }
    sum_rate.add(slot_rate);
  }

  EpisodeMetrics& m = ep.metrics;
  m.admission_ratio.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.admission_ratio[i] =
        static_cast<double>(st.activation_history[i].size()) / static_cast<double>(slots);
  }
  if (n > 0) std::tie(m.mean_admission, m.var_admission) = admission_stats(st.activation_history, slots);
  m.sum_rate_time_avg = sum_rate.value() / static_cast<double>(slots);
  m.max_wait = max_wait(st.activation_history, slots);
  if (policy.kind == PolicyKind::Queue) m.avg_delay = avg_delay(st, policy, slots);
  return ep;
}

inline EpisodeMetrics run_episode(const ProblemInstance& inst, const FairPolicy& policy,
                                  std::size_t slots, Rng& rng) {
  return run_episode_full(inst, policy, slots, rng).metrics;
}

}  // namespace sidelink
