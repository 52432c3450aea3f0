#pragma once

// Schedule producers: capped exhaustive search, greedy incremental link
// addition, and the random / best-channel baselines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sidelink/model.hpp"
#include "sidelink/rate.hpp"
#include "sidelink/rng.hpp"

namespace sidelink {

struct SolveResult {
  Schedule schedule;
  RateReport report;
  std::size_t searched = 0;          // candidate schedules (or links, for greedy) evaluated
  std::size_t additions = 0;         // greedy only: links added
  bool exhaustive_complete = false;  // exhaustive only: the whole space was enumerated
};

// Number of valid schedules: sum_k C(n_o, k) * n_i! / (n_i - k)!.
// Returned as long double since it overflows 64-bit integers quickly.
inline long double count_valid_schedules(std::size_t n_outer, std::size_t n_inner) {
  long double total = 0.0L;
  long double choose = 1.0L;  // C(n_o, k)
  long double perm = 1.0L;    // n_i! / (n_i - k)!
  for (std::size_t k = 0; k <= std::min(n_outer, n_inner); ++k) {
    if (k > 0) {
      choose = choose * static_cast<long double>(n_outer - k + 1) / static_cast<long double>(k);
      perm *= static_cast<long double>(n_inner - k + 1);
    }
    total += choose * perm;
  }
  return total;
}

// Size of the raw search space (n_i + 1)^n_o, counting vectors that reuse a
// relay. This is the figure compared against the search cap.
inline long double count_raw_schedules(std::size_t n_outer, std::size_t n_inner) {
  return std::pow(static_cast<long double>(n_inner) + 1.0L, static_cast<long double>(n_outer));
}

namespace detail {

template <class Visitor>
void enumerate_all(std::vector<Relay>& assign, std::vector<bool>& used, std::size_t i,
                   Schedule& scratch, Visitor& visit) {
  if (i == assign.size()) {
    scratch.assign = assign;
    visit(std::as_const(scratch));
    return;
  }
  assign[i] = std::nullopt;
  enumerate_all(assign, used, i + 1, scratch, visit);
  for (std::size_t j = 0; j < used.size(); ++j) {
    if (used[j]) continue;
    used[j] = true;
    assign[i] = j;
    enumerate_all(assign, used, i + 1, scratch, visit);
    used[j] = false;
  }
  assign[i] = std::nullopt;
}

// Draws a schedule uniformly from the valid set: pick the number of active
// links k with probability proportional to C(n_o, k) P(n_i, k), then a
// uniform k-subset of outer UEs and a uniform ordered k-sample of relays.
class UniformScheduleSampler {
 public:
  UniformScheduleSampler(std::size_t n_outer, std::size_t n_inner)
      : outer_(n_outer), inner_(n_inner) {
    std::iota(outer_.begin(), outer_.end(), std::size_t{0});
    std::iota(inner_.begin(), inner_.end(), std::size_t{0});
    const std::size_t kmax = std::min(n_outer, n_inner);
    std::vector<double> logw(kmax + 1);
    const auto lf = [](std::size_t n) { return std::lgamma(static_cast<double>(n) + 1.0); };
    for (std::size_t k = 0; k <= kmax; ++k) {
      logw[k] = lf(n_outer) - lf(k) - lf(n_outer - k) + lf(n_inner) - lf(n_inner - k);
    }
    const double top = *std::max_element(logw.begin(), logw.end());
    std::vector<double> w(kmax + 1);
    for (std::size_t k = 0; k <= kmax; ++k) w[k] = std::exp(logw[k] - top);
    active_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
  }

  void draw(Rng& rng, Schedule& out) {
    const std::size_t k = active_(rng);
    out.assign.assign(outer_.size(), std::nullopt);
    partial_shuffle(outer_, k, rng);
    partial_shuffle(inner_, k, rng);
    for (std::size_t t = 0; t < k; ++t) out.assign[outer_[t]] = inner_[t];
  }

 private:
  static void partial_shuffle(std::vector<std::size_t>& v, std::size_t k, Rng& rng) {
    for (std::size_t t = 0; t < k; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, v.size() - 1);
      std::swap(v[t], v[pick(rng)]);
    }
  }

  std::vector<std::size_t> outer_;
  std::vector<std::size_t> inner_;
  std::discrete_distribution<std::size_t> active_;
};

}  // namespace detail

// Streams candidate schedules to `visit`. When the raw space (n_i + 1)^n_o
// fits in `cap` every valid schedule is visited once in lexicographic order
// and true is returned. Otherwise the all-NONE schedule is visited first, followed by
// cap - 1 uniform draws from the valid set (with replacement), and false is
// returned.
template <class Visitor>
bool enumerate_schedules(std::size_t n_outer, std::size_t n_inner, std::size_t cap, Rng& rng,
                         Visitor&& visit) {
  if (cap == 0) throw std::invalid_argument("schedule cap must be >= 1");
  Schedule scratch;
  if (count_raw_schedules(n_outer, n_inner) <= static_cast<long double>(cap)) {
    std::vector<Relay> assign(n_outer);
    std::vector<bool> used(n_inner, false);
    detail::enumerate_all(assign, used, 0, scratch, visit);
    return true;
  }
  scratch = Schedule::none(n_outer);
  visit(std::as_const(scratch));
  detail::UniformScheduleSampler sampler(n_outer, n_inner);
  for (std::size_t s = 1; s < cap; ++s) {
    sampler.draw(rng, scratch);
    visit(std::as_const(scratch));
  }
  return false;
}

inline SolveResult solve_exhaustive(const ProblemInstance& inst, std::size_t cap, Rng& rng) {
  const std::vector<double> c2 = hop2_capacities(inst);
  SolveResult res;
  double best = -std::numeric_limits<double>::infinity();
  res.exhaustive_complete =
      enumerate_schedules(inst.n_outer(), inst.n_inner(), cap, rng, [&](const Schedule& s) {
        ++res.searched;
        const double v = weighted_sum_rate(inst, s, c2);
        if (v > best || (v == best && s < res.schedule)) {
          best = v;
          res.schedule = s;
        }
      });
  res.report = evaluate(inst, res.schedule);
  return res;
}

// Greedy incremental link addition. Each step tries every (free outer UE,
// free relay) pair, re-evaluating the rates of the already active links under
// the added interference, and keeps the pair with the largest resulting
// weighted sum if it strictly beats the current one. Outer UEs with weight
// <= 0 are never candidates. Ties go to the smallest (i, j).
inline SolveResult solve_greedy(const ProblemInstance& inst) {
  const GainTable& g = inst.gains;
  const std::size_t no = inst.n_outer();
  const std::size_t ni = inst.n_inner();
  const std::vector<double> c2 = hop2_capacities(inst);
  std::vector<double> residual(ni);
  for (std::size_t j = 0; j < ni; ++j) residual[j] = c2[j] - inst.relay_traffic[j];

  SolveResult res;
  res.schedule = Schedule::none(no);
  std::vector<bool> relay_used(ni, false);
  std::vector<std::size_t> active;    // outer UEs in the schedule
  std::vector<double> received(ni, 0.0);  // total active power received at each relay

  auto own = [&](std::size_t k) { return g.p_outer[k] * g.h1(k, *res.schedule.assign[k]); };
  auto term = [&](std::size_t k, double extra) {
    const std::size_t j = *res.schedule.assign[k];
    const double s = own(k);
    const double c1 = std::log2(1.0 + s / (g.noise + (received[j] - s) + extra));
    return inst.weights[k] * feasible_rate(c1, c2[j], inst.relay_traffic[j]);
  };

  double current = 0.0;
  while (true) {
    current = 0.0;
    for (std::size_t k : active) current += term(k, 0.0);

    double best = current;
    std::optional<std::pair<std::size_t, std::size_t>> pick;
    for (std::size_t i = 0; i < no; ++i) {
      if (res.schedule.assign[i] || !(inst.weights[i] > 0.0)) continue;
      const double pi = g.p_outer[i];
      for (std::size_t j = 0; j < ni; ++j) {
        if (relay_used[j]) continue;
        ++res.searched;
        if (residual[j] <= 0.0) continue;  // the new link would carry nothing
        double v = inst.weights[i] *
                   feasible_rate(std::log2(1.0 + pi * g.h1(i, j) / (g.noise + received[j])), c2[j],
                                 inst.relay_traffic[j]);
        for (std::size_t k : active) {
          v += term(k, pi * g.h1(i, *res.schedule.assign[k]));
        }
        if (v > best) {
          best = v;
          pick = std::pair{i, j};
        }
      }
    }
    if (!pick) break;
    const auto [i, j] = *pick;
    res.schedule.assign[i] = j;
    relay_used[j] = true;
    active.push_back(i);
    for (std::size_t m = 0; m < ni; ++m) received[m] += g.p_outer[i] * g.h1(i, m);
    ++res.additions;
  }
  res.report = evaluate(inst, res.schedule);
  return res;
}

// Each outer UE in index order takes a uniformly random free relay, until
// relays run out.
inline SolveResult solve_random(const ProblemInstance& inst, Rng& rng) {
  SolveResult res;
  res.schedule = Schedule::none(inst.n_outer());
  std::vector<std::size_t> free(inst.n_inner());
  std::iota(free.begin(), free.end(), std::size_t{0});
  for (std::size_t i = 0; i < inst.n_outer() && !free.empty(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
    const std::size_t at = pick(rng);
    res.schedule.assign[i] = free[at];
    free.erase(free.begin() + static_cast<std::ptrdiff_t>(at));
  }
  res.searched = 1;
  res.report = evaluate(inst, res.schedule);
  return res;
}

// Each outer UE in index order takes the free relay with the strongest
// received power P_i h1(i, j); interference is ignored while choosing.
inline SolveResult solve_best_channel(const ProblemInstance& inst) {
  SolveResult res;
  res.schedule = Schedule::none(inst.n_outer());
  std::vector<bool> used(inst.n_inner(), false);
  for (std::size_t i = 0; i < inst.n_outer(); ++i) {
    std::optional<std::size_t> best;
    double best_power = -1.0;
    for (std::size_t j = 0; j < inst.n_inner(); ++j) {
      if (used[j]) continue;
      const double p = inst.gains.p_outer[i] * inst.gains.h1(i, j);
      if (p > best_power) {
        best_power = p;
        best = j;
      }
    }
    if (!best) break;
    res.schedule.assign[i] = best;
    used[*best] = true;
  }
  res.searched = 1;
  res.report = evaluate(inst, res.schedule);
  return res;
}

enum class SolverKind { Exhaustive, Greedy, Random, BestChannel };

inline constexpr std::string_view to_string(SolverKind k) {
  switch (k) {
    case SolverKind::Exhaustive: return "exhaustive";
    case SolverKind::Greedy: return "greedy";
    case SolverKind::Random: return "random";
    case SolverKind::BestChannel: return "best_channel";
  }
  return "?";
}

inline std::optional<SolverKind> parse_solver(std::string_view name) {
  for (SolverKind k : {SolverKind::Exhaustive, SolverKind::Greedy, SolverKind::Random,
                       SolverKind::BestChannel}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

inline SolveResult solve(SolverKind kind, const ProblemInstance& inst, std::size_t cap, Rng& rng) {
  switch (kind) {
    case SolverKind::Exhaustive: return solve_exhaustive(inst, cap, rng);
    case SolverKind::Greedy: return solve_greedy(inst);
    case SolverKind::Random: return solve_random(inst, rng);
    case SolverKind::BestChannel: return solve_best_channel(inst);
  }
  throw std::logic_error("unknown solver kind");
}

inline nlohmann::json to_json(const Schedule& s) {
  nlohmann::json out = nlohmann::json::array();
  for (const Relay& r : s.assign) out.push_back(r ? nlohmann::json(*r) : nlohmann::json(nullptr));
  return out;
}

inline nlohmann::json to_json(const RateReport& rep) {
  nlohmann::json c1 = nlohmann::json::array();
  for (std::size_t i = 0; i < rep.c1.rows(); ++i) {
    const auto row = rep.c1.row(i);
    c1.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"c1", std::move(c1)}, {"c2", rep.c2}, {"r1", rep.r1}, {"weighted_sum", rep.weighted_sum}};
}

inline nlohmann::json to_json(const SolveResult& r) {
  return {{"schedule", to_json(r.schedule)},
          {"report", to_json(r.report)},
          {"searched", r.searched},
          {"additions", r.additions},
          {"exhaustive_complete", r.exhaustive_complete}};
}

}  // namespace sidelink
