#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sidelink/model.hpp"
#include "sidelink/sched.hpp"
#include "sidelink/solvers.hpp"

using namespace sidelink;

namespace {

ProblemInstance flat(std::size_t no, std::size_t ni, double h) {
  ProblemInstance inst;
  inst.gains.h1 = Matrix(no, ni, h);
  inst.gains.h2.assign(ni, 1000.0);
  inst.gains.p_outer.assign(no, 1.0);
  inst.gains.p_inner.assign(ni, 1.0);
  inst.gains.noise = 1.0;
  inst.relay_traffic.assign(ni, 0.0);
  inst.weights.assign(no, 1.0);
  inst.gnb_of.assign(ni, 0);
  return inst;
}

ProblemInstance random_instance(std::size_t n, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.n_outer = n;
  cfg.n_inner = n;
  Rng rng(seed);
  return gen_instance(cfg, rng);
}

FairPolicy queue_policy(std::size_t n, double total, std::uint64_t seed) {
  Rng rng(seed);
  return {PolicyKind::Queue, draw_arrival_rates(n, total, rng)};
}

}  // namespace

TEST(WeightRules, WaitTime) {
  EXPECT_EQ(update_weight_wait(3.0, false), 4.0);
  EXPECT_EQ(update_weight_wait(1.0, true), 1.0);
  EXPECT_EQ(update_weight_wait(5.0, true), 4.0);
}

TEST(WeightRules, Queue) {
  EXPECT_DOUBLE_EQ(update_weight_queue(2.0, 0.3, false, 0.0), 2.3);
  EXPECT_EQ(update_weight_queue(0.4, 0.3, true, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(update_weight_queue(2.0, 0.3, true, 1.0), 1.3);
}

TEST(Policy, NamesRoundTrip) {
  for (PolicyKind k : {PolicyKind::GreedyStatic, PolicyKind::WaitTime, PolicyKind::Queue}) {
    EXPECT_EQ(parse_policy(to_string(k)), k);
  }
  EXPECT_FALSE(parse_policy("ROUND_ROBIN"));
  FairPolicy p{PolicyKind::Queue, {0.1}};
  EXPECT_THROW(p.validate(2), std::invalid_argument);
}

TEST(Policy, ArrivalRatesAreBoundedAndAverageToTotal) {
  Rng rng(4);
  double sum = 0.0;
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    for (double l : draw_arrival_rates(8, 0.5, rng)) {
      EXPECT_GE(l, 0.0);
      EXPECT_LE(l, 2.0 * 0.5 / 8.0);
      sum += l;
    }
  }
  EXPECT_NEAR(sum / reps, 0.5, 0.01);
}

TEST(Episode, SingleUeIsAlwaysServed) {
  const ProblemInstance inst = random_instance(1, 3);
  for (PolicyKind k : {PolicyKind::GreedyStatic, PolicyKind::WaitTime}) {
    Rng rng(1);
    const EpisodeMetrics m = run_episode(inst, {k, {}}, 50, rng);
    EXPECT_EQ(m.admission_ratio, (std::vector<double>{1.0}));
    EXPECT_EQ(m.mean_admission, 1.0);
    EXPECT_EQ(m.var_admission, 0.0);
    EXPECT_EQ(m.max_wait, 1u);
    EXPECT_FALSE(m.avg_delay);
  }
}

TEST(Episode, WaitTimeAlternatesSymmetricUes) {
  const ProblemInstance inst = flat(2, 1, 0.5);
  Rng rng(1);
  std::vector<TraceRow> trace;
  const Episode ep = run_episode_full(inst, {PolicyKind::WaitTime, {}}, 6, rng, &trace);
  EXPECT_EQ(ep.metrics.admission_ratio, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(ep.state.activation_history[0], (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_EQ(ep.state.activation_history[1], (std::vector<std::size_t>{1, 3, 5}));
  EXPECT_EQ(ep.metrics.max_wait, 2u);
}

TEST(Episode, GreedyStaticNeverServesWeakUe) {
  // UE 2 sits far from both relays; the static greedy fills them with UEs 0 and 1.
  ProblemInstance inst = flat(3, 2, 0.01);
  inst.gains.h1(0, 0) = 4.0;
  inst.gains.h1(1, 1) = 4.0;
  inst.gains.h1(2, 0) = 0.02;
  inst.gains.h1(2, 1) = 0.02;
  Rng rng(1);
  const EpisodeMetrics m = run_episode(inst, {PolicyKind::GreedyStatic, {}}, 20, rng);
  EXPECT_EQ(m.admission_ratio, (std::vector<double>{1.0, 1.0, 0.0}));

  // The wait-time policy eventually lets it in.
  Rng rng2(1);
  const EpisodeMetrics w = run_episode(inst, {PolicyKind::WaitTime, {}}, 200, rng2);
  EXPECT_GT(w.admission_ratio[2], 0.0);
}

TEST(Episode, GreedyStaticRepeatsTheGreedySchedule) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ProblemInstance inst = random_instance(5, seed);
    const Schedule expect = solve_greedy(inst).schedule;
    Rng rng(seed);
    std::vector<TraceRow> trace;
    run_episode_full(inst, {PolicyKind::GreedyStatic, {}}, 8, rng, &trace);
    for (const TraceRow& row : trace) {
      EXPECT_EQ(row.activated, expect.assign[row.ue].has_value());
      EXPECT_EQ(row.weight, 1.0);
    }
  }
}

TEST(Metrics, AdmissionStats) {
  EXPECT_EQ(admission_stats({{0, 1, 2, 3}}, 4), (std::pair{1.0, 0.0}));
  EXPECT_EQ(admission_stats({{0, 1, 2, 3}, {}}, 4), (std::pair{0.5, 0.25}));
  EXPECT_EQ(admission_stats({{0, 2}, {1, 3}}, 4), (std::pair{0.5, 0.0}));
  EXPECT_THROW(admission_stats({}, 4), std::invalid_argument);
}

TEST(Metrics, MaxWait) {
  EXPECT_EQ(max_wait({{0, 1, 2, 3, 4}}, 5), 1u);
  EXPECT_EQ(max_wait({{0, 4}}, 10), 6u);
  EXPECT_EQ(max_wait({{3}, {0, 1}}, 5), 4u);
  EXPECT_FALSE(max_wait({{}, {}}, 10));
}

TEST(Metrics, AvgDelay) {
  EpisodeState st;
  const FairPolicy q{PolicyKind::Queue, {}};
  EXPECT_EQ(avg_delay(st, q, 10), 0.0);
  st.queue_area = 20.0;
  st.arrivals = 5.0;
  EXPECT_DOUBLE_EQ(avg_delay(st, q, 10), 4.0);
  EXPECT_THROW(avg_delay(st, {PolicyKind::WaitTime, {}}, 10), std::invalid_argument);
  EXPECT_THROW(avg_delay(st, {PolicyKind::GreedyStatic, {}}, 10), std::invalid_argument);
}

TEST(Metrics, LittleDelayMatchesFifoOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 2 + seed % 5;
    const ProblemInstance inst = random_instance(n, seed);
    const FairPolicy p = queue_policy(n, seed % 2 ? 0.5 : 1.5, seed);
    Rng rng(seed);
    const Episode ep = run_episode_full(inst, p, 300, rng);
    const double fifo = oracle::fifo_fluid_delay(ep.state.packet_log, 300);
    ASSERT_TRUE(ep.metrics.avg_delay);
    EXPECT_NEAR(*ep.metrics.avg_delay, fifo, 0.15 * fifo + 1e-12) << "seed " << seed;
  }
}

TEST(Invariants, WeightFloorsHoldEverySlot) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ProblemInstance inst = random_instance(6, seed);
    Rng a(seed), b(seed);
    std::vector<TraceRow> trace;
    run_episode_full(inst, {PolicyKind::WaitTime, {}}, 100, a, &trace);
    for (const TraceRow& r : trace) ASSERT_GE(r.weight, 1.0);
    trace.clear();
    run_episode_full(inst, queue_policy(6, 2.0, seed), 100, b, &trace);
    for (const TraceRow& r : trace) {
      ASSERT_GE(r.weight, 0.0);
      ASSERT_GE(r.queue, 0.0);
    }
  }
}

TEST(Invariants, QueueConservation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ProblemInstance inst = random_instance(5, seed);
    Rng rng(seed);
    const Episode ep = run_episode_full(inst, queue_policy(5, 1.0, seed), 250, rng);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_NEAR(ep.state.arrived_total[i] - ep.state.served_total[i], ep.state.queues[i], 1e-9);
      EXPECT_EQ(ep.state.weights[i], ep.state.queues[i]);
    }
  }
}

TEST(Invariants, WaitTimeIsStarvationFree) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ProblemInstance inst = random_instance(6, 50 + seed);
    Rng rng(seed);
    const EpisodeMetrics m = run_episode(inst, {PolicyKind::WaitTime, {}}, 300, rng);
    for (double r : m.admission_ratio) EXPECT_GT(r, 0.0) << "seed " << seed;
  }
}

TEST(Invariants, SumRateMatchesTrace) {
  const ProblemInstance inst = random_instance(4, 8);
  Rng rng(2);
  std::vector<TraceRow> trace;
  const Episode ep = run_episode_full(inst, {PolicyKind::WaitTime, {}}, 40, rng, &trace);
  double total = 0.0;
  for (const TraceRow& r : trace) total += r.activated ? r.rate : 0.0;
  EXPECT_NEAR(ep.metrics.sum_rate_time_avg, total / 40.0, 1e-12);
}

TEST(Trace, CsvHeaderAndRows) {
  std::ostringstream os;
  write_trace_csv(os, {{0, 1, true, 0.5, 2.0, 1.25}});
  EXPECT_EQ(os.str(), "slot,ue,activated,rate,weight,queue\n0,1,1,0.5,2,1.25\n");
}

TEST(Episode, RejectsZeroSlots) {
  const ProblemInstance inst = random_instance(2, 1);
  Rng rng(1);
  EXPECT_THROW(run_episode(inst, {PolicyKind::WaitTime, {}}, 0, rng), std::invalid_argument);
}
