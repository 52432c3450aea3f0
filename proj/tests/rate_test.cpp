#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sidelink/model.hpp"
#include "sidelink/rate.hpp"

using namespace sidelink;

namespace {

// n_o x n_i instance with every gain equal to `h1`, h2, unit powers and noise.
ProblemInstance flat(std::size_t no, std::size_t ni, double h1, double h2 = 1.0,
                     double relay = 0.0) {
  ProblemInstance inst;
  inst.gains.h1 = Matrix(no, ni, h1);
  inst.gains.h2.assign(ni, h2);
  inst.gains.p_outer.assign(no, 1.0);
  inst.gains.p_inner.assign(ni, 1.0);
  inst.gains.noise = 1.0;
  inst.relay_traffic.assign(ni, relay);
  inst.weights.assign(no, 1.0);
  inst.gnb_of.assign(ni, 0);
  return inst;
}

Schedule random_schedule(std::size_t no, std::size_t ni, Rng& rng) {
  Schedule s = Schedule::none(no);
  std::vector<bool> used(ni, false);
  std::uniform_int_distribution<std::size_t> pick(0, ni);
  for (auto& r : s.assign) {
    const std::size_t j = pick(rng);
    if (j < ni && !used[j]) {
      used[j] = true;
      r = j;
    }
  }
  return s;
}

ProblemInstance random_instance(std::size_t n, Rng& rng, double r_max = 0.0) {
  ModelConfig cfg;
  cfg.n_outer = n;
  cfg.n_inner = n;
  cfg.r_max = r_max;
  std::uniform_real_distribution<double> alpha(2.0, 4.0);
  cfg.alpha = alpha(rng);
  ProblemInstance inst = gen_instance(cfg, rng);
  std::uniform_real_distribution<double> w(0.5, 3.0);
  for (double& x : inst.weights) x = w(rng);
  return inst;
}

}  // namespace

TEST(Hop1, SingleActiveLink) {
  const ProblemInstance inst = flat(1, 1, 0.25);
  const Matrix c1 = hop1_capacities(inst, Schedule{{0}});
  EXPECT_NEAR(c1(0, 0), 0.321928094887362, 1e-9);
  EXPECT_NEAR(c1(0, 0), std::log2(1.25), 1e-15);
}

TEST(Hop1, InactiveUeHasZeroCapacity) {
  const ProblemInstance inst = flat(2, 3, 0.7);
  const Matrix c1 = hop1_capacities(inst, Schedule{{std::nullopt, 1}});
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(c1(0, j), 0.0);
}

TEST(Hop1, TwoMutuallyInterferingLinks) {
  const ProblemInstance inst = flat(2, 2, 0.25);
  const Matrix c1 = hop1_capacities(inst, Schedule{{0, 1}});
  EXPECT_NEAR(c1(0, 0), std::log2(1.2), 1e-12);
  EXPECT_NEAR(c1(1, 1), 0.263034405833794, 1e-9);
}

TEST(Hop1, InterferenceCountsUesOnOtherRelays) {
  ProblemInstance inst = flat(3, 3, 0.1);
  inst.gains.h1(0, 0) = 1.0;
  inst.gains.h1(2, 0) = 0.5;  // UE 2 is served by relay 2 but still hits relay 0
  const Matrix c1 = hop1_capacities(inst, Schedule{{0, std::nullopt, 2}});
  EXPECT_NEAR(c1(0, 0), std::log2(1.0 + 1.0 / 1.5), 1e-14);
}

TEST(Hop2, Examples) {
  EXPECT_DOUBLE_EQ(hop2_capacity(1.0, 1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(hop2_capacity(3.0, 1.0, 1.0), 2.0);
  EXPECT_NEAR(hop2_capacity(1.0, 1e-300, 1.0), 0.0, 1e-12);
  const ProblemInstance inst = flat(1, 2, 0.5, 1.0);
  EXPECT_EQ(hop2_capacities(inst), (std::vector<double>{1.0, 1.0}));
}

TEST(FeasibleRate, Examples) {
  EXPECT_DOUBLE_EQ(feasible_rate(2.0, 3.0, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(feasible_rate(2.0, 1.0, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(feasible_rate(2.0, 0.3, 0.5), 0.0);
}

TEST(Evaluate, EmptySchedule) {
  const ProblemInstance inst = flat(3, 3, 0.5);
  const RateReport rep = evaluate(inst, Schedule::none(3));
  EXPECT_EQ(rep.weighted_sum, 0.0);
  EXPECT_EQ(rep.r1, (std::vector<double>{0, 0, 0}));
}

TEST(Evaluate, SingleLinkComposition) {
  const ProblemInstance inst = flat(1, 1, 0.25, 1.0);
  const RateReport rep = evaluate(inst, Schedule{{0}});
  EXPECT_NEAR(rep.weighted_sum, std::min(std::log2(1.25), 1.0), 1e-15);
  EXPECT_NEAR(rep.weighted_sum, 0.321928094887362, 1e-9);
}

TEST(Evaluate, ZeroRateLinkStillInterferes) {
  ProblemInstance inst = flat(2, 2, 0.25, 1.0);
  inst.relay_traffic[1] = 5.0;  // relay 1 is over capacity
  const RateReport rep = evaluate(inst, Schedule{{0, 1}});
  EXPECT_EQ(rep.r1[1], 0.0);
  EXPECT_NEAR(rep.r1[0], std::log2(1.2), 1e-15);
}

TEST(Evaluate, RejectsBadSchedules) {
  const ProblemInstance inst = flat(2, 2, 0.25);
  EXPECT_THROW(evaluate(inst, Schedule{{0}}), std::invalid_argument);
  EXPECT_THROW(evaluate(inst, Schedule{{1, 1}}), std::invalid_argument);
  EXPECT_THROW(evaluate(inst, Schedule{{0, 2}}), std::invalid_argument);
}

TEST(Evaluate, MatchesIndependentRecomposition) {
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const ProblemInstance inst = random_instance(1 + trial % 7, rng, 2.0);
    const Schedule s = random_schedule(inst.n_outer(), inst.n_inner(), rng);
    const RateReport rep = evaluate(inst, s);
    EXPECT_NEAR(rep.weighted_sum, oracle::objective(inst, s.assign), 1e-9);
    EXPECT_NEAR(weighted_sum_rate(inst, s, rep.c2), rep.weighted_sum, 1e-12);
    double recomposed = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s.assign[i]) continue;
      const std::size_t j = *s.assign[i];
      recomposed += inst.weights[i] * feasible_rate(rep.c1(i, j), rep.c2[j], inst.relay_traffic[j]);
    }
    EXPECT_NEAR(rep.weighted_sum, recomposed, 1e-12);
  }
}

TEST(Evaluate, ConstraintsHoldPostHoc) {
  Rng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const ProblemInstance inst = random_instance(1 + trial % 8, rng, 3.0);
    const Schedule s = random_schedule(inst.n_outer(), inst.n_inner(), rng);
    ASSERT_TRUE(s.is_valid(inst.n_inner()));
    const RateReport rep = evaluate(inst, s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      ASSERT_TRUE(std::isfinite(rep.r1[i]));
      ASSERT_GE(rep.r1[i], 0.0);
      if (!s.assign[i]) {
        ASSERT_EQ(rep.r1[i], 0.0);
        continue;
      }
      const std::size_t j = *s.assign[i];
      ASSERT_LE(rep.r1[i], rep.c1(i, j) + 1e-12);
      // C2 only binds when the relay has spare capacity; otherwise r1 is clipped to 0.
      if (rep.c2[j] >= inst.relay_traffic[j]) {
        ASSERT_LE(rep.r1[i] + inst.relay_traffic[j], rep.c2[j] + 1e-12);
      }
    }
  }
}

TEST(Evaluate, DeactivationNeverHurtsOthers) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const ProblemInstance inst = random_instance(2 + trial % 6, rng);
    const Schedule s = random_schedule(inst.n_outer(), inst.n_inner(), rng);
    const Matrix before = hop1_capacities(inst, s);
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (!s.assign[k]) continue;
      Schedule t = s;
      t.assign[k].reset();
      const Matrix after = hop1_capacities(inst, t);
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i == k || !t.assign[i]) continue;
        for (std::size_t j = 0; j < inst.n_inner(); ++j) ASSERT_GE(after(i, j), before(i, j));
      }
    }
  }
}

TEST(Evaluate, ObjectiveIsLinearInWeights) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    ProblemInstance inst = random_instance(1 + trial % 5, rng, 1.0);
    const Schedule s = random_schedule(inst.n_outer(), inst.n_inner(), rng);
    const double base = evaluate(inst, s).weighted_sum;
    const double lambda = 0.25 + 0.5 * (trial % 7);
    for (double& w : inst.weights) w *= lambda;
    EXPECT_NEAR(evaluate(inst, s).weighted_sum, lambda * base, 1e-12 * (1.0 + lambda * base));
  }
}

TEST(ScheduleOrder, NoneSortsFirst) {
  const Schedule a{{std::nullopt, 1}};
  const Schedule b{{0, std::nullopt}};
  const Schedule c{{0, 1}};
  EXPECT_LT(a, b);
  EXPECT_LT(b, c);
  EXPECT_EQ(c.active_count(), 2u);
}
