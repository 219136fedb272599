#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <numeric>
#include <vector>

#include "shape4d/formats.hpp"
#include "shape4d/optimizer.hpp"

using namespace shape4d;

namespace {

OptimizerConfig fast_config() {
  OptimizerConfig cfg;
  cfg.mcSamplesPerEval = 4000;
  cfg.validationSamples = 20000;
  cfg.maxIterations = 6;
  return cfg;
}

LabeledConstellation relabel(const LabeledConstellation& c, std::vector<Label> labels) {
  return {c.dims(), c.bits(), {c.coordinates().begin(), c.coordinates().end()}, std::move(labels)};
}

bool same_points(const LabeledConstellation& a, const LabeledConstellation& b) {
  return std::equal(a.coordinates().begin(), a.coordinates().end(), b.coordinates().begin(), b.coordinates().end());
}

}  // namespace

TEST(LabelSwitchEvaluator, DeltaMatchesFullRecompute) {
  const auto c = builtin("4d-os128");
  const auto spec = AwgnSpec::at_snr(9.5);
  const auto batch = make_noise_batch(c.size(), 4, 8192, 5);
  LabelSwitchEvaluator ev(c, spec, batch);
  EXPECT_NEAR(ev.gmi(), evaluate_rates(c, spec, batch).gmi_bits_per_sym, 1e-9);
  const std::vector<std::pair<std::size_t, std::size_t>> swaps = {{3, 77}, {10, 11}, {0, 127}};
  std::vector<Label> labels(c.labels().begin(), c.labels().end());
  for (auto [a, b] : swaps) std::swap(labels[a], labels[b]);
  const double full = evaluate_rates(relabel(c, labels), spec, batch).gmi_bits_per_sym;
  const double before = ev.gmi();
  EXPECT_NEAR(ev.delta(swaps), full - before, 1e-9);
  EXPECT_NEAR(ev.gmi(), before, 1e-12);
  ev.apply(swaps);
  EXPECT_NEAR(ev.gmi(), full, 1e-9);
  EXPECT_TRUE(std::equal(labels.begin(), labels.end(), ev.labels().begin()));
}

TEST(BinarySwitching, GrayQpskIsLeftAlone) {
  const auto c = builtin("pm-qpsk");
  const auto r = binary_switching(c, AwgnSpec::at_snr(9.5), fast_config());
  ASSERT_EQ(r.trace.rows.size(), 1U);
  EXPECT_EQ(r.trace.rows[0].accepted, 0U);
  EXPECT_TRUE(std::equal(c.labels().begin(), c.labels().end(), r.constellation.labels().begin()));
}

TEST(BinarySwitching, QpskReachesBestOfAllLabelings) {
  const auto qpsk = builtin("qpsk");
  const auto spec = AwgnSpec::at_snr(10.0);
  const auto oracle_batch = make_noise_batch(4, 2, 100000, 99);
  std::array<Label, 4> perm = {0, 1, 2, 3};
  double best = -1.0;
  std::vector<std::array<Label, 4>> all;
  do {
    all.push_back(perm);
    const auto c = relabel(qpsk, {perm.begin(), perm.end()});
    best = std::max(best, evaluate_rates(c, spec, oracle_batch).gmi_bits_per_sym);
  } while (std::next_permutation(perm.begin(), perm.end()));
  ASSERT_EQ(all.size(), 24U);
  for (const auto& start : all) {
    const auto r = binary_switching(relabel(qpsk, {start.begin(), start.end()}), spec, fast_config());
    const auto got = evaluate_rates(r.constellation, spec, oracle_batch);
    EXPECT_NEAR(got.gmi_bits_per_sym, best, 1e-9);
    EXPECT_LT(got.mi_bits_per_sym - got.gmi_bits_per_sym, 0.01);
    EXPECT_TRUE(same_points(r.constellation, qpsk));
  }
}

TEST(BinarySwitching, ImprovesNaturalLatticeLabeling) {
  auto cfg = fast_config();
  cfg.maxIterations = 1;
  const auto c = builtin("l4-128");
  const auto r = binary_switching(c, AwgnSpec::at_snr(9.5), cfg);
  EXPECT_GT(r.trace.finalGmi, r.trace.initialGmi);
  EXPECT_GT(r.trace.rows[0].accepted, 0U);
  EXPECT_TRUE(same_points(r.constellation, c));
}

TEST(OptimizeOs, ImprovesPerturbedSixteenQam) {
  // A squeezed 16QAM seed; the optimizer should recover most of the gap.
  const auto seed = qam16_seed().with_points({2.0, 2.0, 0.3, 2.0, 0.3, 0.3, 2.0, 0.3});
  const auto spec = AwgnSpec::at_snr(12.0);
  auto cfg = fast_config();
  cfg.maxIterations = 8;
  const auto r = optimize_os(seed, spec, cfg);
  EXPECT_GT(r.trace.finalGmi, r.trace.initialGmi + 0.02);
  const auto& fc = r.trace.finalConstellation;
  EXPECT_NEAR(fc.mean_energy(), cfg.powerConstraint, 1e-9 * cfg.powerConstraint);
  EXPECT_TRUE(is_orthant_symmetric(fc));
  ASSERT_TRUE(r.trace.finalSeed.has_value());
  EXPECT_EQ(r.trace.rows.size(), 8U);
}

TEST(OptimizeOs, DeterministicTrace) {
  const auto seed = qam16_seed();
  auto cfg = fast_config();
  cfg.maxIterations = 3;
  const auto a = optimize_os(seed, AwgnSpec::at_snr(10.0), cfg);
  const auto b = optimize_os(seed, AwgnSpec::at_snr(10.0), cfg);
  ASSERT_EQ(a.trace.rows.size(), b.trace.rows.size());
  for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
    EXPECT_EQ(a.trace.rows[i].gmi, b.trace.rows[i].gmi);
    EXPECT_EQ(a.trace.rows[i].accepted, b.trace.rows[i].accepted);
  }
  EXPECT_TRUE(std::equal(a.seed.coordinates().begin(), a.seed.coordinates().end(), b.seed.coordinates().begin()));
}

TEST(OptimizeOs, FloorIsRecordedAndRespected) {
  const auto seed = qam16_seed().with_points({3.0, 3.0, 1e-6, 3.0, 1.0, 1.0, 3.0, 1.0});
  auto cfg = fast_config();
  cfg.maxIterations = 2;
  const auto r = optimize_os(seed, AwgnSpec::at_snr(10.0), cfg);
  EXPECT_GT(r.trace.floorHits, 0U);
  const double floor = 1e-4 * std::sqrt(cfg.powerConstraint / 2.0);
  for (double v : r.seed.coordinates()) EXPECT_GE(v, floor * (1 - 1e-12));
}

TEST(OptimizeOs, FinalNotWorseThanStart) {
  auto cfg = fast_config();
  cfg.maxIterations = 2;
  const auto seed = extract_first_orthant(builtin("pm-16qam")).seed.value();
  const auto r = optimize_os(seed, AwgnSpec::at_snr(9.5), cfg);
  EXPECT_GE(r.trace.finalGmi, r.trace.initialGmi);
  EXPECT_TRUE(is_orthant_symmetric(r.trace.finalConstellation));
}

TEST(OptimizeUnconstrained, LabelsTravelWithPoints) {
  auto cfg = fast_config();
  cfg.maxIterations = 40;
  const auto c = builtin("16qam");
  const auto r = optimize_unconstrained(c, AwgnSpec::at_snr(10.0), cfg);
  EXPECT_TRUE(std::equal(c.labels().begin(), c.labels().end(), r.constellation.labels().begin()));
  EXPECT_NEAR(r.constellation.mean_energy(), 2.0, 1e-9);
  EXPECT_GE(r.trace.finalGmi, r.trace.initialGmi);
}

TEST(OptimizeUnconstrained, NothingToGainAtHighSnr) {
  auto cfg = fast_config();
  cfg.maxIterations = 40;
  const auto r = optimize_unconstrained(builtin("pm-qpsk"), AwgnSpec::at_snr(30.0), cfg);
  EXPECT_LT(r.trace.finalGmi - r.trace.initialGmi, 0.005);
  EXPECT_GE(r.trace.finalGmi, r.trace.initialGmi);
}

TEST(OptimizerConfig, RejectsBadSchedules) {
  auto cfg = fast_config();
  cfg.initialStep = 0.0;
  EXPECT_THROW((void)optimize_os(qam16_seed(), AwgnSpec::at_snr(10.0), cfg), std::invalid_argument);
  cfg = fast_config();
  cfg.convergenceTol = -1.0;
  EXPECT_THROW((void)binary_switching(builtin("qpsk"), AwgnSpec::at_snr(10.0), cfg), std::invalid_argument);
  cfg = fast_config();
  cfg.stepDecay = 1.5;
  EXPECT_THROW((void)optimize_unconstrained(builtin("qpsk"), AwgnSpec::at_snr(10.0), cfg), std::invalid_argument);
}

TEST(GmiGradient, MatchesCentralDifferences) {
  const auto c = builtin("16qam");
  const auto spec = AwgnSpec::at_snr(8.0);
  const auto batch = make_noise_batch(c.size(), c.dims(), 3000, 11);
  const auto g = gmi_gradient(c, spec, batch);
  ASSERT_EQ(g.size(), c.coordinates().size());
  const std::vector<Label> labels(c.labels().begin(), c.labels().end());
  const double h = 1e-5;
  for (std::size_t i = 0; i < g.size(); i += 3) {
    std::vector<double> p(c.coordinates().begin(), c.coordinates().end());
    p[i] += h;
    const double up = evaluate_rates(LabeledConstellation(c.dims(), c.bits(), p, labels), spec, batch).gmi_bits_per_sym;
    p[i] -= 2 * h;
    const double dn = evaluate_rates(LabeledConstellation(c.dims(), c.bits(), p, labels), spec, batch).gmi_bits_per_sym;
    EXPECT_NEAR(g[i], (up - dn) / (2 * h), 1e-6 * std::max(1.0, std::abs(g[i]))) << i;
  }
}
