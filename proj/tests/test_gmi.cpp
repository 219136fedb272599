#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "shape4d/formats.hpp"
#include "shape4d/gmi.hpp"

using namespace shape4d;

namespace {

// LLR by direct summation in long double, no log-sum-exp.
std::vector<double> brute_llr(const LabeledConstellation& c, double sigma2, const double* y) {
  std::vector<long double> s0(c.bits(), 0.0L), s1(c.bits(), 0.0L);
  for (std::size_t j = 0; j < c.size(); ++j) {
    long double d2 = 0.0L;
    for (std::size_t d = 0; d < c.dims(); ++d) d2 += std::pow(static_cast<long double>(y[d]) - c.point(j)[d], 2);
    const long double p = std::exp(-d2 / (2.0L * sigma2));
    for (std::size_t k = 0; k < c.bits(); ++k) (c.bit(j, k) ? s1 : s0)[k] += p;
  }
  std::vector<double> out(c.bits());
  for (std::size_t k = 0; k < c.bits(); ++k) out[k] = static_cast<double>(std::log(s0[k] / s1[k]));
  return out;
}

// E_z[log2(1 + exp(-L(a + z)))] for z ~ N(0, s2), by the trapezoid rule.
template <class LossFn>
double expect_1d(double s2, LossFn&& loss) {
  const double s = std::sqrt(s2);
  const int n = 20001;
  const double lim = 12.0 * s, h = 2.0 * lim / (n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = -lim + i * h;
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc += w * std::exp(-z * z / (2 * s2)) * loss(z);
  }
  return acc * h / std::sqrt(2 * std::numbers::pi * s2);
}

double softplus_bits(double x) { return (x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x))) / std::numbers::ln2; }

}  // namespace

TEST(Awgn, SnrConvention) {
  EXPECT_DOUBLE_EQ(AwgnSpec::at_snr(0.0).noiseVariancePerRealDim, 0.5);
  EXPECT_NEAR(AwgnSpec::at_snr(10.0).noiseVariancePerRealDim, 0.05, 1e-15);
  EXPECT_NEAR(AwgnSpec::with_variance(0.05).snr_dB, 10.0, 1e-12);
}

TEST(Llr, BpskSymmetryAndClosedForm) {
  const LabeledConstellation bpsk(1, 1, {1.0, -1.0}, {0, 1});
  const auto spec = AwgnSpec::with_variance(0.5);
  const double y0[1] = {0.0}, y1[1] = {1.0};
  EXPECT_NEAR(awgn_llrs(bpsk, spec, y0, LlrMethod::exact).llrs[0], 0.0, 1e-15);
  const double l = awgn_llrs(bpsk, spec, y1, LlrMethod::exact).llrs[0];
  EXPECT_NEAR(l, 2.0 * 1.0 * 2.0 / (2.0 * 0.5), 1e-12);  // 2 y d / (2 sigma^2) with spacing d = 2
  EXPECT_NEAR(l, 4.0, 1e-12);
  EXPECT_NEAR(l, brute_llr(bpsk, 0.5, y1)[0], 1e-12);
}

TEST(Llr, MatchesBruteForceOnOs128) {
  const auto c = builtin("4d-os128");
  const double s2 = noise_variance_for_snr(8.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> y(4);
  for (int t = 0; t < 200; ++t) {
    for (double& v : y) v = g(rng);
    const auto got = awgn_llrs(c, AwgnSpec::with_variance(s2), y, LlrMethod::exact).llrs;
    const auto want = brute_llr(c, s2, y.data());
    for (std::size_t k = 0; k < 7; ++k) {
      if (std::abs(want[k]) < kLlrClamp) {
        EXPECT_NEAR(got[k], want[k], 1e-9 * std::max(1.0, std::abs(want[k])));
      }
    }
  }
}

TEST(Llr, ClampedAtHighSnr) {
  const LabeledConstellation bpsk(1, 1, {1.0, -1.0}, {0, 1});
  const double y[1] = {1.0};
  const auto b = awgn_llrs(bpsk, AwgnSpec::with_variance(1e-6), y, LlrMethod::exact);
  EXPECT_EQ(b.llrs[0], kLlrClamp);
  EXPECT_TRUE(std::isfinite(awgn_llrs(bpsk, AwgnSpec::with_variance(1e-6), y, LlrMethod::maxlog).llrs[0]));
}

TEST(Llr, Errors) {
  const auto c = builtin("pm-qpsk");
  const std::vector<double> y = {0.1, 0.2, 0.3};
  EXPECT_THROW((void)awgn_llrs(c, AwgnSpec::at_snr(10), y, LlrMethod::exact), std::invalid_argument);
  AwgnSpec zero;
  EXPECT_THROW((void)awgn_llrs(c, zero, std::vector<double>(4, 0.0), LlrMethod::exact), std::invalid_argument);
}

TEST(Llr, MaxlogSignAgreementAtHighSnr) {
  const auto c = builtin("4d-os128");
  const auto spec = AwgnSpec::at_snr(20.0);
  const auto batch = make_noise_batch(c.size(), 4, 20000, 11);
  std::vector<double> rx(batch.noise.size());
  const double s = std::sqrt(spec.noiseVariancePerRealDim);
  for (std::size_t i = 0; i < batch.size(); ++i)
    for (std::size_t d = 0; d < 4; ++d) rx[i * 4 + d] = c.point(batch.tx[i])[d] + s * batch.noise[i * 4 + d];
  const auto ex = awgn_llrs(c, spec, rx, LlrMethod::exact);
  const auto ml = awgn_llrs(c, spec, rx, LlrMethod::maxlog);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < ex.llrs.size(); ++i) agree += (ex.llrs[i] >= 0) == (ml.llrs[i] >= 0);
  EXPECT_GE(static_cast<double>(agree) / ex.llrs.size(), 0.9999);
}

TEST(Gmi, QpskErrorFreeRegime) {
  const auto r = gmi_mc(builtin("pm-qpsk"), AwgnSpec::at_snr(30.0), 20000, 1);
  EXPECT_NEAR(r.gmi_bits_per_sym, 4.0, 0.01);
}

TEST(Gmi, QpskMatchesScalarChannel) {
  // PM-QPSK is four independent BPSK channels with amplitude 1/sqrt(2).
  const auto c = builtin("pm-qpsk");
  for (double snr : {0.0, 5.0, 9.5}) {
    const double s2 = noise_variance_for_snr(snr);
    const double a = 1.0 / std::sqrt(2.0);
    const double loss = expect_1d(s2, [&](double z) { return softplus_bits(-2.0 * a * (a + z) / s2); });
    const double want = 4.0 * (1.0 - loss);
    const auto q = gmi_quadrature_2d(c, AwgnSpec::at_snr(snr), 256);
    EXPECT_NEAR(q.gmi_bits_per_sym, want, 1e-7) << snr;
    EXPECT_NEAR(gmi_quadrature_2d(c, AwgnSpec::at_snr(snr), 64).gmi_bits_per_sym, want, 1e-5) << snr;
    const auto mc = gmi_mc(c, AwgnSpec::at_snr(snr), 50000, 9);
    EXPECT_NEAR(mc.gmi_bits_per_sym, want, 3 * mc.gmiStdErr + 1e-3) << snr;
  }
}

TEST(Gmi, QuadratureConverges) {
  const auto c = builtin("pm-16qam");
  const auto a = gmi_quadrature_2d(c, AwgnSpec::at_snr(9.5), 64);
  const auto b = gmi_quadrature_2d(c, AwgnSpec::at_snr(9.5), 128);
  EXPECT_LT(std::abs(a.gmi_bits_per_sym - b.gmi_bits_per_sym), 1e-6);
}

TEST(Gmi, QuadratureAgreesWithMonteCarlo) {
  const auto c = builtin("pm-16qam");
  const auto q = gmi_quadrature_2d(c, AwgnSpec::at_snr(9.5), 64);
  const auto mc = gmi_mc(c, AwgnSpec::at_snr(9.5), 1000000, 21);
  EXPECT_LT(std::abs(q.gmi_bits_per_sym - mc.gmi_bits_per_sym), 0.01);
  EXPECT_LT(std::abs(q.gmi_bits_per_sym - mc.gmi_bits_per_sym), 3 * mc.gmiStdErr);
}

TEST(Gmi, QuadratureRejectsNonProduct) {
  EXPECT_THROW((void)gmi_quadrature_2d(builtin("4d-os128"), AwgnSpec::at_snr(9.5)), std::invalid_argument);
  EXPECT_THROW((void)gmi_quadrature_2d(builtin("128sp-16qam"), AwgnSpec::at_snr(9.5)), std::invalid_argument);
  EXPECT_EQ(factor_2d(builtin("pm-64qam")).size(), 2U);
}

TEST(Gmi, SignBitsOfPm16QamSeeScalarChannels) {
  // The sign bit of one dimension of Gray PM-16QAM has an LLR that depends on
  // that coordinate only; compare its MC rate with 1D integration.
  const auto c = builtin("pm-16qam");
  const double snr = 6.0, s2 = noise_variance_for_snr(snr);
  const double u = 1.0 / std::sqrt(10.0);
  const double levels[4] = {-3 * u, -u, u, 3 * u};
  auto llr_sign = [&](double y) {
    double p0 = 0, p1 = 0;
    for (double x : levels) (x < 0 ? p1 : p0) += std::exp(-(y - x) * (y - x) / (2 * s2));
    return std::log(p0 / p1);
  };
  double want = 0.0;
  for (double x : levels) {
    const double sgn = x < 0 ? 1.0 : -1.0;
    want += 0.25 * (1.0 - expect_1d(s2, [&](double z) { return softplus_bits(sgn * llr_sign(x + z)); }));
  }
  const auto batch = make_noise_batch(c.size(), 4, 200000, 5);
  std::vector<double> rx(batch.noise.size());
  std::vector<std::size_t> tx(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    tx[i] = batch.tx[i];
    for (std::size_t d = 0; d < 4; ++d) rx[i * 4 + d] = c.point(tx[i])[d] + std::sqrt(s2) * batch.noise[i * 4 + d];
  }
  const auto llrs = awgn_llrs(c, AwgnSpec::with_variance(s2), rx, LlrMethod::exact, tx);
  for (std::size_t k = 0; k < 4; ++k) {
    double sum = 0, sum2 = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double v = softplus_bits((llrs.txBits[i * 8 + k] ? 1.0 : -1.0) * llrs.llrs[i * 8 + k]);
      sum += v;
      sum2 += v * v;
    }
    const double n = static_cast<double>(batch.size());
    const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
    EXPECT_NEAR(1.0 - mean, want, 3 * se + 1e-4) << "bit " << k;
  }
}

TEST(Gmi, FromLlrsMatchesEstimator) {
  const auto c = builtin("4d-os128");
  const auto spec = AwgnSpec::at_snr(9.0);
  const auto batch = make_noise_batch(c.size(), 4, 8192, 2);
  std::vector<double> rx(batch.noise.size());
  std::vector<std::size_t> tx(batch.size());
  const double s = std::sqrt(spec.noiseVariancePerRealDim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    tx[i] = batch.tx[i];
    for (std::size_t d = 0; d < 4; ++d) rx[i * 4 + d] = c.point(tx[i])[d] + s * batch.noise[i * 4 + d];
  }
  const auto a = gmi_from_llrs(awgn_llrs(c, spec, rx, LlrMethod::exact, tx), 7.0);
  const auto b = evaluate_rates(c, spec, batch);
  EXPECT_NEAR(a.gmi_bits_per_sym, b.gmi_bits_per_sym, 1e-9);
}

TEST(Gmi, DeterministicAcrossWorkerCounts) {
  const auto c = builtin("4d-os128");
  set_thread_count(1);
  const auto a = gmi_mc(c, AwgnSpec::at_snr(9.5), 30000, 77);
  set_thread_count(3);
  const auto b = gmi_mc(c, AwgnSpec::at_snr(9.5), 30000, 77);
  set_thread_count(0);
  EXPECT_EQ(a.gmi_bits_per_sym, b.gmi_bits_per_sym);
  EXPECT_EQ(a.mi_bits_per_sym, b.mi_bits_per_sym);
  const auto c2 = gmi_mc(c, AwgnSpec::at_snr(9.5), 30000, 78);
  EXPECT_NE(a.gmi_bits_per_sym, c2.gmi_bits_per_sym);
}

TEST(Gmi, BitPermutationInvariance) {
  const auto c = builtin("4d-os128");
  const std::size_t perm[7] = {6, 2, 0, 5, 1, 3, 4};
  std::vector<Label> labels(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    Label l = 0;
    for (std::size_t k = 0; k < 7; ++k) l = (l << 1) | static_cast<Label>(c.bit(i, perm[k]));
    labels[i] = l;
  }
  const LabeledConstellation p(4, 7, {c.coordinates().begin(), c.coordinates().end()}, labels);
  const auto a = gmi_mc(c, AwgnSpec::at_snr(9.5), 20000, 4);
  const auto b = gmi_mc(p, AwgnSpec::at_snr(9.5), 20000, 4);
  EXPECT_NEAR(a.gmi_bits_per_sym, b.gmi_bits_per_sym, 1e-9);
}

TEST(Gmi, OrderingProperties) {
  for (auto name : kBuiltinNames) {
    const auto c = builtin(name);
    for (double snr : {4.0, 9.5, 14.0}) {
      const auto ex = gmi_mc(c, AwgnSpec::at_snr(snr), 8192, 12);
      const auto ml = gmi_mc(c, AwgnSpec::at_snr(snr), 8192, 12, LlrMethod::maxlog);
      EXPECT_GE(ex.mi_bits_per_sym, ex.gmi_bits_per_sym - 3 * ex.gapStdErr - 1e-9) << name << " " << snr;
      EXPECT_LE(ml.gmi_bits_per_sym, ex.gmi_bits_per_sym + 3 * ex.gmiStdErr) << name << " " << snr;
      EXPECT_GE(ex.gmi_bits_per_sym, -3 * ex.gmiStdErr);
      EXPECT_LE(ex.mi_bits_per_sym, static_cast<double>(c.bits()) + 3 * ex.miStdErr);
    }
  }
}

TEST(Gmi, GrayQpskHasNoBitMetricLoss) {
  for (double snr : {0.0, 6.0, 12.0}) {
    const auto r = mutual_information(builtin("pm-qpsk"), AwgnSpec::at_snr(snr), 20000, 3);
    EXPECT_LT(r.mi_bits_per_sym - r.gmi_bits_per_sym, 0.01) << snr;
  }
}

TEST(Gmi, ShapedInputUsesSourceEntropy) {
  // Nonuniform BPSK: prior term enters the LLR, rate is H(X) - loss.
  const LabeledConstellation bpsk(1, 1, {1.0, -1.0}, {0, 1});
  const std::vector<double> p = {0.8, 0.2};
  const auto r = gmi_mc(bpsk, AwgnSpec::with_variance(0.3, p), 50000, 8);
  const double h = -(0.8 * std::log2(0.8) + 0.2 * std::log2(0.2));
  EXPECT_LE(r.gmi_bits_per_sym, h);
  // For one bit, GMI equals MI; the estimators differ only in sampling the
  // source entropy.
  const double se_h = std::sqrt(0.8 * 0.2 / 50000.0) * std::log2(4.0);
  EXPECT_NEAR(r.gmi_bits_per_sym, r.mi_bits_per_sym, 3 * se_h);
  EXPECT_THROW((void)gmi_mc(bpsk, AwgnSpec::with_variance(0.3, {0.5, 0.6}), 1000, 1), std::invalid_argument);
}

TEST(Gmi, SnrAtRateBisection) {
  const double snr = snr_at_rate([](double s) { return s / 2.0; }, 3.0, 0.0, 10.0, 1e-6);
  EXPECT_NEAR(snr, 6.0, 1e-6);
  EXPECT_THROW((void)snr_at_rate([](double s) { return s; }, 30.0, 0.0, 10.0), std::domain_error);
}

TEST(GaussHermite, IntegratesPolynomialsExactly) {
  const auto gh = gauss_hermite(10);
  double m0 = 0, m2 = 0, m4 = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    m0 += gh.weights[i];
    m2 += gh.weights[i] * gh.nodes[i] * gh.nodes[i];
    m4 += gh.weights[i] * std::pow(gh.nodes[i], 4);
  }
  EXPECT_NEAR(m0, std::sqrt(std::numbers::pi), 1e-12);
  EXPECT_NEAR(m2, std::sqrt(std::numbers::pi) / 2, 1e-12);
  EXPECT_NEAR(m4, 3 * std::sqrt(std::numbers::pi) / 4, 1e-12);
}
