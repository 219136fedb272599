#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "shape4d/formats.hpp"
#include "shape4d/metrics.hpp"

using namespace shape4d;

namespace {

std::uint64_t total_pairs(const SedSpectrum& s) {
  std::uint64_t n = 0;
  for (const auto& b : s.bins) n += b.totalPairs;
  return n;
}

LabeledConstellation scaled(const LabeledConstellation& c, double s) {
  std::vector<double> pts(c.coordinates().begin(), c.coordinates().end());
  for (double& v : pts) v *= s;
  return {c.dims(), c.bits(), pts, {c.labels().begin(), c.labels().end()}};
}

}  // namespace

TEST(EnergyProfile, Os128FromCoordinates) {
  // Seed energies from the published alphabet; each seed point is mirrored
  // 16 times, so the profile is the seed's profile.
  const auto t = kOs128Alphabet;
  const double raw[3] = {2 * t[2] * t[2] + 2 * t[0] * t[0], t[1] * t[1] + t[4] * t[4] + 2 * t[2] * t[2],
                         2 * t[3] * t[3] + 2 * t[2] * t[2]};
  const double mean = (raw[0] + 2 * raw[1] + raw[2]) / 4.0;
  const double e[3] = {raw[0] * 2 / mean, raw[1] * 2 / mean, raw[2] * 2 / mean};
  EXPECT_NEAR(e[0], 0.613, 1e-3);
  EXPECT_NEAR(e[1], 2.147, 1e-3);
  EXPECT_NEAR(e[2], 3.093, 1e-3);
  const double var = (std::pow(e[0] - 2, 2) + 2 * std::pow(e[1] - 2, 2) + std::pow(e[2] - 2, 2)) / 4.0;

  const auto p = energy_profile(builtin("4d-os128"), 1e-3);
  EXPECT_NEAR(p.papr_dB, 10 * std::log10(e[2] / 2.0), 1e-9);
  EXPECT_NEAR(p.papr_dB, 1.89, 0.01);
  EXPECT_NEAR(p.variance, var, 1e-9);
  // The rounded published coordinates give 0.7906; the published summary
  // value 0.797 is met at the 0.01 tolerance only.
  EXPECT_NEAR(p.variance, 0.797, 0.01);
  ASSERT_EQ(p.levels.size(), 3U);
  EXPECT_EQ(p.levels[0].multiplicity, 32U);
  EXPECT_EQ(p.levels[1].multiplicity, 64U);
  EXPECT_EQ(p.levels[2].multiplicity, 32U);
}

TEST(EnergyProfile, PublishedTableValues) {
  struct Row {
    const char* name;
    double papr, var;
    std::size_t levels;
  };
  for (const Row& r : {Row{"128sp-16qam", 2.55, 0.645, 5}, Row{"7b4d-2a8psk", 0.0, 0.0, 1}, Row{"pm-16qam", 2.55, 0.643, 5},
                       Row{"pm-qpsk", 0.0, 0.0, 1}}) {
    const auto p = energy_profile(builtin(r.name), 1e-3);
    EXPECT_NEAR(p.papr_dB, r.papr, 0.01) << r.name;
    EXPECT_NEAR(p.variance, r.var, 0.005) << r.name;
    EXPECT_EQ(p.levels.size(), r.levels) << r.name;
  }
}

TEST(EnergyProfile, Invariants) {
  for (auto name : kBuiltinNames) {
    const auto c = builtin(name);
    const auto p = energy_profile(c);
    const double mean = std::accumulate(p.symbolEnergies.begin(), p.symbolEnergies.end(), 0.0) / c.size();
    EXPECT_NEAR(mean, c.mean_energy(), 1e-9 * mean) << name;
    EXPECT_GE(p.papr_dB, 0.0);
    EXPECT_GE(p.variance, 0.0);
    EXPECT_EQ(p.variance == 0.0, p.levels.size() == 1) << name;
    std::size_t total = 0;
    for (const auto& l : p.levels) total += l.multiplicity;
    EXPECT_EQ(total, c.size());
  }
}

TEST(EnergyProfile, ScaleInvariance) {
  const auto c = builtin("128sp-16qam");
  const auto a = energy_profile(c);
  const auto b = energy_profile(scaled(c, 1.7));
  EXPECT_NEAR(a.papr_dB, b.papr_dB, 1e-12);
  EXPECT_EQ(a.levels.size(), b.levels.size());
}

TEST(SedSpectrum, BpskSinglePair) {
  const LabeledConstellation bpsk(1, 1, {1.0, -1.0}, {0, 1});
  const auto s = sed_spectrum(bpsk);
  ASSERT_EQ(s.bins.size(), 1U);
  EXPECT_DOUBLE_EQ(s.msed, 4.0);
  EXPECT_EQ(s.bins[0].totalPairs, 1U);
  EXPECT_EQ(s.bins[0].hd1Pairs, 1U);
}

TEST(SedSpectrum, Os128) {
  const auto t = kOs128Alphabet;
  const auto c = builtin("4d-os128");
  const auto seed_scale = c.point(0)[0] / t[3];  // first row is (t4, t4, t3, t3)
  const double d2 = 4 * std::pow((t[2] - t[0]) * seed_scale, 2);
  const auto s = sed_spectrum(c);
  EXPECT_NEAR(s.msed, d2, 1e-9);
  EXPECT_NEAR(s.msed, 0.14, 0.005);
  EXPECT_EQ(s.msedPairs, 16U);
}

TEST(SedSpectrum, PublishedTableValues) {
  struct Row {
    const char* name;
    double d2;
    std::uint64_t nd;
  };
  for (const Row& r : {Row{"128sp-16qam", 0.8, 864}, Row{"pm-16qam", 0.4, 768}}) {
    const auto s = sed_spectrum(builtin(r.name));
    EXPECT_NEAR(s.msed, r.d2, 1e-9) << r.name;
    EXPECT_EQ(s.msedPairs, r.nd) << r.name;
  }
  const auto pm = sed_spectrum(builtin("pm-16qam"));
  EXPECT_EQ(pm.bins[0].hd1Pairs, pm.bins[0].totalPairs);
}

TEST(SedSpectrum, Invariants) {
  for (auto name : kBuiltinNames) {
    const auto c = builtin(name);
    const auto s = sed_spectrum(c);
    EXPECT_EQ(total_pairs(s), c.size() * (c.size() - 1) / 2) << name;
    for (std::size_t i = 0; i < s.bins.size(); ++i) {
      EXPECT_LE(s.bins[i].hd1Pairs, s.bins[i].totalPairs);
      if (i > 0) {
        EXPECT_GT(s.bins[i].sed, s.bins[i - 1].sed);
      }
    }
    EXPECT_EQ(s.msed, s.bins.front().sed);
    EXPECT_EQ(s.msedPairs, s.bins.front().totalPairs);
  }
}

TEST(SedSpectrum, ScalingScalesBins) {
  const auto c = builtin("4d-os128");
  const auto a = sed_spectrum(c);
  const auto b = sed_spectrum(scaled(c, 2.0), 4e-6);
  ASSERT_EQ(a.bins.size(), b.bins.size());
  for (std::size_t i = 0; i < a.bins.size(); ++i) {
    EXPECT_NEAR(b.bins[i].sed, 4.0 * a.bins[i].sed, 1e-9);
    EXPECT_EQ(b.bins[i].totalPairs, a.bins[i].totalPairs);
    EXPECT_EQ(b.bins[i].hd1Pairs, a.bins[i].hd1Pairs);
  }
}

TEST(SedSpectrum, CoarseHistogramKeepsCounts) {
  const auto s = sed_spectrum(builtin("7b4d-2a8psk"));
  const auto h = coarse_histogram(s, 0.05);
  EXPECT_EQ(std::accumulate(h.begin(), h.end(), std::uint64_t{0},
                            [](std::uint64_t acc, const SedBin& b) { return acc + b.totalPairs; }),
            total_pairs(s));
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_GT(h[i].sed, h[i - 1].sed);
}

TEST(OrthantSymmetry, EnergyMultisetIsSeedRepeated) {
  const auto c = builtin("4d-os128");
  const auto seed = *extract_first_orthant(c).seed;
  std::vector<double> seed_e;
  for (std::size_t j = 0; j < seed.size(); ++j) {
    double e = 0.0;
    for (double v : seed.point(j)) e += v * v;
    seed_e.push_back(e);
  }
  std::vector<double> expect;
  for (int k = 0; k < 16; ++k) expect.insert(expect.end(), seed_e.begin(), seed_e.end());
  auto got = energy_profile(c).symbolEnergies;
  std::sort(expect.begin(), expect.end());
  std::sort(got.begin(), got.end());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expect[i], 1e-12);
}

TEST(TwoRingPsk, DistanceSpectrumAtShippedRatio) {
  // At ring ratio 0.59 the minimum distance is set by adjacent phases on
  // the inner ring: d^2 = 2 r_in^2 (1 - cos 45deg).
  const auto s = sed_spectrum(builtin("7b4d-2a8psk"));
  const double r_out2 = 2.0 / (1.0 + k2a8pskRingRatio * k2a8pskRingRatio);
  const double r_in2 = k2a8pskRingRatio * k2a8pskRingRatio * r_out2;
  const double cand_phase = 2.0 * r_in2 * (1.0 - std::cos(M_PI / 4));
  const double cand_ring = 2.0 * std::pow(std::sqrt(r_out2) - std::sqrt(r_in2), 2);
  EXPECT_NEAR(s.msed, std::min(cand_phase, cand_ring), 1e-9);
}
