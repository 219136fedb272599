#pragma once

// Probabilistic-shaping baselines: Maxwell-Boltzmann amplitude priors,
// constant-composition matcher rate loss, finite-length rates and the
// shaped PM-16QAM reference.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "shape4d/constellation.hpp"
#include "shape4d/formats.hpp"

namespace shape4d {

[[nodiscard]] inline double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h;
}

/// p_a proportional to exp(-nu a^2).
[[nodiscard]] inline std::vector<double> maxwell_boltzmann(std::span<const double> amplitudes, double nu) {
  std::vector<double> p(amplitudes.size());
  double amin = std::numeric_limits<double>::infinity();
  for (double a : amplitudes) amin = std::min(amin, a * a);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += p[i] = std::exp(-nu * (amplitudes[i] * amplitudes[i] - amin));
  for (double& v : p) v /= total;
  return p;
}

struct MbDistribution {
  double nu = 0.0;
  std::vector<double> probabilities;
};

/// Maxwell-Boltzmann prior over `amplitudes` with entropy `targetBits`,
/// nu found by bisection.
[[nodiscard]] inline MbDistribution mb_distribution_for_entropy(std::span<const double> amplitudes, double targetBits) {
  if (amplitudes.size() < 2) throw std::invalid_argument("mb_distribution_for_entropy: need at least two amplitudes");
  const double hmax = std::log2(static_cast<double>(amplitudes.size()));
  if (!(targetBits > 0.0) || targetBits > hmax + 1e-12) {
    throw std::invalid_argument("mb_distribution_for_entropy: entropy not attainable");
  }
  if (targetBits >= hmax - 1e-12) return {0.0, maxwell_boltzmann(amplitudes, 0.0)};
  auto h = [&](double nu) { return entropy_bits(maxwell_boltzmann(amplitudes, nu)); };
  double lo = 0.0, hi = 1.0;
  while (h(hi) > targetBits) {
    hi *= 2.0;
    if (hi > 1e12) throw std::invalid_argument("mb_distribution_for_entropy: entropy not attainable");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > targetBits ? lo : hi) = mid;
  }
  const double nu = 0.5 * (lo + hi);
  return {nu, maxwell_boltzmann(amplitudes, nu)};
}

/// Composition of a length-n constant-composition block closest to n*p
/// (largest-remainder rounding, ties to the lower index).
[[nodiscard]] inline std::vector<std::size_t> ccdm_composition(std::span<const double> p, std::size_t n) {
  if (n == 0) throw std::invalid_argument("ccdm_composition: blocklength must be positive");
  std::vector<std::size_t> comp(p.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double target = static_cast<double>(n) * p[i];
    comp[i] = static_cast<std::size_t>(std::floor(target));
    used += comp[i];
    rem.emplace_back(target - std::floor(target), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; used < n; ++r, ++used) ++comp[rem[r % rem.size()].second];
  return comp;
}

/// floor(log2 of the multinomial coefficient n! / prod c_i!).
[[nodiscard]] inline std::size_t ccdm_input_bits(std::span<const std::size_t> composition) {
  const std::size_t n = std::accumulate(composition.begin(), composition.end(), std::size_t{0});
  double l = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::size_t c : composition) l -= std::lgamma(static_cast<double>(c) + 1.0);
  l /= std::log(2.0);
  const double nearest = std::round(l);
  // lgamma carries ~1e-12 relative error; exact powers of two must not round down.
  if (std::abs(l - nearest) < 1e-9 * std::max(1.0, l)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::floor(l));
}

struct CcdmRateLoss {
  std::vector<std::size_t> composition;
  std::size_t inputBits = 0;
  /// Entropy of the composition's empirical distribution, bits/amplitude.
  double compositionEntropy = 0.0;
  double rateLoss = 0.0;
};

/// Rate loss H(P_A) - k/n of a length-n constant-composition matcher, with
/// P_A the quantized composition.
[[nodiscard]] inline CcdmRateLoss ccdm_rate_loss(std::span<const double> p, std::size_t n) {
  if (n == 0) throw std::invalid_argument("ccdm_rate_loss: blocklength must be positive");
  CcdmRateLoss out;
  out.composition = ccdm_composition(p, n);
  out.inputBits = ccdm_input_bits(out.composition);
  std::vector<double> empirical(out.composition.size());
  for (std::size_t i = 0; i < empirical.size(); ++i) {
    empirical[i] = static_cast<double>(out.composition[i]) / static_cast<double>(n);
  }
  out.compositionEntropy = entropy_bits(empirical);
  out.rateLoss = std::max(0.0, out.compositionEntropy - static_cast<double>(out.inputBits) / static_cast<double>(n));
  return out;
}

/// Finite-length rate GMI - N * R_loss for N shaped real dimensions.
[[nodiscard]] inline double air_n(double gmi, std::size_t shapedDims, double rateLoss) {
  if (rateLoss < 0.0) throw std::invalid_argument("air_n: negative rate loss");
  return gmi - static_cast<double>(shapedDims) * rateLoss;
}

struct ShapedConstellation {
  LabeledConstellation constellation;
  std::vector<double> probabilities;
  std::vector<double> amplitudeProbabilities;
};

/// PM-16QAM with uniform signs and an MB amplitude prior of entropy
/// `amplitudeEntropy` per real dimension, scaled to E_P[|x|^2] = 2.
[[nodiscard]] inline ShapedConstellation ps_pm16qam(double amplitudeEntropy) {
  static constexpr double amps[2] = {1.0, 3.0};
  auto mb = mb_distribution_for_entropy(amps, amplitudeEntropy);
  const auto base = expand_orthant_symmetric(square_qam_seed(4, 2));
  std::vector<double> probs(base.size());
  double energy = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    double p = 1.0;
    for (double v : base.point(i)) p *= 0.5 * (std::abs(v) < 2.0 ? mb.probabilities[0] : mb.probabilities[1]);
    probs[i] = p;
    energy += p * base.energy(i);
  }
  const double scale = std::sqrt(2.0 / energy);
  std::vector<double> pts(base.coordinates().begin(), base.coordinates().end());
  for (double& v : pts) v *= scale;
  return {LabeledConstellation(4, 8, std::move(pts), {base.labels().begin(), base.labels().end()}), std::move(probs),
          std::move(mb.probabilities)};
}

}  // namespace shape4d
