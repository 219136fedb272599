#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <random>
#include <vector>

#include "shape4d/fiber/params.hpp"
#include "shape4d/fiber/waveform.hpp"

namespace shape4d::fiber {

inline constexpr double kManakovFactor = 8.0 / 9.0;

/// Frequency response of `length_km` of fiber: exp((-alpha/2 + j beta2/2 w^2) L).
/// Negative lengths invert it.
inline std::vector<cd> linear_response(std::size_t n, double fs, double alpha_per_km, double beta2, double length_km) {
  std::vector<cd> h(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = bin_omega(k, n, fs);
    h[k] = std::exp(cd(-0.5 * alpha_per_km * length_km, 0.5 * beta2 * w * w * length_km));
  }
  return h;
}

namespace detail {

inline void apply_response(DualPolWaveform& w, const std::vector<cd>& h, const Fft& fft) {
  for (auto pol : {&DualPolWaveform::x, &DualPolWaveform::y}) {
    auto& s = w.*pol;
    fft.forward(s);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] *= h[k];
    fft.inverse(s);
  }
}

}  // namespace detail

/// Lossless chromatic dispersion over `length_km` (negative to compensate).
inline void apply_dispersion(DualPolWaveform& w, double beta2, double length_km) {
  const Fft fft(w.size());
  detail::apply_response(w, linear_response(w.size(), w.sampleRate_Hz, 0.0, beta2, length_km), fft);
}

/// One span of the Manakov equation by the symmetric split-step Fourier
/// method: half linear step, nonlinear phase over the full step, half linear
/// step. Adjacent half steps are merged. The last step is shortened so the
/// steps add up to the span length.
inline void propagate_span(DualPolWaveform& w, const FiberParams& fiber, std::size_t spanIndex = 0) {
  fiber.validate();
  const std::size_t n = w.size();
  const double fs = w.sampleRate_Hz;
  const double a = fiber.alpha_per_km(), b2 = fiber.beta2_s2_per_km();
  const double len = fiber.spanLength_km, h = fiber.stepSize_km;
  const auto steps = static_cast<std::size_t>(std::ceil(len / h - 1e-9));
  const double last = len - static_cast<double>(steps - 1) * h;
  const Fft fft(n);
  const auto half = linear_response(n, fs, a, b2, h / 2.0);
  const auto full = linear_response(n, fs, a, b2, h);
  const double g = fiber.gamma_per_W_km * kManakovFactor;

  detail::apply_response(w, steps == 1 ? linear_response(n, fs, a, b2, last / 2.0) : half, fft);
  for (std::size_t s = 0; s < steps; ++s) {
    const double dz = s + 1 == steps ? last : h;
    double energy = 0.0;
    if (g != 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = std::norm(w.x[i]) + std::norm(w.y[i]);
        energy += p;
        const cd rot = std::polar(1.0, g * p * dz);
        w.x[i] *= rot;
        w.y[i] *= rot;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) energy += std::norm(w.x[i]) + std::norm(w.y[i]);
    }
    if (!std::isfinite(energy)) {
      throw PropagationError(spanIndex, s, static_cast<double>(s) * h,
                             "propagation: non-finite field in span " + std::to_string(spanIndex) + " at step " +
                                 std::to_string(s) + " (z = " + std::to_string(static_cast<double>(s) * h) + " km)");
    }
    if (s + 1 == steps) {
      detail::apply_response(w, linear_response(n, fs, a, b2, last / 2.0), fft);
    } else if (s + 2 == steps) {
      detail::apply_response(w, linear_response(n, fs, a, b2, h / 2.0 + last / 2.0), fft);
    } else {
      detail::apply_response(w, full, fft);
    }
  }
}

/// Amplifier with power gain G and ASE noise. The ASE power spectral density
/// per polarization is n_sp h f (G - 1) with n_sp = NF / 2 * G / (G - 1), i.e.
/// NF G h f / 2; noise fills the simulation bandwidth. Unity gain adds no noise.
template <class Rng>
void edfa(DualPolWaveform& w, double gain_dB, double noiseFigure_dB, double centerFrequency_Hz, Rng& rng) {
  if (!(gain_dB >= 0.0)) throw std::invalid_argument("edfa: gain must be non-negative");
  const double g = std::pow(10.0, gain_dB / 10.0);
  w.scale(std::sqrt(g));
  if (gain_dB == 0.0 || !std::isfinite(noiseFigure_dB)) return;
  const double nf = std::pow(10.0, noiseFigure_dB / 10.0);
  const double psd = nf * g * kPlanck * centerFrequency_Hz / 2.0;
  const double sigma = std::sqrt(psd * w.sampleRate_Hz / 2.0);  // per real quadrature
  std::normal_distribution<double> gauss(0.0, sigma);
  for (auto pol : {&DualPolWaveform::x, &DualPolWaveform::y}) {
    for (auto& v : w.*pol) v += cd(gauss(rng), gauss(rng));
  }
}

}  // namespace shape4d::fiber
