#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "shape4d/constellation.hpp"
#include "shape4d/fiber/params.hpp"
#include "shape4d/fiber/propagation.hpp"
#include "shape4d/fiber/waveform.hpp"
#include "shape4d/gmi.hpp"

namespace shape4d::fiber {

struct RxResult {
  std::size_t channel = 0;
  /// Symbols after the per-block complex scaling, same length as transmitted.
  DualPolSymbols recovered;
  /// Es / E||y - x||^2 after scaling.
  double effectiveSnr_dB = 0.0;
  double gmi = 0.0;
  double gmiStdErr = 0.0;
  /// Phase of the fitted complex gain of each block, rad.
  std::vector<double> residualPhase;
};

/// Genie-aided metrics: per block, the least-squares complex scalar h minimizing
/// sum ||y - h x||^2 over both polarizations is divided out; the effective SNR
/// and the GMI (exact LLRs, noise variance from the residuals) follow from the
/// scaled symbols.
inline RxResult genie_metrics(const DualPolSymbols& rx, const LabeledConstellation& format,
                              std::span<const std::size_t> txIndices, std::size_t block) {
  const std::size_t n = txIndices.size();
  if (rx.size() != n) throw std::invalid_argument("receiver: received and transmitted lengths differ");
  if (block == 0 || n % block != 0) throw std::invalid_argument("receiver: block length must divide the symbol count");
  const auto tx = map_symbols(format, txIndices);
  RxResult r;
  r.recovered.x.resize(n);
  r.recovered.y.resize(n);
  double sig = 0.0, err = 0.0;
  for (std::size_t b0 = 0; b0 < n; b0 += block) {
    cd num = 0.0;
    double den = 0.0;
    for (std::size_t i = b0; i < b0 + block; ++i) {
      num += std::conj(tx.x[i]) * rx.x[i] + std::conj(tx.y[i]) * rx.y[i];
      den += std::norm(tx.x[i]) + std::norm(tx.y[i]);
    }
    const cd h = num / den;
    if (!(std::abs(h) > 0.0) || !std::isfinite(std::abs(h))) throw std::runtime_error("receiver: degenerate block gain");
    r.residualPhase.push_back(std::arg(h));
    for (std::size_t i = b0; i < b0 + block; ++i) {
      r.recovered.x[i] = rx.x[i] / h;
      r.recovered.y[i] = rx.y[i] / h;
      sig += std::norm(tx.x[i]) + std::norm(tx.y[i]);
      err += std::norm(r.recovered.x[i] - tx.x[i]) + std::norm(r.recovered.y[i] - tx.y[i]);
    }
  }
  r.effectiveSnr_dB = 10.0 * std::log10(sig / std::max(err, 1e-300));

  std::vector<double> y(4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    y[4 * i] = r.recovered.x[i].real();
    y[4 * i + 1] = r.recovered.x[i].imag();
    y[4 * i + 2] = r.recovered.y[i].real();
    y[4 * i + 3] = r.recovered.y[i].imag();
  }
  const double sigma2 = std::max(err / static_cast<double>(4 * n), 1e-300);
  const auto llrs = awgn_llrs(format, AwgnSpec::with_variance(sigma2), y, LlrMethod::exact, txIndices);
  const auto rate = gmi_from_llrs(llrs, static_cast<double>(format.bits()));
  r.gmi = rate.gmi_bits_per_sym;
  r.gmiStdErr = rate.gmiStdErr;
  return r;
}

/// Channel selection, full-link CD compensation, matched filtering and genie
/// metrics for channel `channel`.
inline RxResult receiver_dsp(const DualPolWaveform& w, const LinkConfig& link, const FiberParams& fiber,
                             const LabeledConstellation& format, std::span<const std::size_t> txIndices,
                             std::size_t channel) {
  auto ch = wdm_demux(w, channel, link.nChannels, link.channelSpacing_GHz);
  apply_dispersion(ch, fiber.beta2_s2_per_km(), -static_cast<double>(link.nSpans) * fiber.spanLength_km);
  const auto rx = matched_filter(std::move(ch), link.rrcRolloff, link.sps(), link.rrcSpan_symbols);
  auto r = genie_metrics(rx, format, txIndices, link.dspBlock_symbols);
  r.channel = channel;
  return r;
}

}  // namespace shape4d::fiber
