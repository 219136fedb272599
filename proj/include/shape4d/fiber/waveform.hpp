#pragma once

// Dual-polarization sampled fields, RRC pulse shaping and WDM (de)multiplexing.
// All signals are treated as periodic in the simulation window; filtering and
// frequency shifts are done on the DFT grid.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "shape4d/constellation.hpp"

namespace shape4d::fiber {

using cd = std::complex<double>;

/// In-place complex DFT of a fixed length. The inverse is normalized by 1/n.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("fft: empty transform");
    std::vector<cd> scratch(n);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    const std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    inv_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  ~Fft() {
    const std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  void forward(std::span<cd> data) const { run(fwd_, data); }
  void inverse(std::span<cd> data) const {
    run(inv_, data);
    const double s = 1.0 / static_cast<double>(n_);
    for (auto& v : data) v *= s;
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }
  void run(fftw_plan plan, std::span<cd> data) const {
    if (data.size() != n_) throw std::invalid_argument("fft: length mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
  }

  std::size_t n_;
  fftw_plan fwd_ = nullptr, inv_ = nullptr;
};

/// Angular frequency of DFT bin k for n samples at rate fs (FFTW ordering).
inline double bin_omega(std::size_t k, std::size_t n, double fs) {
  const double kk = k < (n + 1) / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
  return 2.0 * std::numbers::pi * kk * fs / static_cast<double>(n);
}

struct DualPolWaveform {
  std::vector<cd> x, y;
  double sampleRate_Hz = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
  /// Mean of |x|^2 + |y|^2 over samples, in W.
  [[nodiscard]] double mean_power() const {
    double p = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) p += std::norm(x[i]) + std::norm(y[i]);
    return x.empty() ? 0.0 : p / static_cast<double>(x.size());
  }
  void scale(double a) {
    for (auto& v : x) v *= a;
    for (auto& v : y) v *= a;
  }
};

/// Symbols of a 4D format as (x-pol, y-pol) complex pairs: (c0 + j c1, c2 + j c3).
struct DualPolSymbols {
  std::vector<cd> x, y;
  [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
};

inline DualPolSymbols map_symbols(const LabeledConstellation& c, std::span<const std::size_t> indices) {
  if (c.dims() != 4) throw std::invalid_argument("map_symbols: dual-polarization formats must be 4D");
  DualPolSymbols s;
  s.x.resize(indices.size());
  s.y.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto p = c.point(indices[i]);
    s.x[i] = {p[0], p[1]};
    s.y[i] = {p[2], p[3]};
  }
  return s;
}

inline constexpr std::size_t kMinRrcSpan = 16;

/// Root-raised-cosine taps over `span` symbols (span * sps + 1 taps, centred),
/// normalized to unit energy.
inline std::vector<double> rrc_taps(double rolloff, std::size_t sps, std::size_t span) {
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw std::invalid_argument("rrc: roll-off must be in (0, 1]");
  if (span < kMinRrcSpan) throw std::invalid_argument("rrc: filter span must be at least 16 symbols");
  if (sps == 0) throw std::invalid_argument("rrc: samples per symbol must be positive");
  const std::size_t len = span * sps + 1;
  const double b = rolloff, pi = std::numbers::pi;
  std::vector<double> h(len);
  const double mid = static_cast<double>(len - 1) / 2.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double t = (static_cast<double>(i) - mid) / static_cast<double>(sps);
    if (std::abs(t) < 1e-12) {
      h[i] = 1.0 - b + 4.0 * b / pi;
    } else if (std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-9) {
      h[i] = b / std::sqrt(2.0) * ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * b)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * b)));
    } else {
      const double num = std::sin(pi * t * (1.0 - b)) + 4.0 * b * t * std::cos(pi * t * (1.0 + b));
      const double den = pi * t * (1.0 - 16.0 * b * b * t * t);
      h[i] = num / den;
    }
  }
  double e = 0.0;
  for (double v : h) e += v * v;
  for (double& v : h) v /= std::sqrt(e);
  return h;
}

namespace detail {

/// Circular convolution of `sig` with centred real taps, via the DFT.
inline void circular_filter(std::vector<cd>& sig, std::span<const double> taps, const Fft& fft) {
  const std::size_t n = sig.size();
  if (taps.size() > n) throw std::invalid_argument("filter longer than the signal");
  std::vector<cd> kernel(n, 0.0);
  const std::size_t half = taps.size() / 2;
  for (std::size_t i = 0; i < taps.size(); ++i) kernel[(i + n - half) % n] += taps[i];
  fft.forward(kernel);
  fft.forward(sig);
  for (std::size_t k = 0; k < n; ++k) sig[k] *= kernel[k];
  fft.inverse(sig);
}

}  // namespace detail

/// Upsample by `sps` and filter with RRC taps; symbol k peaks at sample k*sps.
inline DualPolWaveform rrc_shape(const DualPolSymbols& symbols, double rolloff, std::size_t sps, std::size_t span,
                                 double symbolRate_Hz) {
  const auto taps = rrc_taps(rolloff, sps, span);
  const std::size_t n = symbols.size() * sps;
  DualPolWaveform w{std::vector<cd>(n, 0.0), std::vector<cd>(n, 0.0), symbolRate_Hz * static_cast<double>(sps)};
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    w.x[k * sps] = symbols.x[k];
    w.y[k * sps] = symbols.y[k];
  }
  const Fft fft(n);
  detail::circular_filter(w.x, taps, fft);
  detail::circular_filter(w.y, taps, fft);
  return w;
}

/// RRC matched filter followed by sampling at k*sps.
inline DualPolSymbols matched_filter(DualPolWaveform w, double rolloff, std::size_t sps, std::size_t span) {
  const auto taps = rrc_taps(rolloff, sps, span);
  if (w.size() % sps != 0) throw std::invalid_argument("matched_filter: length is not a multiple of sps");
  const Fft fft(w.size());
  detail::circular_filter(w.x, taps, fft);
  detail::circular_filter(w.y, taps, fft);
  DualPolSymbols s;
  for (std::size_t i = 0; i < w.size(); i += sps) {
    s.x.push_back(w.x[i]);
    s.y.push_back(w.y[i]);
  }
  return s;
}

/// Carrier offset of channel i of n on a symmetric grid, in Hz.
inline double channel_offset_Hz(std::size_t i, std::size_t n, double spacing_GHz) {
  return (static_cast<double>(i) - (static_cast<double>(n) - 1.0) / 2.0) * spacing_GHz * 1e9;
}

namespace detail {

/// Frequency shift by a whole number of DFT bins (the nearest to `shift_Hz`),
/// which keeps the signal periodic in the window.
inline void shift_bins(std::vector<cd>& spectrum, double shift_Hz, double fs) {
  const std::size_t n = spectrum.size();
  const auto bins = static_cast<long long>(std::llround(shift_Hz / fs * static_cast<double>(n)));
  const auto nn = static_cast<long long>(n);
  std::vector<cd> out(n);
  for (long long k = 0; k < nn; ++k) out[static_cast<std::size_t>(((k + bins) % nn + nn) % nn)] = spectrum[k];
  spectrum.swap(out);
}

}  // namespace detail

/// Sum of baseband channels shifted to their carriers. `occupied_Hz` is the
/// two-sided bandwidth of each channel, used for the aliasing check.
inline DualPolWaveform wdm_mux(const std::vector<DualPolWaveform>& channels, double spacing_GHz, double occupied_Hz) {
  if (channels.empty()) throw std::invalid_argument("wdm_mux: no channels");
  const std::size_t n = channels.front().size();
  const double fs = channels.front().sampleRate_Hz;
  const std::size_t count = channels.size();
  const double edge = std::abs(channel_offset_Hz(0, count, spacing_GHz)) + occupied_Hz / 2.0;
  if (edge > fs / 2.0 + 1e-6) throw std::invalid_argument("wdm_mux: WDM band aliases at the simulation sample rate");
  const Fft fft(n);
  DualPolWaveform out{std::vector<cd>(n, 0.0), std::vector<cd>(n, 0.0), fs};
  for (std::size_t c = 0; c < count; ++c) {
    if (channels[c].size() != n || channels[c].sampleRate_Hz != fs) {
      throw std::invalid_argument("wdm_mux: channels differ in length or sample rate");
    }
    for (auto pol : {&DualPolWaveform::x, &DualPolWaveform::y}) {
      std::vector<cd> s = channels[c].*pol;
      fft.forward(s);
      detail::shift_bins(s, channel_offset_Hz(c, count, spacing_GHz), fs);
      auto& dst = out.*pol;
      for (std::size_t k = 0; k < n; ++k) dst[k] += s[k];
    }
  }
  fft.inverse(out.x);
  fft.inverse(out.y);
  return out;
}

/// Bring channel `index` of `count` to baseband and keep |f| < spacing / 2.
inline DualPolWaveform wdm_demux(const DualPolWaveform& w, std::size_t index, std::size_t count, double spacing_GHz) {
  if (index >= count) throw std::invalid_argument("wdm_demux: channel index out of range");
  const std::size_t n = w.size();
  const Fft fft(n);
  DualPolWaveform out = w;
  const double half = spacing_GHz * 1e9 / 2.0;
  for (auto pol : {&DualPolWaveform::x, &DualPolWaveform::y}) {
    auto& s = out.*pol;
    fft.forward(s);
    detail::shift_bins(s, -channel_offset_Hz(index, count, spacing_GHz), w.sampleRate_Hz);
    for (std::size_t k = 0; k < n; ++k) {
      if (std::abs(bin_omega(k, n, w.sampleRate_Hz)) / (2.0 * std::numbers::pi) >= half) s[k] = 0.0;
    }
    fft.inverse(s);
  }
  return out;
}

}  // namespace shape4d::fiber
