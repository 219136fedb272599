#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace shape4d::fiber {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPlanck = 6.62607015e-34;     // J s

inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }

/// Standard single-mode fiber. Lengths in km, time in s.
struct FiberParams {
  double alpha_dB_per_km = 0.21;
  double dispersion_ps_per_nm_km = 16.9;
  double gamma_per_W_km = 1.31;
  double spanLength_km = 75.0;
  double stepSize_km = 0.1;
  double carrierWavelength_nm = 1550.0;

  /// Group-velocity dispersion -D lambda^2 / (2 pi c), in s^2/km.
  [[nodiscard]] double beta2_s2_per_km() const {
    const double d = dispersion_ps_per_nm_km * 1e-12 / 1e-9;  // s/(m km)
    const double lambda = carrierWavelength_nm * 1e-9;
    return -d * lambda * lambda / (2.0 * std::numbers::pi * kSpeedOfLight);
  }
  /// Power attenuation in 1/km.
  [[nodiscard]] double alpha_per_km() const { return alpha_dB_per_km * std::log(10.0) / 10.0; }
  [[nodiscard]] double span_loss_dB() const { return alpha_dB_per_km * spanLength_km; }
  [[nodiscard]] double carrier_frequency_Hz() const { return kSpeedOfLight / (carrierWavelength_nm * 1e-9); }

  void validate() const {
    if (!(alpha_dB_per_km >= 0.0) || !(gamma_per_W_km >= 0.0) || !(dispersion_ps_per_nm_km >= 0.0)) {
      throw std::invalid_argument("fiber: alpha, D and gamma must be non-negative");
    }
    if (!(spanLength_km > 0.0) || !(stepSize_km > 0.0) || !(carrierWavelength_nm > 0.0)) {
      throw std::invalid_argument("fiber: span length, step size and wavelength must be positive");
    }
    if (stepSize_km > spanLength_km) throw std::invalid_argument("fiber: step size exceeds span length");
  }
};

struct LinkConfig {
  std::size_t nChannels = 3;
  double symbolRate_GBd = 41.79;
  double channelSpacing_GHz = 50.0;
  double rrcRolloff = 0.1;
  std::size_t rrcSpan_symbols = 64;
  std::size_t nSpans = 10;
  double launchPowerPerChannel_dBm = 0.0;
  double edfaNoiseFigure_dB = 5.0;
  /// 0 selects the smallest power of two covering the WDM band.
  std::size_t samplesPerSymbol = 0;
  std::size_t nSymbolsPerChannel = 4096;
  std::uint64_t rngSeed = 1;
  /// Genie phase/amplitude estimation block, in symbols.
  std::size_t dspBlock_symbols = 1024;

  [[nodiscard]] double wdm_bandwidth_GHz() const {
    return static_cast<double>(nChannels - 1) * channelSpacing_GHz + (1.0 + rrcRolloff) * symbolRate_GBd;
  }
  [[nodiscard]] std::size_t sps() const {
    if (samplesPerSymbol != 0) return samplesPerSymbol;
    std::size_t s = 1;
    while (static_cast<double>(s) * symbolRate_GBd < wdm_bandwidth_GHz()) s *= 2;
    return s;
  }
  [[nodiscard]] double sample_rate_Hz() const { return static_cast<double>(sps()) * symbolRate_GBd * 1e9; }
  [[nodiscard]] double launch_power_W() const { return dbm_to_watt(launchPowerPerChannel_dBm); }
  [[nodiscard]] double total_launch_power_dBm() const {
    return launchPowerPerChannel_dBm + 10.0 * std::log10(static_cast<double>(nChannels));
  }

  void validate() const {
    if (nChannels == 0) throw std::invalid_argument("link: at least one channel");
    if (!(symbolRate_GBd > 0.0) || !(channelSpacing_GHz > 0.0)) {
      throw std::invalid_argument("link: symbol rate and spacing must be positive");
    }
    if (!(rrcRolloff > 0.0 && rrcRolloff <= 1.0)) throw std::invalid_argument("link: roll-off must be in (0, 1]");
    if (!std::has_single_bit(nSymbolsPerChannel)) throw std::invalid_argument("link: symbol count must be a power of two");
    if (static_cast<double>(sps()) * symbolRate_GBd < wdm_bandwidth_GHz()) {
      throw std::invalid_argument("link: sample rate " + std::to_string(static_cast<double>(sps()) * symbolRate_GBd) +
                                  " GHz does not cover the WDM band of " + std::to_string(wdm_bandwidth_GHz()) + " GHz");
    }
    if (dspBlock_symbols == 0 || nSymbolsPerChannel % dspBlock_symbols != 0) {
      throw std::invalid_argument("link: DSP block must divide the symbol count");
    }
  }
};

/// Raised if propagation produces a non-finite field.
class PropagationError : public std::runtime_error {
 public:
  PropagationError(std::size_t span, std::size_t step, double z_km, const std::string& what)
      : std::runtime_error(what), span_(span), step_(step), z_(z_km) {}
  [[nodiscard]] std::size_t span() const noexcept { return span_; }
  [[nodiscard]] std::size_t step() const noexcept { return step_; }
  [[nodiscard]] double z_km() const noexcept { return z_; }

 private:
  std::size_t span_, step_;
  double z_;
};

}  // namespace shape4d::fiber
