#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "shape4d/constellation.hpp"
#include "shape4d/detail/parallel.hpp"
#include "shape4d/fiber/params.hpp"
#include "shape4d/fiber/propagation.hpp"
#include "shape4d/fiber/receiver.hpp"
#include "shape4d/fiber/waveform.hpp"

namespace shape4d::fiber {

/// Transmitted data of one channel: uniform random symbol indices from RNG
/// stream `channel` of the link seed.
inline std::vector<std::size_t> channel_indices(const LinkConfig& link, const LabeledConstellation& format,
                                                std::size_t channel) {
  auto rng = stream_rng(link.rngSeed, channel);
  std::uniform_int_distribution<std::size_t> pick(0, format.size() - 1);
  std::vector<std::size_t> idx(link.nSymbolsPerChannel);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

/// Shaped channel waveform at the composite sample rate with mean power
/// equal to the launch power per channel.
inline DualPolWaveform channel_waveform(const LinkConfig& link, const LabeledConstellation& format,
                                        std::span<const std::size_t> indices) {
  auto w = rrc_shape(map_symbols(format, indices), link.rrcRolloff, link.sps(), link.rrcSpan_symbols,
                     link.symbolRate_GBd * 1e9);
  // Unit-energy taps: mean power per sample is Es / sps.
  w.scale(std::sqrt(link.launch_power_W() * static_cast<double>(link.sps()) / format.mean_energy()));
  return w;
}

/// End-to-end run: random data per channel, shaping, WDM multiplexing,
/// nSpans x (fiber span + EDFA compensating the span loss), and receiver
/// DSP on the centre channel. `formats` has one entry (used on every
/// channel) or one per channel.
inline RxResult run_link(const LinkConfig& link, const FiberParams& fiber,
                         std::span<const LabeledConstellation> formats) {
  link.validate();
  fiber.validate();
  if (formats.size() != 1 && formats.size() != link.nChannels) {
    throw std::invalid_argument("run_link: need one format or one per channel");
  }
  auto format_of = [&](std::size_t c) -> const LabeledConstellation& { return formats[formats.size() == 1 ? 0 : c]; };
  std::vector<std::vector<std::size_t>> data(link.nChannels);
  std::vector<DualPolWaveform> channels(link.nChannels);
  parallel_for(link.nChannels, [&](std::size_t c) {
    data[c] = channel_indices(link, format_of(c), c);
    channels[c] = channel_waveform(link, format_of(c), data[c]);
  });
  auto w = wdm_mux(channels, link.channelSpacing_GHz, (1.0 + link.rrcRolloff) * link.symbolRate_GBd * 1e9);
  channels.clear();
  for (std::size_t s = 0; s < link.nSpans; ++s) {
    propagate_span(w, fiber, s);
    auto rng = stream_rng(link.rngSeed ^ 0xA5E0A5E0A5E0A5E0ULL, s);
    edfa(w, fiber.span_loss_dB(), link.edfaNoiseFigure_dB, fiber.carrier_frequency_Hz(), rng);
  }
  const std::size_t centre = (link.nChannels - 1) / 2;
  return receiver_dsp(w, link, fiber, format_of(centre), data[centre], centre);
}

}  // namespace shape4d::fiber
