#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "shape4d/constellation.hpp"

namespace shape4d {

struct EnergyLevel {
  double energy = 0.0;
  std::size_t multiplicity = 0;
};

struct EnergyProfile {
  std::vector<double> symbolEnergies;
  double meanEnergy = 0.0;
  double papr_dB = 0.0;
  /// E[(|s|^2 - Es)^2].
  double variance = 0.0;
  std::vector<EnergyLevel> levels;
};

/// Energies are grouped into one level while they stay within
/// levelTol * Es of the level's smallest member.
[[nodiscard]] inline EnergyProfile energy_profile(const LabeledConstellation& c, double levelTol = 1e-6) {
  EnergyProfile p;
  p.symbolEnergies.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) p.symbolEnergies[i] = c.energy(i);
  p.meanEnergy = c.mean_energy();
  if (c.empty() || !(p.meanEnergy > 0.0)) return p;

  const double peak = *std::max_element(p.symbolEnergies.begin(), p.symbolEnergies.end());
  p.papr_dB = std::max(0.0, 10.0 * std::log10(peak / p.meanEnergy));
  for (double e : p.symbolEnergies) p.variance += (e - p.meanEnergy) * (e - p.meanEnergy);
  p.variance /= static_cast<double>(c.size());

  std::vector<double> sorted = p.symbolEnergies;
  std::sort(sorted.begin(), sorted.end());
  const double tol = levelTol * p.meanEnergy;
  double start = sorted.front();
  double sum = 0.0;
  std::size_t count = 0;
  for (double e : sorted) {
    if (e - start > tol) {
      p.levels.push_back({sum / static_cast<double>(count), count});
      start = e;
      sum = 0.0;
      count = 0;
    }
    sum += e;
    ++count;
  }
  p.levels.push_back({sum / static_cast<double>(count), count});
  if (p.levels.size() == 1) p.variance = 0.0;
  return p;
}

struct SedBin {
  double sed = 0.0;
  std::uint64_t totalPairs = 0;
  /// Pairs whose labels differ in exactly one bit.
  std::uint64_t hd1Pairs = 0;
};

struct SedSpectrum {
  std::vector<SedBin> bins;
  double msed = 0.0;
  std::uint64_t msedPairs = 0;
};

/// All unordered pairs binned by squared distance. A bin absorbs distances
/// within binTol of its first (smallest) member; the reported SED is the bin
/// mean.
[[nodiscard]] inline SedSpectrum sed_spectrum(const LabeledConstellation& c, double binTol = 1e-6) {
  SedSpectrum s;
  const std::size_t m = c.size();
  if (m < 2) return s;
  std::vector<std::pair<double, bool>> pairs;
  pairs.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    const auto a = c.point(i);
    for (std::size_t j = i + 1; j < m; ++j) {
      const auto b = c.point(j);
      double d2 = 0.0;
      for (std::size_t d = 0; d < c.dims(); ++d) d2 += (a[d] - b[d]) * (a[d] - b[d]);
      pairs.emplace_back(d2, std::popcount(c.label(i) ^ c.label(j)) == 1);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  double start = pairs.front().first;
  double sum = 0.0;
  SedBin bin;
  auto flush = [&] {
    bin.sed = sum / static_cast<double>(bin.totalPairs);
    s.bins.push_back(bin);
  };
  for (const auto& [d2, hd1] : pairs) {
    if (d2 - start > binTol) {
      flush();
      bin = {};
      sum = 0.0;
      start = d2;
    }
    sum += d2;
    ++bin.totalPairs;
    if (hd1) ++bin.hd1Pairs;
  }
  flush();
  s.msed = s.bins.front().sed;
  s.msedPairs = s.bins.front().totalPairs;
  return s;
}

/// Fixed-width regrouping of a spectrum for histogram plots. Bin i covers
/// [i*width, (i+1)*width) and is reported at its lower edge.
[[nodiscard]] inline std::vector<SedBin> coarse_histogram(const SedSpectrum& s, double width = 0.05) {
  std::vector<SedBin> out;
  for (const auto& b : s.bins) {
    const double edge = std::floor(b.sed / width) * width;
    if (out.empty() || std::abs(out.back().sed - edge) > 0.5 * width) out.push_back({edge, 0, 0});
    out.back().totalPairs += b.totalPairs;
    out.back().hd1Pairs += b.hd1Pairs;
  }
  return out;
}

}  // namespace shape4d
