#pragma once

// Built-in modulation formats. All are returned at unit energy per
// polarization (Es = N/2, i.e. Es = 2 for 4D formats).

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shape4d/constellation.hpp"

namespace shape4d {

/// Coordinates of the shipped 4D-OS128 seed, rounded to four decimals.
inline constexpr std::array<double, 5> kOs128Alphabet = {0.2875, 0.3834, 0.4730, 1.1501, 1.2460};

inline constexpr double k2a8pskRingRatio = 0.59;

[[nodiscard]] constexpr Label gray_code(Label v) noexcept { return v ^ (v >> 1); }

/// Es for unit energy per polarization.
[[nodiscard]] inline double unit_polarization_energy(std::size_t dims) { return static_cast<double>(dims) / 2.0; }

/// First-orthant seed of the 8 points of 4D-OS128 with the in-orthant
/// reference labeling [b5 b6 b7].
[[nodiscard]] inline FirstOrthantSeed os128_seed(std::array<double, 5> t = kOs128Alphabet) {
  const double t1 = t[0], t2 = t[1], t3 = t[2], t4 = t[3], t5 = t[4];
  std::vector<double> pts = {
      t4, t4, t3, t3,  // 000
      t2, t5, t3, t3,  // 001
      t5, t2, t3, t3,  // 010
      t3, t3, t1, t1,  // 011
      t3, t3, t4, t4,  // 100
      t3, t3, t5, t2,  // 101
      t3, t3, t2, t5,  // 110
      t1, t1, t3, t3,  // 111
  };
  return {4, 3, std::move(pts), {0, 1, 2, 3, 4, 5, 6, 7}};
}

/// First-orthant seed of square PM-QAM with `levels` amplitudes per real
/// dimension (levels = 1: QPSK, 2: 16QAM, 4: 64QAM). In-orthant bits are
/// the Gray-coded amplitude indices of dimensions 1..N in order, 1 = outer
/// ring for two levels.
[[nodiscard]] inline FirstOrthantSeed square_qam_seed(std::size_t dims, std::size_t levels) {
  if (levels == 0 || (levels & (levels - 1)) != 0) throw std::invalid_argument("square_qam_seed: levels must be 2^k");
  const auto amp_bits = static_cast<std::size_t>(std::countr_zero(levels));
  const std::size_t count = std::size_t{1} << (amp_bits * dims);
  std::vector<double> pts;
  std::vector<Label> labels;
  for (std::size_t idx = 0; idx < count; ++idx) {
    Label label = 0;
    for (std::size_t d = 0; d < dims; ++d) {
      const auto a = static_cast<Label>((idx >> (amp_bits * (dims - 1 - d))) & (levels - 1));
      pts.push_back(2.0 * a + 1.0);
      label = (label << amp_bits) | gray_code(a);
    }
    labels.push_back(label);
  }
  return {dims, amp_bits * dims, std::move(pts), std::move(labels)};
}

/// Gray-labeled 16QAM with the first-quadrant seed T = [(3,3);(1,3);(1,1);(3,1)].
[[nodiscard]] inline FirstOrthantSeed qam16_seed() {
  return {2, 2, {3, 3, 1, 3, 1, 1, 3, 1}, {0b00, 0b01, 0b11, 0b10}};
}

/// Even-parity subset of Gray PM-16QAM. The 7-bit label is b1..b7 of the
/// PM-16QAM label; b8 (outer-ring bit of dimension 4) is the parity of b1..b7.
[[nodiscard]] inline LabeledConstellation sp128_16qam() {
  const auto pm16 = expand_orthant_symmetric(square_qam_seed(4, 2));
  std::vector<double> pts;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < pm16.size(); ++i) {
    if (std::popcount(pm16.label(i)) % 2 != 0) continue;
    const auto p = pm16.point(i);
    pts.insert(pts.end(), p.begin(), p.end());
    labels.push_back(pm16.label(i) >> 1);
  }
  return {4, 7, std::move(pts), std::move(labels)};
}

/// Constant-modulus 4D two-ring 8PSK: one polarization on the inner ring and
/// the other on the outer ring (ratio r_in / r_out = ringRatio), 8PSK phases
/// on both. Label = [ring assignment | Gray phase X | Gray phase Y], where
/// the ring bit is 1 when X is on the outer ring.
[[nodiscard]] inline LabeledConstellation two_ring_8psk_4d(double ringRatio = k2a8pskRingRatio) {
  if (!(ringRatio > 0.0 && ringRatio < 1.0)) throw std::invalid_argument("two_ring_8psk_4d: ring ratio must be in (0,1)");
  const double outer = std::sqrt(2.0 / (1.0 + ringRatio * ringRatio));
  const double inner = ringRatio * outer;
  std::vector<double> pts;
  std::vector<Label> labels;
  for (Label ring = 0; ring < 2; ++ring) {
    const double rx = ring == 0 ? inner : outer;
    const double ry = ring == 0 ? outer : inner;
    for (Label px = 0; px < 8; ++px) {
      for (Label py = 0; py < 8; ++py) {
        const double ax = px * std::numbers::pi / 4.0;
        const double ay = py * std::numbers::pi / 4.0;
        pts.insert(pts.end(), {rx * std::cos(ax), rx * std::sin(ax), ry * std::cos(ay), ry * std::sin(ay)});
        labels.push_back((ring << 6) | (gray_code(px) << 3) | gray_code(py));
      }
    }
  }
  return {4, 7, std::move(pts), std::move(labels)};
}

/// All D4 lattice points (integer 4-vectors with even coordinate sum) in the
/// cube [-half, half]^4.
[[nodiscard]] inline std::vector<std::array<int, 4>> d4_lattice_box(int half) {
  std::vector<std::array<int, 4>> lattice;
  for (int a = -half; a <= half; ++a)
    for (int b = -half; b <= half; ++b)
      for (int c = -half; c <= half; ++c)
        for (int d = -half; d <= half; ++d)
          if ((a + b + c + d) % 2 == 0) lattice.push_back({a, b, c, d});
  return lattice;
}

/// D4 points of squared norm `normSq` around the origin.
[[nodiscard]] inline std::vector<std::array<int, 4>> d4_shell(int normSq) {
  std::vector<std::array<int, 4>> shell;
  for (const auto& v : d4_lattice_box(static_cast<int>(std::ceil(std::sqrt(normSq))))) {
    if (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3] == normSq) shell.push_back(v);
  }
  return shell;
}

/// D4 lattice points (integer 4-vectors with even coordinate sum) nearest to
/// the best centroid of a fixed candidate list, re-centered to zero mean.
/// Returned as a row-major M x 4 matrix in lattice units.
///
/// Candidates: the origin and the representative holes (1,0,0,0),
/// (1/2,1/2,1/2,1/2), (1/2,1/2,0,0), (1/2,0,0,0), (1/2,1/2,1/2,0). The
/// candidate with the smallest mean energy after re-centering wins; within a
/// partially used shell points are taken in lexicographic order.
[[nodiscard]] inline std::vector<double> d4_spherical_points(std::size_t count, double searchRadius) {
  if (count == 0) throw std::invalid_argument("d4_spherical_points: empty selection");
  static constexpr std::array<std::array<double, 4>, 6> centroids = {{{0, 0, 0, 0},
                                                                      {1, 0, 0, 0},
                                                                      {0.5, 0.5, 0.5, 0.5},
                                                                      {0.5, 0.5, 0, 0},
                                                                      {0.5, 0, 0, 0},
                                                                      {0.5, 0.5, 0.5, 0}}};
  const auto lattice = d4_lattice_box(static_cast<int>(std::ceil(searchRadius)) + 1);

  std::vector<double> best;
  double best_energy = std::numeric_limits<double>::infinity();
  for (const auto& centre : centroids) {
    std::vector<std::pair<double, std::array<int, 4>>> inside;
    for (const auto& v : lattice) {
      double r2 = 0.0;
      for (int d = 0; d < 4; ++d) r2 += (v[d] - centre[d]) * (v[d] - centre[d]);
      if (r2 <= searchRadius * searchRadius + 1e-9) inside.emplace_back(r2, v);
    }
    if (inside.size() < count) continue;
    std::sort(inside.begin(), inside.end(), [](const auto& x, const auto& y) {
      if (std::abs(x.first - y.first) > 1e-9) return x.first < y.first;
      return x.second < y.second;
    });
    std::array<double, 4> mean{};
    for (std::size_t i = 0; i < count; ++i)
      for (int d = 0; d < 4; ++d) mean[d] += inside[i].second[d] / static_cast<double>(count);
    std::vector<double> pts;
    double energy = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      for (int d = 0; d < 4; ++d) {
        const double v = inside[i].second[d] - mean[d];
        pts.push_back(v);
        energy += v * v;
      }
    }
    energy /= static_cast<double>(count);
    if (energy < best_energy - 1e-12) {
      best_energy = energy;
      best = std::move(pts);
    }
  }
  if (best.empty()) throw std::invalid_argument("d4_spherical_points: insufficient lattice points within search radius");
  return best;
}

/// Spherical D4 subset with a natural-order labeling, normalized to Es = 2.
[[nodiscard]] inline LabeledConstellation d4_spherical_subset(std::size_t count, double searchRadius = 4.0) {
  if (count < 2 || !std::has_single_bit(count)) throw std::invalid_argument("d4_spherical_subset: size must be 2^m, m >= 1");
  auto pts = d4_spherical_points(count, searchRadius);
  std::vector<Label> labels(count);
  std::iota(labels.begin(), labels.end(), Label{0});
  return normalize(LabeledConstellation(4, static_cast<std::size_t>(std::countr_zero(count)), std::move(pts),
                                        std::move(labels)),
                   2.0);
}

inline constexpr std::array<std::string_view, 9> kBuiltinNames = {
    "4d-os128", "128sp-16qam", "7b4d-2a8psk", "pm-16qam", "pm-64qam", "pm-qpsk", "l4-128", "16qam", "qpsk"};

/// Built-in format by name, normalized to unit energy per polarization.
[[nodiscard]] inline LabeledConstellation builtin(std::string_view name) {
  LabeledConstellation c;
  if (name == "4d-os128") {
    c = expand_orthant_symmetric(os128_seed());
  } else if (name == "128sp-16qam") {
    c = sp128_16qam();
  } else if (name == "7b4d-2a8psk") {
    c = two_ring_8psk_4d(k2a8pskRingRatio);
  } else if (name == "pm-16qam") {
    c = expand_orthant_symmetric(square_qam_seed(4, 2));
  } else if (name == "pm-64qam") {
    c = expand_orthant_symmetric(square_qam_seed(4, 4));
  } else if (name == "pm-qpsk") {
    c = expand_orthant_symmetric(square_qam_seed(4, 1));
  } else if (name == "l4-128") {
    return d4_spherical_subset(128);
  } else if (name == "16qam") {
    c = expand_orthant_symmetric(qam16_seed());
  } else if (name == "qpsk") {
    c = expand_orthant_symmetric(square_qam_seed(2, 1));
  } else {
    throw std::invalid_argument("unknown format '" + std::string(name) + "'");
  }
  return normalize(c, unit_polarization_energy(c.dims()));
}

}  // namespace shape4d
