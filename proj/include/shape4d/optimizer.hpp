#pragma once

// GMI-driven constellation design: binary switching of labels, ascent over
// the first-orthant seed of an orthant-symmetric format, and unconstrained
// refinement of all coordinates. Every accept/reject decision compares
// candidates on one shared noise batch; batches change between passes.

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "shape4d/constellation.hpp"
#include "shape4d/gmi.hpp"

namespace shape4d {

struct OptimizerConfig {
  double targetSnr_dB = 9.5;
  std::size_t mcSamplesPerEval = 20000;
  std::size_t maxIterations = 200;
  /// Coordinate step in units of sqrt(Es / N).
  double initialStep = 0.1;
  double stepDecay = 0.6;
  double minStep = 2e-3;
  double powerConstraint = 2.0;
  std::uint64_t rngSeed = 1;
  /// A pass gaining less than this on its own batch shrinks the step.
  double convergenceTol = 1e-3;
  /// Batch size of the final comparison against the starting point.
  std::size_t validationSamples = 200000;
};

struct TraceRow {
  std::size_t iter = 0;
  double gmi = 0.0;
  double gmiStdErr = 0.0;
  double step = 0.0;
  std::size_t accepted = 0;
};

struct OptimizationTrace {
  std::vector<TraceRow> rows;
  LabeledConstellation finalConstellation;
  std::optional<FirstOrthantSeed> finalSeed;
  /// Seed coordinates that were held at the positivity floor.
  std::size_t floorHits = 0;
  /// Validation-batch GMI of the start and the returned design.
  double initialGmi = 0.0;
  double finalGmi = 0.0;
};

/// Incremental GMI of label permutations for fixed points and noise. Swapping
/// the labels of two points only moves their weights between the per-bit
/// sums, so a candidate costs O(n * differing bits) instead of a full
/// demapping pass.
class LabelSwitchEvaluator {
 public:
  LabelSwitchEvaluator(const LabeledConstellation& c, const AwgnSpec& spec, const NoiseBatch& batch)
      : n_(batch.size()), size_(c.size()), bits_(c.bits()), labels_(c.labels().begin(), c.labels().end()),
        tx_(batch.tx.begin(), batch.tx.end()) {
    if (batch.dims != c.dims()) throw std::invalid_argument("label switching: batch dimension mismatch");
    entropy_ = input_entropy_bits(spec.inputDistribution, c.size());
    std::vector<double> logp(size_, -std::log(static_cast<double>(size_)));
    if (!spec.uniform()) {
      for (std::size_t j = 0; j < size_; ++j) logp[j] = std::log(spec.inputDistribution[j]);
    }
    const double sigma = std::sqrt(spec.noiseVariancePerRealDim);
    const double inv = 1.0 / (2.0 * spec.noiseVariancePerRealDim);
    w_.resize(n_ * size_);
    s1_.assign(n_ * bits_, 0.0);
    s0_.assign(n_ * bits_, 0.0);
    loss_.assign(n_ * bits_, 0.0);
    floor_.resize(n_);
    std::vector<double> y(c.dims());
    for (std::size_t s = 0; s < n_; ++s) {
      const auto x = c.point(tx_[s]);
      for (std::size_t d = 0; d < c.dims(); ++d) y[d] = x[d] + sigma * batch.noise[s * c.dims() + d];
      double* w = w_.data() + s * size_;
      double mmax = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < size_; ++j) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < c.dims(); ++d) d2 += (y[d] - c.point(j)[d]) * (y[d] - c.point(j)[d]);
        w[j] = logp[j] - d2 * inv;
        mmax = std::max(mmax, w[j]);
      }
      for (std::size_t j = 0; j < size_; ++j) w[j] = std::exp(w[j] - mmax);
      floor_[s] = 1e-13 * w[tx_[s]];
      for (std::size_t j = 0; j < size_; ++j)
        for (std::size_t p = 0; p < bits_; ++p) ((labels_[j] >> p) & 1U ? s1_ : s0_)[s * bits_ + p] += w[j];
      for (std::size_t p = 0; p < bits_; ++p) loss_[s * bits_ + p] = bit_loss(s, p, labels_[tx_[s]], s0_[s * bits_ + p], s1_[s * bits_ + p]);
    }
  }

  [[nodiscard]] std::span<const Label> labels() const noexcept { return labels_; }

  [[nodiscard]] double gmi() const {
    double total = 0.0;
    for (double v : loss_) total += v;
    return entropy_ - total / (static_cast<double>(n_) * std::numbers::ln2);
  }

  /// GMI change (bits) if every pair in `swaps` exchanged labels.
  [[nodiscard]] double delta(std::span<const std::pair<std::size_t, std::size_t>> swaps) {
    return process<false>(swaps);
  }

  void apply(std::span<const std::pair<std::size_t, std::size_t>> swaps) {
    (void)process<true>(swaps);
    for (const auto& [a, b] : swaps) std::swap(labels_[a], labels_[b]);
  }

 private:
  [[nodiscard]] static double bit_loss(std::size_t, std::size_t p, Label txLabel, double s0, double s1) {
    // ln(1 + S_wrong / S_right); the transmitted side always holds w_tx > 0.
    s0 = std::max(s0, 0.0);
    s1 = std::max(s1, 0.0);
    const bool one = ((txLabel >> p) & 1U) != 0;
    const double right = one ? s1 : s0;
    const double wrong = one ? s0 : s1;
    const double llr = detail::clamp_llr(std::log(std::max(right, 1e-300)) - std::log(std::max(wrong, 1e-300)));
    return detail::softplus(-llr);
  }

  template <bool Apply>
  double process(std::span<const std::pair<std::size_t, std::size_t>> swaps) {
    Label mask = 0;
    for (const auto& [a, b] : swaps) mask |= labels_[a] ^ labels_[b];
    if (mask == 0) return 0.0;
    std::vector<std::size_t> positions;
    for (std::size_t p = 0; p < bits_; ++p) {
      if ((mask >> p) & 1U) positions.push_back(p);
    }
    std::vector<Label> new_label_of(swaps.size() * 2);
    double change = 0.0;
    std::vector<double> d1(bits_);
    for (std::size_t s = 0; s < n_; ++s) {
      const double* w = w_.data() + s * size_;
      Label tx_label = labels_[tx_[s]];
      bool touched = false;
      std::fill(d1.begin(), d1.end(), 0.0);
      for (const auto& [a, b] : swaps) {
        if (tx_[s] == a) tx_label = labels_[b];
        if (tx_[s] == b) tx_label = labels_[a];
        const double wa = w[a], wb = w[b];
        if (wa < floor_[s] && wb < floor_[s] && tx_[s] != a && tx_[s] != b) continue;
        const Label diff = labels_[a] ^ labels_[b];
        if (diff == 0) continue;
        touched = true;
        for (std::size_t p : positions) {
          if (((diff >> p) & 1U) == 0) continue;
          // Point a takes label_b: a's weight moves to the side of label_b.
          const double sign_b = ((labels_[b] >> p) & 1U) ? 1.0 : -1.0;
          d1[p] += sign_b * (wa - wb);
        }
      }
      if (!touched) continue;
      for (std::size_t p : positions) {
        const std::size_t at = s * bits_ + p;
        const double s1 = s1_[at] + d1[p];
        const double s0 = s0_[at] - d1[p];
        const double nl = bit_loss(s, p, tx_label, s0, s1);
        change += nl - loss_[at];
        if constexpr (Apply) {
          s1_[at] = s1;
          s0_[at] = s0;
          loss_[at] = nl;
        }
      }
    }
    return -change / (static_cast<double>(n_) * std::numbers::ln2);
  }

  std::size_t n_, size_, bits_;
  std::vector<Label> labels_;
  std::vector<std::uint32_t> tx_;
  double entropy_ = 0.0;
  std::vector<double> w_, s1_, s0_, loss_, floor_;
};

namespace detail {

inline std::uint64_t pass_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t pass) {
  return splitmix64(seed ^ splitmix64(tag * 0x100000001B3ULL + pass));
}

inline void check_config(const OptimizerConfig& config) {
  if (!(config.initialStep > 0.0) || !(config.minStep > 0.0)) throw std::invalid_argument("optimizer: step must be positive");
  if (!(config.stepDecay > 0.0 && config.stepDecay < 1.0)) throw std::invalid_argument("optimizer: decay must be in (0, 1)");
  if (!(config.convergenceTol > 0.0)) throw std::invalid_argument("optimizer: tolerance must be positive");
  if (!(config.powerConstraint > 0.0)) throw std::invalid_argument("optimizer: power constraint must be positive");
  if (config.mcSamplesPerEval == 0 || config.validationSamples == 0) {
    throw std::invalid_argument("optimizer: sample counts must be positive");
  }
}

inline LabeledConstellation with_labels(const LabeledConstellation& c, std::span<const Label> labels) {
  return {c.dims(), c.bits(), {c.coordinates().begin(), c.coordinates().end()}, {labels.begin(), labels.end()}};
}

/// One first-improvement sweep over all row pairs (i < j). Each candidate
/// swap is a set of point transpositions built by `expand(i, j)`.
template <class Expand>
std::size_t switching_sweep(LabelSwitchEvaluator& ev, std::size_t rows, Expand&& expand, double minGain = 1e-12) {
  std::size_t accepted = 0;
  std::vector<std::pair<std::size_t, std::size_t>> swaps;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = i + 1; j < rows; ++j) {
      swaps.clear();
      expand(i, j, swaps);
      if (ev.delta(swaps) > minGain) {
        ev.apply(swaps);
        ++accepted;
      }
    }
  }
  return accepted;
}

}  // namespace detail

struct SwitchingResult {
  LabeledConstellation constellation;
  OptimizationTrace trace;
};

/// Binary switching: greedy pairwise label swaps, first improvement in
/// row-major pair order. Each pass starts on a fresh batch; the run stops
/// when a pass accepts nothing or when, scored on that fresh batch, the
/// previous pass improved the labeling by less than convergenceTol.
[[nodiscard]] inline SwitchingResult binary_switching(const LabeledConstellation& c, const AwgnSpec& spec,
                                                      const OptimizerConfig& config) {
  detail::check_config(config);
  SwitchingResult out{c, {}};
  const auto validation = make_noise_batch(c.size(), c.dims(), config.validationSamples,
                                           detail::pass_seed(config.rngSeed, 3, 0), spec.inputDistribution);
  out.trace.initialGmi = evaluate_rates(c, spec, validation).gmi_bits_per_sym;
  auto previous = c;
  for (std::size_t pass = 0; pass < config.maxIterations; ++pass) {
    const auto batch = make_noise_batch(c.size(), c.dims(), config.mcSamplesPerEval,
                                        detail::pass_seed(config.rngSeed, 1, pass), spec.inputDistribution);
    LabelSwitchEvaluator ev(out.constellation, spec, batch);
    if (pass > 0 && ev.gmi() - evaluate_rates(previous, spec, batch).gmi_bits_per_sym < config.convergenceTol) break;
    previous = out.constellation;
    const std::size_t accepted = detail::switching_sweep(
        ev, c.size(), [](std::size_t i, std::size_t j, auto& swaps) { swaps.emplace_back(i, j); });
    out.constellation = detail::with_labels(out.constellation, ev.labels());
    out.trace.rows.push_back({pass, ev.gmi(), 0.0, 0.0, accepted});
    if (accepted == 0) break;
  }
  out.trace.finalConstellation = out.constellation;
  out.trace.finalGmi = evaluate_rates(out.constellation, spec, validation).gmi_bits_per_sym;
  return out;
}

/// Expanded constellation of a seed, scaled to mean energy `es`.
[[nodiscard]] inline LabeledConstellation expand_normalized(const FirstOrthantSeed& seed, double es) {
  return normalize(expand_orthant_symmetric(seed), es);
}

struct OrthantOptimizationResult {
  FirstOrthantSeed seed;
  OptimizationTrace trace;
};

/// Ascent over the first-orthant coordinates, alternating with binary
/// switching of the in-orthant labels. Coordinates are held at or above
/// 1e-4 * sqrt(Es / N); the expanded candidate is renormalized to Es.
[[nodiscard]] inline OrthantOptimizationResult optimize_os(const FirstOrthantSeed& seedInit, const AwgnSpec& spec,
                                                           const OptimizerConfig& config) {
  detail::check_config(config);
  if (!spec.uniform()) throw std::invalid_argument("optimize_os: uniform input required");
  const std::size_t n = seedInit.dims();
  const double unit = std::sqrt(config.powerConstraint / static_cast<double>(n));
  const double floor = 1e-4 * unit;
  // Work on a copy rescaled so its expansion already meets the power constraint.
  const auto init_c = expand_normalized(seedInit, config.powerConstraint);
  const double rescale = std::sqrt(config.powerConstraint / expand_orthant_symmetric(seedInit).mean_energy());
  std::vector<double> pts(seedInit.coordinates().begin(), seedInit.coordinates().end());
  std::size_t initial_floor_hits = 0;
  for (double& v : pts) {
    v *= rescale;
    if (v < floor) {
      v = floor;
      ++initial_floor_hits;
    }
  }
  FirstOrthantSeed seed = seedInit.with_points(pts);

  OrthantOptimizationResult out{seed, {}};
  out.trace.floorHits = initial_floor_hits;
  const std::size_t total = init_c.size();
  const auto validation = make_noise_batch(total, n, config.validationSamples, detail::pass_seed(config.rngSeed, 3, 0));
  out.trace.initialGmi = evaluate_rates(init_c, spec, validation).gmi_bits_per_sym;

  double step = config.initialStep * unit;
  const std::size_t rows = seed.size();
  const std::size_t blocks = std::size_t{1} << n;
  for (std::size_t pass = 0; pass < config.maxIterations && step >= config.minStep * unit; ++pass) {
    const auto batch = make_noise_batch(total, n, config.mcSamplesPerEval, detail::pass_seed(config.rngSeed, 2, pass));
    auto current = evaluate_rates(expand_normalized(seed, config.powerConstraint), spec, batch);
    const double pass_start = current.gmi_bits_per_sym;
    std::size_t accepted = 0;
    for (std::size_t j = 0; j < rows; ++j) {
      for (std::size_t d = 0; d < n; ++d) {
        for (double dir : {1.0, -1.0}) {
          std::vector<double> cand(seed.coordinates().begin(), seed.coordinates().end());
          double& v = cand[j * n + d];
          v += dir * step;
          if (v < floor) {
            v = floor;
            ++out.trace.floorHits;
          }
          const auto cand_seed = seed.with_points(std::move(cand));
          const auto r = evaluate_rates(expand_normalized(cand_seed, config.powerConstraint), spec, batch);
          if (r.gmi_bits_per_sym > current.gmi_bits_per_sym + 1e-12) {
            // Keep the seed on the power constraint so steps stay comparable.
            const auto expanded = expand_orthant_symmetric(cand_seed);
            const double s = std::sqrt(config.powerConstraint / expanded.mean_energy());
            std::vector<double> scaled(cand_seed.coordinates().begin(), cand_seed.coordinates().end());
            for (double& x : scaled) x = std::max(x * s, floor);
            seed = cand_seed.with_points(std::move(scaled));
            current = r;
            ++accepted;
            break;
          }
        }
      }
    }
    // Relabel the seed rows; each swap moves all 2^N mirror images together.
    LabelSwitchEvaluator ev(expand_normalized(seed, config.powerConstraint), spec, batch);
    const std::size_t swaps = detail::switching_sweep(ev, rows, [&](std::size_t a, std::size_t b, auto& list) {
      for (std::size_t k = 0; k < blocks; ++k) list.emplace_back(k * rows + a, k * rows + b);
    });
    if (swaps > 0) {
      std::vector<Label> seed_labels(rows);
      for (std::size_t j = 0; j < rows; ++j) seed_labels[j] = ev.labels()[j] & ((Label{1} << seed.bits()) - 1U);
      seed = seed.with_labels(std::move(seed_labels));
      current.gmi_bits_per_sym = ev.gmi();
    }
    out.trace.rows.push_back({pass, current.gmi_bits_per_sym, current.gmiStdErr, step / unit, accepted + swaps});
    if (current.gmi_bits_per_sym - pass_start < config.convergenceTol) step *= config.stepDecay;
  }

  const auto final_c = expand_normalized(seed, config.powerConstraint);
  const double final_gmi = evaluate_rates(final_c, spec, validation).gmi_bits_per_sym;
  if (final_gmi >= out.trace.initialGmi) {
    out.seed = seed;
    out.trace.finalConstellation = final_c;
    out.trace.finalGmi = final_gmi;
  } else {
    out.seed = seedInit.with_points(pts);
    out.trace.finalConstellation = init_c;
    out.trace.finalGmi = out.trace.initialGmi;
  }
  out.trace.finalSeed = out.seed;
  return out;
}

/// Gradient of the batch GMI (bits/symbol, exact LLRs without clamping)
/// with respect to every point coordinate, laid out like `c.coordinates()`.
/// The received samples move with their transmitted point.
[[nodiscard]] inline std::vector<double> gmi_gradient(const LabeledConstellation& c, const AwgnSpec& spec,
                                                      const NoiseBatch& batch, std::size_t chunk = kDefaultChunk) {
  if (batch.dims != c.dims()) throw std::invalid_argument("gmi_gradient: batch dimension mismatch");
  const std::size_t size = c.size(), dims = c.dims(), m = c.bits(), n = batch.size();
  const double sigma2 = spec.noiseVariancePerRealDim;
  const double sigma = std::sqrt(sigma2);
  const Demapper dm(c, sigma2, spec.inputDistribution);
  const std::size_t chunks = (n + chunk - 1) / chunk;
  std::vector<std::vector<double>> partial(chunks);
  parallel_for(chunks, [&](std::size_t ci) {
    std::vector<double> g(size * dims, 0.0), y(dims), metric(size), e(size), same(m), coef(size), pull(dims);
    const auto pts = c.coordinates();
    const std::size_t end = std::min(n, (ci + 1) * chunk);
    for (std::size_t s = ci * chunk; s < end; ++s) {
      const std::size_t t = batch.tx[s];
      for (std::size_t d = 0; d < dims; ++d) y[d] = pts[t * dims + d] + sigma * batch.noise[s * dims + d];
      double mmax = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < size; ++j) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < dims; ++d) d2 += (y[d] - pts[j * dims + d]) * (y[d] - pts[j * dims + d]);
        metric[j] = dm.log_prior(j) - d2 / (2.0 * sigma2);
        mmax = std::max(mmax, metric[j]);
      }
      double total = 0.0;
      std::fill(same.begin(), same.end(), 0.0);
      for (std::size_t j = 0; j < size; ++j) {
        e[j] = std::exp(metric[j] - mmax);
        total += e[j];
        for (std::size_t k = 0; k < m; ++k) same[k] += dm.bit(j, k) == dm.bit(t, k) ? e[j] : 0.0;
      }
      // Per-sample loss is sum_k [LSE(all) - LSE(points sharing bit k with tx)];
      // coef_j is its derivative with respect to metric_j.
      std::fill(pull.begin(), pull.end(), 0.0);
      for (std::size_t j = 0; j < size; ++j) {
        double w = static_cast<double>(m) * e[j] / total;
        for (std::size_t k = 0; k < m; ++k) w -= dm.bit(j, k) == dm.bit(t, k) ? e[j] / same[k] : 0.0;
        coef[j] = w;
        for (std::size_t d = 0; d < dims; ++d) {
          const double r = (y[d] - pts[j * dims + d]) / sigma2;
          g[j * dims + d] += w * r;
          pull[d] -= w * r;
        }
      }
      for (std::size_t d = 0; d < dims; ++d) g[t * dims + d] += pull[d];
    }
    partial[ci] = std::move(g);
  });
  std::vector<double> grad(size * dims, 0.0);
  for (const auto& g : partial)
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
  // GMI = H - mean(loss) / ln 2.
  const double scale = -1.0 / (static_cast<double>(n) * std::numbers::ln2);
  for (double& v : grad) v *= scale;
  return grad;
}

struct UnconstrainedResult {
  LabeledConstellation constellation;
  OptimizationTrace trace;
};

/// Projected gradient ascent over all M x N coordinates with fixed labels.
/// Each pass draws a batch, steps along the batch gradient (tangent to the
/// energy sphere) and renormalizes; the move is kept if it raises the batch
/// GMI, otherwise the step shrinks. The result is compared with the start on
/// an independent validation batch and the better of the two is returned.
[[nodiscard]] inline UnconstrainedResult optimize_unconstrained(const LabeledConstellation& cInit, const AwgnSpec& spec,
                                                                const OptimizerConfig& config) {
  detail::check_config(config);
  const double unit = std::sqrt(config.powerConstraint / static_cast<double>(cInit.dims()));
  auto current = normalize(cInit, config.powerConstraint);
  const auto start = current;
  UnconstrainedResult out{current, {}};
  const auto validation = make_noise_batch(current.size(), current.dims(), config.validationSamples,
                                           detail::pass_seed(config.rngSeed, 3, 0), spec.inputDistribution);
  out.trace.initialGmi = evaluate_rates(start, spec, validation).gmi_bits_per_sym;

  // Step = RMS displacement per point, in units of sqrt(Es / N).
  double step = config.initialStep;
  const double rms_points = std::sqrt(static_cast<double>(current.size()));
  for (std::size_t pass = 0; pass < config.maxIterations && step >= config.minStep; ++pass) {
    const auto batch = make_noise_batch(current.size(), current.dims(), config.mcSamplesPerEval,
                                        detail::pass_seed(config.rngSeed, 4, pass), spec.inputDistribution);
    const auto here = evaluate_rates(current, spec, batch);
    auto grad = gmi_gradient(current, spec, batch);
    const auto x = current.coordinates();
    double gx = 0.0, xx = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      gx += grad[i] * x[i];
      xx += x[i] * x[i];
    }
    double gnorm = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      grad[i] -= gx / xx * x[i];
      gnorm += grad[i] * grad[i];
    }
    gnorm = std::sqrt(gnorm);
    std::size_t accepted = 0;
    double gmi = here.gmi_bits_per_sym;
    if (gnorm > 0.0) {
      const double len = step * unit * rms_points / gnorm;
      std::vector<double> cand(x.begin(), x.end());
      for (std::size_t i = 0; i < cand.size(); ++i) cand[i] += len * grad[i];
      auto c = normalize(LabeledConstellation(current.dims(), current.bits(), std::move(cand),
                                              {current.labels().begin(), current.labels().end()}),
                         config.powerConstraint);
      const auto r = evaluate_rates(c, spec, batch);
      if (r.gmi_bits_per_sym > here.gmi_bits_per_sym) {
        current = std::move(c);
        gmi = r.gmi_bits_per_sym;
        accepted = 1;
      }
    }
    out.trace.rows.push_back({pass, gmi, here.gmiStdErr, step, accepted});
    if (accepted == 0) step *= config.stepDecay;
  }

  const double final_gmi = evaluate_rates(current, spec, validation).gmi_bits_per_sym;
  if (final_gmi >= out.trace.initialGmi) {
    out.constellation = current;
    out.trace.finalGmi = final_gmi;
  } else {
    out.constellation = start;
    out.trace.finalGmi = out.trace.initialGmi;
  }
  out.trace.finalConstellation = out.constellation;
  return out;
}

}  // namespace shape4d
