#pragma once

// Bit-metric information rates over the AWGN channel: LLR demapping (exact
// and max-log), Monte-Carlo GMI/MI and a Gauss-Hermite reference for
// constellations that factor into 2D components.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shape4d/constellation.hpp"
#include "shape4d/detail/parallel.hpp"

namespace shape4d {

/// LLR magnitude cap (natural log).
inline constexpr double kLlrClamp = 50.0;

/// Reference energy per polarization for the SNR convention SNR = Es_2D / N0.
inline constexpr double kReferenceEs2D = 1.0;

[[nodiscard]] inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
[[nodiscard]] inline double linear_to_db(double v) { return 10.0 * std::log10(v); }

/// Noise variance per real dimension at `snr_dB` for the default convention.
[[nodiscard]] inline double noise_variance_for_snr(double snr_dB) {
  return kReferenceEs2D / (2.0 * db_to_linear(snr_dB));
}

struct AwgnSpec {
  double snr_dB = 0.0;
  double noiseVariancePerRealDim = 0.0;
  /// Per-point probabilities in constellation row order; empty means uniform.
  std::vector<double> inputDistribution;

  [[nodiscard]] static AwgnSpec at_snr(double snr_dB, std::vector<double> probabilities = {}) {
    return {snr_dB, noise_variance_for_snr(snr_dB), std::move(probabilities)};
  }
  [[nodiscard]] static AwgnSpec with_variance(double sigma2, std::vector<double> probabilities = {}) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("AwgnSpec: noise variance must be positive");
    return {linear_to_db(kReferenceEs2D / (2.0 * sigma2)), sigma2, std::move(probabilities)};
  }
  [[nodiscard]] bool uniform() const noexcept { return inputDistribution.empty(); }
};

enum class LlrMethod { exact, maxlog };

[[nodiscard]] inline const char* to_string(LlrMethod m) { return m == LlrMethod::exact ? "exact" : "maxlog"; }

/// Entropy in bits of a probability vector; empty means uniform over `size`.
[[nodiscard]] inline double input_entropy_bits(std::span<const double> probs, std::size_t size) {
  if (probs.empty()) return std::log2(static_cast<double>(size));
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

namespace detail {

inline void check_distribution(std::span<const double> probs, std::size_t size) {
  if (probs.empty()) return;
  if (probs.size() != size) throw std::invalid_argument("input distribution size does not match constellation");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("input distribution has invalid entries");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("input distribution does not sum to 1");
}

[[nodiscard]] inline double softplus(double x) noexcept { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

[[nodiscard]] inline double clamp_llr(double v) noexcept { return std::clamp(v, -kLlrClamp, kLlrClamp); }

}  // namespace detail

/// Per-symbol demapper for a fixed constellation and noise level. Holds
/// scratch space, so one instance per thread.
class Demapper {
 public:
  Demapper(const LabeledConstellation& c, double sigma2, std::span<const double> probs = {})
      : c_(&c), m_(c.bits()), dims_(c.dims()), inv2s2_(1.0 / (2.0 * sigma2)) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw std::invalid_argument("demapper: noise variance must be positive");
    detail::check_distribution(probs, c.size());
    logp_.resize(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) {
      logp_[j] = probs.empty() ? -std::log(static_cast<double>(c.size()))
                               : (probs[j] > 0.0 ? std::log(probs[j]) : -std::numeric_limits<double>::infinity());
    }
    bits_.resize(c.size() * m_);
    for (std::size_t j = 0; j < c.size(); ++j)
      for (std::size_t k = 0; k < m_; ++k) bits_[j * m_ + k] = static_cast<double>(c.bit(j, k));
    metric_.resize(c.size());
    s0_.resize(m_);
    s1_.resize(m_);
  }

  [[nodiscard]] std::size_t bits() const noexcept { return m_; }
  [[nodiscard]] std::size_t dims() const noexcept { return dims_; }
  [[nodiscard]] double log_prior(std::size_t j) const noexcept { return logp_[j]; }
  [[nodiscard]] double bit(std::size_t j, std::size_t k) const noexcept { return bits_[j * m_ + k]; }

  /// LLRs ln P(b_k=0|y)/P(b_k=1|y) into `llr` (m entries). Returns the exact
  /// log-density ratio ln p(y|x_tx)/p(y) when tx < size, else 0.
  double demap(const double* y, LlrMethod method, double* llr, std::size_t tx = static_cast<std::size_t>(-1)) {
    const auto pts = c_->coordinates();
    const std::size_t count = c_->size();
    double mmax = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < count; ++j) {
      const double* x = pts.data() + j * dims_;
      double d2 = 0.0;
      for (std::size_t d = 0; d < dims_; ++d) {
        const double e = y[d] - x[d];
        d2 += e * e;
      }
      metric_[j] = logp_[j] - d2 * inv2s2_;
      mmax = std::max(mmax, metric_[j]);
    }
    const bool want_mi = tx < count;
    double total = 0.0;
    if (method == LlrMethod::exact) {
      std::fill(s0_.begin(), s0_.end(), 0.0);
      std::fill(s1_.begin(), s1_.end(), 0.0);
      for (std::size_t j = 0; j < count; ++j) {
        const double w = std::exp(metric_[j] - mmax);
        total += w;
        const double* b = bits_.data() + j * m_;
        for (std::size_t k = 0; k < m_; ++k) {
          s1_[k] += w * b[k];
          s0_[k] += w * (1.0 - b[k]);
        }
      }
      for (std::size_t k = 0; k < m_; ++k) {
        if (s0_[k] <= 0.0) {
          llr[k] = -kLlrClamp;
        } else if (s1_[k] <= 0.0) {
          llr[k] = kLlrClamp;
        } else {
          llr[k] = detail::clamp_llr(std::log(s0_[k]) - std::log(s1_[k]));
        }
      }
    } else {
      const double ninf = -std::numeric_limits<double>::infinity();
      std::fill(s0_.begin(), s0_.end(), ninf);
      std::fill(s1_.begin(), s1_.end(), ninf);
      for (std::size_t j = 0; j < count; ++j) {
        const double* b = bits_.data() + j * m_;
        for (std::size_t k = 0; k < m_; ++k) {
          double& slot = b[k] != 0.0 ? s1_[k] : s0_[k];
          slot = std::max(slot, metric_[j]);
        }
        if (want_mi) total += std::exp(metric_[j] - mmax);
      }
      for (std::size_t k = 0; k < m_; ++k) {
        const double v = s0_[k] - s1_[k];
        llr[k] = std::isnan(v) ? 0.0 : detail::clamp_llr(v);
      }
    }
    if (!want_mi) return 0.0;
    return metric_[tx] - logp_[tx] - mmax - std::log(total);
  }

 private:
  const LabeledConstellation* c_;
  std::size_t m_;
  std::size_t dims_;
  double inv2s2_;
  std::vector<double> logp_;
  std::vector<double> bits_;
  std::vector<double> metric_;
  std::vector<double> s0_;
  std::vector<double> s1_;
};

/// Bit-metric loss of one received symbol in bits: sum_k log2(1 + exp(-+llr_k)),
/// the sign chosen by the transmitted bit.
[[nodiscard]] inline double bit_metric_loss(const double* llr, const Demapper& dm, std::size_t tx) {
  double acc = 0.0;
  for (std::size_t k = 0; k < dm.bits(); ++k) {
    const double sign = dm.bit(tx, k) != 0.0 ? 1.0 : -1.0;
    acc += detail::softplus(sign * llr[k]);
  }
  return acc / std::numbers::ln2;
}

struct LlrBatch {
  std::size_t bits = 0;
  std::vector<double> llrs;      // n x m, row-major
  std::vector<std::uint8_t> txBits;  // n x m, empty when unknown
  LlrMethod method = LlrMethod::exact;
  double noiseVariance = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return bits == 0 ? 0 : llrs.size() / bits; }
};

/// LLRs for row-major received symbols. `txIndices`, when given, fills the
/// transmitted bit matrix.
[[nodiscard]] inline LlrBatch awgn_llrs(const LabeledConstellation& c, const AwgnSpec& spec, std::span<const double> rx,
                                       LlrMethod method, std::span<const std::size_t> txIndices = {}) {
  if (!(spec.noiseVariancePerRealDim > 0.0)) throw std::invalid_argument("awgn_llrs: zero noise variance");
  if (rx.size() % c.dims() != 0) throw std::invalid_argument("awgn_llrs: received symbols do not match dimension");
  const std::size_t n = rx.size() / c.dims();
  if (!txIndices.empty() && txIndices.size() != n) throw std::invalid_argument("awgn_llrs: tx index count mismatch");
  Demapper dm(c, spec.noiseVariancePerRealDim, spec.inputDistribution);
  LlrBatch out;
  out.bits = c.bits();
  out.method = method;
  out.noiseVariance = spec.noiseVariancePerRealDim;
  out.llrs.resize(n * c.bits());
  for (std::size_t i = 0; i < n; ++i) dm.demap(rx.data() + i * c.dims(), method, out.llrs.data() + i * c.bits());
  if (!txIndices.empty()) {
    out.txBits.resize(n * c.bits());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c.bits(); ++k) out.txBits[i * c.bits() + k] = static_cast<std::uint8_t>(c.bit(txIndices[i], k));
  }
  return out;
}

struct RateReport {
  double gmi_bits_per_sym = 0.0;
  double mi_bits_per_sym = 0.0;
  double gmiStdErr = 0.0;
  double miStdErr = 0.0;
  /// Standard error of the per-sample difference MI - GMI.
  double gapStdErr = 0.0;
  std::size_t nSamples = 0;
  LlrMethod method = LlrMethod::exact;
};

/// GMI from a batch with known transmitted bits: sourceEntropy - mean loss.
[[nodiscard]] inline RateReport gmi_from_llrs(const LlrBatch& batch, double sourceEntropyBits) {
  if (batch.txBits.size() != batch.llrs.size()) throw std::invalid_argument("gmi_from_llrs: transmitted bits missing");
  const std::size_t n = batch.size();
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double loss = 0.0;
    for (std::size_t k = 0; k < batch.bits; ++k) {
      const double sign = batch.txBits[i * batch.bits + k] != 0 ? 1.0 : -1.0;
      loss += detail::softplus(sign * batch.llrs[i * batch.bits + k]);
    }
    loss /= std::numbers::ln2;
    sum += loss;
    sum2 += loss * loss;
  }
  RateReport r;
  r.nSamples = n;
  r.method = batch.method;
  if (n == 0) return r;
  const double mean = sum / static_cast<double>(n);
  r.gmi_bits_per_sym = sourceEntropyBits - mean;
  r.gmiStdErr = std::sqrt(std::max(0.0, sum2 / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
  return r;
}

/// Pre-drawn transmit indices and unit-variance noise, reusable across
/// candidate constellations of the same size.
struct NoiseBatch {
  std::size_t dims = 0;
  std::vector<std::uint32_t> tx;
  std::vector<double> noise;  // n x dims, unit variance per real dimension

  [[nodiscard]] std::size_t size() const noexcept { return tx.size(); }
};

namespace detail {

struct RateSums {
  double loss = 0.0, loss2 = 0.0;
  double mi = 0.0, mi2 = 0.0;
  double gap2 = 0.0;
  std::size_t n = 0;

  void add(const RateSums& o) {
    loss += o.loss;
    loss2 += o.loss2;
    mi += o.mi;
    mi2 += o.mi2;
    gap2 += o.gap2;
    n += o.n;
  }
};

/// Transmit index for global sample g: stratified for uniform inputs,
/// inverse-CDF draw otherwise.
class TxSampler {
 public:
  TxSampler(std::size_t size, std::span<const double> probs) : size_(size) {
    if (!probs.empty()) {
      cdf_.resize(probs.size());
      double acc = 0.0;
      for (std::size_t j = 0; j < probs.size(); ++j) cdf_[j] = acc += probs[j];
      cdf_.back() = 1.0;
    }
  }
  template <class Rng>
  std::uint32_t operator()(std::uint64_t g, Rng& rng) const {
    if (cdf_.empty()) return static_cast<std::uint32_t>(g % size_);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<std::uint32_t>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), size_ - 1));
  }

 private:
  std::size_t size_;
  std::vector<double> cdf_;
};

/// Samples [offset, offset + count) of the stream, written to tx[0..count)
/// and noise[0..count*dims).
inline void fill_chunk(std::uint32_t* tx, double* noise, std::size_t dims, std::size_t offset, std::size_t count,
                       const TxSampler& sampler, std::uint64_t seed, std::uint64_t chunk) {
  auto rng = stream_rng(seed, chunk);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    tx[i] = sampler(offset + i, rng);
    for (std::size_t d = 0; d < dims; ++d) noise[i * dims + d] = gauss(rng);
  }
}

inline RateSums evaluate_range(const LabeledConstellation& c, double sigma2, std::span<const double> probs,
                               LlrMethod method, const std::uint32_t* tx, const double* noise, std::size_t count,
                               double centre) {
  Demapper dm(c, sigma2, probs);
  const double sigma = std::sqrt(sigma2);
  std::vector<double> y(c.dims());
  std::vector<double> llr(c.bits());
  RateSums s;
  for (std::size_t i = 0; i < count; ++i) {
    const auto x = c.point(tx[i]);
    for (std::size_t d = 0; d < c.dims(); ++d) y[d] = x[d] + sigma * noise[i * c.dims() + d];
    // MI terms are accumulated relative to `centre` (the input entropy) so the
    // variance sums do not cancel at high SNR.
    const double mi = dm.demap(y.data(), method, llr.data(), tx[i]) / std::numbers::ln2 - centre;
    const double loss = bit_metric_loss(llr.data(), dm, tx[i]);
    s.loss += loss;
    s.loss2 += loss * loss;
    s.mi += mi;
    s.mi2 += mi * mi;
    const double gap = mi + loss;
    s.gap2 += gap * gap;
    ++s.n;
  }
  return s;
}

inline RateReport finish(const RateSums& s, double entropy, LlrMethod method) {
  RateReport r;
  r.method = method;
  r.nSamples = s.n;
  if (s.n == 0) return r;
  const double n = static_cast<double>(s.n);
  const double loss = s.loss / n;
  const double mi = s.mi / n;
  r.gmi_bits_per_sym = entropy - loss;
  r.mi_bits_per_sym = entropy + mi;
  r.gmiStdErr = std::sqrt(std::max(0.0, s.loss2 / n - loss * loss) / n);
  r.miStdErr = std::sqrt(std::max(0.0, s.mi2 / n - mi * mi) / n);
  const double gap = mi + loss;
  r.gapStdErr = std::sqrt(std::max(0.0, s.gap2 / n - gap * gap) / n);
  return r;
}

}  // namespace detail

inline constexpr std::size_t kDefaultChunk = 4096;

/// Draw a reusable batch; chunk c uses RNG stream c of `seed`.
[[nodiscard]] inline NoiseBatch make_noise_batch(std::size_t size, std::size_t dims, std::size_t n, std::uint64_t seed,
                                                 std::span<const double> probs = {},
                                                 std::size_t chunk = kDefaultChunk) {
  detail::check_distribution(probs, size);
  NoiseBatch b;
  b.dims = dims;
  b.tx.resize(n);
  b.noise.resize(n * dims);
  const detail::TxSampler sampler(size, probs);
  const std::size_t chunks = (n + chunk - 1) / chunk;
  parallel_for(chunks, [&](std::size_t ci) {
    const std::size_t off = ci * chunk;
    detail::fill_chunk(b.tx.data() + off, b.noise.data() + off * dims, dims, off, std::min(chunk, n - off), sampler,
                       seed, ci);
  });
  return b;
}

/// GMI and MI of `c` on a fixed batch (common random numbers).
[[nodiscard]] inline RateReport evaluate_rates(const LabeledConstellation& c, const AwgnSpec& spec,
                                               const NoiseBatch& batch, LlrMethod method = LlrMethod::exact,
                                               std::size_t chunk = kDefaultChunk) {
  if (batch.dims != c.dims()) throw std::invalid_argument("evaluate_rates: batch dimension mismatch");
  const std::size_t n = batch.size();
  const std::size_t chunks = (n + chunk - 1) / chunk;
  const double entropy = input_entropy_bits(spec.inputDistribution, c.size());
  std::vector<detail::RateSums> partial(chunks);
  parallel_for(chunks, [&](std::size_t ci) {
    const std::size_t off = ci * chunk;
    partial[ci] = detail::evaluate_range(c, spec.noiseVariancePerRealDim, spec.inputDistribution, method,
                                         batch.tx.data() + off, batch.noise.data() + off * c.dims(),
                                         std::min(chunk, n - off), entropy);
  });
  detail::RateSums total;
  for (const auto& p : partial) total.add(p);
  return detail::finish(total, entropy, method);
}

/// Monte-Carlo GMI (with MI from the same samples). Deterministic for a given
/// (seed, chunk) regardless of the worker count.
[[nodiscard]] inline RateReport gmi_mc(const LabeledConstellation& c, const AwgnSpec& spec, std::size_t nSamples,
                                       std::uint64_t seed, LlrMethod method = LlrMethod::exact,
                                       std::size_t chunk = kDefaultChunk) {
  if (!(spec.noiseVariancePerRealDim > 0.0)) throw std::invalid_argument("gmi_mc: zero noise variance");
  detail::check_distribution(spec.inputDistribution, c.size());
  const std::size_t chunks = (nSamples + chunk - 1) / chunk;
  const detail::TxSampler sampler(c.size(), spec.inputDistribution);
  const double entropy = input_entropy_bits(spec.inputDistribution, c.size());
  std::vector<detail::RateSums> partial(chunks);
  parallel_for(chunks, [&](std::size_t ci) {
    const std::size_t off = ci * chunk;
    const std::size_t count = std::min(chunk, nSamples - off);
    std::vector<std::uint32_t> tx(count);
    std::vector<double> noise(count * c.dims());
    detail::fill_chunk(tx.data(), noise.data(), c.dims(), off, count, sampler, seed, ci);
    partial[ci] = detail::evaluate_range(c, spec.noiseVariancePerRealDim, spec.inputDistribution, method, tx.data(),
                                         noise.data(), count, entropy);
  });
  detail::RateSums total;
  for (const auto& p : partial) total.add(p);
  return detail::finish(total, entropy, method);
}

/// Symbol-wise MI estimate; same samples and report as gmi_mc.
[[nodiscard]] inline RateReport mutual_information(const LabeledConstellation& c, const AwgnSpec& spec,
                                                   std::size_t nSamples, std::uint64_t seed) {
  return gmi_mc(c, spec, nSamples, seed, LlrMethod::exact);
}

/// Gauss-Hermite nodes and weights for the weight exp(-x^2) (Golub-Welsch).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

[[nodiscard]] inline GaussHermite gauss_hermite(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_hermite: need at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < n; ++i) {
    const double b = std::sqrt(static_cast<double>(i) / 2.0);
    jacobi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = b;
    jacobi(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(i)) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussHermite gh;
  gh.nodes.resize(n);
  gh.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    gh.nodes[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
    const double v0 = solver.eigenvectors()(0, static_cast<Eigen::Index>(i));
    gh.weights[i] = std::sqrt(std::numbers::pi) * v0 * v0;
  }
  return gh;
}

/// 2D factors of a product-form constellation: each factor owns a pair of
/// dimensions and a subset of the label bits.
struct ProductFactor {
  std::size_t firstDim = 0;
  LabeledConstellation component;
};

/// Split `c` into 2D factors over dimension pairs (0,1), (2,3), ... . Returns
/// an empty vector when `c` is not a Cartesian product with per-factor bits.
[[nodiscard]] inline std::vector<ProductFactor> factor_2d(const LabeledConstellation& c) {
  const std::size_t n = c.dims();
  if (n % 2 != 0) return {};
  const std::size_t nf = n / 2;
  std::vector<ProductFactor> out;
  std::vector<int> owner(c.bits(), -1);
  std::size_t product = 1;
  for (std::size_t f = 0; f < nf; ++f) {
    std::map<std::pair<double, double>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < c.size(); ++i) groups[{c.point(i)[2 * f], c.point(i)[2 * f + 1]}].push_back(i);
    std::vector<std::size_t> owned;
    for (std::size_t k = 0; k < c.bits(); ++k) {
      bool determined = true;
      for (const auto& [key, rows] : groups) {
        for (std::size_t r : rows) determined = determined && c.bit(r, k) == c.bit(rows.front(), k);
      }
      if (determined) {
        if (owner[k] != -1) return {};
        owner[k] = static_cast<int>(f);
        owned.push_back(k);
      }
    }
    if (groups.size() != (std::size_t{1} << owned.size())) return {};
    std::vector<double> pts;
    std::vector<Label> labels;
    for (const auto& [key, rows] : groups) {
      pts.push_back(key.first);
      pts.push_back(key.second);
      Label l = 0;
      for (std::size_t k : owned) l = (l << 1) | static_cast<Label>(c.bit(rows.front(), k));
      labels.push_back(l);
    }
    if (owned.empty()) return {};
    try {
      out.push_back({2 * f, LabeledConstellation(2, owned.size(), std::move(pts), std::move(labels))});
    } catch (const std::invalid_argument&) {
      return {};
    }
    product *= groups.size();
  }
  if (product != c.size()) return {};
  for (int o : owner) {
    if (o < 0) return {};
  }
  return out;
}

/// Deterministic GMI of a product-form constellation with uniform input:
/// the sum of per-factor GMIs, each from a tensor Gauss-Hermite rule.
[[nodiscard]] inline RateReport gmi_quadrature_2d(const LabeledConstellation& c, const AwgnSpec& spec,
                                                  std::size_t nodes = 64) {
  if (!spec.uniform()) throw std::invalid_argument("gmi_quadrature_2d: uniform input required");
  const auto factors = factor_2d(c);
  if (factors.empty()) throw std::invalid_argument("gmi_quadrature_2d: constellation is not a product of 2D factors");
  const auto gh = gauss_hermite(nodes);
  const double scale = std::sqrt(2.0 * spec.noiseVariancePerRealDim);
  RateReport r;
  r.nSamples = 0;
  for (const auto& f : factors) {
    const auto& comp = f.component;
    Demapper dm(comp, spec.noiseVariancePerRealDim);
    std::vector<double> llr(comp.bits());
    double loss = 0.0;
    for (std::size_t i = 0; i < comp.size(); ++i) {
      const auto x = comp.point(i);
      double acc = 0.0;
      for (std::size_t a = 0; a < nodes; ++a) {
        for (std::size_t b = 0; b < nodes; ++b) {
          const double y[2] = {x[0] + scale * gh.nodes[a], x[1] + scale * gh.nodes[b]};
          dm.demap(y, LlrMethod::exact, llr.data());
          acc += gh.weights[a] * gh.weights[b] * bit_metric_loss(llr.data(), dm, i);
        }
      }
      loss += acc / std::numbers::pi;
    }
    r.gmi_bits_per_sym += static_cast<double>(comp.bits()) - loss / static_cast<double>(comp.size());
  }
  r.mi_bits_per_sym = std::numeric_limits<double>::quiet_NaN();
  return r;
}

/// SNR (dB) at which `rate(snr)` crosses `target`, by bisection on [lo, hi].
/// `rate` must be increasing in SNR.
template <class RateFn>
[[nodiscard]] double snr_at_rate(RateFn&& rate, double target, double lo, double hi, double tol = 1e-3) {
  double flo = rate(lo) - target;
  double fhi = rate(hi) - target;
  if (flo > 0.0 || fhi < 0.0) throw std::domain_error("snr_at_rate: target not bracketed");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = rate(mid) - target;
    if (fm < 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  return lo + (hi - lo) * (-flo) / (fhi - flo);
}

}  // namespace shape4d
