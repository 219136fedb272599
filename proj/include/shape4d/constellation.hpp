#pragma once

// Labeled multidimensional constellations and the orthant-symmetric
// construction: a first-orthant seed {T, L} is mirrored into all 2^N
// orthants, with N leading label bits selecting the orthant.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace shape4d {

/// Bit label of one point. Bit b_1 is the most significant of the m bits.
using Label = std::uint32_t;

inline constexpr std::size_t kMaxLabelBits = 24;

/// Value of bit k (0-based, k = 0 is b_1) of an m-bit label.
[[nodiscard]] constexpr int label_bit(Label label, std::size_t bits, std::size_t k) noexcept {
  return static_cast<int>((label >> (bits - 1 - k)) & 1U);
}

[[nodiscard]] inline std::string label_string(Label label, std::size_t bits) {
  std::string s(bits, '0');
  for (std::size_t k = 0; k < bits; ++k) {
    if (label_bit(label, bits, k) != 0) s[k] = '1';
  }
  return s;
}

namespace detail {

inline void check_labels_enumerate(std::span<const Label> labels, std::size_t bits, const char* what) {
  const std::size_t count = std::size_t{1} << bits;
  if (labels.size() != count) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(count) + " labels, got " +
                                std::to_string(labels.size()));
  }
  std::vector<bool> seen(count, false);
  for (Label l : labels) {
    if (l >= count) throw std::invalid_argument(std::string(what) + ": label out of range");
    if (seen[l]) throw std::invalid_argument(std::string(what) + ": duplicate label " + label_string(l, bits));
    seen[l] = true;
  }
}

}  // namespace detail

/// M points in N real dimensions together with an M x m binary labeling
/// that enumerates {0,1}^m exactly once. Immutable after construction.
class LabeledConstellation {
 public:
  LabeledConstellation() = default;

  /// `points` is row-major M x N; `labels[i]` labels row i.
  LabeledConstellation(std::size_t dims, std::size_t bits, std::vector<double> points, std::vector<Label> labels)
      : dims_(dims), bits_(bits), points_(std::move(points)), labels_(std::move(labels)) {
    validate();
  }

  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] std::size_t dims() const noexcept { return dims_; }
  [[nodiscard]] std::size_t bits() const noexcept { return bits_; }
  [[nodiscard]] bool empty() const noexcept { return labels_.empty(); }

  [[nodiscard]] std::span<const double> point(std::size_t i) const noexcept {
    return {points_.data() + i * dims_, dims_};
  }
  [[nodiscard]] std::span<const double> coordinates() const noexcept { return points_; }
  [[nodiscard]] Label label(std::size_t i) const noexcept { return labels_[i]; }
  [[nodiscard]] std::span<const Label> labels() const noexcept { return labels_; }
  [[nodiscard]] int bit(std::size_t i, std::size_t k) const noexcept { return label_bit(labels_[i], bits_, k); }

  [[nodiscard]] double energy(std::size_t i) const noexcept {
    double e = 0.0;
    for (double v : point(i)) e += v * v;
    return e;
  }

  [[nodiscard]] double mean_energy() const noexcept {
    if (empty()) return 0.0;
    double e = 0.0;
    for (double v : points_) e += v * v;
    return e / static_cast<double>(size());
  }

  /// Row index carrying `label`.
  [[nodiscard]] std::size_t index_of(Label label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw std::out_of_range("label not present in constellation");
    return static_cast<std::size_t>(it - labels_.begin());
  }

 private:
  void validate() const {
    if (dims_ == 0) throw std::invalid_argument("constellation: dimension count must be positive");
    if (bits_ == 0 || bits_ > kMaxLabelBits) throw std::invalid_argument("constellation: bits per symbol out of range");
    detail::check_labels_enumerate(labels_, bits_, "constellation");
    if (points_.size() != labels_.size() * dims_) {
      throw std::invalid_argument("constellation: point matrix does not have M x N entries");
    }
    for (double v : points_) {
      if (!std::isfinite(v)) throw std::invalid_argument("constellation: non-finite coordinate");
    }
    std::vector<std::size_t> order(size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto row_less = [this](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(point(a).begin(), point(a).end(), point(b).begin(), point(b).end());
    };
    std::sort(order.begin(), order.end(), row_less);
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (std::equal(point(order[i]).begin(), point(order[i]).end(), point(order[i - 1]).begin())) {
        throw std::invalid_argument("constellation: rows " + std::to_string(order[i - 1]) + " and " +
                                    std::to_string(order[i]) + " are identical points");
      }
    }
  }

  std::size_t dims_ = 0;
  std::size_t bits_ = 0;
  std::vector<double> points_;
  std::vector<Label> labels_;
};

/// Uniformly rescale so the mean squared norm equals `es`. Labels are untouched.
[[nodiscard]] inline LabeledConstellation normalize(const LabeledConstellation& c, double es) {
  if (c.empty()) throw std::invalid_argument("normalize: empty constellation");
  if (!(es > 0.0)) throw std::invalid_argument("normalize: target energy must be positive");
  const double current = c.mean_energy();
  if (!(current > 0.0)) throw std::invalid_argument("normalize: all-zero constellation");
  const double scale = std::sqrt(es / current);
  std::vector<double> pts(c.coordinates().begin(), c.coordinates().end());
  for (double& v : pts) v *= scale;
  return {c.dims(), c.bits(), std::move(pts), {c.labels().begin(), c.labels().end()}};
}

/// The pair {T, L_q}: 2^q nonnegative points of the first orthant and a
/// labeling of order q = m - N.
class FirstOrthantSeed {
 public:
  FirstOrthantSeed() = default;

  FirstOrthantSeed(std::size_t dims, std::size_t bits, std::vector<double> points, std::vector<Label> labels)
      : dims_(dims), bits_(bits), points_(std::move(points)), labels_(std::move(labels)) {
    if (dims_ == 0) throw std::invalid_argument("seed: dimension count must be positive");
    if (bits_ > kMaxLabelBits) throw std::invalid_argument("seed: label order out of range");
    detail::check_labels_enumerate(labels_, bits_, "seed");
    if (points_.size() != labels_.size() * dims_) throw std::invalid_argument("seed: point matrix has wrong size");
    for (double v : points_) {
      if (!std::isfinite(v)) throw std::invalid_argument("seed: non-finite coordinate");
      if (v < 0.0) throw std::invalid_argument("seed: negative coordinate in first-orthant seed");
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] std::size_t dims() const noexcept { return dims_; }
  /// Order of the in-orthant labeling, m - N.
  [[nodiscard]] std::size_t bits() const noexcept { return bits_; }
  [[nodiscard]] std::span<const double> point(std::size_t j) const noexcept {
    return {points_.data() + j * dims_, dims_};
  }
  [[nodiscard]] std::span<const double> coordinates() const noexcept { return points_; }
  [[nodiscard]] Label label(std::size_t j) const noexcept { return labels_[j]; }
  [[nodiscard]] std::span<const Label> labels() const noexcept { return labels_; }

  [[nodiscard]] FirstOrthantSeed with_points(std::vector<double> points) const {
    return {dims_, bits_, std::move(points), labels_};
  }
  [[nodiscard]] FirstOrthantSeed with_labels(std::vector<Label> labels) const {
    return {dims_, bits_, points_, std::move(labels)};
  }

 private:
  std::size_t dims_ = 0;
  std::size_t bits_ = 0;
  std::vector<double> points_;
  std::vector<Label> labels_;
};

/// The 2^N diagonal sign matrices H_k. Matrix k mirrors dimension d iff bit d
/// (least significant first) of k is set, so k = 0 is the identity.
class MirrorSet {
 public:
  explicit MirrorSet(std::size_t dims) : dims_(dims) {
    if (dims < 1 || dims > 16) throw std::invalid_argument("mirror_matrices: dimension must be in [1, 16]");
  }

  [[nodiscard]] std::size_t dims() const noexcept { return dims_; }
  [[nodiscard]] std::size_t size() const noexcept { return std::size_t{1} << dims_; }

  [[nodiscard]] int sign(std::size_t k, std::size_t d) const noexcept { return ((k >> d) & 1U) != 0 ? -1 : 1; }

  [[nodiscard]] std::vector<int> diagonal(std::size_t k) const {
    std::vector<int> diag(dims_);
    for (std::size_t d = 0; d < dims_; ++d) diag[d] = sign(k, d);
    return diag;
  }

  /// Dense row-major N x N form of H_k.
  [[nodiscard]] std::vector<double> matrix(std::size_t k) const {
    std::vector<double> h(dims_ * dims_, 0.0);
    for (std::size_t d = 0; d < dims_; ++d) h[d * dims_ + d] = sign(k, d);
    return h;
  }

  /// Orthant-selecting label l_k as an N-bit label: bit b_d is 1 iff
  /// dimension d is mirrored.
  [[nodiscard]] Label orthant_label(std::size_t k) const noexcept {
    Label l = 0;
    for (std::size_t d = 0; d < dims_; ++d) {
      if (((k >> d) & 1U) != 0) l |= Label{1} << (dims_ - 1 - d);
    }
    return l;
  }

 private:
  std::size_t dims_;
};

[[nodiscard]] inline MirrorSet mirror_matrices(std::size_t dims) { return MirrorSet(dims); }

/// Mirror the seed into every orthant: block k holds T H_k with labels
/// [l_k | L_q], blocks in mirror_matrices order.
[[nodiscard]] inline LabeledConstellation expand_orthant_symmetric(const FirstOrthantSeed& seed) {
  const std::size_t n = seed.dims();
  const MirrorSet mirrors(n);
  for (double v : seed.coordinates()) {
    if (!(v > 0.0)) throw std::invalid_argument("expand_orthant_symmetric: seed coordinate on an orthant boundary");
  }
  const std::size_t bits = n + seed.bits();
  if (bits > kMaxLabelBits) throw std::invalid_argument("expand_orthant_symmetric: too many label bits");
  std::vector<double> pts;
  std::vector<Label> labels;
  pts.reserve(mirrors.size() * seed.size() * n);
  labels.reserve(mirrors.size() * seed.size());
  for (std::size_t k = 0; k < mirrors.size(); ++k) {
    const Label prefix = mirrors.orthant_label(k) << seed.bits();
    for (std::size_t j = 0; j < seed.size(); ++j) {
      const auto t = seed.point(j);
      for (std::size_t d = 0; d < n; ++d) pts.push_back(mirrors.sign(k, d) * t[d]);
      labels.push_back(prefix | seed.label(j));
    }
  }
  return {n, bits, std::move(pts), std::move(labels)};
}

/// Either the seed of an orthant-symmetric constellation or the first
/// violated condition.
struct OrthantExtraction {
  std::optional<FirstOrthantSeed> seed;
  std::string violation;

  [[nodiscard]] bool symmetric() const noexcept { return seed.has_value(); }
};

/// Recover {T, L_q} such that expanding it reproduces `c` up to row order.
/// The N leading label bits must select the orthant (1 = negative coordinate).
[[nodiscard]] inline OrthantExtraction extract_first_orthant(const LabeledConstellation& c, double relTol = 1e-9) {
  OrthantExtraction out;
  const std::size_t n = c.dims();
  if (n > 16 || c.bits() < n) {
    out.violation = "fewer label bits than dimensions";
    return out;
  }
  const std::size_t q = c.bits() - n;
  const Label inner_mask = (Label{1} << q) - 1U;
  double scale = 0.0;
  for (double v : c.coordinates()) scale = std::max(scale, std::abs(v));
  const double tol = relTol * std::max(scale, 1e-300);

  auto orthant_of = [&](std::size_t i) {
    Label o = 0;
    const auto p = c.point(i);
    for (std::size_t d = 0; d < n; ++d) {
      if (p[d] < 0.0) o |= Label{1} << (n - 1 - d);
    }
    return o;
  };

  std::vector<std::size_t> seed_row(std::size_t{1} << q, c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (double v : c.point(i)) {
      if (std::abs(v) <= tol) {
        out.violation = "point " + std::to_string(i) + " lies on an orthant boundary";
        return out;
      }
    }
    const Label o = orthant_of(i);
    if ((c.label(i) >> q) != o) {
      out.violation = "point " + std::to_string(i) + " has orthant bits " + label_string(c.label(i) >> q, n) +
                      " but lies in orthant " + label_string(o, n);
      return out;
    }
    if (o == 0) seed_row[c.label(i) & inner_mask] = i;
  }

  std::vector<double> pts;
  std::vector<Label> labels;
  for (std::size_t j = 0; j < seed_row.size(); ++j) {
    const auto p = c.point(seed_row[j]);
    pts.insert(pts.end(), p.begin(), p.end());
    labels.push_back(static_cast<Label>(j));
  }

  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto t = c.point(seed_row[c.label(i) & inner_mask]);
    const auto p = c.point(i);
    for (std::size_t d = 0; d < n; ++d) {
      if (std::abs(std::abs(p[d]) - t[d]) > tol) {
        out.violation = "point " + std::to_string(i) + " is not the mirror image of its first-orthant point";
        return out;
      }
    }
  }
  out.seed.emplace(n, q, std::move(pts), std::move(labels));
  return out;
}

/// True when the constellation satisfies the orthant-symmetric definition.
[[nodiscard]] inline bool is_orthant_symmetric(const LabeledConstellation& c) {
  return extract_first_orthant(c).symmetric();
}

/// Points of `c` lying strictly inside the first orthant, relabeled 0..K-1 in
/// row order. Used to seed orthant-symmetric optimization from a format that
/// is not itself orthant symmetric.
[[nodiscard]] inline FirstOrthantSeed first_orthant_points(const LabeledConstellation& c) {
  std::vector<double> pts;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto p = c.point(i);
    if (std::all_of(p.begin(), p.end(), [](double v) { return v > 0.0; })) pts.insert(pts.end(), p.begin(), p.end());
  }
  const std::size_t count = pts.size() / c.dims();
  if (count == 0 || !std::has_single_bit(count)) {
    throw std::invalid_argument("first_orthant_points: first orthant does not hold a power-of-two point count");
  }
  std::vector<Label> labels(count);
  std::iota(labels.begin(), labels.end(), Label{0});
  return {c.dims(), static_cast<std::size_t>(std::countr_zero(count)), std::move(pts), std::move(labels)};
}

}  // namespace shape4d
