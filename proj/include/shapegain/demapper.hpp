#pragma once

// Gaussian bit-metric demapping and GMI estimation.
//
// LLR convention: L_k = ln P(y | b_k = 0) - ln P(y | b_k = 1) under uniform
// symbol priors, so positive values favour bit 0. Per-bit GMI uses the BICM
// estimator I_k = 1 - E[log2(1 + exp(-(1 - 2 b_k) L_k))].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "shapegain/channel.hpp"
#include "shapegain/constellation.hpp"
#include "shapegain/errors.hpp"

namespace shapegain {

inline constexpr double kDefaultLlrClip = 50.0;

struct LlrVector {
  std::vector<double> values;
};

struct GmiReport {
  std::vector<double> per_bit;
  double total = 0.0;
  std::vector<double> per_bit_dualpol;
  double total_dualpol = 0.0;
  std::size_t n_samples = 0;
  double stderr_total = 0.0;

  int bits() const { return static_cast<int>(per_bit.size()); }

  /// Builds a report from single-polarization per-bit values; both
  /// polarizations see identical statistics.
  static GmiReport from_per_bit(std::vector<double> per_bit, std::size_t n_samples = 0, double stderr_total = 0.0) {
    GmiReport r;
    r.per_bit = std::move(per_bit);
    for (double v : r.per_bit) r.total += v;
    r.per_bit_dualpol = r.per_bit;
    r.per_bit_dualpol.insert(r.per_bit_dualpol.end(), r.per_bit.begin(), r.per_bit.end());
    r.total_dualpol = 2.0 * r.total;
    r.n_samples = n_samples;
    r.stderr_total = stderr_total;
    return r;
  }
};

/// log2(1 + exp(z)) without overflow.
inline double log2_one_plus_exp(double z) {
  const double softplus = (z > 0.0 ? z : 0.0) + std::log1p(std::exp(-std::abs(z)));
  return softplus * std::numbers::log2e;
}

/// Penalty contributed by one bit: log2(1 + exp(-(1 - 2b) L)).
inline double bit_penalty(double llr, int bit) { return log2_one_plus_exp(bit ? llr : -llr); }

enum class LlrMethod { exact, maxlog };

namespace detail {

inline double log_sum_exp(std::span<const double> a) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : a) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : a) s += std::exp(v - mx);
  return mx + std::log(s);
}

}  // namespace detail

/// Bit-metric demapper bound to one constellation; reuses scratch buffers so
/// Monte-Carlo loops do not allocate per sample.
class BitDemapper {
 public:
  explicit BitDemapper(const Constellation& c, double llr_clip = kDefaultLlrClip)
      : m_(c.bits()), points_(c.points().begin(), c.points().end()), clip_(llr_clip),
        metric_(points_.size()), set0_(points_.size() / 2), set1_(points_.size() / 2) {
    if (!(llr_clip > 0.0)) throw ParameterError("LLR clip must be > 0");
  }

  int bits() const { return m_; }

  void llrs(cplx y, double noise_variance, LlrMethod method, std::span<double> out) {
    if (!(noise_variance > 0.0)) throw ParameterError("LLR computation needs noise variance > 0");
    const double inv = 1.0 / noise_variance;
    for (std::size_t j = 0; j < points_.size(); ++j) metric_[j] = -std::norm(y - points_[j]) * inv;
    for (int k = 0; k < m_; ++k) {
      std::size_t n0 = 0, n1 = 0;
      for (std::uint32_t j = 0; j < points_.size(); ++j) {
        if (label_bit(j, k, m_)) {
          set1_[n1++] = metric_[j];
        } else {
          set0_[n0++] = metric_[j];
        }
      }
      double l;
      if (method == LlrMethod::exact) {
        l = detail::log_sum_exp(set0_) - detail::log_sum_exp(set1_);
      } else {
        l = *std::max_element(set0_.begin(), set0_.end()) - *std::max_element(set1_.begin(), set1_.end());
      }
      if (std::isnan(l)) l = 0.0;
      out[k] = std::clamp(l, -clip_, clip_);
    }
  }

 private:
  int m_;
  std::vector<cplx> points_;
  double clip_;
  std::vector<double> metric_, set0_, set1_;
};

/// Exact log-MAP LLRs (log-sum-exp), clipped to +-llr_clip.
inline LlrVector llr_exact(cplx y, const Constellation& c, double noise_variance,
                           double llr_clip = kDefaultLlrClip) {
  BitDemapper dem(c, llr_clip);
  LlrVector out{std::vector<double>(c.bits())};
  dem.llrs(y, noise_variance, LlrMethod::exact, out.values);
  return out;
}

/// Max-log approximation: each log-sum replaced by its largest term.
inline LlrVector llr_maxlog(cplx y, const Constellation& c, double noise_variance,
                            double llr_clip = kDefaultLlrClip) {
  BitDemapper dem(c, llr_clip);
  LlrVector out{std::vector<double>(c.bits())};
  dem.llrs(y, noise_variance, LlrMethod::maxlog, out.values);
  return out;
}

/// GMI estimate from explicit transmitted labels and noise realizations.
inline GmiReport accumulate_gmi(const Constellation& c, double noise_variance,
                                std::span<const std::uint32_t> labels, std::span<const cplx> noise,
                                double llr_clip = kDefaultLlrClip) {
  if (labels.size() != noise.size()) throw ParameterError("accumulate_gmi: labels/noise length mismatch");
  if (labels.empty()) throw ParameterError("accumulate_gmi: no samples");
  const int m = c.bits();
  BitDemapper dem(c, llr_clip);
  std::vector<double> llr(m);
  std::vector<double> penalty(m, 0.0);
  double sum_total = 0.0, sum_total_sq = 0.0;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const auto label = labels[s];
    dem.llrs(c.point(label) + noise[s], noise_variance, LlrMethod::exact, llr);
    double sample_total = 0.0;
    for (int k = 0; k < m; ++k) {
      const double p = bit_penalty(llr[k], label_bit(label, k, m));
      penalty[k] += p;
      sample_total += 1.0 - p;
    }
    sum_total += sample_total;
    sum_total_sq += sample_total * sample_total;
  }
  const double n = static_cast<double>(labels.size());
  std::vector<double> per_bit(m);
  for (int k = 0; k < m; ++k) per_bit[k] = std::clamp(1.0 - penalty[k] / n, 0.0, 1.0);
  double stderr_total = 0.0;
  if (labels.size() > 1) {
    const double mean = sum_total / n;
    const double var = std::max(0.0, (sum_total_sq - n * mean * mean) / (n - 1.0));
    stderr_total = std::sqrt(var / n);
  }
  return GmiReport::from_per_bit(std::move(per_bit), labels.size(), stderr_total);
}

/// Monte-Carlo per-bit GMI with stratified labels: n_samples is rounded up
/// to a multiple of M and every label is transmitted equally often.
template <class Rng>
GmiReport per_bit_gmi_mc(const Constellation& c, double noise_variance, std::size_t n_samples, Rng& rng,
                         double llr_clip = kDefaultLlrClip) {
  if (!(noise_variance > 0.0)) throw ParameterError("per_bit_gmi_mc: noise variance must be > 0");
  const std::size_t M = c.size();
  if (n_samples < M) {
    throw ParameterError("per_bit_gmi_mc: n_samples=" + std::to_string(n_samples) + " < M=" + std::to_string(M));
  }
  const std::size_t reps = (n_samples + M - 1) / M;
  std::vector<std::uint32_t> labels(reps * M);
  std::vector<cplx> noise(reps * M);
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t l = 0; l < M; ++l) {
      labels[r * M + l] = static_cast<std::uint32_t>(l);
      noise[r * M + l] = awgn_sample(rng, cplx{0.0, 0.0}, noise_variance);
    }
  }
  return accumulate_gmi(c, noise_variance, labels, noise, llr_clip);
}

struct QuadratureGrid {
  int points_per_dim = 101;
  double half_width_sigmas = 6.0;
};

inline constexpr std::size_t kQuadratureMaxPoints = 64;

/// Deterministic per-bit GMI by 2-D trapezoidal integration over the
/// complex Gaussian noise, +-half_width_sigmas per real dimension around
/// every point. Cost is O(grid^2 * M^2), limited to M <= 64.
inline std::vector<double> gmi_oracle_quadrature_per_bit(const Constellation& c, double noise_variance,
                                                         QuadratureGrid grid = {},
                                                         double llr_clip = kDefaultLlrClip) {
  if (c.size() > kQuadratureMaxPoints) {
    throw CapabilityError("gmi_oracle_quadrature: M=" + std::to_string(c.size()) + " exceeds 64");
  }
  if (!(noise_variance > 0.0)) throw ParameterError("gmi_oracle_quadrature: noise variance must be > 0");
  if (grid.points_per_dim < 3 || !(grid.half_width_sigmas > 0.0)) {
    throw ParameterError("gmi_oracle_quadrature: invalid grid");
  }
  const int g = grid.points_per_dim;
  const double sigma_dim = std::sqrt(0.5 * noise_variance);
  const double half = grid.half_width_sigmas * sigma_dim;
  const double step = 2.0 * half / (g - 1);
  std::vector<double> nodes(g), weights(g);
  double wsum = 0.0;
  for (int i = 0; i < g; ++i) {
    nodes[i] = -half + step * i;
    const double z = nodes[i] / sigma_dim;
    weights[i] = std::exp(-0.5 * z * z) * ((i == 0 || i == g - 1) ? 0.5 : 1.0);
    wsum += weights[i];
  }
  for (auto& w : weights) w /= wsum;

  const int m = c.bits();
  BitDemapper dem(c, llr_clip);
  std::vector<double> llr(m);
  std::vector<double> penalty(m, 0.0);
  for (std::uint32_t label = 0; label < c.size(); ++label) {
    const cplx x = c.point(label);
    for (int a = 0; a < g; ++a) {
      for (int b = 0; b < g; ++b) {
        const double w = weights[a] * weights[b];
        dem.llrs(x + cplx(nodes[a], nodes[b]), noise_variance, LlrMethod::exact, llr);
        for (int k = 0; k < m; ++k) penalty[k] += w * bit_penalty(llr[k], label_bit(label, k, m));
      }
    }
  }
  std::vector<double> per_bit(m);
  for (int k = 0; k < m; ++k) {
    per_bit[k] = std::clamp(1.0 - penalty[k] / static_cast<double>(c.size()), 0.0, 1.0);
  }
  return per_bit;
}

inline double gmi_oracle_quadrature(const Constellation& c, double noise_variance, QuadratureGrid grid = {},
                                    double llr_clip = kDefaultLlrClip) {
  double total = 0.0;
  for (double v : gmi_oracle_quadrature_per_bit(c, noise_variance, grid, llr_clip)) total += v;
  return total;
}

}  // namespace shapegain
