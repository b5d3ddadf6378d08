#pragma once

// End-to-end constellation learning.
//
// The mapper is a trainable table of M complex points; the forward pass
// normalizes it to unit average power. The demapper is either the Gaussian
// bit metric evaluated at the current points ("gaussian") or a small MLP
// from (Re y, Im y) to m LLRs ("mlp"). The loss is the BICM surrogate
//
//   loss = (1/S) sum_s sum_k log2(1 + exp(-(1 - 2 b_ks) L_ks))
//
// so that m - loss is the surrogate GMI in bits/symbol. Gradients are
// computed by reverse-mode accumulation written out for this graph:
// LLR -> received sample -> normalized points -> raw points, plus the MLP
// weights in mlp mode.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "shapegain/channel.hpp"
#include "shapegain/constellation.hpp"
#include "shapegain/demapper.hpp"
#include "shapegain/errors.hpp"

namespace shapegain {

enum class DemapperMode { gaussian, mlp };
enum class InitMode { random, qam };
enum class Activation { relu, tanh };

struct SnrTarget {
  double snr_db = 10.0;
};

// launch_power empty means "optimal for the current constellation moments".
struct LinkTarget {
  LinkConfig link;
  std::optional<double> launch_power;
};

using TrainTarget = std::variant<SnrTarget, LinkTarget>;

struct MlpSpec {
  std::vector<int> hidden{64, 64};
  Activation activation = Activation::relu;
};

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  int m = 4;
  TrainTarget target = SnrTarget{};
  DemapperMode demapper_mode = DemapperMode::gaussian;
  MlpSpec mlp;
  int iterations = 2000;
  int batch_symbols = 1024;
  AdamHyper adam;
  std::uint64_t seed = 1;
  InitMode init = InitMode::qam;
  double init_jitter = 0.01;
  // Link targets only: iterations between re-resolving the noise variance
  // from the current constellation moments.
  int refresh_every = 200;

  void validate() const {
    if (m < 1 || m > kMaxBits) throw ParameterError("train: m outside [1, 10]");
    if (iterations < 0) throw ParameterError("train: iterations must be >= 0");
    const int M = 1 << m;
    if (batch_symbols < M || batch_symbols % M != 0) {
      throw ParameterError("train: batch_symbols must be a positive multiple of M=" + std::to_string(M));
    }
    if (!(adam.learning_rate >= 0.0)) throw ParameterError("train: learning_rate must be >= 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
      throw ParameterError("train: Adam betas must lie in [0, 1)");
    }
    if (!(adam.eps > 0.0)) throw ParameterError("train: Adam eps must be > 0");
    if (!(init_jitter >= 0.0)) throw ParameterError("train: init_jitter must be >= 0");
    if (refresh_every < 1) throw ParameterError("train: refresh_every must be >= 1");
    for (int w : mlp.hidden) {
      if (w < 1) throw ParameterError("train: MLP hidden widths must be >= 1");
    }
    if (const auto* lt = std::get_if<LinkTarget>(&target)) {
      lt->link.validate();
      if (lt->launch_power && !(*lt->launch_power > 0.0)) throw ParameterError("train: launch power must be > 0");
    }
  }
};

struct TrainRecord {
  double loss = 0.0;
  double surrogate_gmi = 0.0;
  double grad_norm = 0.0;
};

using TrainHistory = std::vector<TrainRecord>;

// ---------------------------------------------------------------------------
// Mapper

struct MapperParams {
  int m = 0;
  std::vector<cplx> raw_points;

  double normalization_scale() const {
    double p = 0.0;
    for (const auto& r : raw_points) p += std::norm(r);
    p /= static_cast<double>(raw_points.size());
    if (!(p > 0.0) || !std::isfinite(p)) throw NumericalError("mapper power is zero or not finite");
    return 1.0 / std::sqrt(p);
  }

  std::vector<cplx> points() const {
    const double s = normalization_scale();
    std::vector<cplx> out(raw_points);
    for (auto& x : out) x *= s;
    return out;
  }

  Constellation constellation(ConstellationMetadata meta = {}) const {
    return Constellation(m, points(), std::move(meta));
  }
};

template <class Rng>
MapperParams init_mapper(const TrainConfig& config, Rng& rng) {
  config.validate();
  MapperParams params;
  params.m = config.m;
  const std::size_t M = std::size_t{1} << config.m;
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (config.init == InitMode::random) {
    params.raw_points.resize(M);
    for (auto& r : params.raw_points) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      r = cplx(re, im) * std::numbers::sqrt2 * 0.5;
    }
    params.raw_points = params.points();
  } else {
    const auto qam = uniform_qam(config.m);
    params.raw_points.assign(qam.points().begin(), qam.points().end());
    if (config.init_jitter > 0.0) {
      for (auto& r : params.raw_points) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        r += config.init_jitter * cplx(re, im);
      }
    }
  }
  return params;
}

// ---------------------------------------------------------------------------
// MLP demapper

class MlpDemapper {
 public:
  struct Layer {
    int in = 0;
    int out = 0;
    std::size_t offset = 0;  // weights (out x in, row-major) then biases
  };

  MlpDemapper() = default;

  template <class Rng>
  MlpDemapper(int m, const MlpSpec& spec, Rng& rng) : activation_(spec.activation) {
    std::vector<int> widths{2};
    widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
    widths.push_back(m);
    std::size_t offset = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      layers_.push_back({widths[i], widths[i + 1], offset});
      offset += static_cast<std::size_t>(widths[i]) * widths[i + 1] + widths[i + 1];
    }
    params_.assign(offset, 0.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const auto& L = layers_[li];
      const bool last = li + 1 == layers_.size();
      const double gain = (last || activation_ == Activation::tanh) ? 1.0 : 2.0;
      const double stdev = std::sqrt(gain / L.in);
      for (int w = 0; w < L.in * L.out; ++w) params_[L.offset + w] = stdev * gauss(rng);
    }
    int widest = 0;
    for (int w : widths) widest = std::max(widest, w);
    scratch_.assign(widths.size(), std::vector<double>(widest, 0.0));
    pre_.assign(widths.size(), std::vector<double>(widest, 0.0));
    grad_buf_.assign(widest, 0.0);
    grad_next_.assign(widest, 0.0);
  }

  int outputs() const { return layers_.empty() ? 0 : layers_.back().out; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  const std::vector<Layer>& layers() const { return layers_; }

  void forward(cplx y, std::span<double> llr) {
    scratch_[0][0] = y.real();
    scratch_[0][1] = y.imag();
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const auto& L = layers_[li];
      const bool last = li + 1 == layers_.size();
      const double* W = params_.data() + L.offset;
      const double* b = W + static_cast<std::size_t>(L.in) * L.out;
      const auto& x = scratch_[li];
      auto& z = pre_[li + 1];
      auto& h = scratch_[li + 1];
      for (int o = 0; o < L.out; ++o) {
        double acc = b[o];
        const double* row = W + static_cast<std::size_t>(o) * L.in;
        for (int i = 0; i < L.in; ++i) acc += row[i] * x[i];
        z[o] = acc;
        h[o] = last ? acc : activate(acc);
      }
    }
    const auto& outv = scratch_[layers_.size()];
    std::copy(outv.begin(), outv.begin() + outputs(), llr.begin());
  }

  // Backpropagates dloss/dLLR through the activations of the last forward()
  // call, accumulating into grad (same layout as parameters()). Returns
  // dloss/dy as a complex number.
  cplx backward(std::span<const double> dllr, std::span<double> grad) {
    std::copy(dllr.begin(), dllr.end(), grad_buf_.begin());
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const auto& L = layers_[li];
      const double* W = params_.data() + L.offset;
      double* gW = grad.data() + L.offset;
      double* gb = gW + static_cast<std::size_t>(L.in) * L.out;
      const auto& x = scratch_[li];
      std::fill(grad_next_.begin(), grad_next_.begin() + L.in, 0.0);
      for (int o = 0; o < L.out; ++o) {
        const double g = grad_buf_[o];
        if (g == 0.0) continue;
        gb[o] += g;
        const double* row = W + static_cast<std::size_t>(o) * L.in;
        double* grow = gW + static_cast<std::size_t>(o) * L.in;
        for (int i = 0; i < L.in; ++i) {
          grow[i] += g * x[i];
          grad_next_[i] += g * row[i];
        }
      }
      if (li > 0) {
        const auto& z = pre_[li];
        for (int i = 0; i < L.in; ++i) grad_buf_[i] = grad_next_[i] * activate_derivative(z[i]);
      }
    }
    return {grad_next_[0], grad_next_[1]};
  }

 private:
  double activate(double z) const {
    return activation_ == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
  }
  double activate_derivative(double z) const {
    if (activation_ == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
    const double t = std::tanh(z);
    return 1.0 - t * t;
  }

  Activation activation_ = Activation::relu;
  std::vector<Layer> layers_;
  std::vector<double> params_;
  std::vector<std::vector<double>> scratch_, pre_;
  std::vector<double> grad_buf_, grad_next_;
};

// ---------------------------------------------------------------------------
// Model = mapper + demapper, with a flat parameter view for the optimizer.

struct Model {
  MapperParams mapper;
  DemapperMode mode = DemapperMode::gaussian;
  MlpDemapper mlp;  // used in mlp mode only

  std::size_t parameter_count() const {
    return 2 * mapper.raw_points.size() + (mode == DemapperMode::mlp ? mlp.parameter_count() : 0);
  }

  std::vector<double> flatten() const {
    std::vector<double> theta;
    theta.reserve(parameter_count());
    for (const auto& r : mapper.raw_points) {
      theta.push_back(r.real());
      theta.push_back(r.imag());
    }
    if (mode == DemapperMode::mlp) {
      const auto p = mlp.parameters();
      theta.insert(theta.end(), p.begin(), p.end());
    }
    return theta;
  }

  void unflatten(std::span<const double> theta) {
    if (theta.size() != parameter_count()) throw ParameterError("model parameter vector has wrong length");
    for (std::size_t j = 0; j < mapper.raw_points.size(); ++j) {
      mapper.raw_points[j] = cplx(theta[2 * j], theta[2 * j + 1]);
    }
    if (mode == DemapperMode::mlp) {
      const auto dst = mlp.parameters();
      std::copy(theta.begin() + 2 * mapper.raw_points.size(), theta.end(), dst.begin());
    }
  }
};

struct Gradients {
  std::vector<cplx> raw_points;  // d loss / d Re + i d loss / d Im
  std::vector<double> mlp;

  std::vector<double> flatten() const {
    std::vector<double> g;
    g.reserve(2 * raw_points.size() + mlp.size());
    for (const auto& r : raw_points) {
      g.push_back(r.real());
      g.push_back(r.imag());
    }
    g.insert(g.end(), mlp.begin(), mlp.end());
    return g;
  }
};

struct Batch {
  std::vector<std::uint32_t> labels;
  std::vector<cplx> noise;
};

/// Every label appears batch_symbols / M times; noise is drawn fresh.
template <class Rng>
Batch make_batch(int m, int batch_symbols, double noise_variance, Rng& rng) {
  const std::size_t M = std::size_t{1} << m;
  if (batch_symbols < static_cast<int>(M) || batch_symbols % static_cast<int>(M) != 0) {
    throw ParameterError("batch_symbols must be a positive multiple of M");
  }
  Batch b;
  b.labels.resize(batch_symbols);
  b.noise.resize(batch_symbols);
  for (int s = 0; s < batch_symbols; ++s) {
    b.labels[s] = static_cast<std::uint32_t>(s % M);
    b.noise[s] = awgn_sample(rng, cplx{0.0, 0.0}, noise_variance);
  }
  return b;
}

struct ForwardResult {
  double loss = 0.0;
  double surrogate_gmi = 0.0;
  double norm_scale = 0.0;
  std::vector<cplx> points;    // normalized
  std::vector<cplx> received;  // per sample
  std::vector<double> llrs;    // S x m, row-major
};

namespace detail {

// Gaussian-metric LLRs with the per-subset softmax weights needed by the
// backward pass. metric/expv are scratch of size M; w0/w1 receive, for each
// bit k, the normalizing log-sums of the bit-0 and bit-1 subsets.
struct GaussianLlrWork {
  std::vector<double> metric, expv, lse0, lse1;

  explicit GaussianLlrWork(std::size_t M = 0, int m = 0) : metric(M), expv(M), lse0(m), lse1(m) {}

  void compute(std::span<const cplx> pts, int m, cplx y, double noise_variance, std::span<double> llr) {
    const std::size_t M = pts.size();
    const double inv = 1.0 / noise_variance;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < M; ++j) {
      metric[j] = -std::norm(y - pts[j]) * inv;
      mx = std::max(mx, metric[j]);
    }
    for (std::size_t j = 0; j < M; ++j) expv[j] = std::exp(metric[j] - mx);
    constexpr double kTiny = 1e-250;
    for (int k = 0; k < m; ++k) {
      double s0 = 0.0, s1 = 0.0;
      for (std::uint32_t j = 0; j < M; ++j) (label_bit(j, k, m) ? s1 : s0) += expv[j];
      lse0[k] = s0 > kTiny ? mx + std::log(s0) : subset_lse(m, k, 0);
      lse1[k] = s1 > kTiny ? mx + std::log(s1) : subset_lse(m, k, 1);
      llr[k] = lse0[k] - lse1[k];
    }
  }

  // Softmax weight of point j within its bit-k subset.
  double weight(std::uint32_t j, int k, int m) const {
    return std::exp(metric[j] - (label_bit(j, k, m) ? lse1[k] : lse0[k]));
  }

 private:
  double subset_lse(int m, int k, int bit) const {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::uint32_t j = 0; j < metric.size(); ++j)
      if (label_bit(j, k, m) == bit) mx = std::max(mx, metric[j]);
    double s = 0.0;
    for (std::uint32_t j = 0; j < metric.size(); ++j)
      if (label_bit(j, k, m) == bit) s += std::exp(metric[j] - mx);
    return mx + std::log(s);
  }
};

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// logistic(z) without overflow
inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace detail

/// Surrogate loss of a batch. Training LLRs are not clipped.
inline ForwardResult forward_loss(Model& model, const Batch& batch, double noise_variance) {
  if (!(noise_variance > 0.0)) throw ParameterError("forward_loss: noise variance must be > 0");
  if (batch.labels.empty() || batch.labels.size() != batch.noise.size()) {
    throw ParameterError("forward_loss: malformed batch");
  }
  const int m = model.mapper.m;
  ForwardResult fr;
  fr.norm_scale = model.mapper.normalization_scale();
  fr.points = model.mapper.points();
  for (const auto& p : fr.points) {
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) {
      throw NumericalError("non-finite value in normalized constellation points");
    }
  }
  const std::size_t S = batch.labels.size();
  fr.received.resize(S);
  fr.llrs.resize(S * m);
  detail::GaussianLlrWork work(fr.points.size(), m);
  double penalty = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    const auto label = batch.labels[s];
    const cplx y = fr.points[label] + batch.noise[s];
    fr.received[s] = y;
    std::span<double> llr(fr.llrs.data() + s * m, m);
    if (model.mode == DemapperMode::gaussian) {
      work.compute(fr.points, m, y, noise_variance, llr);
    } else {
      model.mlp.forward(y, llr);
    }
    if (!detail::all_finite(llr)) throw NumericalError("non-finite value in LLRs (sample " + std::to_string(s) + ")");
    for (int k = 0; k < m; ++k) penalty += bit_penalty(llr[k], label_bit(label, k, m));
  }
  fr.loss = penalty / static_cast<double>(S);
  if (!std::isfinite(fr.loss)) throw NumericalError("non-finite loss");
  fr.surrogate_gmi = static_cast<double>(m) - fr.loss;
  return fr;
}

/// Reverse-mode gradient of forward_loss with respect to the raw mapper
/// points and, in mlp mode, the MLP parameters.
inline Gradients backward(Model& model, const Batch& batch, const ForwardResult& fr, double noise_variance) {
  const int m = model.mapper.m;
  const std::size_t M = fr.points.size();
  const std::size_t S = batch.labels.size();
  const double inv_s = 1.0 / static_cast<double>(S);
  const double inv_var = 1.0 / noise_variance;

  std::vector<cplx> grad_pts(M, cplx{0.0, 0.0});
  Gradients g;
  if (model.mode == DemapperMode::mlp) g.mlp.assign(model.mlp.parameter_count(), 0.0);

  detail::GaussianLlrWork work(M, m);
  std::vector<double> dllr(m), llr_buf(m), gmetric(M);
  for (std::size_t s = 0; s < S; ++s) {
    const auto label = batch.labels[s];
    const cplx y = fr.received[s];
    const double* llr = fr.llrs.data() + s * m;
    for (int k = 0; k < m; ++k) {
      const double sign = label_bit(label, k, m) ? -1.0 : 1.0;
      dllr[k] = -sign * detail::logistic(-sign * llr[k]) * std::numbers::log2e * inv_s;
    }
    cplx grad_y{0.0, 0.0};
    if (model.mode == DemapperMode::gaussian) {
      work.compute(fr.points, m, y, noise_variance, llr_buf);
      for (std::uint32_t j = 0; j < M; ++j) {
        double gj = 0.0;
        for (int k = 0; k < m; ++k) {
          const double w = work.weight(j, k, m);
          gj += label_bit(j, k, m) ? -dllr[k] * w : dllr[k] * w;
        }
        // metric_j = -|y - x_j|^2 / var
        const cplx d = 2.0 * inv_var * gj * (y - fr.points[j]);
        grad_pts[j] += d;
        grad_y -= d;
      }
    } else {
      model.mlp.forward(y, llr_buf);
      grad_y = model.mlp.backward(dllr, g.mlp);
    }
    grad_pts[label] += grad_y;
  }

  // x_j = r_j * s, s = (mean |r|^2)^(-1/2)
  double proj = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    proj += grad_pts[j].real() * fr.points[j].real() + grad_pts[j].imag() * fr.points[j].imag();
  }
  proj /= static_cast<double>(M);
  g.raw_points.resize(M);
  for (std::size_t j = 0; j < M; ++j) g.raw_points[j] = fr.norm_scale * (grad_pts[j] - proj * fr.points[j]);

  const auto flat = g.flatten();
  if (!detail::all_finite(flat)) throw NumericalError("non-finite value in gradients");
  return g;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  std::vector<double> first;
  std::vector<double> second;
  std::int64_t step = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
};

/// Bias-corrected Adam update, in place.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      const AdamHyper& hyper) {
  if (params.size() != grads.size() || state.first.size() != params.size() || state.second.size() != params.size()) {
    throw ParameterError("adam_step: size mismatch");
  }
  state.step += 1;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.first[i] = hyper.beta1 * state.first[i] + (1.0 - hyper.beta1) * grads[i];
    state.second[i] = hyper.beta2 * state.second[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
    const double mhat = state.first[i] / c1;
    const double vhat = state.second[i] / c2;
    params[i] -= hyper.learning_rate * mhat / (std::sqrt(vhat) + hyper.eps);
  }
}

// ---------------------------------------------------------------------------
// Finite-difference gradient verification

struct GradientProbe {
  std::size_t index = 0;
  double analytic = 0.0;
  double finite_difference = 0.0;
  double relative_error = 0.0;
};

struct GradientCheckReport {
  std::vector<GradientProbe> probes;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

inline constexpr double kFiniteDifferenceStep = 1e-5;

/// Central differences on randomly chosen coordinates of theta.
/// loss_fn: (span<const double>) -> double; grad_fn: (span<const double>) -> vector<double>.
template <class LossFn, class GradFn>
GradientCheckReport gradient_check(std::vector<double> theta, LossFn&& loss_fn, GradFn&& grad_fn,
                                   std::size_t probe_count, double tolerance, std::uint64_t seed,
                                   double step = kFiniteDifferenceStep) {
  if (!(tolerance > 0.0)) throw ParameterError("gradient_check: tolerance must be > 0");
  GradientCheckReport report;
  report.tolerance = tolerance;
  const std::vector<double> analytic = grad_fn(std::span<const double>(theta));
  if (analytic.size() != theta.size()) throw ParameterError("gradient_check: gradient has wrong length");

  std::vector<std::size_t> idx(theta.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(probe_count, idx.size()));

  for (auto i : idx) {
    const double saved = theta[i];
    theta[i] = saved + step;
    const double up = loss_fn(std::span<const double>(theta));
    theta[i] = saved - step;
    const double down = loss_fn(std::span<const double>(theta));
    theta[i] = saved;
    GradientProbe p;
    p.index = i;
    p.analytic = analytic[i];
    p.finite_difference = (up - down) / (2.0 * step);
    p.relative_error = std::abs(p.analytic - p.finite_difference) / std::max(1e-8, std::abs(p.finite_difference));
    report.max_relative_error = std::max(report.max_relative_error, p.relative_error);
    if (!(p.relative_error < tolerance)) report.passed = false;
    report.probes.push_back(p);
  }
  return report;
}

/// Gradient check of the model's surrogate loss on a fixed batch.
inline GradientCheckReport gradient_check(const Model& model, const Batch& batch, double noise_variance,
                                          std::size_t probe_count, double tolerance, std::uint64_t seed) {
  Model work = model;
  auto loss_fn = [&](std::span<const double> theta) {
    work.unflatten(theta);
    return forward_loss(work, batch, noise_variance).loss;
  };
  auto grad_fn = [&](std::span<const double> theta) {
    work.unflatten(theta);
    const auto fr = forward_loss(work, batch, noise_variance);
    return backward(work, batch, fr, noise_variance).flatten();
  };
  return gradient_check(model.flatten(), loss_fn, grad_fn, probe_count, tolerance, seed);
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainResult {
  Constellation constellation;
  TrainHistory history;
  double noise_variance = 0.0;
};

namespace detail {

inline double resolve_noise_variance(const TrainTarget& target, const std::vector<cplx>& points, int m) {
  if (const auto* st = std::get_if<SnrTarget>(&target)) return 1.0 / db_to_linear(st->snr_db);
  const auto& lt = std::get<LinkTarget>(target);
  const auto mom = moments(Constellation(m, points));
  const auto ch = lt.launch_power ? effective_snr(lt.link, *lt.launch_power, mom)
                                  : optimal_launch_power(lt.link, mom).channel;
  return ch.noise_variance;
}

inline std::string generator_name(DemapperMode mode) {
  return mode == DemapperMode::gaussian ? "ae-gaussian" : "ae-mlp";
}

}  // namespace detail

inline Model make_model(const TrainConfig& config, std::mt19937_64& rng) {
  Model model;
  model.mapper = init_mapper(config, rng);
  model.mode = config.demapper_mode;
  if (config.demapper_mode == DemapperMode::mlp) model.mlp = MlpDemapper(config.m, config.mlp, rng);
  return model;
}

/// Runs config.iterations Adam steps on fresh batches. For link targets the
/// noise variance is re-resolved from the current moments every
/// refresh_every iterations and held constant in between.
inline TrainResult train(const TrainConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  Model model = make_model(config, rng);
  std::vector<double> theta = model.flatten();
  AdamState state = AdamState::zeros(theta.size());
  double noise_variance = detail::resolve_noise_variance(config.target, model.mapper.points(), config.m);

  TrainHistory history;
  history.reserve(config.iterations);
  for (int it = 0; it < config.iterations; ++it) {
    try {
      if (it > 0 && it % config.refresh_every == 0 && std::holds_alternative<LinkTarget>(config.target)) {
        noise_variance = detail::resolve_noise_variance(config.target, model.mapper.points(), config.m);
      }
      const Batch batch = make_batch(config.m, config.batch_symbols, noise_variance, rng);
      const auto fr = forward_loss(model, batch, noise_variance);
      const auto grads = backward(model, batch, fr, noise_variance).flatten();
      double sq = 0.0;
      for (double v : grads) sq += v * v;
      adam_step(theta, grads, state, config.adam);
      model.unflatten(theta);
      history.push_back({fr.loss, fr.surrogate_gmi, std::sqrt(sq)});
    } catch (const NumericalError& e) {
      throw NumericalError("training failed at iteration " + std::to_string(it) + ": " + e.what());
    }
  }

  ConstellationMetadata meta;
  meta.generator = detail::generator_name(config.demapper_mode);
  meta.trained_snr_db = linear_to_db(1.0 / noise_variance);
  meta.seed = config.seed;
  return {model.mapper.constellation(std::move(meta)), std::move(history), noise_variance};
}

}  // namespace shapegain
