#pragma once

// Effective AWGN channel of a multi-span WDM link.
//
// ASE accumulates linearly with the number of spans; nonlinear interference
// (NLIN) scales with P^3 and with a modulation-dependent factor
//
//   eta = chi1 + chi2 * (mu4_hat - 2) + chi3 * (mu6_hat - 6 * mu4_hat + 6),
//
// clamped at zero, accumulating as n_spans^(1 + eps_accum). All powers are
// in normalized linear units (unit symbol energy at P = 1).

#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <string>

#include "shapegain/constellation.hpp"
#include "shapegain/errors.hpp"
#include "shapegain/rational.hpp"

namespace shapegain {

struct LinkConfig {
  int n_spans = 1;
  double span_length_km = 100.0;
  double ase_var_per_span = 4.1e-3;
  double chi1 = 0.3;
  double chi2 = 0.1;
  double chi3 = 0.0;
  double eps_accum = 0.0;
  int n_channels = 5;
  Rational fec_rate{3, 4};

  void validate() const {
    if (n_spans < 1) throw ParameterError("link: n_spans must be >= 1");
    if (!(span_length_km > 0.0)) throw ParameterError("link: span_length_km must be > 0");
    if (!(ase_var_per_span > 0.0)) throw ParameterError("link: ase_var_per_span must be > 0");
    if (!(chi1 >= 0.0)) throw ParameterError("link: chi1 must be >= 0");
    if (!std::isfinite(chi2) || !std::isfinite(chi3)) throw ParameterError("link: chi2/chi3 must be finite");
    if (!(eps_accum >= 0.0)) throw ParameterError("link: eps_accum must be >= 0");
    fec_rate.validate();
  }

  double distance_km() const { return n_spans * span_length_km; }
};

struct EffectiveChannel {
  double snr_linear = 0.0;
  double noise_variance = 0.0;

  static EffectiveChannel from_snr(double snr_linear) { return {snr_linear, 1.0 / snr_linear}; }
  double snr_db() const { return 10.0 * std::log10(snr_linear); }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Modulation-dependent NLIN factor, clamped below at zero.
inline double nlin_eta(const LinkConfig& link, const Moments& mom) {
  const double eta = link.chi1 + link.chi2 * (mom.mu4_hat - 2.0) +
                     link.chi3 * (mom.mu6_hat - 6.0 * mom.mu4_hat + 6.0);
  return eta > 0.0 ? eta : 0.0;
}

inline double ase_power(const LinkConfig& link) { return link.n_spans * link.ase_var_per_span; }

inline double nlin_power(const LinkConfig& link, double launch_power, const Moments& mom) {
  return launch_power * launch_power * launch_power * nlin_eta(link, mom) *
         std::pow(static_cast<double>(link.n_spans), 1.0 + link.eps_accum);
}

inline EffectiveChannel effective_snr(const LinkConfig& link, double launch_power, const Moments& mom) {
  if (!(launch_power > 0.0) || !std::isfinite(launch_power)) {
    throw ParameterError("effective_snr: launch power must be positive and finite");
  }
  const double noise = ase_power(link) + nlin_power(link, launch_power, mom);
  if (!(noise > 0.0)) throw InfiniteSnrError("effective_snr: no ASE and no NLIN, SNR is unbounded");
  return EffectiveChannel::from_snr(launch_power / noise);
}

struct LaunchOptimum {
  double launch_power = 0.0;
  EffectiveChannel channel;
};

/// Launch power maximizing effective_snr; at the optimum the NLIN power is
/// half the ASE power.
inline LaunchOptimum optimal_launch_power(const LinkConfig& link, const Moments& mom) {
  const double eta = nlin_eta(link, mom);
  if (!(eta > 0.0)) {
    throw UnboundedOptimumError("optimal_launch_power: NLIN factor eta <= 0, SNR grows without bound in P");
  }
  const double n = static_cast<double>(link.n_spans);
  const double p = std::cbrt(ase_power(link) / (2.0 * eta * std::pow(n, 1.0 + link.eps_accum)));
  return {p, effective_snr(link, p, mom)};
}

/// y = x + n with n circularly symmetric Gaussian, E|n|^2 = noise_variance.
template <class Rng>
cplx awgn_sample(Rng& rng, cplx x, double noise_variance) {
  if (!(noise_variance >= 0.0)) throw ParameterError("awgn_sample: negative noise variance");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sigma = std::sqrt(0.5 * noise_variance);
  const double re = gauss(rng);
  const double im = gauss(rng);
  return x + sigma * cplx(re, im);
}

}  // namespace shapegain
