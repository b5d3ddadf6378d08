#pragma once

// Dummy-bit planning for rate adaptivity. Dual-polarization bit levels are
// indexed 0..m-1 for polarization X and m..2m-1 for polarization Y. Dummy
// levels carry uniform random bits and no data; the net rate per dual-pol
// symbol is R' = (2m - n_d) R.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "shapegain/demapper.hpp"
#include "shapegain/errors.hpp"
#include "shapegain/rational.hpp"

namespace shapegain {

struct RateAdaptPlan {
  int m = 0;
  int n_d = 0;
  Rational fec_rate;
  std::vector<int> dummy_positions;  // ascending, in [0, 2m)
  double net_rate = 0.0;
  double data_gmi = 0.0;
  std::pair<double, double> per_pol_data_gmi{0.0, 0.0};

  bool feasible() const { return data_gmi >= net_rate; }

  bool is_dummy(int position) const {
    return std::binary_search(dummy_positions.begin(), dummy_positions.end(), position);
  }

  /// 2m characters, '1' at dummy positions.
  std::string dual_pol_mask() const {
    std::string mask(2 * m, '0');
    for (int p : dummy_positions) mask[p] = '1';
    return mask;
  }
};

inline double net_rate(int m, int n_d, Rational fec_rate) {
  fec_rate.validate();
  if (m < 1) throw ParameterError("net_rate: m must be >= 1");
  if (n_d < 0 || n_d > 2 * m) {
    throw ParameterError("net_rate: n_d=" + std::to_string(n_d) + " outside [0, " + std::to_string(2 * m) + "]");
  }
  return fec_rate.times(2 * m - n_d);
}

namespace detail {

// The k lowest-GMI levels of one polarization, ties by lowest index.
inline std::vector<int> weakest_levels(std::span<const double> pol_gmi, int k) {
  std::vector<int> idx(pol_gmi.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return pol_gmi[a] < pol_gmi[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline double data_sum(std::span<const double> pol_gmi, const std::vector<int>& dummies) {
  double s = 0.0;
  for (std::size_t i = 0; i < pol_gmi.size(); ++i) {
    if (!std::binary_search(dummies.begin(), dummies.end(), static_cast<int>(i))) s += pol_gmi[i];
  }
  return s;
}

}  // namespace detail

/// Chooses n_d dummy levels from the lowest per-bit GMIs. Even n_d splits
/// evenly across polarizations; odd n_d takes whichever uneven split leaves
/// the two polarizations' data GMI closest (ties put the extra dummy on X).
inline RateAdaptPlan select_dummy_bits(const GmiReport& report, int n_d, Rational fec_rate) {
  const int m = report.bits();
  if (m < 1 || report.per_bit_dualpol.size() != static_cast<std::size_t>(2 * m)) {
    throw ParameterError("select_dummy_bits: malformed GMI report");
  }
  RateAdaptPlan plan;
  plan.m = m;
  plan.n_d = n_d;
  plan.fec_rate = fec_rate;
  plan.net_rate = net_rate(m, n_d, fec_rate);

  const std::span<const double> x(report.per_bit_dualpol.data(), m);
  const std::span<const double> y(report.per_bit_dualpol.data() + m, m);

  auto evaluate = [&](int kx, int ky) {
    auto dx = detail::weakest_levels(x, kx);
    auto dy = detail::weakest_levels(y, ky);
    const double gx = detail::data_sum(x, dx);
    const double gy = detail::data_sum(y, dy);
    return std::make_tuple(std::move(dx), std::move(dy), gx, gy);
  };

  auto [dx, dy, gx, gy] = evaluate((n_d + 1) / 2, n_d / 2);
  if (n_d % 2 == 1) {
    auto [ax, ay, agx, agy] = evaluate(n_d / 2, (n_d + 1) / 2);
    if (std::abs(agx - agy) < std::abs(gx - gy)) {
      dx = std::move(ax);
      dy = std::move(ay);
      gx = agx;
      gy = agy;
    }
  }
  for (int p : dx) plan.dummy_positions.push_back(p);
  for (int p : dy) plan.dummy_positions.push_back(m + p);
  plan.per_pol_data_gmi = {gx, gy};
  plan.data_gmi = std::max(0.0, gx + gy);
  return plan;
}

/// The feasible plan (data GMI >= net rate) with the highest net rate over
/// n_d = 0..2m; n_d = 2m is always feasible.
inline RateAdaptPlan best_plan(const GmiReport& report, Rational fec_rate, int max_n_d = -1) {
  const int m = report.bits();
  const int limit = max_n_d < 0 ? 2 * m : std::min(max_n_d, 2 * m);
  std::optional<RateAdaptPlan> best;
  for (int n_d = 0; n_d <= limit; ++n_d) {
    auto plan = select_dummy_bits(report, n_d, fec_rate);
    if (plan.feasible() && (!best || plan.net_rate > best->net_rate)) best = std::move(plan);
  }
  if (!best) return select_dummy_bits(report, 2 * m, fec_rate);
  return *best;
}

struct LabelPair {
  std::uint32_t x = 0;
  std::uint32_t y = 0;

  friend bool operator==(const LabelPair&, const LabelPair&) = default;
};

/// Frames data bits (values 0/1) into dual-pol label pairs: each symbol
/// consumes 2m - n_d data bits in non-dummy positions (index order); dummy
/// positions get uniform random bits from rng.
template <class Rng>
std::vector<LabelPair> assemble_labels(std::span<const std::uint8_t> data_bits, const RateAdaptPlan& plan, int m,
                                       Rng& rng) {
  if (plan.m != m) throw ParameterError("assemble_labels: plan is for m=" + std::to_string(plan.m));
  const int per_symbol = 2 * m - plan.n_d;
  if (per_symbol <= 0) throw FramingError("assemble_labels: plan leaves no data positions");
  if (data_bits.size() % per_symbol != 0) {
    throw FramingError("assemble_labels: " + std::to_string(data_bits.size()) +
                       " data bits is not a multiple of " + std::to_string(per_symbol));
  }
  std::vector<bool> dummy(2 * m, false);
  for (int p : plan.dummy_positions) dummy[p] = true;
  std::bernoulli_distribution coin(0.5);
  std::vector<LabelPair> out(data_bits.size() / per_symbol);
  std::size_t cursor = 0;
  for (auto& pair : out) {
    for (int p = 0; p < 2 * m; ++p) {
      const std::uint32_t bit = dummy[p] ? (coin(rng) ? 1U : 0U) : (data_bits[cursor++] & 1U);
      auto& label = p < m ? pair.x : pair.y;
      label = (label << 1) | bit;
    }
  }
  return out;
}

/// Inverse of assemble_labels on the data positions.
inline std::vector<std::uint8_t> strip_dummy_bits(std::span<const LabelPair> labels, const RateAdaptPlan& plan, int m) {
  if (plan.m != m) throw ParameterError("strip_dummy_bits: plan is for m=" + std::to_string(plan.m));
  std::vector<bool> dummy(2 * m, false);
  for (int p : plan.dummy_positions) dummy[p] = true;
  std::vector<std::uint8_t> bits;
  bits.reserve(labels.size() * static_cast<std::size_t>(2 * m - plan.n_d));
  for (const auto& pair : labels) {
    for (int p = 0; p < 2 * m; ++p) {
      if (dummy[p]) continue;
      const auto label = p < m ? pair.x : pair.y;
      bits.push_back(static_cast<std::uint8_t>(label_bit(label, p % m, m)));
    }
  }
  return bits;
}

}  // namespace shapegain
