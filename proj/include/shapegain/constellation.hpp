#pragma once

// Bit-labeled constellations: uniform QAM baselines, power moments and
// detection of many-to-one (merged) point clusters.
//
// Label convention: points[i] is the symbol for the label whose unsigned
// integer value is i. Bit position 0 is the most significant bit of the
// label, so bit k of label i is (i >> (m - 1 - k)) & 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shapegain/errors.hpp"

namespace shapegain {

using cplx = std::complex<double>;

inline constexpr int kMaxBits = 10;

/// Bit k (0 = MSB) of an m-bit label.
constexpr int label_bit(std::uint32_t label, int k, int m) {
  return static_cast<int>((label >> (m - 1 - k)) & 1U);
}

constexpr std::uint32_t gray_encode(std::uint32_t v) { return v ^ (v >> 1); }

constexpr std::uint32_t gray_decode(std::uint32_t g) {
  std::uint32_t v = g;
  for (std::uint32_t shift = 1; shift < 32; shift <<= 1) v ^= v >> shift;
  return v;
}

struct ConstellationMetadata {
  std::string generator;
  std::optional<double> trained_snr_db;
  std::optional<std::uint64_t> seed;

  friend bool operator==(const ConstellationMetadata&, const ConstellationMetadata&) = default;
};

class Constellation {
 public:
  Constellation(int m, std::vector<cplx> points, ConstellationMetadata metadata = {})
      : m_(m), points_(std::move(points)), metadata_(std::move(metadata)) {
    if (m_ < 1 || m_ > kMaxBits) {
      throw ParameterError("bits per symbol m=" + std::to_string(m_) + " outside [1, " +
                           std::to_string(kMaxBits) + "]");
    }
    if (points_.size() != (std::size_t{1} << m_)) {
      throw ParameterError("constellation with m=" + std::to_string(m_) + " needs " +
                           std::to_string(std::size_t{1} << m_) + " points, got " +
                           std::to_string(points_.size()));
    }
    for (const auto& p : points_) {
      if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) {
        throw ParameterError("constellation point is not finite");
      }
    }
  }

  int bits() const { return m_; }
  std::size_t size() const { return points_.size(); }
  std::span<const cplx> points() const { return points_; }
  const cplx& point(std::size_t label) const { return points_[label]; }
  const ConstellationMetadata& metadata() const { return metadata_; }
  void set_metadata(ConstellationMetadata metadata) { metadata_ = std::move(metadata); }

  double average_power() const {
    double acc = 0.0;
    for (const auto& p : points_) acc += std::norm(p);
    return acc / static_cast<double>(points_.size());
  }

 private:
  int m_;
  std::vector<cplx> points_;
  ConstellationMetadata metadata_;
};

struct Moments {
  double mu2 = 0.0;
  double mu4_hat = 0.0;
  double mu6_hat = 0.0;
};

struct MomCluster {
  std::vector<std::uint32_t> member_labels;  // ascending
  cplx centroid;
  std::vector<int> ambiguous_bit_positions;  // ascending
  std::vector<int> shared_bit_positions;     // ascending
};

/// Scales all points by one positive factor so the average power is 1.
inline Constellation normalize(const Constellation& c) {
  const double power = c.average_power();
  if (!(power > 0.0)) throw DegenerateInputError("cannot normalize a zero-power constellation");
  const double scale = 1.0 / std::sqrt(power);
  std::vector<cplx> pts(c.points().begin(), c.points().end());
  for (auto& p : pts) p *= scale;
  return Constellation(c.bits(), std::move(pts), c.metadata());
}

inline Moments moments(const Constellation& c) {
  double s2 = 0.0, s4 = 0.0, s6 = 0.0;
  for (const auto& p : c.points()) {
    const double e = std::norm(p);
    s2 += e;
    s4 += e * e;
    s6 += e * e * e;
  }
  const double inv_m = 1.0 / static_cast<double>(c.size());
  Moments mom;
  mom.mu2 = s2 * inv_m;
  if (!(mom.mu2 > 0.0)) throw DegenerateInputError("moments of a zero-power constellation");
  mom.mu4_hat = s4 * inv_m / (mom.mu2 * mom.mu2);
  mom.mu6_hat = s6 * inv_m / (mom.mu2 * mom.mu2 * mom.mu2);
  return mom;
}

inline double min_distance(const Constellation& c) {
  const auto pts = c.points();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, std::abs(pts[i] - pts[j]));
  return best;
}

namespace detail {

// Per-axis amplitude for a Gray-coded axis value: value 0 maps to the most
// positive level, adjacent levels differ in one bit.
constexpr int gray_level(std::uint32_t axis_value, int axis_bits) {
  const int levels = 1 << axis_bits;
  return levels - 1 - 2 * static_cast<int>(gray_decode(axis_value));
}

}  // namespace detail

/// Uniform QAM with Gray labeling: square for even m, rectangular 4x2 for
/// m = 3 and cross QAM (quasi-Gray) for odd m >= 5. The first ceil(m/2)
/// label bits select the I level, the rest the Q level.
inline Constellation uniform_qam(int m) {
  if (m < 1 || m > kMaxBits) {
    throw ParameterError("uniform_qam: m=" + std::to_string(m) + " outside [1, 10]");
  }
  const std::size_t size = std::size_t{1} << m;
  std::vector<cplx> pts(size);
  if (m == 1) {
    pts = {cplx(1.0, 0.0), cplx(-1.0, 0.0)};
  } else {
    const int i_bits = (m + 1) / 2;
    const int q_bits = m / 2;
    const std::uint32_t q_mask = (1U << q_bits) - 1U;
    const bool cross = (m % 2 == 1) && m >= 5;
    // Cross QAM: columns beyond |I| = cross_edge fold onto the rows above
    // and below the central rectangle.
    const int i_max = (1 << i_bits) - 1;
    const int cross_edge = cross ? 3 * (1 << ((m - 5) / 2)) * 2 - 1 : i_max;
    for (std::uint32_t label = 0; label < size; ++label) {
      int ii = detail::gray_level(label >> q_bits, i_bits);
      int qq = detail::gray_level(label & q_mask, q_bits);
      if (cross && std::abs(ii) > cross_edge) {
        const int si = ii > 0 ? 1 : -1;
        const int sq = qq > 0 ? 1 : -1;
        const int folded_i = si * std::abs(qq);
        const int folded_q = sq * (std::abs(ii) - (i_max - cross_edge));
        ii = folded_i;
        qq = folded_q;
      }
      pts[label] = cplx(ii, qq);
    }
  }
  ConstellationMetadata meta;
  meta.generator = "uniform-qam";
  return normalize(Constellation(m, std::move(pts), std::move(meta)));
}

/// Single-linkage clustering of points at distance threshold epsilon. Only
/// clusters with two or more members are returned, largest first, ties by
/// smallest member label.
inline std::vector<MomCluster> detect_mom_clusters(const Constellation& c, double epsilon) {
  if (!(epsilon > 0.0)) throw ParameterError("detect_mom_clusters: epsilon must be > 0");
  const auto pts = c.points();
  const std::size_t n = pts.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(pts[i] - pts[j]) <= epsilon) {
        const auto a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<std::uint32_t>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(static_cast<std::uint32_t>(i));

  const int m = c.bits();
  std::vector<MomCluster> clusters;
  for (auto& members : groups) {
    if (members.size() < 2) continue;
    MomCluster cl;
    cl.member_labels = std::move(members);
    cplx sum{0.0, 0.0};
    std::uint32_t varying = 0;
    for (auto label : cl.member_labels) {
      sum += pts[label];
      varying |= label ^ cl.member_labels.front();
    }
    cl.centroid = sum / static_cast<double>(cl.member_labels.size());
    for (int k = 0; k < m; ++k) {
      if (label_bit(varying, k, m)) {
        cl.ambiguous_bit_positions.push_back(k);
      } else {
        cl.shared_bit_positions.push_back(k);
      }
    }
    clusters.push_back(std::move(cl));
  }
  std::sort(clusters.begin(), clusters.end(), [](const MomCluster& a, const MomCluster& b) {
    if (a.member_labels.size() != b.member_labels.size())
      return a.member_labels.size() > b.member_labels.size();
    return a.member_labels.front() < b.member_labels.front();
  });
  return clusters;
}

}  // namespace shapegain
