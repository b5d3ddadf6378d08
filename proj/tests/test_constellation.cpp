#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include "shapegain/constellation.hpp"
#include "shapegain/constellation_io.hpp"

using namespace shapegain;

namespace {

int hamming(std::uint32_t a, std::uint32_t b) { return std::popcount(a ^ b); }

Constellation random_constellation(int m, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<cplx> pts(std::size_t{1} << m);
  for (auto& p : pts) {
    const double re = g(rng);
    const double im = g(rng);
    p = cplx(re, im);
  }
  return Constellation(m, pts);
}

}  // namespace

TEST(UniformQam, Bpsk) {
  const auto c = uniform_qam(1);
  EXPECT_EQ(c.point(0), cplx(1.0, 0.0));
  EXPECT_EQ(c.point(1), cplx(-1.0, 0.0));
}

TEST(UniformQam, QpskIsGrayAtUnitPower) {
  const auto c = uniform_qam(2);
  const double a = 1.0 / std::numbers::sqrt2;
  for (std::uint32_t l = 0; l < 4; ++l) {
    EXPECT_NEAR(std::abs(c.point(l).real()), a, 1e-15);
    EXPECT_NEAR(std::abs(c.point(l).imag()), a, 1e-15);
  }
  EXPECT_GT(c.point(0).real(), 0.0);
  EXPECT_GT(c.point(0).imag(), 0.0);
  for (std::uint32_t i = 0; i < 4; ++i)
    for (std::uint32_t j = i + 1; j < 4; ++j)
      if (std::abs(std::abs(c.point(i) - c.point(j)) - std::numbers::sqrt2) < 1e-12) EXPECT_EQ(hamming(i, j), 1);
}

TEST(UniformQam, Qam16LevelsAndPower) {
  const auto c = uniform_qam(4);
  double acc = 0.0;
  for (const auto& p : c.points()) {
    for (double v : {p.real(), p.imag()}) {
      const double level = std::abs(v) * std::sqrt(10.0);
      EXPECT_TRUE(std::abs(level - 1.0) < 1e-12 || std::abs(level - 3.0) < 1e-12) << level;
    }
    acc += std::norm(p);
  }
  EXPECT_NEAR(acc / 16.0, 1.0, 1e-12);
}

TEST(UniformQam, EveryOrderUnitPowerAndGrayForEvenM) {
  for (int m = 1; m <= 10; ++m) {
    const auto c = uniform_qam(m);
    EXPECT_NEAR(c.average_power(), 1.0, 1e-12) << "m=" << m;
    const double dmin = min_distance(c);
    EXPECT_GT(dmin, 0.0) << "m=" << m;
    if (m % 2 == 0 || m == 1) {
      for (std::uint32_t i = 0; i < c.size(); ++i)
        for (std::uint32_t j = i + 1; j < c.size(); ++j)
          if (std::abs(c.point(i) - c.point(j)) < dmin * (1.0 + 1e-9)) {
            EXPECT_EQ(hamming(i, j), 1) << "m=" << m << " labels " << i << "," << j;
          }
    }
  }
}

TEST(UniformQam, CrossQamShapeForOddOrders) {
  for (int m : {5, 7, 9}) {
    const auto c = uniform_qam(m);
    // Integer levels recovered from the minimum distance (2 units between levels).
    const double unit = min_distance(c) / 2.0;
    const int edge = 6 * (1 << ((m - 5) / 2)) - 1;              // 5, 11, 23
    const int corner = edge - 2 * (1 << ((m - 5) / 2));         // corner blocks start above this
    for (const auto& p : c.points()) {
      const double i = std::abs(p.real()) / unit, q = std::abs(p.imag()) / unit;
      EXPECT_NEAR(i, std::round(i), 1e-9);
      EXPECT_NEAR(q, std::round(q), 1e-9);
      EXPECT_LE(i, edge + 1e-9);
      EXPECT_LE(q, edge + 1e-9);
      EXPECT_FALSE(i > corner + 1e-9 && q > corner + 1e-9) << "corner point in cross QAM m=" << m;
    }
  }
}

TEST(UniformQam, RejectsOutOfRange) {
  EXPECT_THROW(uniform_qam(0), ParameterError);
  EXPECT_THROW(uniform_qam(11), ParameterError);
}

TEST(Normalize, IdentityHomogeneityAndIdempotence) {
  const auto q = uniform_qam(4);
  const auto n = normalize(q);
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(std::abs(n.point(i) - q.point(i)), 0.0, 1e-15);

  const auto raw = random_constellation(3, 11);
  std::vector<cplx> scaled(raw.points().begin(), raw.points().end());
  for (auto& p : scaled) p *= 3.0;
  const auto a = normalize(raw);
  const auto b = normalize(Constellation(3, scaled));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(std::abs(a.point(i) - b.point(i)), 0.0, 1e-12);
  EXPECT_NEAR(a.average_power(), 1.0, 1e-12);

  const auto twice = normalize(a);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(std::abs(a.point(i) - twice.point(i)), 0.0, 1e-12);
}

TEST(Normalize, PropertyUnitPowerForRandomInputs) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const int m = 1 + static_cast<int>(seed % 6);
    const auto c = random_constellation(m, seed, 0.01 + 10.0 * static_cast<double>(seed % 7));
    EXPECT_NEAR(moments(normalize(c)).mu2, 1.0, 1e-9);
  }
}

TEST(Normalize, ZeroConstellationIsDegenerate) {
  EXPECT_THROW(normalize(Constellation(2, std::vector<cplx>(4, cplx{0, 0}))), DegenerateInputError);
}

TEST(Moments, ConstantModulusAndQam16BruteForce) {
  for (int m : {1, 2}) {
    const auto mom = moments(uniform_qam(m));
    EXPECT_NEAR(mom.mu2, 1.0, 1e-12);
    EXPECT_NEAR(mom.mu4_hat, 1.0, 1e-12);
    EXPECT_NEAR(mom.mu6_hat, 1.0, 1e-12);
  }
  // Oracle: sum over the integer 16QAM grid {+-1, +-3}^2 without normalization.
  double s2 = 0, s4 = 0, s6 = 0;
  for (int i : {-3, -1, 1, 3})
    for (int q : {-3, -1, 1, 3}) {
      const double e = i * i + q * q;
      s2 += e;
      s4 += e * e;
      s6 += e * e * e;
    }
  const double mu2 = s2 / 16, mu4 = s4 / 16 / (mu2 * mu2), mu6 = s6 / 16 / (mu2 * mu2 * mu2);
  EXPECT_NEAR(mu4, 1.32, 1e-12);
  EXPECT_NEAR(mu6, 1.96, 1e-12);
  const auto mom = moments(uniform_qam(4));
  EXPECT_NEAR(mom.mu4_hat, mu4, 1e-12);
  EXPECT_NEAR(mom.mu6_hat, mu6, 1e-12);
}

TEST(Moments, PropertyLowerBounds) {
  for (std::uint64_t seed = 100; seed < 150; ++seed) {
    const auto mom = moments(random_constellation(4, seed));
    EXPECT_GT(mom.mu2, 0.0);
    EXPECT_GE(mom.mu4_hat, 1.0 - 1e-12);
    EXPECT_GE(mom.mu6_hat, 1.0 - 1e-12);
  }
}

TEST(MinDistance, KnownCases) {
  EXPECT_DOUBLE_EQ(min_distance(uniform_qam(1)), 2.0);
  EXPECT_NEAR(min_distance(uniform_qam(2)), std::numbers::sqrt2, 1e-15);
  EXPECT_EQ(min_distance(Constellation(2, {cplx(0, 0), cplx(0, 0), cplx(1, 0), cplx(-1, 0)})), 0.0);
}

TEST(MomClusters, NoneWhenWellSeparated) {
  const auto c = uniform_qam(4);
  EXPECT_TRUE(detect_mom_clusters(c, 0.5 * min_distance(c)).empty());
}

TEST(MomClusters, CoincidentPairs) {
  const Constellation c(2, {cplx(0, 0), cplx(0, 0), cplx(1, 0), cplx(1, 0)});
  const auto cl = detect_mom_clusters(c, 1e-3);
  ASSERT_EQ(cl.size(), 2U);
  EXPECT_EQ(cl[0].member_labels, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(cl[1].member_labels, (std::vector<std::uint32_t>{2, 3}));
  for (const auto& x : cl) {
    EXPECT_EQ(x.ambiguous_bit_positions, std::vector<int>{1});
    EXPECT_EQ(x.shared_bit_positions, std::vector<int>{0});
  }
  EXPECT_NEAR(std::abs(cl[1].centroid - cplx(1, 0)), 0.0, 1e-15);
}

TEST(MomClusters, FourPointCollapseFlagsTwoBits) {
  // 16QAM with the quadrant of labels 1x0x (bits 1 and 3 free) pulled onto one point.
  auto base = uniform_qam(4);
  std::vector<cplx> pts(base.points().begin(), base.points().end());
  const std::vector<std::uint32_t> members{0b1000, 0b1001, 0b1100, 0b1101};
  for (std::size_t i = 0; i < members.size(); ++i) pts[members[i]] = cplx(-0.6, 0.6) + cplx(1e-4 * i, 0);
  const auto cl = detect_mom_clusters(Constellation(4, pts), 0.01);
  ASSERT_EQ(cl.size(), 1U);
  EXPECT_EQ(cl[0].member_labels, members);
  EXPECT_EQ(cl[0].ambiguous_bit_positions, (std::vector<int>{1, 3}));
  EXPECT_EQ(cl[0].shared_bit_positions, (std::vector<int>{0, 2}));
}

TEST(MomClusters, SingleLinkageChains) {
  // 0--1--2 chained at 0.8 * eps spacing: one cluster although 0 and 2 are > eps apart.
  const Constellation c(2, {cplx(0, 0), cplx(0.008, 0), cplx(0.016, 0), cplx(5, 0)});
  const auto cl = detect_mom_clusters(c, 0.01);
  ASSERT_EQ(cl.size(), 1U);
  EXPECT_EQ(cl[0].member_labels.size(), 3U);
}

TEST(MomClusters, PropertyThresholdExtremes) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = normalize(random_constellation(3, seed + 500));
    EXPECT_TRUE(detect_mom_clusters(c, 0.999 * min_distance(c)).empty());
    double dmax = 0.0;
    for (const auto& a : c.points())
      for (const auto& b : c.points()) dmax = std::max(dmax, std::abs(a - b));
    const auto all = detect_mom_clusters(c, dmax);
    ASSERT_EQ(all.size(), 1U);
    EXPECT_EQ(all[0].member_labels.size(), c.size());
    EXPECT_EQ(all[0].ambiguous_bit_positions, (std::vector<int>{0, 1, 2}));
    EXPECT_TRUE(all[0].shared_bit_positions.empty());
  }
  EXPECT_THROW(detect_mom_clusters(uniform_qam(2), 0.0), ParameterError);
}

TEST(ConstellationJson, RoundTripIsBitExact) {
  auto c = normalize(random_constellation(5, 77));
  c.set_metadata({"ae-gaussian", 7.25, 42});
  const auto text = dump_constellation(c);
  const auto back = constellation_from_json(parse_json_text(text, "mem"));
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(back.point(i), c.point(i));
  EXPECT_EQ(back.metadata(), c.metadata());
  EXPECT_EQ(dump_constellation(back), text);
}

TEST(ConstellationJson, RejectsMalformedDocuments) {
  EXPECT_THROW(constellation_from_json(parse_json_text(R"({"version":1,"m":2,"points":[[1,0]]})", "x")), IoError);
  EXPECT_THROW(constellation_from_json(parse_json_text(R"({"version":9,"m":1,"points":[[1,0],[-1,0]]})", "x")),
               IoError);
  EXPECT_THROW(parse_json_text("{", "x"), IoError);
  EXPECT_THROW(Constellation(2, {cplx(NAN, 0), cplx(1, 0), cplx(0, 1), cplx(0, -1)}), ParameterError);
}
