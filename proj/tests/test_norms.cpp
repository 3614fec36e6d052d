#include <gtest/gtest.h>

#include <cmath>

#include "rotape/decomposition.hpp"
#include "rotape/norms.hpp"
#include "rotape/random_fields.hpp"

using namespace rotape;

namespace {

const GridSpec kGrid{16, 8};

}  // namespace

TEST(NormRst, Examples) {
  EXPECT_EQ(norm_rst(SpectralField(kGrid, 2), NormSpec{2.0, 1, 0.3}), 0.0);
  SpectralField u(kGrid, 1);
  u.at(0, 1, 0, 0) = 1.0;
  EXPECT_NEAR(norm_rst(u, NormSpec{2.0, 0, 0.0}), std::sqrt(std::pow(2 * M_PI, 4) + 1.0), 1e-12);
}

TEST(NormRst, MatchesAnisotropicSobolevNorm) {
  // H^r_x L^2_z computed from samples: sum |k|^{2r} |a|^2 + |a|^2 with an
  // independently assembled k grid.
  const SpectralField v = random_analytic(kGrid, 2, 0.2, 0.0, 5);
  const double r = 1.7;
  double s = 0.0, l = 0.0;
  for (int c = 0; c < 2; ++c)
    for (int n1 = -7; n1 <= 8; ++n1)
      for (int n2 = -7; n2 <= 8; ++n2)
        for (int m = 0; m < kGrid.nz; ++m) {
          const double a = std::norm(v.at(c, n1, n2, m));
          const double k = 2 * M_PI * std::hypot(double(n1), double(n2));
          if (k > 0) s += std::pow(k, 2 * r) * a;
          l += a;
        }
  EXPECT_NEAR(norm_rst(v, NormSpec{r, 0, 0.0}), std::sqrt(s + l), 1e-12 * std::sqrt(s + l));
}

TEST(NormRst, SumOfRootsOverDerivatives) {
  const SpectralField v = random_analytic(kGrid, 2, 0.2, 0.2, 6);
  const double r = 2.0, tau = 0.1;
  double expect = 0.0;
  for (int s = 0; s <= 2; ++s) expect += std::sqrt(seminorm2(v, r, tau, s) + dz_norm2(v, s));
  EXPECT_NEAR(norm_rst(v, NormSpec{r, 2, tau}), expect, 1e-13 * expect);
  EXPECT_NEAR(dz_norm2(v, 1), norm2(dz(v, 1)), 1e-12 * norm2(dz(v, 1)));
}

TEST(NormRst, SplitAndMonotonicity) {
  for (std::uint64_t seed = 1; seed < 6; ++seed) {
    const SpectralField v = random_analytic(kGrid, 2, 0.1, 0.1, seed);
    const NormSpec s{2.5, 0, 0.2};
    const double a = norm_rst(v, s), b = norm_rst(p0(v), s), c = norm_rst(baroclinic(v), s);
    EXPECT_NEAR(a * a, b * b + c * c, 1e-12 * a * a);
    SpectralField hi = v;
    for (int cc = 0; cc < 2; ++cc)
      for (int m = 0; m < kGrid.nz; ++m) hi(cc, 0, 0, m) = 0.0;  // |k| >= 2 pi only
    double prev = 0.0;
    for (double r : {0.0, 0.5, 1.0, 2.0, 3.0}) {
      const double n = norm_rst(hi, NormSpec{r, 0, 0.1});
      EXPECT_GE(n, prev);
      prev = n;
    }
    prev = 0.0;
    for (double tau : {0.0, 0.05, 0.1, 0.3}) {
      const double n = norm_rst(hi, NormSpec{1.0, 1, tau});
      EXPECT_GE(n, prev);
      prev = n;
    }
    const double pp = norm_rst(p_plus(v), s), pm = norm_rst(p_minus(v), s);
    EXPECT_NEAR(pp, pm, 1e-12 * pp);
    EXPECT_NEAR(2 * seminorm2(p_plus(v), 2.5, 0.2), seminorm2(baroclinic(v), 2.5, 0.2),
                1e-12 * seminorm2(baroclinic(v), 2.5, 0.2));
  }
}

TEST(NormRstEta, Examples) {
  EXPECT_EQ(norm_rst_eta(SpectralField(kGrid, 1), NormSpec{1.0, 1, 0.1, 0.1}), 0.0);
  SpectralField u(kGrid, 1);
  u.at(0, 1, 1, 2) = cplx(0.3, -0.4);
  const double r = 1.5, tau = 0.05, eta = 0.02;
  const int s = 1;
  const double k = 2 * M_PI * std::sqrt(2.0), k3 = 2 * M_PI;
  const double w = 1.0 + (std::pow(k, 2 * r) + std::pow(k3, 2 * s)) * std::exp(2 * tau * k) * std::exp(2 * eta * k3);
  EXPECT_NEAR(norm_rst_eta(u, NormSpec{r, s, tau, eta}), std::sqrt(w * 0.25), 1e-12);
  const SpectralField v = random_analytic(kGrid, 2, 0.1, 0.0, 3);
  double prev = 0.0;
  for (double e : {0.0, 0.01, 0.1, 0.5}) {
    const double n = norm_rst_eta(v, NormSpec{1.0, 1, 0.1, e});
    EXPECT_GE(n, prev);
    prev = n;
  }
}

TEST(FitRadius, RecoversConstructedDecay) {
  const GridSpec g{32, 8};
  SpectralField v(g, 1);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> ph(0.0, 2 * M_PI);
  for (int i1 = 0; i1 < g.nh; ++i1)
    for (int i2 = 0; i2 < g.nh; ++i2)
      v(0, i1, i2, 0) = std::exp(-0.5 * g.kmag(i1, i2)) * std::exp(cplx(0.0, ph(rng)));
  dealias_inplace(v);
  const double tau = fit_radius(v, Axis::horizontal);
  EXPECT_NEAR(tau, 0.5, 0.025);
  EXPECT_NEAR(fit_radius(v, Axis::horizontal, 1e-14, RadiusFit::shell_max), 0.5, 0.025);
  const double shifted = fit_radius(apply_A_exp(v, 0.0, 0.2), Axis::horizontal);
  EXPECT_NEAR(tau - shifted, 0.2, 0.01);
}

TEST(FitRadius, FlatSpectrumAndVertical) {
  const GridSpec g{32, 16};
  SpectralField flat = random_analytic(g, 1, 0.0, 0.0, 8);
  for (auto& c : flat.c)
    if (std::abs(c) > 0) c /= std::abs(c);
  EXPECT_LT(fit_radius(flat, Axis::horizontal), 0.01);
  SpectralField vz(g, 1);
  for (int m = 0; m < g.nz; ++m) vz.at(0, 1, 0, m) = std::exp(-0.3 * m * M_PI);
  dealias_inplace(vz);
  EXPECT_NEAR(fit_radius(vz, Axis::vertical), 0.3, 1e-10);
}

TEST(FitRadius, InsufficientData) {
  SpectralField u(kGrid, 1);
  u.at(0, 1, 0, 0) = 1.0;
  u.at(0, 2, 0, 0) = 0.1;
  EXPECT_THROW(fit_radius(u, Axis::horizontal), FitError);
}
