#include <gtest/gtest.h>

#include "rotape/decomposition.hpp"
#include "rotape/norms.hpp"
#include "rotape/random_fields.hpp"

using namespace rotape;

namespace {

const GridSpec kGrid{16, 8};

SpectralField rnd(std::uint64_t seed) { return random_analytic(kGrid, 2, 0.1, 0.1, seed); }

}  // namespace

TEST(P0, Examples) {
  SpectralField bar = p0(rnd(1));
  EXPECT_EQ(max_abs_diff(p0(bar), bar), 0.0);
  EXPECT_EQ(max_abs(p0(baroclinic(rnd(2)))), 0.0);
  const SpectralField v = rnd(3);
  EXPECT_EQ(max_abs_diff(p0(p0(v)), p0(v)), 0.0);
}

TEST(Baroclinic, Examples) {
  const SpectralField v = rnd(4);
  EXPECT_EQ(max_abs(baroclinic(p0(v))), 0.0);
  const SpectralField vt = baroclinic(v);
  EXPECT_EQ(max_abs_diff(baroclinic(vt), vt), 0.0);
  EXPECT_EQ(max_abs(p0(baroclinic(v))), 0.0);
}

TEST(Leray, Examples) {
  // gradient of psi = cos(2 pi (x + 2y)) -> 0
  SpectralField psi(kGrid, 1);
  psi.at(0, 1, 2, 0) = 0.5;
  psi.at(0, -1, -2, 0) = 0.5;
  EXPECT_LT(max_abs(leray_h(grad_h(psi))), 1e-14);

  SpectralField df = perp(grad_h(psi));
  EXPECT_LT(max_abs_diff(leray_h(df), df), 1e-14);

  SpectralField a(kGrid, 2), b(kGrid, 2);
  a.at(0, 1, 0, 0) = 1.0;
  b.at(1, 1, 0, 0) = 1.0;
  EXPECT_EQ(max_abs(leray_h(a)), 0.0);
  EXPECT_EQ(max_abs_diff(leray_h(b), b), 0.0);

  SpectralField bad(kGrid, 2);
  bad.at(0, 1, 0, 2) = 1.0;
  EXPECT_THROW(leray_h(bad), Error);

  const SpectralField out = leray_h(p0(rnd(5)));
  EXPECT_LT(l2(div_h(out)), 1e-12);
  SpectralField k0(kGrid, 2);
  k0.at(0, 0, 0, 0) = 2.0;
  EXPECT_EQ(max_abs_diff(leray_h(k0), k0), 0.0);
}

TEST(PPlusMinus, Examples) {
  EXPECT_EQ(max_abs(p_plus(p0(rnd(6)))), 0.0);
  EXPECT_EQ(max_abs(p_minus(p0(rnd(6)))), 0.0);

  SpectralField v(kGrid, 2);
  v.at(0, 0, 0, 1) = 1.0;
  const SpectralField pp = p_plus(v);
  EXPECT_NEAR(std::abs(pp.at(0, 0, 0, 1) - 0.5), 0.0, 1e-16);
  EXPECT_NEAR(std::abs(pp.at(1, 0, 0, 1) - cplx(0.0, 0.5)), 0.0, 1e-16);
}

TEST(PPlusMinus, AlgebraOnRandomFields) {
  const cplx I(0.0, 1.0);
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const SpectralField v = rnd(seed), g = random_analytic(kGrid, 2, 0.1, 0.1, seed + 1000, false);
    const SpectralField pp = p_plus(v), pm = p_minus(v);
    EXPECT_LT(max_abs_diff(p0(v) + pp + pm, v), 1e-13);
    EXPECT_LT(max_abs_diff(p_plus(pp), pp), 1e-13);
    EXPECT_LT(max_abs_diff(p_minus(pm), pm), 1e-13);
    EXPECT_LT(max_abs(p_plus(pm)), 1e-13);
    EXPECT_LT(max_abs(p_minus(pp)), 1e-13);
    EXPECT_LT(max_abs(p0(pp)), 1e-13);
    EXPECT_LT(max_abs(p_plus(p0(v))), 1e-13);
    EXPECT_LT(max_abs_diff(rot_R(pp), -I * pp), 1e-13);
    EXPECT_LT(max_abs_diff(rot_R(pm), I * pm), 1e-13);
    EXPECT_LT(std::abs(inner(p0(v), g) - inner(v, p0(g))), 1e-12);
    EXPECT_LT(std::abs(inner(pp, g) - inner(v, p_plus(g))), 1e-12);
    EXPECT_LT(std::abs(inner(pm, g) - inner(v, p_minus(g))), 1e-12);
    // commutation with the diagonal multipliers
    EXPECT_LT(max_abs_diff(apply_A_exp(pp, 2.0, 0.1), p_plus(apply_A_exp(v, 2.0, 0.1))), 1e-12);
  }
}

TEST(PPlusMinus, NormSplitting) {
  for (std::uint64_t seed = 40; seed < 50; ++seed) {
    const SpectralField v = rnd(seed);
    const SpectralField vt = baroclinic(v);
    EXPECT_NEAR(norm2(v), norm2(p0(v)) + norm2(vt), 1e-12 * norm2(v));
    for (int s = 0; s <= 2; ++s) {
      const double a = seminorm2(vt, 2.0, 0.2, s);
      EXPECT_NEAR(seminorm2(p_plus(v), 2.0, 0.2, s), 0.5 * a, 1e-12 * a);
      EXPECT_NEAR(seminorm2(p_minus(v), 2.0, 0.2, s), 0.5 * a, 1e-12 * a);
    }
  }
}

TEST(Split, BaroclinicPairInvariants) {
  const SpectralField v = random_velocity(kGrid, InitParams{0.2, 0.1, 1.0, 3});
  const BaroclinicPair bp = split(v);
  EXPECT_LT(l2(div_h(bp.vbar)), 1e-12);
  EXPECT_EQ(max_abs(p0(bp.vtilde)), 0.0);
  EXPECT_LT(max_abs_diff(project_pressure(v), v), 1e-13);
}
