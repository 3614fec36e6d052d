#include <gtest/gtest.h>

#include <cmath>

#include "rotape/limit_solver.hpp"
#include "rotape/random_fields.hpp"

using namespace rotape;

namespace {

const GridSpec kGrid{16, 8};

SpectralField shear_vorticity(const GridSpec& g) {
  SpectralField w(g, 1);
  w.at(0, 1, 0, 0) = 0.5;
  w.at(0, -1, 0, 0) = 0.5;
  return w;
}

SpectralField random_vorticity(const GridSpec& g, std::uint64_t seed) {
  return curl_h(p0(random_velocity(g, InitParams{0.3, 0.0, 1.0, seed})));
}

}  // namespace

TEST(Euler2d, ShearIsSteady) {
  EXPECT_LT(max_abs(euler2d_rhs(shear_vorticity(kGrid))), 1e-14);
  EXPECT_EQ(max_abs(euler2d_rhs(SpectralField(kGrid, 1))), 0.0);
}

TEST(Euler2d, VelocityReconstruction) {
  const SpectralField w = random_vorticity(kGrid, 3);
  const SpectralField vb = vbar_from_omega(w);
  EXPECT_LT(max_abs_diff(curl_h(vb), w), 1e-13);
  EXPECT_LT(l2(div_h(vb)), 1e-13);
  const SpectralField v = p0(random_velocity(kGrid, InitParams{0.3, 0.0, 1.0, 4}));
  EXPECT_LT(max_abs_diff(vbar_from_omega(curl_h(v)), v), 1e-13);
}

TEST(Euler2d, MatchesBarotropicTendencyOfFullSystem) {
  const SpectralField v = p0(random_velocity(kGrid, InitParams{0.3, 0.0, 1.0, 5}));
  SolverConfig cfg;
  cfg.grid = kGrid;
  const SpectralField z(kGrid, 2);
  const RotatingTendency d = rhs_rotating({0.0, v, z, z}, 0.0, cfg);
  EXPECT_LT(max_abs_diff(curl_h(d.dvbar), euler2d_rhs(curl_h(v))), 1e-12);
}

TEST(Euler2d, ConservesEnergyAndEnstrophy) {
  const GridSpec g{32, 2};
  LimitConfig cfg;
  cfg.grid = g;
  cfg.dt = 2.5e-3;
  cfg.t_end = 1.0;
  const LimitState s0{0.0, random_vorticity(g, 6), SpectralField(g, 2)};
  const LimitResult r = integrate_limit(s0, cfg);
  const LimitRow &a = r.rows.front(), &b = r.rows.back();
  EXPECT_GT(l2(s0.omega_bar - r.final_state.omega_bar), 1e-2 * l2(s0.omega_bar));  // nontrivial dynamics
  EXPECT_LT(std::abs(b.energy_bar - a.energy_bar), 1e-9 * a.energy_bar);
  EXPECT_LT(std::abs(b.enstrophy_bar - a.enstrophy_bar), 1e-9 * a.enstrophy_bar);
}

TEST(Transport, ZeroAndHeatCases) {
  const SpectralField vt = baroclinic(random_analytic(kGrid, 2, 0.2, 0.2, 7));
  const SpectralField vb = vbar_from_omega(random_vorticity(kGrid, 8));
  EXPECT_EQ(max_abs(transport_rhs(SpectralField(kGrid, 2), vb, 0.3)), 0.0);
  EXPECT_LT(max_abs_diff(transport_rhs(vt, SpectralField(kGrid, 2), 0.3), 0.3 * dz(vt, 2)), 1e-14);

  LimitConfig cfg;
  cfg.grid = kGrid;
  cfg.nu = 0.2;
  cfg.dt = 0.1;
  cfg.t_end = 1.0;
  const LimitResult r = integrate_limit({0.0, SpectralField(kGrid, 1), vt}, cfg);
  SpectralField expect = vt;
  for (std::size_t h = 0; h < 2 * kGrid.horizontal(); ++h)
    for (int m = 0; m < kGrid.nz; ++m) expect.c[h * kGrid.nz + m] *= std::exp(-0.2 * std::pow(m * M_PI, 2));
  EXPECT_LT(max_abs_diff(r.final_state.vtilde, expect), 1e-15);
}

TEST(Transport, ConstantAdvectionIsPureTranslation) {
  const SpectralField vt = baroclinic(random_analytic(kGrid, 2, 0.2, 0.2, 9));
  SpectralField vb(kGrid, 2);
  vb.at(0, 0, 0, 0) = 0.7;
  vb.at(1, 0, 0, 0) = -0.4;
  const SpectralField d = transport_rhs(vt, vb, 0.0);
  for (int c = 0; c < 2; ++c)
    for (int i1 = 0; i1 < kGrid.nh; ++i1)
      for (int i2 = 0; i2 < kGrid.nh; ++i2)
        for (int m = 0; m < kGrid.nz; ++m) {
          const double kx = detail::dk(i1, kGrid.nh), ky = detail::dk(i2, kGrid.nh);
          const cplx expect = -cplx(0.0, 0.7 * kx - 0.4 * ky) * vt(c, i1, i2, m);
          EXPECT_NEAR(std::abs(d(c, i1, i2, m) - expect), 0.0, 1e-12);
        }
  EXPECT_LT(std::abs(inner(d, vt).real()), 1e-12);
}

TEST(Transport, StretchingBoundsNormGrowth) {
  // With nu = 0, d/dt ‖Ṽ‖ <= 1/2 max|omega| ‖Ṽ‖; checked on complex data where
  // the stretching term does change the norm.
  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    const SpectralField w = random_vorticity(kGrid, seed);
    const SpectralField vt = p_plus(random_analytic(kGrid, 2, 0.2, 0.2, seed + 100));
    const SpectralField d = transport_rhs(vt, vbar_from_omega(w), 0.0);
    const LimitRow row = limit_diagnostics({0.0, w, vt}, LimitConfig{kGrid});
    const double rate = inner(d, vt).real() / l2(vt);
    EXPECT_LE(rate, 0.5 * row.omega_max * l2(vt) * (1.0 + 1e-12));
  }
}

TEST(Transport, StretchingAlongTrajectory) {
  LimitConfig cfg;
  cfg.grid = kGrid;
  cfg.nu = 0.0;
  cfg.dt = 2e-3;
  cfg.t_end = 0.5;
  const LimitState s0{0.0, random_vorticity(kGrid, 30), p_plus(random_analytic(kGrid, 2, 0.2, 0.2, 31))};
  double prev_norm = -1.0, prev_bound = 0.0, worst = 0.0;
  integrate_limit(s0, cfg, [&](const LimitRow& row, const LimitState&) {
    if (prev_norm >= 0.0) {
      const double growth = (row.vtilde_l2 - prev_norm) / cfg.dt;
      const double bound = 0.5 * std::max(prev_bound, row.omega_max) * std::max(prev_norm, row.vtilde_l2);
      worst = std::max(worst, growth - bound);
    }
    prev_norm = row.vtilde_l2;
    prev_bound = row.omega_max;
  });
  EXPECT_LE(worst, 1e-9);
}

TEST(Transport, ZeroBarotropicWeightedNormDecays) {
  LimitConfig cfg;
  cfg.grid = kGrid;
  cfg.nu = 0.4;
  cfg.dt = 0.01;
  cfg.t_end = 1.0;
  const LimitState s0{0.0, SpectralField(kGrid, 1), baroclinic(random_analytic(kGrid, 2, 0.2, 0.2, 40))};
  double prev = std::numeric_limits<double>::infinity();
  integrate_limit(s0, cfg, [&](const LimitRow& row, const LimitState& s) {
    const double n = std::pow(norm_rst(s.vtilde, NormSpec{2.0, 1, 0.1}), 2) * std::exp(cfg.nu * row.t);
    EXPECT_LE(n, prev * (1.0 + 1e-13));
    prev = n;
  });
}

TEST(LimitToVpm, SplitsBaroclinicField) {
  const SpectralField vt = baroclinic(random_analytic(kGrid, 2, 0.2, 0.2, 50));
  auto [vp, vm] = limit_to_vpm(vt);
  EXPECT_LT(max_abs_diff(vp + vm, vt), 1e-15);
  const cplx I(0.0, 1.0);
  EXPECT_LT(max_abs_diff(vp, 0.5 * (vt + I * perp(vt))), 1e-15);
  for (int s = 0; s <= 2; ++s) {
    const NormSpec n{2.0, s, 0.1};
    EXPECT_NEAR(2 * seminorm2(vp, 2.0, 0.1, s), seminorm2(vt, 2.0, 0.1, s), 1e-12 * seminorm2(vt, 2.0, 0.1, s));
    EXPECT_NEAR(norm_rst(vp, n), norm_rst(vm, n), 1e-12 * norm_rst(vt, n));
  }
}

TEST(IntegrateLimit, SteadyShearKeepsBarotropicPart) {
  LimitConfig cfg;
  cfg.grid = kGrid;
  cfg.nu = 0.1;
  cfg.dt = 5e-3;
  cfg.t_end = 0.5;
  const LimitState s0{0.0, shear_vorticity(kGrid), baroclinic(random_analytic(kGrid, 2, 0.2, 0.2, 60))};
  const LimitResult r = integrate_limit(s0, cfg);
  EXPECT_LT(max_abs_diff(r.final_state.omega_bar, s0.omega_bar), 1e-14);
  EXPECT_GT(max_abs_diff(r.final_state.vtilde, s0.vtilde), 1e-3);
  EXPECT_DOUBLE_EQ(r.final_state.t, 0.5);
  EXPECT_EQ(r.rows.size(), 101u);
}

TEST(IntegrateLimit, GronwallEnvelope) {
  LimitConfig cfg;
  cfg.grid = kGrid;
  cfg.nu = 1.0;
  cfg.dt = 5e-3;
  cfg.t_end = 0.5;
  const LimitState s0{0.0, random_vorticity(kGrid, 70), p_plus(random_analytic(kGrid, 2, 0.2, 0.2, 71))};
  const LimitResult r = integrate_limit(s0, cfg);
  double K = 0.0;
  for (const auto& row : r.rows) K = std::max(K, row.omega_max);
  for (const auto& row : r.rows) EXPECT_LE(row.vtilde_l2, r.rows[0].vtilde_l2 * std::exp(0.5 * K * row.t) * (1 + 1e-12));
}

TEST(IntegrateLimit, ZeroStateIsFixed) {
  LimitConfig cfg;
  cfg.grid = kGrid;
  cfg.t_end = 0.05;
  const LimitResult r = integrate_limit({0.0, SpectralField(kGrid, 1), SpectralField(kGrid, 2)}, cfg);
  EXPECT_EQ(max_abs(r.final_state.omega_bar), 0.0);
  EXPECT_EQ(max_abs(r.final_state.vtilde), 0.0);
}

TEST(IntegrateLimit, RotatingStateRoundTrip) {
  const SpectralField v = random_velocity(kGrid, InitParams{0.3, 0.1, 1.0, 80});
  const RotatingState a = limit_to_rotating(limit_from_velocity(v));
  const RotatingState b = to_rotating(v, 0.0, 10.0);
  EXPECT_LT(max_abs_diff(a.vbar, b.vbar), 1e-13);
  EXPECT_LT(max_abs_diff(a.vplus, b.vplus), 1e-15);
  EXPECT_LT(max_abs_diff(a.vminus, b.vminus), 1e-15);
}
