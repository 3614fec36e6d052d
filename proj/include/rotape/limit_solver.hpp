#pragma once

#include <functional>
#include <vector>

#include "rotape/decomposition.hpp"
#include "rotape/diagnostics.hpp"
#include "rotape/norms.hpp"
#include "rotape/pe_solver.hpp"
#include "rotape/spectral_ops.hpp"
#include "rotape/state.hpp"
#include "rotape/transform.hpp"

namespace rotape {

// omega_bar: scalar vorticity (m = 0 only); vtilde: baroclinic 2-vector.
struct LimitState {
  double t = 0.0;
  SpectralField omega_bar;
  SpectralField vtilde;
};

// Horizontal curl -d_y v1 + d_x v2.
inline SpectralField curl_h(const SpectralField& v) {
  if (v.ncomp != 2) throw DimensionError("curl_h expects a 2-vector field");
  return dx(component(v, 1)) - dy(component(v, 0));
}

// V̄ = grad^perp psi with Laplacian(psi) = omega; the k = 0 mode of omega is ignored.
inline SpectralField vbar_from_omega(const SpectralField& omega) {
  if (omega.ncomp != 1) throw DimensionError("vorticity must be a scalar field");
  const GridSpec& g = omega.grid;
  SpectralField psi = zeros_like(omega);
  for (int i1 = 0; i1 < g.nh; ++i1)
    for (int i2 = 0; i2 < g.ny(); ++i2) {
      const double k = g.kmag(i1, i2);
      if (k == 0.0) continue;
      psi(0, i1, i2, 0) = -omega(0, i1, i2, 0) / (k * k);
    }
  return stack(-1.0 * dy(psi), dx(psi));
}

namespace detail {

// Horizontal level of the m = 0 coefficients of one component, in physical space.
inline std::vector<cplx> level_values(const SpectralField& f, int comp) {
  const GridSpec& g = f.grid;
  std::vector<cplx> lv(g.horizontal());
  const cplx* src = f.comp_data(comp);
  for (std::size_t h = 0; h < g.horizontal(); ++h) lv[h] = src[h * g.nz];
  plans_for(g).fft_level(lv.data(), false);
  return lv;
}

}  // namespace detail

// -V̄.grad(omega), dealiased; evaluated on a single horizontal level.
inline SpectralField euler2d_rhs(const SpectralField& omega) {
  const GridSpec& g = omega.grid;
  const SpectralField vb = vbar_from_omega(omega);
  const SpectralField wx = dx(omega), wy = dy(omega);
  const std::vector<cplx> u1 = detail::level_values(vb, 0), u2 = detail::level_values(vb, 1);
  const std::vector<cplx> gx = detail::level_values(wx, 0), gy = detail::level_values(wy, 0);
  std::vector<cplx> n(g.horizontal());
  const double scale = 1.0 / double(g.horizontal());
  for (std::size_t h = 0; h < n.size(); ++h) n[h] = -(u1[h] * gx[h] + u2[h] * gy[h]) * scale;
  detail::plans_for(g).fft_level(n.data(), true);
  SpectralField out = zeros_like(omega);
  for (std::size_t h = 0; h < n.size(); ++h) out.c[h * g.nz] = n[h];
  dealias_inplace(out);
  if (!all_finite(out)) throw NonFiniteError("euler2d tendency");
  return out;
}

// -V̄.grad Ṽ - 1/2 Ṽ^perp curl(V̄) + nu d_zz Ṽ, dealiased.
inline SpectralField transport_rhs(const SpectralField& vtilde, const SpectralField& vbar, double nu) {
  require_compatible(vtilde, vbar, "transport_rhs");
  if (vtilde.ncomp != 2) throw DimensionError("transport_rhs expects 2-vector fields");
  const GridSpec& g = vtilde.grid;
  SpectralField d = zeros_like(vtilde);
  if (max_abs(vbar) > 0.0 && max_abs(vtilde) > 0.0) {
    const PhysField ub = inverse_barotropic(vbar);
    const PhysField om = inverse_barotropic(curl_h(vbar));
    const PhysField v = inverse(vtilde), gx = inverse(dx(vtilde)), gy = inverse(dy(vtilde));
    PhysField n(g, 2);
    const std::size_t nb = g.block();
    for (std::size_t i = 0; i < nb; ++i) {
      const cplx u1 = ub.v[i], u2 = ub.v[nb + i], w = om.v[i];
      const cplx a1 = v.v[i], a2 = v.v[nb + i];
      n.v[i] = -(u1 * gx.v[i] + u2 * gy.v[i]) + 0.5 * a2 * w;
      n.v[nb + i] = -(u1 * gx.v[nb + i] + u2 * gy.v[nb + i]) - 0.5 * a1 * w;
    }
    d = forward(n);
    detail::take_p0(d);
    dealias_inplace(d);
  }
  if (nu != 0.0) axpy(nu, dz(vtilde, 2), d);
  if (!all_finite(d)) throw NonFiniteError("transport tendency");
  return d;
}

// V± = 1/2 (Ṽ ± i Ṽ^perp)
inline std::pair<SpectralField, SpectralField> limit_to_vpm(const SpectralField& vtilde) {
  return {p_plus(vtilde), p_minus(vtilde)};
}

inline LimitState limit_from_velocity(const SpectralField& v, double t = 0.0) {
  return {t, curl_h(p0(v)), baroclinic(v)};
}

// Rotating-frame state carried by a limit state.
inline RotatingState limit_to_rotating(const LimitState& s) {
  auto [vp, vm] = limit_to_vpm(s.vtilde);
  return {s.t, vbar_from_omega(s.omega_bar), std::move(vp), std::move(vm)};
}

struct LimitConfig {
  GridSpec grid;
  double nu = 0.1;
  double dt = 1e-3;
  double t_end = 0.0;
  double r = 2.5;  // ‖V̄‖_{r+1,0,0} and ‖Ṽ‖_{r,s,0} are reported
  int s = 1;
};

struct LimitRow {
  double t = 0.0;
  double energy_bar = 0.0;     // 1/2 ‖V̄‖²
  double enstrophy_bar = 0.0;  // 1/2 ‖omega‖²
  double vtilde_l2 = 0.0;
  double vbar_sobolev = 0.0;    // ‖V̄‖_{r+1,0,0}
  double vtilde_sobolev = 0.0;  // ‖Ṽ‖_{r,s,0}
  double omega_max = 0.0;       // max |omega| on the grid
};

struct LimitResult {
  LimitState final_state;
  std::vector<LimitRow> rows;
};

inline LimitRow limit_diagnostics(const LimitState& s, const LimitConfig& cfg) {
  LimitRow row;
  row.t = s.t;
  const SpectralField vb = vbar_from_omega(s.omega_bar);
  row.energy_bar = 0.5 * norm2(vb);
  row.enstrophy_bar = 0.5 * norm2(s.omega_bar);
  row.vtilde_l2 = l2(s.vtilde);
  row.vbar_sobolev = norm_rst(vb, NormSpec{cfg.r + 1.0, 0, 0.0, 0.0});
  row.vtilde_sobolev = norm_rst(s.vtilde, NormSpec{cfg.r, cfg.s, 0.0, 0.0});
  for (const cplx& w : detail::level_values(s.omega_bar, 0)) row.omega_max = std::max(row.omega_max, std::abs(w));
  return row;
}

namespace detail {

inline Bundle limit_rhs(const Bundle& u, double nu) {
  return {euler2d_rhs(u[0]), transport_rhs(u[1], vbar_from_omega(u[0]), nu)};
}

}  // namespace detail

// One RK4 step with the vertical diffusion of Ṽ integrated exactly.
inline LimitState step_limit(const LimitState& s, double nu, double h) {
  const Bundle u{s.omega_bar, s.vtilde};
  auto N = [&](const Bundle& x) { return detail::limit_rhs(x, 0.0); };
  const Bundle k1 = N(u);
  const Bundle k2 = N(detail::heat(detail::combine(u, 0.5 * h, k1), nu, 0.5 * h));
  const Bundle k3 = N(detail::combine(detail::heat(u, nu, 0.5 * h), 0.5 * h, k2));
  const Bundle k4 = N(detail::combine(detail::heat(u, nu, h), h, detail::heat(k3, nu, 0.5 * h)));
  Bundle out = detail::heat(u, nu, h);
  const Bundle k1e = detail::heat(k1, nu, h);
  Bundle k23 = k2;
  for (std::size_t i = 0; i < k23.size(); ++i) k23[i] += k3[i];
  const Bundle k23e = detail::heat(k23, nu, 0.5 * h);
  for (std::size_t i = 0; i < out.size(); ++i) {
    axpy(h / 6.0, k1e[i], out[i]);
    axpy(h / 3.0, k23e[i], out[i]);
    axpy(h / 6.0, k4[i], out[i]);
  }
  return {s.t + h, std::move(out[0]), std::move(out[1])};
}

using LimitObserver = std::function<void(const LimitRow&, const LimitState&)>;

inline LimitResult integrate_limit(const LimitState& s0, const LimitConfig& cfg,
                                   const LimitObserver& observer = nullptr) {
  cfg.grid.validate();
  if (!(cfg.nu >= 0.0)) throw ConfigError("nu must be nonnegative");
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(cfg.t_end >= 0.0)) throw ConfigError("t_end must be nonnegative");
  LimitResult res;
  LimitState s = s0;
  auto emit = [&] {
    res.rows.push_back(limit_diagnostics(s, cfg));
    if (observer) observer(res.rows.back(), s);
  };
  emit();
  if (cfg.t_end > 0.0) {
    const long n = std::max(1L, std::lround(cfg.t_end / cfg.dt));
    const double h = cfg.t_end / double(n);
    for (long i = 0; i < n; ++i) {
      s = step_limit(s, cfg.nu, h);
      if (i == n - 1) s.t = s0.t + cfg.t_end;
      emit();
    }
  }
  res.final_state = s;
  return res;
}

}  // namespace rotape
