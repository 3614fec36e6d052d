#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "rotape/decomposition.hpp"
#include "rotape/diagnostics.hpp"
#include "rotape/norms.hpp"
#include "rotape/spectral_ops.hpp"
#include "rotape/state.hpp"
#include "rotape/theory.hpp"
#include "rotape/transform.hpp"

namespace rotape {

enum class Scheme { rk4_if, rk4_plain };
enum class Formulation { rotating, direct };

struct SolverConfig {
  double nu = 0.1;
  double omega = 0.0;
  GridSpec grid;
  double dt = 1e-3;
  double t_end = 0.0;
  Scheme scheme = Scheme::rk4_if;
  Formulation formulation = Formulation::rotating;
  double cfl_safety = 0.5;
  // Term switches for isolating parts of the right-hand side.
  bool nonlinear = true;
  bool viscous = true;
  bool coriolis = true;

  void validate() const {
    grid.validate();
    if (!(nu > 0.0)) throw ConfigError("nu must be positive");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(t_end >= 0.0)) throw ConfigError("t_end must be nonnegative");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ConfigError("cfl_safety must lie in (0,1]");
    if (formulation == Formulation::rotating && !grid.planar && dt * std::abs(omega) > 0.5)
      throw ConfigError("rotating formulation requires dt*|omega| <= 0.5");
  }
};

struct RotatingTendency {
  SpectralField dvbar;
  SpectralField dvplus;
  SpectralField dvminus;
};

// Side information from one right-hand-side evaluation.
struct RhsInfo {
  double umax = 0.0, vmax = 0.0, wmax = 0.0;
  double p0_residual = 0.0;  // m = 0 content left after the P0 subtractions
};

inline SpectralField to_lab(const RotatingState& s, double omega) {
  const cplx e = std::exp(cplx(0.0, omega * s.t));
  SpectralField v = s.vbar;
  axpy(e, s.vplus, v);
  axpy(std::conj(e), s.vminus, v);
  return v;
}

// Lab-frame time derivative carried by a rotating-frame tendency d at state s.
inline SpectralField lab_tendency(const RotatingState& s, const RotatingTendency& d, double omega) {
  const cplx e = std::exp(cplx(0.0, omega * s.t)), io(0.0, omega);
  SpectralField v = d.dvbar;
  axpy(e, d.dvplus + io * s.vplus, v);
  axpy(std::conj(e), d.dvminus - io * s.vminus, v);
  return v;
}

inline RotatingState to_rotating(const SpectralField& v, double t, double omega) {
  const cplx e = std::exp(cplx(0.0, -omega * t));
  return {t, p0(v), e * p_plus(v), std::conj(e) * p_minus(v)};
}

namespace detail {

inline void check_finite(const SpectralField& f, const char* term) {
  if (!all_finite(f)) throw NonFiniteError(term);
}

// Physical-space samples needed for the nonlinear terms of a baroclinic field.
struct BaroclinicPack {
  PhysField v, gx, gy, psi, dzv;
};

inline BaroclinicPack pack_baroclinic(const SpectralField& a) {
  SpectralField psi = w_from_baroclinic(a);
  psi *= -1.0;  // psi = int_0^z div a = -w
  return {inverse(a), inverse(dx(a)), inverse(dy(a)), inverse(psi), inverse(dz(a))};
}

// m = 0 spectral field from per-column vertical sums (2 components).
inline SpectralField p0_from_sums(const GridSpec& g, std::vector<cplx>& sums, int ncomp) {
  const auto& plans = plans_for(g);
  SpectralField out(g, ncomp);
  const std::size_t nhz = g.horizontal();
  const double scale = 1.0 / (double(nhz) * g.nz);
  for (int c = 0; c < ncomp; ++c) {
    cplx* lvl = sums.data() + std::size_t(c) * nhz;
    for (std::size_t h = 0; h < nhz; ++h) lvl[h] *= scale;
    plans.fft_level(lvl, true);
    cplx* d = out.comp_data(c);
    for (std::size_t h = 0; h < nhz; ++h) d[h * g.nz] = lvl[h];
  }
  return out;
}

inline double take_p0(SpectralField& f) {
  double r = 0.0;
  const std::size_t nz = std::size_t(f.grid.nz);
  for (std::size_t h = 0; h < std::size_t(f.ncomp) * f.grid.horizontal(); ++h) {
    r = std::max(r, std::abs(f.c[h * nz]));
    f.c[h * nz] = 0.0;
  }
  return r;
}

inline RotatingTendency rhs_rotating_impl(const RotatingState& s, double t, const SolverConfig& cfg, bool viscous,
                                          RhsInfo* info) {
  const GridSpec& g = cfg.grid;
  const double om = cfg.coriolis ? cfg.omega : 0.0;
  const cplx e1 = std::exp(cplx(0.0, om * t)), em1 = std::conj(e1);
  const cplx e2 = e1 * e1, em2 = std::conj(e2);
  const cplx I(0.0, 1.0);
  RotatingTendency d{zeros_like(s.vbar), zeros_like(s.vplus), zeros_like(s.vminus)};

  if (cfg.nonlinear || info) {
    const PhysField vb = inverse_barotropic(s.vbar);
    const PhysField bgx = inverse_barotropic(dx(s.vbar));
    const PhysField bgy = inverse_barotropic(dy(s.vbar));
    const BaroclinicPack P = pack_baroclinic(s.vplus);
    const BaroclinicPack M = pack_baroclinic(s.vminus);

    const std::size_t nhz = g.horizontal();
    const int nz = g.nz;
    PhysField np(g, 2), nm(g, 2);
    // Vertical sums of (X + Y) for the pairs (+,+), (-,+), (-,-), (+,-) and of V̄.grad V̄.
    std::vector<cplx> spp(2 * nhz), smp(2 * nhz), smm(2 * nhz), spm(2 * nhz), sbb(2 * nhz);
    double umax = 0.0, vmax = 0.0, wmax = 0.0;

    for (std::size_t h = 0; h < nhz; ++h)
      for (int m = 0; m < nz; ++m) {
        const std::size_t i0 = h * nz + m, i1 = g.block() + i0;
        const cplx a1 = P.v.v[i0], a2 = P.v.v[i1], b1 = M.v.v[i0], b2 = M.v.v[i1];
        const cplx pgx[2] = {P.gx.v[i0], P.gx.v[i1]}, pgy[2] = {P.gy.v[i0], P.gy.v[i1]};
        const cplx mgx[2] = {M.gx.v[i0], M.gx.v[i1]}, mgy[2] = {M.gy.v[i0], M.gy.v[i1]};
        const cplx divp = pgx[0] + pgy[1], divm = mgx[0] + mgy[1];
        const cplx psip = P.psi.v[i0], psim = M.psi.v[i0];
        const cplx pz[2] = {P.dzv.v[i0], P.dzv.v[i1]}, mz[2] = {M.dzv.v[i0], M.dzv.v[i1]};
        const cplx u1 = vb.v[i0], u2 = vb.v[i1];
        const cplx ugx[2] = {bgx.v[i0], bgx.v[i1]}, ugy[2] = {bgy.v[i0], bgy.v[i1]};
        // Gradients of q+- = V̄ +- i V̄^perp = (u1 -+ i u2, u2 +- i u1).
        const cplx qpx[2] = {ugx[0] - I * ugx[1], ugx[1] + I * ugx[0]};
        const cplx qpy[2] = {ugy[0] - I * ugy[1], ugy[1] + I * ugy[0]};
        const cplx qmx[2] = {ugx[0] + I * ugx[1], ugx[1] - I * ugx[0]};
        const cplx qmy[2] = {ugy[0] + I * ugy[1], ugy[1] - I * ugy[0]};
        const cplx ap[2] = {a1, a2}, bm[2] = {b1, b2};

        for (int c = 0; c < 2; ++c) {
          const cplx xpp = a1 * pgx[c] + a2 * pgy[c];  // V+ . grad V+
          const cplx xmp = b1 * pgx[c] + b2 * pgy[c];  // V- . grad V+
          const cplx xmm = b1 * mgx[c] + b2 * mgy[c];
          const cplx xpm = a1 * mgx[c] + a2 * mgy[c];
          const cplx zpp = psip * pz[c], zmp = psim * pz[c];
          const cplx zmm = psim * mz[c], zpm = psip * mz[c];
          const cplx bp = u1 * pgx[c] + u2 * pgy[c];  // V̄ . grad V+
          const cplx bmn = u1 * mgx[c] + u2 * mgy[c];
          const cplx cpp = a1 * qpx[c] + a2 * qpy[c];  // (V+ . grad)(V̄ + i V̄^perp)
          const cplx cmp = b1 * qpx[c] + b2 * qpy[c];
          const cplx cmm = b1 * qmx[c] + b2 * qmy[c];
          const cplx cpm = a1 * qmx[c] + a2 * qmy[c];
          const std::size_t ic = c == 0 ? i0 : i1;
          np.v[ic] = -e1 * (xpp - zpp) - em1 * (xmp - zmp) - bp - 0.5 * cpp - em2 * 0.5 * cmp;
          nm.v[ic] = -em1 * (xmm - zmm) - e1 * (xpm - zpm) - bmn - 0.5 * cmm - e2 * 0.5 * cpm;
          const std::size_t sc = std::size_t(c) * nhz + h;
          spp[sc] += xpp + divp * ap[c];
          smp[sc] += xmp + divm * ap[c];
          smm[sc] += xmm + divm * bm[c];
          spm[sc] += xpm + divp * bm[c];
          sbb[sc] += u1 * ugx[c] + u2 * ugy[c];
        }
        if (info) {
          umax = std::max(umax, std::abs(u1 + e1 * a1 + em1 * b1));
          vmax = std::max(vmax, std::abs(u2 + e1 * a2 + em1 * b2));
          wmax = std::max(wmax, std::abs(e1 * psip + em1 * psim));
        }
      }

    if (info) {
      info->umax = umax;
      info->vmax = vmax;
      info->wmax = wmax;
    }

    if (cfg.nonlinear) {
      const SpectralField Ppp = p0_from_sums(g, spp, 2), Pmp = p0_from_sums(g, smp, 2);
      const SpectralField Pmm = p0_from_sums(g, smm, 2), Ppm = p0_from_sums(g, spm, 2);
      const SpectralField Pbb = p0_from_sums(g, sbb, 2);

      d.dvplus = forward(np);
      axpy(e1, Ppp, d.dvplus);
      axpy(em1, Pmp, d.dvplus);
      d.dvminus = forward(nm);
      axpy(em1, Pmm, d.dvminus);
      axpy(e1, Ppm, d.dvminus);
      const double r1 = take_p0(d.dvplus), r2 = take_p0(d.dvminus);
      if (info) info->p0_residual = std::max(r1, r2);
      dealias_inplace(d.dvplus);
      dealias_inplace(d.dvminus);

      SpectralField tb = -1.0 * Pbb;
      axpy(-e2, Ppp, tb);
      axpy(-em2, Pmm, tb);
      d.dvbar = leray_h(dealias(tb));
    }
  }

  if (viscous && cfg.viscous) {
    axpy(cfg.nu, dz(s.vplus, 2), d.dvplus);
    axpy(cfg.nu, dz(s.vminus, 2), d.dvminus);
  }
  check_finite(d.dvbar, "dvbar");
  check_finite(d.dvplus, "dvplus");
  check_finite(d.dvminus, "dvminus");
  return d;
}

inline SpectralField rhs_direct_impl(const SpectralField& v, const SolverConfig& cfg, bool viscous, RhsInfo* info) {
  const GridSpec& g = cfg.grid;
  SpectralField d = zeros_like(v);
  if (cfg.nonlinear || info) {
    const PhysField vp = inverse(v), gx = inverse(dx(v)), gy = inverse(dy(v));
    const PhysField wp = inverse(w_from_baroclinic(baroclinic(v)));
    const PhysField vz = inverse(dz(v));
    PhysField n(g, 2);
    const std::size_t nb = g.block();
    double umax = 0.0, vmax = 0.0, wmax = 0.0;
    for (std::size_t i = 0; i < nb; ++i) {
      const cplx u1 = vp.v[i], u2 = vp.v[nb + i], w = wp.v[i];
      n.v[i] = -(u1 * gx.v[i] + u2 * gy.v[i] + w * vz.v[i]);
      n.v[nb + i] = -(u1 * gx.v[nb + i] + u2 * gy.v[nb + i] + w * vz.v[nb + i]);
      umax = std::max(umax, std::abs(u1));
      vmax = std::max(vmax, std::abs(u2));
      wmax = std::max(wmax, std::abs(w));
    }
    if (info) {
      info->umax = umax;
      info->vmax = vmax;
      info->wmax = wmax;
    }
    if (cfg.nonlinear) {
      d = forward(n);
      dealias_inplace(d);
    }
  }
  if (cfg.coriolis && cfg.omega != 0.0) axpy(-cfg.omega, perp(v), d);
  if (viscous && cfg.viscous) axpy(cfg.nu, dz(v, 2), d);
  d = project_pressure(d);
  check_finite(d, "direct tendency");
  return d;
}

// Planar reduction: u_t = -u u_x + d_x P0(u^2) + (int_0^z u_x) u_z + nu u_zz.
inline SpectralField rhs_2d_impl(const SpectralField& u, const SolverConfig& cfg, bool viscous, RhsInfo* info) {
  const GridSpec& g = cfg.grid;
  SpectralField d = zeros_like(u);
  if (cfg.nonlinear || info) {
    const SpectralField ux = dx(u);
    SpectralField psi(g, 1, Basis::sin);
    for (std::size_t h = 0; h < g.horizontal(); ++h)
      for (int m = 1; m < g.nz; ++m) psi.c[h * g.nz + m] = ux.c[h * g.nz + m] / (m * kPi);
    const PhysField up = inverse(u), uxp = inverse(ux), psip = inverse(psi), uzp = inverse(dz(u));
    PhysField n(g, 1), sq(g, 1);
    double umax = 0.0, wmax = 0.0;
    for (std::size_t i = 0; i < g.block(); ++i) {
      n.v[i] = -up.v[i] * uxp.v[i] + psip.v[i] * uzp.v[i];
      sq.v[i] = up.v[i] * up.v[i];
      umax = std::max(umax, std::abs(up.v[i]));
      wmax = std::max(wmax, std::abs(psip.v[i]));
    }
    if (info) {
      info->umax = umax;
      info->wmax = wmax;
    }
    if (cfg.nonlinear) {
      d = forward(n);
      d += dx(forward_p0(sq));
      const double r = take_p0(d);
      if (info) info->p0_residual = r;
      dealias_inplace(d);
    }
  }
  if (viscous && cfg.viscous) axpy(cfg.nu, dz(u, 2), d);
  check_finite(d, "planar tendency");
  return d;
}

}  // namespace detail

inline RotatingTendency rhs_rotating(const RotatingState& s, double t, const SolverConfig& cfg,
                                     RhsInfo* info = nullptr) {
  return detail::rhs_rotating_impl(s, t, cfg, true, info);
}

inline SpectralField rhs_direct(const SpectralField& v, double /*t*/, const SolverConfig& cfg,
                                RhsInfo* info = nullptr) {
  return detail::rhs_direct_impl(v, cfg, true, info);
}

inline SpectralField rhs_2d(const SpectralField& u, const SolverConfig& cfg, RhsInfo* info = nullptr) {
  return detail::rhs_2d_impl(u, cfg, true, info);
}

// Solver state: direct {V}, rotating {vbar, vplus, vminus}, planar {u}.
using Bundle = std::vector<SpectralField>;

struct PeState {
  double t = 0.0;
  Bundle u;
};

inline bool is_planar(const SolverConfig& cfg) { return cfg.grid.planar; }

// Build a state from a lab-frame velocity (a scalar u on planar grids).
inline PeState make_state(const SpectralField& v, double t, const SolverConfig& cfg) {
  if (!(v.grid == cfg.grid)) throw DimensionError("make_state: grid mismatch");
  if (is_planar(cfg)) {
    if (v.ncomp != 1) throw DimensionError("planar state is a scalar field");
    return {t, {baroclinic(v)}};
  }
  if (v.ncomp != 2) throw DimensionError("velocity must be a 2-vector");
  if (cfg.formulation == Formulation::direct) return {t, {v}};
  RotatingState r = to_rotating(v, t, cfg.coriolis ? cfg.omega : 0.0);
  return {t, {r.vbar, r.vplus, r.vminus}};
}

inline RotatingState as_rotating(const PeState& s, const SolverConfig& cfg) {
  if (is_planar(cfg)) throw DimensionError("planar states have no rotating form");
  if (cfg.formulation == Formulation::direct) return to_rotating(s.u[0], s.t, cfg.coriolis ? cfg.omega : 0.0);
  return {s.t, s.u[0], s.u[1], s.u[2]};
}

inline SpectralField lab_velocity(const PeState& s, const SolverConfig& cfg) {
  if (is_planar(cfg) || cfg.formulation == Formulation::direct) return s.u[0];
  return to_lab({s.t, s.u[0], s.u[1], s.u[2]}, cfg.coriolis ? cfg.omega : 0.0);
}

namespace detail {

inline Bundle rhs_bundle(const Bundle& u, double t, const SolverConfig& cfg, bool viscous, RhsInfo* info) {
  if (is_planar(cfg)) return {rhs_2d_impl(u[0], cfg, viscous, info)};
  if (cfg.formulation == Formulation::direct) return {rhs_direct_impl(u[0], cfg, viscous, info)};
  RotatingTendency d = rhs_rotating_impl({t, u[0], u[1], u[2]}, t, cfg, viscous, info);
  return {std::move(d.dvbar), std::move(d.dvplus), std::move(d.dvminus)};
}

// out = x + a*y
inline Bundle combine(const Bundle& x, cplx a, const Bundle& y) {
  Bundle out = x;
  for (std::size_t i = 0; i < out.size(); ++i) axpy(a, y[i], out[i]);
  return out;
}

// Exact vertical diffusion over time h: coefficient m scaled by e^{-nu (m pi)^2 h}.
inline Bundle heat(const Bundle& u, double nu, double h) {
  Bundle out = u;
  if (nu == 0.0 || h == 0.0) return out;
  for (auto& f : out) {
    const int nz = f.grid.nz;
    std::vector<double> fac(nz);
    for (int m = 0; m < nz; ++m) fac[m] = std::exp(-nu * (m * kPi) * (m * kPi) * h);
    for (std::size_t hh = 0; hh < std::size_t(f.ncomp) * f.grid.horizontal(); ++hh)
      for (int m = 0; m < nz; ++m) f.c[hh * nz + m] *= fac[m];
  }
  return out;
}

inline double courant(const RhsInfo& info, const SolverConfig& cfg, double h) {
  return h * (info.umax * cfg.grid.nh + info.vmax * cfg.grid.ny() + info.wmax * cfg.grid.nz);
}

}  // namespace detail

// One RK4 step of size h (defaults to cfg.dt). Throws CflError before
// advancing if the advective Courant number exceeds cfg.cfl_safety
// (checked only when the nonlinear terms are active).
inline PeState step(const PeState& s, const SolverConfig& cfg, double h = -1.0) {
  if (h < 0.0) h = cfg.dt;
  const double t = s.t;
  const bool ifac = cfg.scheme == Scheme::rk4_if;
  const double nu = (ifac && cfg.viscous) ? cfg.nu : 0.0;
  const bool visc_in_rhs = !ifac;
  RhsInfo info;
  const Bundle k1 = detail::rhs_bundle(s.u, t, cfg, visc_in_rhs, &info);
  const double c = detail::courant(info, cfg, h);
  if (cfg.nonlinear && c > cfg.cfl_safety) throw CflError(c, 0.9 * h * cfg.cfl_safety / c);

  auto N = [&](const Bundle& u, double tt) { return detail::rhs_bundle(u, tt, cfg, visc_in_rhs, nullptr); };
  PeState out;
  out.t = t + h;
  if (ifac) {
    const Bundle eu_half = detail::heat(s.u, nu, 0.5 * h);
    const Bundle k2 = N(detail::heat(detail::combine(s.u, 0.5 * h, k1), nu, 0.5 * h), t + 0.5 * h);
    const Bundle k3 = N(detail::combine(eu_half, 0.5 * h, k2), t + 0.5 * h);
    const Bundle k4 = N(detail::combine(detail::heat(s.u, nu, h), h, detail::heat(k3, nu, 0.5 * h)), t + h);
    Bundle u = detail::heat(s.u, nu, h);
    const Bundle k1e = detail::heat(k1, nu, h);
    Bundle k23 = k2;
    for (std::size_t i = 0; i < k23.size(); ++i) k23[i] += k3[i];
    const Bundle k23e = detail::heat(k23, nu, 0.5 * h);
    for (std::size_t i = 0; i < u.size(); ++i) {
      axpy(h / 6.0, k1e[i], u[i]);
      axpy(h / 3.0, k23e[i], u[i]);
      axpy(h / 6.0, k4[i], u[i]);
    }
    out.u = std::move(u);
  } else {
    const Bundle k2 = N(detail::combine(s.u, 0.5 * h, k1), t + 0.5 * h);
    const Bundle k3 = N(detail::combine(s.u, 0.5 * h, k2), t + 0.5 * h);
    const Bundle k4 = N(detail::combine(s.u, h, k3), t + h);
    Bundle u = s.u;
    for (std::size_t i = 0; i < u.size(); ++i) {
      axpy(h / 6.0, k1[i], u[i]);
      axpy(h / 3.0, k2[i], u[i]);
      axpy(h / 3.0, k3[i], u[i]);
      axpy(h / 6.0, k4[i], u[i]);
    }
    out.u = std::move(u);
  }
  return out;
}

struct IntegrateOptions {
  NormSpec reference{2.5, 0, 0.1, 0.0};  // sentinel norm; r and tau0 of the radius tracker
  double c_r = 1.0;
  double blowup_factor = 1e4;
  bool track_tau = true;
  bool fits = true;
  RadiusFit radius_fit = RadiusFit::shell_l2;
  int diag_every = 1;  // observer cadence in accepted steps (the last step always reports)
  // Ends the run after the step whose diagnostics satisfy it.
  std::function<bool(const DiagnosticsRow&)> stop_when;
};

struct IntegrationResult {
  PeState final_state;
  std::vector<DiagnosticsRow> rows;
  Termination termination = Termination::running;
  double t_stop = 0.0;
  double tau_crossing = std::numeric_limits<double>::infinity();
  double t_fit_crossing = std::numeric_limits<double>::infinity();
  int steps = 0;
};

inline DiagnosticsRow diagnose(const PeState& s, const SolverConfig& cfg, const IntegrateOptions& opt,
                               double tau_tracked) {
  DiagnosticsRow row;
  const SpectralField v = lab_velocity(s, cfg);
  const double r = opt.reference.r;
  row.t = s.t;
  row.tau_tracked = tau_tracked;
  row.norm_r0tau = norm_rst(v, NormSpec{r, 0, std::max(tau_tracked, 0.0), 0.0});
  row.sobolev_norm = norm_rst(v, NormSpec{r, 0, 0.0, 0.0});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  row.tau_fit_h = nan;
  row.eta_fit_v = nan;
  if (opt.fits) {
    try {
      row.tau_fit_h = fit_radius(v, Axis::horizontal, 1e-14, opt.radius_fit);
    } catch (const FitError&) {
    }
    try {
      row.eta_fit_v = fit_radius(v, Axis::vertical, 1e-14, opt.radius_fit);
    } catch (const FitError&) {
    }
  }
  row.energy = norm2(v);
  const SpectralField vb = p0(v);
  row.baroclinic_l2 = l2(baroclinic(v));
  if (v.ncomp == 2) {
    row.enstrophy_bar = norm2(dx(component(vb, 1)) - dy(component(vb, 0)));
    row.div_residual = l2(div_h(vb));
  }
  double mean = 0.0;
  for (int c = 0; c < v.ncomp; ++c) mean += std::norm(v(c, 0, 0, 0));
  row.mean_residual = std::sqrt(mean);
  return row;
}

using Observer = std::function<void(const DiagnosticsRow&, const PeState&)>;

// Steps from s0.t to s0.t + cfg.t_end, stopping early on the norm sentinel
// or on non-finite values.
inline IntegrationResult integrate(const PeState& s0, const SolverConfig& cfg, const IntegrateOptions& opt = {},
                                   const Observer& observer = nullptr) {
  cfg.validate();
  IntegrationResult res;
  PeState s = s0;
  const double r = opt.reference.r;
  TauTracker tracker(opt.reference.tau, opt.c_r);
  const double t_final = s0.t + cfg.t_end;
  auto lab = [&](const PeState& st) { return lab_velocity(st, cfg); };
  SpectralField v = lab(s);
  const double ref0 = norm_rst(v, opt.reference);

  DiagnosticsRow row = diagnose(s, cfg, opt, tracker.tau());
  const double fit0 = row.tau_fit_h;
  auto emit = [&](DiagnosticsRow& rw, const PeState& st, bool force) {
    if (force || opt.diag_every <= 1 || res.steps % opt.diag_every == 0) {
      res.rows.push_back(rw);
      if (observer) observer(rw, st);
    }
  };
  if (cfg.t_end == 0.0) row.termination = Termination::completed;
  emit(row, s, true);
  if (cfg.t_end == 0.0) {
    res.final_state = s;
    res.termination = Termination::completed;
    res.t_stop = s.t;
    return res;
  }

  const long nsteps = std::max(1L, std::lround(cfg.t_end / cfg.dt));
  const double h = cfg.t_end / double(nsteps);
  for (long n = 0; n < nsteps; ++n) {
    PeState next;
    try {
      next = step(s, cfg, h);
    } catch (const NonFiniteError&) {
      res.termination = Termination::nan;
      break;
    }
    bool finite = true;
    for (const auto& f : next.u) finite = finite && all_finite(f);
    ++res.steps;
    if (!finite) {
      s = next;
      res.termination = Termination::nan;
      break;
    }
    const SpectralField vn = lab(next);
    if (opt.track_tau) {
      const double old_sum = tau_norm_sum(v, r, tracker.tau());
      tracker.advance(s.t, h, old_sum, [&](double tau) { return tau_norm_sum(vn, r, tau); });
      if (tracker.crossed()) res.tau_crossing = tracker.crossing_time();
    }
    s = next;
    v = vn;
    if (n == nsteps - 1) s.t = t_final;
    DiagnosticsRow rw = diagnose(s, cfg, opt, tracker.tau());
    if (rw.tau_fit_h < 0.05 * fit0 && !std::isfinite(res.t_fit_crossing)) res.t_fit_crossing = s.t;
    const bool blow = norm_rst(v, opt.reference) > opt.blowup_factor * ref0;
    const bool last = n == nsteps - 1;
    const bool stop = !blow && !last && opt.stop_when && opt.stop_when(rw);
    if (blow) rw.termination = Termination::blowup_sentinel;
    else if (last) rw.termination = Termination::completed;
    else if (stop) rw.termination = Termination::stopped;
    emit(rw, s, blow || last || stop);
    if (blow) {
      res.termination = Termination::blowup_sentinel;
      break;
    }
    if (stop) {
      res.termination = Termination::stopped;
      break;
    }
  }
  if (res.termination == Termination::running) res.termination = Termination::completed;
  if (res.termination == Termination::nan) {
    DiagnosticsRow rw;
    rw.t = s.t;
    rw.termination = Termination::nan;
    rw.norm_r0tau = rw.sobolev_norm = rw.energy = std::numeric_limits<double>::quiet_NaN();
    emit(rw, s, true);
  }
  res.final_state = s;
  res.t_stop = s.t;
  return res;
}

}  // namespace rotape
