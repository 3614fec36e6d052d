#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "rotape/decomposition.hpp"
#include "rotape/norms.hpp"
#include "rotape/state.hpp"

namespace rotape {

// Unnamed constants of the estimates; every entry is an input.
struct TheoryConstants {
  double c_r = 1.0;           // C_r
  double c_m = std::numbers::e;  // C_M of the limit-system growth bound, must exceed 1
  double c_r_a = 1.0;         // C_{r,a}
  double c_r_s = 1.0;         // C_{r,s}
  double c_main = 1.0;        // C_{tau0,M,r}
  double c_main_nu = 1.0;     // C_{tau0,M,r,nu}
  double c_small = 1.0;       // constant of the small-barotropic lifespans
  double c_2d = 1.0;          // smallness constant of the 2D problem

  void validate() const {
    for (double v : {c_r, c_r_a, c_r_s, c_main, c_main_nu, c_small, c_2d})
      if (!(v > 0.0)) throw Error("theory constants must be positive");
    if (!(c_m > 1.0)) throw Error("c_m must exceed 1");
  }
};

// Radius ODE  tau' = -1 - c_r (||V||_{r,0,tau} + ||dz V||_{r,0,tau}),
// advanced with the trapezoidal rule (explicit predictor) at solver steps.
class TauTracker {
 public:
  TauTracker(double tau0, double c_r) : tau_(tau0), c_r_(c_r) {}

  double tau() const { return tau_; }
  bool crossed() const { return crossed_; }
  double crossing_time() const { return t_cross_; }

  // norm_old: norm sum of the old state at the current tau; norm_new(tau):
  // norm sum of the new state at a trial radius.
  double advance(double t_old, double dt, double norm_old, const std::function<double(double)>& norm_new) {
    if (crossed_) return tau_;
    const double f0 = -1.0 - c_r_ * norm_old;
    const double pred = std::max(tau_ + dt * f0, 0.0);
    const double f1 = -1.0 - c_r_ * norm_new(pred);
    const double next = tau_ + 0.5 * dt * (f0 + f1);
    if (next <= 0.0) {
      t_cross_ = t_old + dt * tau_ / (tau_ - next);
      crossed_ = true;
      tau_ = 0.0;
    } else {
      tau_ = next;
    }
    return tau_;
  }

 private:
  double tau_;
  double c_r_;
  bool crossed_ = false;
  double t_cross_ = std::numeric_limits<double>::infinity();
};

// Sum ||V||_{r,0,tau} + ||dz V||_{r,0,tau} fed to the radius ODE.
inline double tau_norm_sum(const SpectralField& v, double r, double tau) {
  return norm_rst(v, NormSpec{r, 0, tau, 0.0}) + std::sqrt(seminorm2(v, r, tau, 1) + dz_norm2(v, 1));
}

struct TauSeries {
  std::vector<double> t;
  std::vector<double> tau;
  double crossing_time = std::numeric_limits<double>::infinity();
};

// Radius ODE on a time grid with norms supplied by norms(t, tau) -> (a, b).
inline TauSeries tau_ode_local(const std::vector<double>& times,
                               const std::function<std::pair<double, double>(double, double)>& norms,
                               double c_r, double tau0) {
  TauSeries out;
  if (times.empty()) return out;
  TauTracker tr(tau0, c_r);
  out.t.push_back(times[0]);
  out.tau.push_back(tau0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double t0 = times[i - 1], dt = times[i] - t0;
    auto [a0, b0] = norms(t0, tr.tau());
    tr.advance(t0, dt, a0 + b0, [&](double tau) {
      auto [a, b] = norms(times[i], tau);
      return a + b;
    });
    if (tr.crossed()) {
      out.crossing_time = tr.crossing_time();
      break;
    }
    out.t.push_back(times[i]);
    out.tau.push_back(tr.tau());
  }
  return out;
}

// Lower bound tau0 - (1 + c_r M) t - (c_r / sqrt(2 nu)) M sqrt(t) of the radius.
inline double tau_lower_bound_local(double t, double norm0, double tau0, double nu, double c_r) {
  return tau0 - (1.0 + c_r * norm0) * t - c_r / std::sqrt(2.0 * nu) * norm0 * std::sqrt(t);
}

// Time at which the lower bound reaches tau0/2:
//   (1 + c_r M) T + (c_r M / sqrt(2 nu)) sqrt(T) = tau0 / 2.
inline double lifespan_local(double norm0, double tau0, double nu, double c_r) {
  if (!(nu > 0.0) || !(tau0 >= 0.0) || !(norm0 >= 0.0) || !(c_r > 0.0))
    throw Error("lifespan_local: invalid arguments");
  const double a = 1.0 + c_r * norm0;
  const double b = c_r * norm0 / std::sqrt(2.0 * nu);
  // sqrt(T) = (sqrt(b^2 + 2 tau0 a) - b) / (2a), written without cancellation.
  const double x = tau0 / (b + std::sqrt(b * b + 2.0 * tau0 * a));
  return x * x;
}

inline double lifespan_local_residual(double T, double norm0, double tau0, double nu, double c_r) {
  return (1.0 + c_r * norm0) * T + c_r / std::sqrt(2.0 * nu) * norm0 * std::sqrt(T) - 0.5 * tau0;
}

// Radius curve and lifespan for the vertically analytic class, with
// E0 = ||V0||^2 and N = sqrt(E0):
//   tau(t) >= tau0 - c_r (N (t + sqrt(2t/nu)) + E0 t / nu)
//   (N + E0/nu) T + N sqrt(2/nu) sqrt(T) = tau0 / (2 c_r).
struct RadiusCurve {
  double e0, nu, tau0, c_r;
  double T;
  double tau(double t) const {
    const double n = std::sqrt(e0);
    return tau0 - c_r * (n * (t + std::sqrt(2.0 * t / nu)) + e0 * t / nu);
  }
  double residual(double t) const {
    const double n = std::sqrt(e0);
    return (n + e0 / nu) * t + n * std::sqrt(2.0 / nu) * std::sqrt(t) - tau0 / (2.0 * c_r);
  }
};

inline RadiusCurve tau_T_radius(double e0, double nu, double tau0, double c_r) {
  if (!(nu > 0.0) || !(tau0 >= 0.0) || !(e0 >= 0.0) || !(c_r > 0.0))
    throw Error("tau_T_radius: invalid arguments");
  RadiusCurve rc{e0, nu, tau0, c_r, std::numeric_limits<double>::infinity()};
  if (e0 == 0.0) return rc;
  const double n = std::sqrt(e0);
  const double a = n + e0 / nu, b = n * std::sqrt(2.0 / nu), c = tau0 / (2.0 * c_r);
  const double x = 2.0 * c / (b + std::sqrt(b * b + 4.0 * a * c));
  rc.T = x * x;
  return rc;
}

inline double eta_of_t(double t, double nu) { return 0.5 * nu * t; }

struct Lifespan {
  double T = 0.0;
  bool below_threshold = false;
};

// T = (1/C) log[e^{-C} log[log[C' log(C' |Omega0|)]]] with C = c_main and
// C' = c_main_nu, taking ln|Omega0| so that huge rotation rates stay finite.
inline Lifespan lifespan_main_ln(double ln_omega0, double tau0, double M, double nu,
                                 const TheoryConstants& k) {
  k.validate();
  if (!(tau0 > 0.0) || !(M >= 0.0) || !(nu > 0.0)) throw Error("lifespan_main: invalid arguments");
  const double C = k.c_main, Cp = k.c_main_nu;
  const double l1 = std::log(Cp) + ln_omega0;  // log(C' Omega0)
  if (!(l1 > 0.0)) return {0.0, true};
  const double a2 = Cp * l1;
  if (!(a2 > 1.0)) return {0.0, true};
  const double l3 = std::log(std::log(a2));
  if (!(std::exp(-C) * l3 > 0.0)) return {0.0, true};
  const double T = std::log(std::exp(-C) * l3) / C;
  if (!(T > 0.0)) return {0.0, true};
  return {T, false};
}

inline Lifespan lifespan_main(double omega0, double tau0, double M, double nu, const TheoryConstants& k) {
  if (omega0 == 0.0) return {0.0, true};
  return lifespan_main_ln(std::log(std::abs(omega0)), tau0, M, nu, k);
}

// Small-barotropic lifespans: case 1 log(log Omega0)/C, case 2 log(Omega0)/C,
// case 3 Omega0^{1/2}/C.
inline Lifespan lifespan_small_barotropic_ln(int which, double ln_omega0, const TheoryConstants& k) {
  k.validate();
  const double C = k.c_small;
  if (!(ln_omega0 > 0.0)) return {0.0, true};
  double T = 0.0;
  switch (which) {
    case 1: T = std::log(ln_omega0) / C; break;
    case 2: T = ln_omega0 / C; break;
    case 3: T = std::exp(0.5 * ln_omega0) / C; break;
    default: throw Error("lifespan_small_barotropic: case must be 1, 2 or 3");
  }
  if (!(T > 0.0)) return {0.0, true};
  return {T, false};
}

inline Lifespan lifespan_small_barotropic(int which, double omega0, const TheoryConstants& k) {
  if (omega0 == 0.0) return {0.0, true};
  return lifespan_small_barotropic_ln(which, std::log(std::abs(omega0)), k);
}

inline double threshold_2d(double nu, double tau0, double c_2d) {
  if (!(c_2d > 0.0)) throw Error("threshold_2d: constant must be positive");
  return nu * tau0 / c_2d;
}

// (M + e)^{exp(c_r t)}
inline double euler_growth_theta(double M, double c_r, double t) {
  return std::pow(M + std::numbers::e, std::exp(c_r * t));
}

struct PerturbationSample {
  double t = 0.0;
  double F = 0.0, G = 0.0, H = 0.0, K = 0.0;
};

// F, G, H, K between a rotating-frame trajectory and a limit trajectory
// sampled at the same times, with radius tau[i] at sample i.
inline std::vector<PerturbationSample> perturbation_diagnostics(const std::vector<RotatingState>& pe,
                                                                const std::vector<RotatingState>& lim,
                                                                const std::vector<double>& tau, double r) {
  if (pe.size() != lim.size() || pe.size() != tau.size())
    throw DimensionError("perturbation_diagnostics: trajectory lengths differ");
  std::vector<PerturbationSample> out;
  out.reserve(pe.size());
  auto sq = [](double v) { return v * v; };
  for (std::size_t i = 0; i < pe.size(); ++i) {
    const double ta = tau[i];
    const SpectralField pb = pe[i].vbar - lim[i].vbar;
    const SpectralField pp = pe[i].vplus - lim[i].vplus;
    const SpectralField pm = pe[i].vminus - lim[i].vminus;
    const NormSpec s0{r, 0, ta, 0.0};
    PerturbationSample ps;
    ps.t = pe[i].t;
    ps.F = seminorm2(pb, r, ta) + sq(norm_rst(pp, s0)) + sq(norm_rst(pm, s0));
    ps.G = seminorm2(pb, r + 0.5, ta) + seminorm2(pp, r + 0.5, ta) + seminorm2(pm, r + 0.5, ta);
    ps.H = sq(norm_rst(dz(pp), s0)) + sq(norm_rst(dz(pm), s0));
    const NormSpec s2{r + 2.0, 0, ta, 0.0}, s11{r + 1.0, 1, ta, 0.0};
    ps.K = sq(norm_rst(lim[i].vbar, s2)) + sq(norm_rst(lim[i].vplus, s2)) + sq(norm_rst(lim[i].vminus, s2)) +
           sq(norm_rst(lim[i].vplus, s11)) + sq(norm_rst(lim[i].vminus, s11));
    out.push_back(ps);
  }
  return out;
}

}  // namespace rotape
