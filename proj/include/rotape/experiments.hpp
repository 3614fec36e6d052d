#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "rotape/decomposition.hpp"
#include "rotape/diagnostics.hpp"
#include "rotape/lemma_verify.hpp"
#include "rotape/limit_solver.hpp"
#include "rotape/norms.hpp"
#include "rotape/parallel.hpp"
#include "rotape/pe_solver.hpp"
#include "rotape/random_fields.hpp"
#include "rotape/run_config.hpp"
#include "rotape/snapshot.hpp"
#include "rotape/theory.hpp"

namespace rotape {

struct Check {
  std::string name;
  double value = 0.0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool pass = false;
};

inline Check within(std::string name, double v, double lo, double hi) {
  return {std::move(name), v, lo, hi, v >= lo && v <= hi};
}
inline Check at_most(std::string name, double v, double hi) {
  return within(std::move(name), v, -std::numeric_limits<double>::infinity(), hi);
}
inline Check at_least(std::string name, double v, double lo) {
  return within(std::move(name), v, lo, std::numeric_limits<double>::infinity());
}
inline Check holds(std::string name, bool b) { return {std::move(name), b ? 1.0 : 0.0, 1.0, 1.0, b}; }

struct Trajectory {
  std::string label;  // empty for the primary run (diagnostics.csv)
  std::vector<DiagnosticsRow> rows;
};

struct ArtifactFile {
  std::string name;
  std::string content;
};

struct SnapshotOut {
  std::string name;
  SpectralField field;
  double t = 0.0;
};

struct ScenarioReport {
  std::string scenario;
  std::vector<Check> checks;
  json summary = json::object();
  std::vector<Trajectory> trajectories;
  std::vector<ArtifactFile> files;
  std::vector<SnapshotOut> snapshots;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

struct RunContext {
  std::string out_dir;  // empty: no artifacts
  int threads = 1;
};

// JSON has no infinities; non-finite values are written as strings.
inline json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline json to_json(const Check& c) {
  return {{"name", c.name}, {"value", num(c.value)}, {"lo", num(c.lo)}, {"hi", num(c.hi)}, {"pass", c.pass}};
}

inline std::string format_checks(const ScenarioReport& rep) {
  std::ostringstream os;
  char buf[512];
  for (const auto& c : rep.checks) {
    std::snprintf(buf, sizeof buf, "%s  %-40s %14.6g  [%g, %g]\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value,
                  c.lo, c.hi);
    os << buf;
  }
  return os.str();
}

inline std::string csv_text(const std::vector<DiagnosticsRow>& rows) {
  std::ostringstream os;
  os << diagnostics_header() << '\n';
  for (const auto& r : rows) write_row(os, r);
  return os.str();
}

namespace scenario_detail {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline std::string label(const char* prefix, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%g", prefix, v);
  return buf;
}

inline InitParams init_params(const RunConfig& c) {
  return {c.init.tau0, c.init.eta0, c.init.amplitude, c.init.seed};
}

inline SpectralField initial_velocity(const RunConfig& c) {
  const InitParams p = init_params(c);
  if (c.init.kind == "random_analytic") return random_velocity(c.grid, p);
  if (c.init.kind == "well_prepared") return well_prepared(c.grid, p, c.init.baroclinic_sobolev_target);
  if (c.init.kind == "shear_plus_baroclinic") return shear_plus_baroclinic(c.grid, p);
  Snapshot s = read_snapshot(c.init.path, c.grid.dealias_fraction);
  if (!(s.field.grid == c.grid)) throw ConfigError("snapshot grid does not match the configured grid");
  if (s.field.ncomp != (c.grid.planar ? 1 : 2)) throw ConfigError("snapshot has the wrong number of components");
  return s.field;
}

inline IntegrateOptions base_options(const RunConfig& c) {
  IntegrateOptions o;
  o.reference = NormSpec{c.norms.r, 0, c.norms.tau_report, 0.0};
  o.c_r = c.theory.c_r;
  o.blowup_factor = c.scenario.blowup_factor;
  return o;
}

inline std::vector<double> sweep_or(const RunConfig& c, std::vector<double> fallback) {
  return c.scenario.sweep.empty() ? fallback : c.scenario.sweep;
}

// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return kNaN;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]) / double(n);
    my += std::log(y[i]) / double(n);
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += std::pow(std::log(x[i]) - mx, 2);
  }
  return sxy / sxx;
}

inline ScenarioReport evolve(const RunConfig& c, const RunContext&) {
  const SolverConfig sc = c.solver();
  const IntegrateOptions opt = base_options(c);
  const SpectralField v0 = initial_velocity(c);
  ScenarioReport rep;
  const int every = c.output.snapshot_every;
  int k = 0;
  Observer obs;
  if (every > 0)
    obs = [&](const DiagnosticsRow&, const PeState& st) {
      if (k % every == 0) {
        char name[64];
        std::snprintf(name, sizeof name, "snap_%06d.pesp", k);
        rep.snapshots.push_back({name, lab_velocity(st, sc), st.t});
      }
      ++k;
    };
  const IntegrationResult r = integrate(make_state(v0, 0.0, sc), sc, opt, obs);
  const SpectralField vf = lab_velocity(r.final_state, sc);
  if (every > 0) rep.snapshots.push_back({"final.pesp", vf, r.final_state.t});
  const double M0 = norm_rst(v0, opt.reference);
  const NormSpec report{c.norms.r, c.norms.s, c.norms.tau_report, 0.0};
  rep.summary = {{"termination", to_string(r.termination)},
                 {"t_stop", num(r.t_stop)},
                 {"steps", r.steps},
                 {"tau_crossing", num(r.tau_crossing)},
                 {"t_fit_crossing", num(r.t_fit_crossing)},
                 {"norm_reference_initial", num(M0)},
                 {"norm_report_initial", num(norm_rst(v0, report))},
                 {"norm_report_final", num(all_finite(vf) ? norm_rst(vf, report) : kNaN)},
                 {"lifespan_local_bound", num(lifespan_local(M0, c.norms.tau_report, c.physics.nu, c.theory.c_r))},
                 {"initial", {{"tau_fit_h", num(r.rows.front().tau_fit_h)},
                              {"eta_fit_v", num(r.rows.front().eta_fit_v)},
                              {"energy", num(r.rows.front().energy)}}}};
  rep.checks.push_back(holds("finite_trajectory", r.termination != Termination::nan));
  rep.trajectories.push_back({"", r.rows});
  return rep;
}

inline ScenarioReport verify_projections(const RunConfig& c, const RunContext&) {
  const GridSpec g = c.grid;
  if (g.planar) throw ConfigError("verify_projections needs a three-dimensional grid");
  const int n = c.scenario.samples > 0 ? c.scenario.samples : 100;
  const cplx I(0.0, 1.0);
  const double r = c.norms.r, tau = c.norms.tau_report;
  double sum = 0, idem = 0, ortho = 0, rot = 0, adj = 0, energy = 0, analytic = 0;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t seed = c.init.seed + std::uint64_t(i);
    const SpectralField v = random_analytic(g, 2, c.init.tau0, c.init.eta0, seed);
    const SpectralField w = random_analytic(g, 2, c.init.tau0, c.init.eta0, seed + 1000003, false);
    const SpectralField a = p0(v), pp = p_plus(v), pm = p_minus(v);
    sum = std::max(sum, max_abs_diff(a + pp + pm, v));
    idem = std::max({idem, max_abs_diff(p0(a), a), max_abs_diff(p_plus(pp), pp), max_abs_diff(p_minus(pm), pm)});
    ortho = std::max({ortho, max_abs(p_plus(pm)), max_abs(p_minus(pp)), max_abs(p0(pp)), max_abs(p0(pm)),
                      max_abs(p_plus(a)), max_abs(p_minus(a))});
    rot = std::max({rot, max_abs_diff(rot_R(pp), -I * pp), max_abs_diff(rot_R(pm), I * pm)});
    const double scale = l2(v) * l2(w);
    for (auto P : {&p0, &p_plus, &p_minus, &baroclinic})
      adj = std::max(adj, std::abs(inner((*P)(v), w) - inner(v, (*P)(w))) / scale);
    const SpectralField vt = baroclinic(v);
    energy = std::max(energy, std::abs(norm2(v) - norm2(a) - norm2(vt)) / norm2(v));
    for (int s = 0; s <= 2; ++s) {
      const double full = seminorm2(vt, r, tau, s);
      analytic = std::max({analytic, std::abs(seminorm2(pp, r, tau, s) - 0.5 * full) / full,
                           std::abs(seminorm2(pm, r, tau, s) - 0.5 * full) / full});
    }
  }
  ScenarioReport rep;
  rep.checks = {at_most("p0_plus_minus_sum_to_identity", sum, 1e-12),
                at_most("projections_idempotent", idem, 1e-12),
                at_most("projections_mutually_orthogonal", ortho, 1e-12),
                at_most("rotation_eigenvalues", rot, 1e-12),
                at_most("self_adjointness", adj, 1e-12),
                at_most("energy_split", energy, 1e-12),
                at_most("analytic_norm_half_split", analytic, 1e-12)};
  rep.summary = {{"samples", n}, {"nh", g.nh}, {"nz", g.nz}};
  return rep;
}

inline ScenarioReport formulation_equivalence(const RunConfig& c, const RunContext& ctx) {
  if (c.grid.planar) throw ConfigError("formulation_equivalence needs a three-dimensional grid");
  SolverConfig rot = c.solver(), dir = c.solver();
  rot.formulation = Formulation::rotating;
  dir.formulation = Formulation::direct;
  IntegrateOptions opt = base_options(c);
  opt.fits = false;
  opt.track_tau = false;
  const SpectralField v0 = initial_velocity(c);
  const long nsteps = std::max(1L, std::lround(c.time.t_end / c.time.dt));
  const long stride = std::max(1L, nsteps / 50);
  std::vector<SpectralField> traj[2];
  std::vector<DiagnosticsRow> rows[2];
  PeState final_rot;
  parallel_for(2, ctx.threads, [&](int k) {
    const SolverConfig& sc = k == 0 ? rot : dir;
    long i = 0;
    IntegrationResult r = integrate(make_state(v0, 0.0, sc), sc, opt, [&](const DiagnosticsRow&, const PeState& st) {
      if (i % stride == 0 || i == nsteps) traj[k].push_back(lab_velocity(st, sc));
      ++i;
    });
    rows[k] = std::move(r.rows);
    if (k == 0) final_rot = r.final_state;
  });
  double traj_gap = 0.0;
  const std::size_t n = std::min(traj[0].size(), traj[1].size());
  for (std::size_t i = 0; i < n; ++i) {
    const double d = l2(traj[1][i]);
    traj_gap = std::max(traj_gap, d > 0.0 ? l2(traj[0][i] - traj[1][i]) / d : l2(traj[0][i]));
  }
  double rhs_gap = 0.0;
  for (const RotatingState& s : {to_rotating(v0, 0.0, rot.omega), as_rotating(final_rot, rot)}) {
    const SpectralField lt = lab_tendency(s, rhs_rotating(s, s.t, rot), rot.omega);
    const SpectralField dd = rhs_direct(to_lab(s, rot.omega), s.t, dir);
    rhs_gap = std::max(rhs_gap, l2(lt - dd) / l2(dd));
  }
  ScenarioReport rep;
  rep.checks = {holds("same_sample_count", traj[0].size() == traj[1].size() && n > 1),
                at_most("trajectory_relative_l2_gap", traj_gap, 1e-6), at_most("rhs_relative_gap", rhs_gap, 1e-10)};
  rep.summary = {{"samples_compared", n}, {"trajectory_gap", num(traj_gap)}, {"rhs_gap", num(rhs_gap)}};
  rep.trajectories = {{"rotating", rows[0]}, {"direct", rows[1]}};
  return rep;
}

inline ScenarioReport temporal_order(const RunConfig& c, const RunContext& ctx) {
  SolverConfig sc = c.solver();
  sc.cfl_safety = 1.0;
  IntegrateOptions opt = base_options(c);
  opt.fits = false;
  opt.track_tau = false;
  const SpectralField v0 = initial_velocity(c);
  const double dts[4] = {c.time.dt, c.time.dt / 2, c.time.dt / 4, c.time.dt / 8};
  std::vector<SpectralField> out(4);
  parallel_for(4, ctx.threads, [&](int i) {
    SolverConfig s = sc;
    s.dt = dts[i];
    out[i] = lab_velocity(integrate(make_state(v0, 0.0, s), s, opt).final_state, s);
  });
  const double e1 = l2(out[0] - out[3]), e2 = l2(out[1] - out[3]), e3 = l2(out[2] - out[3]);
  const double p = std::log2((e1 - e2) / (e2 - e3));
  ScenarioReport rep;
  rep.checks = {at_least("richardson_order", p, 3.5)};
  rep.summary = {{"dt", c.time.dt}, {"errors", {num(e1), num(e2), num(e3)}}, {"order", num(p)}};
  return rep;
}

inline ScenarioReport tau_energy(const RunConfig& c, const RunContext&) {
  const SolverConfig sc = c.solver();
  IntegrateOptions opt = base_options(c);
  opt.fits = false;
  opt.track_tau = true;
  const IntegrationResult r = integrate(make_state(initial_velocity(c), 0.0, sc), sc, opt);
  double worst = -kInf;
  int resolved = 0;
  for (std::size_t i = 0; i + 1 < r.rows.size(); ++i) {
    const DiagnosticsRow &a = r.rows[i], &b = r.rows[i + 1];
    if (!(b.tau_tracked > 0.0)) break;
    ++resolved;
    const double na = a.norm_r0tau * a.norm_r0tau, nb = b.norm_r0tau * b.norm_r0tau;
    worst = std::max(worst, (nb - na) / (na * (b.t - a.t)));
  }
  ScenarioReport rep;
  rep.checks = {at_least("resolved_steps", resolved, 10),
                at_most("max_relative_growth_rate", worst, 1e-6)};
  rep.summary = {{"resolved_steps", resolved},
                 {"max_relative_growth_rate", num(worst)},
                 {"tau_crossing", num(r.tau_crossing)},
                 {"termination", to_string(r.termination)}};
  rep.trajectories.push_back({"", r.rows});
  return rep;
}

inline ScenarioReport local_clock_vs_omega(const RunConfig& c, const RunContext& ctx) {
  const std::vector<double> omegas = sweep_or(c, {0.0, 10.0, 100.0});
  const SpectralField v0 = initial_velocity(c);
  IntegrateOptions opt = base_options(c);
  opt.fits = false;
  opt.track_tau = true;
  const double n0 = norm_rst(v0, opt.reference);
  opt.stop_when = [n0](const DiagnosticsRow& row) { return row.norm_r0tau >= 2.0 * n0; };
  std::vector<std::vector<DiagnosticsRow>> rows(omegas.size());
  parallel_for(int(omegas.size()), ctx.threads, [&](int i) {
    SolverConfig sc = c.solver();
    sc.omega = omegas[i];
    rows[i] = integrate(make_state(v0, 0.0, sc), sc, opt).rows;
  });
  ScenarioReport rep;
  std::vector<double> td;
  json members = json::array();
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    double t = kInf;
    const auto& rw = rows[i];
    for (std::size_t j = 1; j < rw.size(); ++j)
      if (rw[j].norm_r0tau >= 2.0 * n0) {
        const double a = rw[j - 1].norm_r0tau, b = rw[j].norm_r0tau;
        t = rw[j - 1].t + (rw[j].t - rw[j - 1].t) * (2.0 * n0 - a) / (b - a);
        break;
      }
    td.push_back(t);
    members.push_back({{"omega", omegas[i]}, {"doubling_time", num(t)}});
    rep.trajectories.push_back({label("omega", omegas[i]), rows[i]});
  }
  const double lo = *std::min_element(td.begin(), td.end()), hi = *std::max_element(td.begin(), td.end());
  const double spread = std::isfinite(hi) ? (hi - lo) / lo : kInf;
  rep.checks = {at_most("doubling_time_spread", spread, 0.2)};
  rep.summary = {{"initial_norm", num(n0)}, {"members", members}, {"spread", num(spread)}};
  return rep;
}

inline ScenarioReport vertical_gain(const RunConfig& c, const RunContext&) {
  const SolverConfig sc = c.solver();
  IntegrateOptions opt = base_options(c);
  opt.fits = true;
  opt.track_tau = false;
  const IntegrationResult r = integrate(make_state(initial_velocity(c), 0.0, sc), sc, opt);
  const double t_lo = 0.2, t_hi = std::min(1.0, c.time.t_end);
  double worst = kInf;
  int used = 0;
  for (const auto& row : r.rows) {
    if (row.t < t_lo - 1e-12 || row.t > t_hi + 1e-12) continue;
    ++used;
    const double q = row.eta_fit_v / (c.physics.nu * row.t);
    worst = std::isnan(q) ? kNaN : std::min(worst, q);
    if (std::isnan(worst)) break;
  }
  if (used == 0) worst = kNaN;
  ScenarioReport rep;
  rep.checks = {at_least("min_eta_fit_over_nu_t", worst, 0.35)};
  rep.summary = {{"window", {t_lo, t_hi}},
                 {"rows_in_window", used},
                 {"min_ratio", num(worst)},
                 {"initial_eta_fit", num(r.rows.front().eta_fit_v)},
                 {"final_eta_fit", num(r.rows.back().eta_fit_v)}};
  rep.trajectories.push_back({"", r.rows});
  return rep;
}

inline std::string limit_csv(const std::vector<LimitRow>& rows) {
  std::ostringstream os;
  os << "t,energy_bar,enstrophy_bar,vtilde_l2,vbar_sobolev,vtilde_sobolev,omega_max\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.energy_bar,
                  r.enstrophy_bar, r.vtilde_l2, r.vbar_sobolev, r.vtilde_sobolev, r.omega_max);
    os << buf;
  }
  return os.str();
}

// F(T), G, H, K against the limit trajectory for each rotation rate.
inline ScenarioReport omega_convergence(const RunConfig& c, const RunContext& ctx, bool exponent_window) {
  if (c.grid.planar) throw ConfigError("limit comparison needs a three-dimensional grid");
  const std::vector<double> omegas = sweep_or(c, {10.0, 20.0, 40.0, 80.0});
  for (double o : omegas)
    if (!(o > 0.0)) throw ConfigError("omega sweep values must be positive");
  const SpectralField v0 = initial_velocity(c);
  LimitConfig lc{c.grid, c.physics.nu, c.time.dt, c.time.t_end, c.norms.r, std::max(c.norms.s, 1)};
  const LimitResult lr = integrate_limit(limit_from_velocity(v0), lc);
  IntegrateOptions opt = base_options(c);
  opt.fits = false;
  opt.track_tau = false;
  std::vector<PerturbationSample> ps(omegas.size());
  std::vector<std::vector<DiagnosticsRow>> rows(omegas.size());
  parallel_for(int(omegas.size()), ctx.threads, [&](int i) {
    SolverConfig sc = c.solver();
    sc.omega = omegas[i];
    IntegrationResult r = integrate(make_state(v0, 0.0, sc), sc, opt);
    const RotatingState a = as_rotating(r.final_state, sc);
    RotatingState b = limit_to_rotating(lr.final_state);
    b.t = a.t;
    ps[i] = perturbation_diagnostics({a}, {b}, {c.norms.tau_report}, c.norms.r)[0];
    rows[i] = std::move(r.rows);
  });
  ScenarioReport rep;
  std::vector<double> inv, F, sorted_F;
  json members = json::array();
  std::vector<std::size_t> order(omegas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return omegas[a] < omegas[b]; });
  for (std::size_t i : order) {
    inv.push_back(1.0 / omegas[i]);
    F.push_back(ps[i].F);
    members.push_back({{"omega", omegas[i]},
                       {"F", num(ps[i].F)},
                       {"G", num(ps[i].G)},
                       {"H", num(ps[i].H)},
                       {"K", num(ps[i].K)}});
    rep.trajectories.push_back({label("omega", omegas[i]), rows[i]});
  }
  bool decreasing = F.size() >= 2;
  for (std::size_t i = 1; i < F.size(); ++i) decreasing = decreasing && F[i] < F[i - 1];
  const double p = loglog_slope(inv, F);
  rep.checks.push_back(holds("F_decreases_with_omega", decreasing));
  if (exponent_window) rep.checks.push_back(within("F_exponent_vs_inverse_omega", p, 0.7, 1.3));
  rep.summary = {{"T", c.time.t_end},
                 {"tau", c.norms.tau_report},
                 {"members", members},
                 {"F_exponent", num(p)},
                 {"sqrtF_exponent", num(0.5 * p)}};
  rep.files.push_back({"limit_diagnostics.csv", limit_csv(lr.rows)});
  return rep;
}

inline ScenarioReport lifespan_vs_omega(const RunConfig& c, const RunContext& ctx) {
  std::vector<double> omegas = sweep_or(c, {0.0, 20.0, 80.0});
  std::sort(omegas.begin(), omegas.end());
  const SpectralField v0 = initial_velocity(c);
  IntegrateOptions opt = base_options(c);
  opt.fits = true;
  opt.track_tau = true;
  std::vector<IntegrationResult> res(omegas.size());
  parallel_for(int(omegas.size()), ctx.threads, [&](int i) {
    SolverConfig sc = c.solver();
    sc.omega = omegas[i];
    res[i] = integrate(make_state(v0, 0.0, sc), sc, opt);
  });
  ScenarioReport rep;
  json members = json::array();
  std::vector<double> ts;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    const auto& r = res[i];
    const bool blew = r.termination == Termination::blowup_sentinel || r.termination == Termination::nan;
    const double T = blew ? r.t_stop : kInf;
    ts.push_back(T);
    members.push_back({{"omega", omegas[i]},
                       {"T_star", num(T)},
                       {"termination", to_string(r.termination)},
                       {"tau_crossing", num(r.tau_crossing)},
                       {"t_fit_crossing", num(r.t_fit_crossing)}});
    rep.trajectories.push_back({label("omega", omegas[i]), r.rows});
  }
  bool increasing = ts.size() >= 2;
  for (std::size_t i = 1; i < ts.size(); ++i) increasing = increasing && std::isfinite(ts[i]) && ts[i] > ts[i - 1];
  rep.checks = {holds("all_members_hit_sentinel",
                      std::all_of(ts.begin(), ts.end(), [](double t) { return std::isfinite(t); })),
                holds("sentinel_time_increases_with_omega", increasing)};
  rep.summary = {{"blowup_factor", c.scenario.blowup_factor}, {"members", members}};
  return rep;
}

inline ScenarioReport small_data_2d(const RunConfig& c0, const RunContext&) {
  RunConfig c = c0;
  c.grid.planar = true;
  c.validate();
  const SolverConfig sc = c.solver();
  const double tau0 = c.norms.tau_report, r = c.norms.r, nu = c.physics.nu, cr = c.theory.c_r;
  const double threshold = threshold_2d(nu, tau0, c.theory.c_2d);
  SpectralField u0 = random_velocity(c.grid, init_params(c));
  const double target = c.scenario.threshold_fraction * threshold;
  u0 *= target / norm_rst(u0, NormSpec{r, 0, tau0, 0.0});
  IntegrateOptions opt = base_options(c);
  opt.fits = false;
  opt.track_tau = false;
  auto rate = [&](const SpectralField& u, double tau) {
    return -cr * norm_rst(dz(u), NormSpec{r, 0, std::max(tau, 0.0), 0.0});
  };
  double tau = tau0, t_prev = 0.0, n0 = 0.0, worst = 0.0, tau_min = tau0;
  SpectralField u_prev;
  json samples = json::array();
  integrate(make_state(u0, 0.0, sc), sc, opt, [&](const DiagnosticsRow& row, const PeState& st) {
    const SpectralField& u = st.u[0];
    if (u_prev.c.empty()) {
      n0 = norm_rst(u, NormSpec{r, 0, tau, 0.0});
    } else {
      const double h = row.t - t_prev, f0 = rate(u_prev, tau);
      const double pred = tau + h * f0;
      tau += 0.5 * h * (f0 + rate(u, pred));
    }
    tau_min = std::min(tau_min, tau);
    const double n = norm_rst(u, NormSpec{r, 0, std::max(tau, 0.0), 0.0});
    worst = std::max(worst, n / (n0 * std::exp(-0.5 * nu * row.t)));
    u_prev = u;
    t_prev = row.t;
  });
  ScenarioReport rep;
  rep.checks = {at_least("tau_stays_positive", tau_min, 1e-300),
                at_most("max_norm_over_envelope", worst, 1.1)};
  rep.summary = {{"threshold", num(threshold)},
                 {"initial_norm", num(n0)},
                 {"tau_final", num(tau)},
                 {"tau_min", num(tau_min)},
                 {"max_ratio", num(worst)}};
  return rep;
}

inline ScenarioReport euler_invariants(const RunConfig& c, const RunContext&) {
  if (c.grid.planar) throw ConfigError("euler_invariants needs a three-dimensional grid");
  const SpectralField w0 = curl_h(p0(random_velocity(c.grid, init_params(c))));
  LimitConfig lc{c.grid, c.physics.nu, c.time.dt, c.time.t_end, c.norms.r, 1};
  const LimitResult lr = integrate_limit({0.0, w0, SpectralField(c.grid, 2)}, lc);
  const LimitRow &a = lr.rows.front(), &b = lr.rows.back();
  const double T = c.time.t_end;
  const double de = T > 0.0 ? std::abs(b.energy_bar - a.energy_bar) / (a.energy_bar * T) : 0.0;
  const double dw = T > 0.0 ? std::abs(b.enstrophy_bar - a.enstrophy_bar) / (a.enstrophy_bar * T) : 0.0;
  ScenarioReport rep;
  rep.checks = {at_most("energy_drift_per_time", de, 1e-8), at_most("enstrophy_drift_per_time", dw, 1e-8)};
  rep.summary = {{"energy_drift", num(de)},
                 {"enstrophy_drift", num(dw)},
                 {"vorticity_change", num(l2(lr.final_state.omega_bar - w0) / l2(w0))}};
  rep.files.push_back({"limit_diagnostics.csv", limit_csv(lr.rows)});
  return rep;
}

inline ScenarioReport lemma_ratios(const RunConfig& c, const RunContext& ctx) {
  const std::vector<int> res = c.scenario.resolutions.empty() ? std::vector<int>{16, 32, 64} : c.scenario.resolutions;
  std::vector<LemmaKind> kinds;
  if (c.scenario.kinds.empty()) kinds = all_lemma_kinds();
  for (const auto& k : c.scenario.kinds) kinds.push_back(parse_lemma_kind(k));
  const int samples = c.scenario.samples > 0 ? c.scenario.samples : 200;
  ScenarioReport rep;
  std::ostringstream csv;
  bool header = true;
  json per_kind = json::object();
  for (LemmaKind k : kinds) {
    std::vector<double> maxima;
    bool finite = true;
    for (int nh : res) {
      EnsembleSpec s;
      s.kind = k;
      s.r = c.norms.r;
      s.tau = c.norms.tau_report;
      s.nh = nh;
      s.nz = c.grid.nz;
      s.samples = samples;
      s.seed = c.init.seed;
      s.tau_gen = c.init.tau0;
      s.eta_gen = c.init.eta0;
      s.threads = ctx.threads;
      const std::vector<LemmaRow> rows = run_ensemble(s);
      write_lemma_csv(csv, rows, header);
      header = false;
      for (const auto& r : rows) finite = finite && std::isfinite(r.ratio);
      maxima.push_back(max_ratio(rows));
    }
    const std::string name = to_string(k);
    rep.checks.push_back(holds("finite_" + name, finite));
    json entry = {{"resolutions", res}, {"max_ratio", json::array()}};
    for (double m : maxima) entry["max_ratio"].push_back(num(m));
    if (maxima.size() >= 2) {
      const double g = maxima.back() / maxima[maxima.size() - 2];
      rep.checks.push_back(at_most("resolution_growth_" + name, g, 1.5));
      entry["resolution_growth"] = num(g);
    }
    if (k != LemmaKind::banach_algebra && c.scenario.trials > 0) {
      const PathGap gap = exact_transform_gap(k, c.norms.r, c.norms.tau_report, GridSpec{res.front(), c.grid.nz},
                                              c.scenario.trials, c.init.seed);
      rep.checks.push_back(at_most("exact_vs_transform_" + name, gap.compared > 0 ? gap.max_rel : kNaN, 1e-10));
      entry["exact_transform"] = {
          {"max_rel", num(gap.max_rel)}, {"compared", gap.compared}, {"degenerate", gap.degenerate}};
    }
    per_kind[name] = entry;
  }
  rep.summary = {{"samples", samples}, {"kinds", per_kind}};
  rep.files.push_back({"lemma_ratios.csv", csv.str()});
  return rep;
}

inline ScenarioReport continuous_dependence(const RunConfig& c, const RunContext& ctx) {
  std::vector<double> eps = c.scenario.epsilons.empty() ? std::vector<double>{1e-3, 1e-4} : c.scenario.epsilons;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  const SpectralField v0 = initial_velocity(c);
  InitParams dp = init_params(c);
  dp.amplitude = 1.0;
  dp.seed += 7919;
  const SpectralField delta = random_velocity(c.grid, dp);
  const SolverConfig sc = c.solver();
  IntegrateOptions opt = base_options(c);
  opt.fits = false;
  opt.track_tau = false;
  std::vector<SpectralField> out(eps.size() + 1);
  std::vector<DiagnosticsRow> base_rows;
  parallel_for(int(out.size()), ctx.threads, [&](int i) {
    const SpectralField v = i == 0 ? v0 : v0 + eps[i - 1] * delta;
    IntegrationResult r = integrate(make_state(v, 0.0, sc), sc, opt);
    out[i] = lab_velocity(r.final_state, sc);
    if (i == 0) base_rows = std::move(r.rows);
  });
  ScenarioReport rep;
  std::vector<double> D;
  json members = json::array();
  for (std::size_t i = 0; i < eps.size(); ++i) {
    D.push_back(l2(out[i + 1] - out[0]));
    members.push_back({{"epsilon", eps[i]}, {"difference", num(D.back())}, {"gain", num(D.back() / eps[i])}});
  }
  for (std::size_t i = 0; i + 1 < eps.size(); ++i) {
    const double q = eps[i] / eps[i + 1];
    char name[96];
    std::snprintf(name, sizeof name, "difference_ratio_%g_%g", eps[i], eps[i + 1]);
    rep.checks.push_back(within(name, D[i] / D[i + 1], 0.8 * q, 1.2 * q));
  }
  if (eps.size() < 2) rep.checks.push_back(holds("at_least_two_epsilons", false));
  rep.summary = {{"T", c.time.t_end}, {"members", members}};
  rep.trajectories.push_back({"", base_rows});
  return rep;
}

inline ScenarioReport theory_checks(const RunConfig& c, const RunContext&) {
  const TheoryConstants& k = c.theory;
  double local = 0.0, radius = 0.0;
  for (double M : {0.0, 0.1, 1.0, 10.0, 1e3})
    for (double nu : {1e-3, 0.1, 1.0, 10.0})
      for (double tau0 : {0.01, 0.5, 2.0}) {
        const double T = lifespan_local(M, tau0, nu, k.c_r);
        local = std::max(local, std::abs(lifespan_local_residual(T, M, tau0, nu, k.c_r)) / std::max(1.0, tau0));
      }
  for (double e0 : {1e-6, 1e-3, 0.1, 1.0, 10.0, 1e3})
    for (double nu : {1e-2, 0.1, 1.0})
      for (double tau0 : {0.1, 0.5, 2.0}) {
        const RadiusCurve rc = tau_T_radius(e0, nu, tau0, k.c_r);
        radius = std::max(radius, std::abs(rc.residual(rc.T)) / std::max(1.0, tau0));
      }
  bool monotone = true;
  double prev = 0.0;
  for (double lno = 1e-2; lno < 1e300; lno *= 3.0) {
    const double T = lifespan_main_ln(lno, c.norms.tau_report, 1.0, c.physics.nu, k).T;
    monotone = monotone && T >= prev;
    prev = T;
  }
  TheoryConstants unit = k;
  unit.c_small = 1.0;
  const double t1 = lifespan_small_barotropic(1, 1e6, unit).T, t2 = lifespan_small_barotropic(2, 1e6, unit).T,
               t3 = lifespan_small_barotropic(3, 1e6, unit).T;
  ScenarioReport rep;
  rep.checks = {at_most("time_T_residual", local, 1e-12), at_most("T_radius_residual", radius, 1e-12),
                holds("lifespan_main_monotone", monotone), holds("lifespan_main_eventually_positive", prev > 0.0),
                holds("small_barotropic_case_ordering", t3 > t2 && t2 > t1)};
  rep.summary = {{"time_T_residual", num(local)},
                 {"T_radius_residual", num(radius)},
                 {"lifespan_main_at_max", num(prev)},
                 {"cases_at_1e6", {num(t1), num(t2), num(t3)}}};
  return rep;
}

}  // namespace scenario_detail

using ScenarioFn = std::function<ScenarioReport(const RunConfig&, const RunContext&)>;

struct ScenarioInfo {
  std::string name;
  std::string description;
  ScenarioFn fn;
};

inline const std::vector<ScenarioInfo>& scenarios() {
  namespace d = scenario_detail;
  static const std::vector<ScenarioInfo> list = {
      {"evolve", "single run with diagnostics and optional snapshots", d::evolve},
      {"verify_projections", "projection algebra and norm identities on random fields", d::verify_projections},
      {"formulation_equivalence", "rotating vs direct formulation, trajectories and tendencies",
       d::formulation_equivalence},
      {"temporal_order", "Richardson estimate of the time-stepping order", d::temporal_order},
      {"tau_energy", "analytic norm along the tracked radius is nonincreasing", d::tau_energy},
      {"local_clock_vs_omega", "norm doubling time across rotation rates", d::local_clock_vs_omega},
      {"vertical_gain", "growth of the fitted vertical radius", d::vertical_gain},
      {"limit_convergence", "distance to the limit system vs rotation rate, with exponent window",
       [](const RunConfig& c, const RunContext& x) { return d::omega_convergence(c, x, true); }},
      {"omega_sweep", "distance to the limit system per rotation rate and fitted exponent",
       [](const RunConfig& c, const RunContext& x) { return d::omega_convergence(c, x, false); }},
      {"lifespan_vs_omega", "norm-sentinel time across rotation rates", d::lifespan_vs_omega},
      {"small_data_2d", "decay of planar small data below the threshold", d::small_data_2d},
      {"euler_invariants", "energy and enstrophy drift of the 2D Euler limit", d::euler_invariants},
      {"lemma_ratios", "product-estimate ratios over random ensembles", d::lemma_ratios},
      {"continuous_dependence", "linear response of trajectories to data perturbations", d::continuous_dependence},
      {"theory_checks", "lifespan and radius evaluator identities", d::theory_checks},
  };
  return list;
}

inline const ScenarioInfo& find_scenario(const std::string& name) {
  for (const auto& s : scenarios())
    if (s.name == name) return s;
  throw ConfigError("unknown scenario: " + name);
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  os << s;
  if (!os) throw Error("write failed: " + p.string());
}

inline json summary_json(const ScenarioReport& rep, double wall) {
  json checks = json::array();
  for (const auto& c : rep.checks) checks.push_back(to_json(c));
  return {{"scenario", rep.scenario},
          {"passed", rep.passed()},
          {"checks", checks},
          {"results", rep.summary},
          {"wall_seconds", wall}};
}

inline void write_artifacts(const RunConfig& cfg, const ScenarioReport& rep, const std::string& dir, double wall) {
  namespace fs = std::filesystem;
  const fs::path out(dir);
  fs::create_directories(out);
  write_text(out / "config.json", to_json(cfg).dump(2) + "\n");
  if (cfg.output.csv) {
    bool primary = false;
    for (const auto& tr : rep.trajectories) {
      primary = primary || tr.label.empty();
      write_text(out / (tr.label.empty() ? "diagnostics.csv" : "diagnostics_" + tr.label + ".csv"),
                 csv_text(tr.rows));
    }
    if (!primary) write_text(out / "diagnostics.csv", csv_text({}));
  }
  for (const auto& f : rep.files) write_text(out / f.name, f.content);
  if (!rep.snapshots.empty()) {
    fs::create_directories(out / "snapshots");
    for (const auto& s : rep.snapshots) write_snapshot((out / "snapshots" / s.name).string(), s.field, s.t);
  }
  write_text(out / "summary.json", summary_json(rep, wall).dump(2) + "\n");
}

// Runs the configured scenario; artifacts go to ctx.out_dir when it is set.
inline ScenarioReport run(const RunConfig& cfg, const RunContext& ctx) {
  cfg.validate();
  const ScenarioInfo& sc = find_scenario(cfg.scenario.name);
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioReport rep;
  try {
    rep = sc.fn(cfg, ctx);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("scenario " + sc.name + " (nh=" + std::to_string(cfg.grid.nh) + ", nz=" +
                std::to_string(cfg.grid.nz) + ", seed=" + std::to_string(cfg.init.seed) + "): " + e.what());
  }
  rep.scenario = sc.name;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!ctx.out_dir.empty()) write_artifacts(cfg, rep, ctx.out_dir, wall);
  return rep;
}

struct SweepMember {
  double value = 0.0;
  ScenarioReport report;
};

// One run per scenario.sweep value, varying omega or amplitude; members run
// in parallel, each single-threaded, with artifacts under out/member_<i>.
inline std::vector<SweepMember> run_sweep(const RunConfig& cfg, const RunContext& ctx) {
  cfg.validate();
  if (cfg.scenario.sweep.empty()) throw ConfigError("sweep needs scenario.sweep values");
  find_scenario(cfg.scenario.name);
  std::vector<SweepMember> members(cfg.scenario.sweep.size());
  parallel_for(int(members.size()), ctx.threads, [&](int i) {
    RunConfig m = cfg;
    m.scenario.sweep.clear();
    const double v = cfg.scenario.sweep[i];
    if (cfg.scenario.sweep_param == "omega") {
      m.physics.omega = v;
    } else {
      m.init.amplitude = v;
    }
    RunContext mc{ctx.out_dir.empty() ? "" : ctx.out_dir + "/member_" + std::to_string(i), 1};
    if (!mc.out_dir.empty()) m.output.dir = mc.out_dir;
    members[i] = {v, run(m, mc)};
  });
  if (!ctx.out_dir.empty()) {
    json j = {{"scenario", cfg.scenario.name}, {"sweep_param", cfg.scenario.sweep_param}, {"members", json::array()}};
    for (std::size_t i = 0; i < members.size(); ++i)
      j["members"].push_back({{"value", members[i].value},
                              {"dir", "member_" + std::to_string(i)},
                              {"passed", members[i].report.passed()},
                              {"results", members[i].report.summary}});
    std::filesystem::create_directories(ctx.out_dir);
    write_text(std::filesystem::path(ctx.out_dir) / "sweep.json", j.dump(2) + "\n");
  }
  return members;
}

}  // namespace rotape
