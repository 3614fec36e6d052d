#pragma once

#include <cstdio>
#include <ostream>
#include <string>

namespace rotape {

enum class Termination { running, completed, stopped, blowup_sentinel, nan };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::running: return "running";
    case Termination::completed: return "completed";
    case Termination::stopped: return "stopped";
    case Termination::blowup_sentinel: return "blowup_sentinel";
    case Termination::nan: return "nan";
  }
  return "unknown";
}

struct DiagnosticsRow {
  double t = 0.0;
  double norm_r0tau = 0.0;    // ||V||_{r,0,tau_tracked}
  double sobolev_norm = 0.0;  // ||V||_{r,0,0}
  double tau_tracked = 0.0;
  double tau_fit_h = 0.0;
  double eta_fit_v = 0.0;
  double energy = 0.0;        // ||V||^2
  double enstrophy_bar = 0.0; // ||curl vbar||^2
  double baroclinic_l2 = 0.0;
  double div_residual = 0.0;  // ||div vbar||
  double mean_residual = 0.0; // |mean of V|
  Termination termination = Termination::running;
};

inline const char* diagnostics_header() {
  return "t,norm_r0tau,sobolev_norm,tau_tracked,tau_fit_h,eta_fit_v,energy,enstrophy_bar,"
         "baroclinic_l2,div_residual,mean_residual,termination";
}

inline void write_row(std::ostream& os, const DiagnosticsRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s", r.t,
                r.norm_r0tau, r.sobolev_norm, r.tau_tracked, r.tau_fit_h, r.eta_fit_v, r.energy,
                r.enstrophy_bar, r.baroclinic_l2, r.div_residual, r.mean_residual, to_string(r.termination));
  os << buf << '\n';
}

}  // namespace rotape
