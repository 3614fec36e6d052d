#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "rotape/field.hpp"
#include "rotape/spectral_ops.hpp"

namespace rotape {

struct NormSpec {
  double r = 0.0;
  int s = 0;
  double tau = 0.0;
  double eta = 0.0;

  void validate() const {
    if (r < 0.0 || tau < 0.0 || eta < 0.0 || s < 0) throw Error("NormSpec entries must be nonnegative");
    if (s > 2) throw Error("NormSpec: s > 2 is not supported");
  }
};

namespace detail {

inline void overflow_guard(double w, double k, double r, double tau) {
  if (!(w <= 1e300)) {
    std::ostringstream os;
    os << "norm multiplier exceeds 1e300 on shell |k|=" << k << " (r=" << r << ", tau=" << tau << ")";
    throw OverflowError(os.str());
  }
}

}  // namespace detail

// ||A^r e^{tau A} dz^order f||^2, evaluated coefficient-wise.
inline double seminorm2(const SpectralField& f, double r, double tau, int order = 0) {
  const GridSpec& g = f.grid;
  double s = 0.0;
  for (int i1 = 0; i1 < g.nh; ++i1)
    for (int i2 = 0; i2 < g.ny(); ++i2) {
      const double k = g.kmag(i1, i2);
      const double w = detail::multiplier(k, r, tau);
      if (w == 0.0) continue;
      double col = 0.0;
      for (int c = 0; c < f.ncomp; ++c)
        for (int m = 0; m < g.nz; ++m) {
          const double a = std::norm(f(c, i1, i2, m));
          if (a == 0.0) continue;
          col += std::pow(m * kPi, 2 * order) * a;
        }
      if (col == 0.0) continue;
      detail::overflow_guard(w, k, r, tau);
      s += w * w * col;
    }
  return s;
}

// ||dz^order f||^2
inline double dz_norm2(const SpectralField& f, int order) {
  const GridSpec& g = f.grid;
  double s = 0.0;
  for (std::size_t h = 0; h < std::size_t(f.ncomp) * g.horizontal(); ++h)
    for (int m = 0; m < g.nz; ++m) s += std::pow(m * kPi, 2 * order) * std::norm(f.c[h * g.nz + m]);
  return s;
}

// sum_{s' <= s} sqrt(||A^r e^{tau A} dz^{s'} V||^2 + ||dz^{s'} V||^2)
inline double norm_rst(const SpectralField& v, const NormSpec& spec) {
  spec.validate();
  double total = 0.0;
  for (int sp = 0; sp <= spec.s; ++sp) total += std::sqrt(seminorm2(v, spec.r, spec.tau, sp) + dz_norm2(v, sp));
  return total;
}

// Norm with horizontal and vertical analytic weights on the even extension,
// |k3| = m pi: sum (1 + (|k|^{2r} + |k3|^{2s}) e^{2 tau|k|} e^{2 eta|k3|}) |a|^2.
inline double norm_rst_eta(const SpectralField& v, const NormSpec& spec) {
  spec.validate();
  const GridSpec& g = v.grid;
  double s = 0.0;
  for (int i1 = 0; i1 < g.nh; ++i1)
    for (int i2 = 0; i2 < g.ny(); ++i2) {
      const double k = g.kmag(i1, i2);
      const double kr = k == 0.0 ? (spec.r > 0.0 ? 0.0 : 1.0) : std::pow(k, 2.0 * spec.r);
      for (int m = 0; m < g.nz; ++m) {
        const double k3 = m * kPi;
        const double k3s = spec.s == 0 ? 1.0 : std::pow(k3, 2.0 * spec.s);
        double a = 0.0;
        for (int c = 0; c < v.ncomp; ++c) a += std::norm(v(c, i1, i2, m));
        if (a == 0.0) continue;
        const double w = 1.0 + (kr + k3s) * std::exp(2.0 * spec.tau * k + 2.0 * spec.eta * k3);
        detail::overflow_guard(w, k, spec.r, spec.tau);
        s += w * a;
      }
    }
  return std::sqrt(s);
}

enum class Axis { horizontal, vertical };
enum class RadiusFit { shell_l2, shell_max };

namespace detail {

struct ShellAccum {
  double sum2 = 0.0;
  double ksum = 0.0;
  double amax = 0.0;
  double kmax = 0.0;
  int count = 0;
  void add(double k, double a2) {
    sum2 += a2;
    ksum += k * a2;
    ++count;
    if (a2 > amax * amax) {
      amax = std::sqrt(a2);
      kmax = k;
    }
  }
};

}  // namespace detail

// Least-squares slope of log shell amplitude against shell wavenumber; returns
// the decay rate (clipped at 0). Shells are |k| in [2 pi j, 2 pi (j+1)), j >= 1,
// horizontally and lines m pi vertically, counting only modes inside the
// dealiasing band. shell_l2 uses the RMS amplitude at its energy-weighted
// wavenumber, shell_max the largest coefficient at its own wavenumber.
inline double fit_radius(const SpectralField& v, Axis axis, double floor = 1e-14,
                         RadiusFit mode = RadiusFit::shell_l2) {
  const GridSpec& g = v.grid;
  std::map<int, detail::ShellAccum> shells;
  for (int i1 = 0; i1 < g.nh; ++i1)
    for (int i2 = 0; i2 < g.ny(); ++i2) {
      const double k = g.kmag(i1, i2);
      const int j = int(std::floor(k / kTwoPi + 1e-12));
      for (int m = 0; m < g.nz; ++m) {
        if (!g.kept(i1, i2, m)) continue;
        double a2 = 0.0;
        for (int c = 0; c < v.ncomp; ++c) a2 += std::norm(v(c, i1, i2, m));
        if (axis == Axis::horizontal) {
          if (j >= 1) shells[j].add(k, a2);
        } else {
          shells[m].add(m * kPi, a2);
        }
      }
    }
  // Vertical lines aggregate all horizontal modes; their amplitude is the
  // line L2 norm (equal counts per line) or the largest entry.
  std::vector<std::pair<double, double>> pts;
  double top = 0.0;
  for (auto& [j, s] : shells) {
    double amp, x;
    if (mode == RadiusFit::shell_max) {
      amp = s.amax;
      x = s.kmax;
    } else {
      amp = std::sqrt(s.sum2 / std::max(1, s.count));
      x = s.sum2 > 0.0 ? s.ksum / s.sum2 : 0.0;
    }
    top = std::max(top, amp);
    pts.emplace_back(x, amp);
  }
  std::vector<double> xs, ys;
  for (auto [x, amp] : pts)
    if (amp > 0.0 && amp > floor * top) {
      xs.push_back(x);
      ys.push_back(std::log(amp));
    }
  if (xs.size() < 4) throw FitError("insufficient decay data");
  const double n = double(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw FitError("insufficient decay data");
  return std::max(0.0, -sxy / sxx);
}

}  // namespace rotape
