#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "rotape/decomposition.hpp"
#include "rotape/field.hpp"
#include "rotape/norms.hpp"

namespace rotape {

// Gaussian coefficients weighted by e^{-tau0|k| - eta0 m pi}, restricted to the
// dealiasing band with Nyquist slots cleared. With real=true the field is
// projected onto conjugate-symmetric spectra.
inline SpectralField random_analytic(const GridSpec& g, int ncomp, double tau0, double eta0,
                                     std::uint64_t seed, bool real = true) {
  SpectralField f(g, ncomp);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int c = 0; c < ncomp; ++c)
    for (int i1 = 0; i1 < g.nh; ++i1)
      for (int i2 = 0; i2 < g.ny(); ++i2)
        for (int m = 0; m < g.nz; ++m) {
          const double re = nd(rng), im = nd(rng);
          if (!g.kept(i1, i2, m) || i1 == g.nh / 2 || (!g.planar && i2 == g.nh / 2)) continue;
          const double w = std::exp(-tau0 * g.kmag(i1, i2) - eta0 * m * kPi);
          f(c, i1, i2, m) = w * cplx(re, im) / std::sqrt(2.0);
        }
  return real ? real_part(f) : f;
}

struct InitParams {
  double tau0 = 0.5;
  double eta0 = 0.0;
  double amplitude = 1.0;  // L2 norm of the generated velocity
  std::uint64_t seed = 1;
};

inline void clear_mean(SpectralField& v) {
  for (int c = 0; c < v.ncomp; ++c) v(c, 0, 0, 0) = 0.0;
}

// Real velocity with a divergence-free barotropic part and zero mean.
inline SpectralField random_velocity(const GridSpec& g, const InitParams& p) {
  SpectralField v = random_analytic(g, g.planar ? 1 : 2, p.tau0, p.eta0, p.seed);
  if (g.planar) {
    v = baroclinic(v);
  } else {
    v = leray_h(p0(v)) + baroclinic(v);
  }
  clear_mean(v);
  const double n = l2(v);
  if (n > 0.0) v *= p.amplitude / n;
  return v;
}

// Rescale the baroclinic part so that ||Vt||_{3/2+delta,0,0} equals target.
inline SpectralField well_prepared(const GridSpec& g, const InitParams& p, double target,
                                   double delta = 0.25) {
  SpectralField v = random_velocity(g, p);
  SpectralField vbar = p0(v), vt = baroclinic(v);
  const double n = norm_rst(vt, NormSpec{1.5 + delta, 0, 0.0, 0.0});
  if (n > 0.0) vt *= target / n;
  return vbar + vt;
}

// Steady shear V = (0, sin(2 pi x) / (2 pi)) (vorticity cos 2 pi x) plus a
// random baroclinic part of L2 size p.amplitude.
inline SpectralField shear_plus_baroclinic(const GridSpec& g, const InitParams& p) {
  SpectralField v(g, 2);
  if (!g.planar) {
    v.at(1, 1, 0, 0) = cplx(0.0, -0.5 / kTwoPi);
    v.at(1, -1, 0, 0) = cplx(0.0, 0.5 / kTwoPi);
  }
  SpectralField vt = baroclinic(random_analytic(g, 2, p.tau0, p.eta0, p.seed));
  const double n = l2(vt);
  if (n > 0.0) vt *= p.amplitude / n;
  return v + vt;
}

}  // namespace rotape
