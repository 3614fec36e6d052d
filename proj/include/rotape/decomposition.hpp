#pragma once

#include "rotape/field.hpp"
#include "rotape/spectral_ops.hpp"

namespace rotape {

// Barotropic projection: keep m = 0.
inline SpectralField p0(const SpectralField& v) {
  SpectralField out = zeros_like(v);
  const std::size_t nz = std::size_t(v.grid.nz);
  for (std::size_t h = 0; h < std::size_t(v.ncomp) * v.grid.horizontal(); ++h) out.c[h * nz] = v.c[h * nz];
  return out;
}

inline SpectralField baroclinic(const SpectralField& v) {
  SpectralField out = v;
  const std::size_t nz = std::size_t(v.grid.nz);
  for (std::size_t h = 0; h < std::size_t(v.ncomp) * v.grid.horizontal(); ++h) out.c[h * nz] = 0.0;
  return out;
}

inline bool is_barotropic(const SpectralField& v) {
  const std::size_t nz = std::size_t(v.grid.nz);
  for (std::size_t h = 0; h < std::size_t(v.ncomp) * v.grid.horizontal(); ++h)
    for (std::size_t m = 1; m < nz; ++m)
      if (v.c[h * nz + m] != cplx(0.0)) return false;
  return true;
}

// Horizontal Leray projection of a z-independent 2-vector.
inline SpectralField leray_h(const SpectralField& vbar) {
  if (vbar.ncomp != 2) throw DimensionError("leray_h expects a 2-vector field");
  if (!is_barotropic(vbar)) throw Error("leray_h: input has m>=1 content");
  const GridSpec& g = vbar.grid;
  SpectralField out = vbar;
  for (int i1 = 0; i1 < g.nh; ++i1)
    for (int i2 = 0; i2 < g.ny(); ++i2) {
      const double k1 = g.n1(i1), k2 = g.n2(i2);
      const double kk = k1 * k1 + k2 * k2;
      if (kk == 0.0) continue;
      const cplx a = vbar(0, i1, i2, 0), b = vbar(1, i1, i2, 0);
      const cplx kv = (k1 * a + k2 * b) / kk;
      out(0, i1, i2, 0) = a - k1 * kv;
      out(1, i1, i2, 0) = b - k2 * kv;
    }
  return out;
}

// Pressure projection of a tendency: baroclinic part untouched, barotropic part Leray-projected.
inline SpectralField project_pressure(const SpectralField& v) {
  return baroclinic(v) + leray_h(p0(v));
}

// R phi = (baroclinic phi)^perp
inline SpectralField rot_R(const SpectralField& v) { return perp(baroclinic(v)); }

// P+- V = (Vt +- i Vt^perp) / 2
inline SpectralField p_plus(const SpectralField& v) {
  SpectralField vt = baroclinic(v);
  SpectralField out = perp(vt);
  out *= cplx(0.0, 1.0);
  out += vt;
  out *= 0.5;
  return out;
}

inline SpectralField p_minus(const SpectralField& v) {
  SpectralField vt = baroclinic(v);
  SpectralField out = perp(vt);
  out *= cplx(0.0, -1.0);
  out += vt;
  out *= 0.5;
  return out;
}

struct BaroclinicPair {
  SpectralField vbar;
  SpectralField vtilde;
};

inline BaroclinicPair split(const SpectralField& v) { return {p0(v), baroclinic(v)}; }

}  // namespace rotape
