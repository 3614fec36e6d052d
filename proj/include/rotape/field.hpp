#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "rotape/errors.hpp"
#include "rotape/grid.hpp"

namespace rotape {

using cplx = std::complex<double>;

// Vertical basis of a spectral field: {1, sqrt2 cos(m pi z)} or sqrt2 sin(m pi z).
enum class Basis { cos, sin };

// Coefficients indexed (component, i1, i2, m), i1/i2 in FFT order.
struct SpectralField {
  GridSpec grid;
  int ncomp = 1;
  Basis basis = Basis::cos;
  std::vector<cplx> c;

  SpectralField() = default;
  SpectralField(const GridSpec& g, int comps, Basis b = Basis::cos)
      : grid(g), ncomp(comps), basis(b), c(g.block() * std::size_t(comps)) {
    if (comps < 1 || comps > 2) throw DimensionError("components must be 1 or 2");
  }

  std::size_t index(int comp, int i1, int i2, int m) const {
    return ((std::size_t(comp) * grid.nh + i1) * grid.ny() + i2) * grid.nz + m;
  }
  cplx& operator()(int comp, int i1, int i2, int m) { return c[index(comp, i1, i2, m)]; }
  const cplx& operator()(int comp, int i1, int i2, int m) const {
    return c[index(comp, i1, i2, m)];
  }

  // Slot of signed wavenumbers (n1, n2).
  int slot1(int n) const { return n >= 0 ? n : n + grid.nh; }
  int slot2(int n) const { return grid.planar ? 0 : (n >= 0 ? n : n + grid.nh); }
  cplx& at(int comp, int n1, int n2, int m) { return (*this)(comp, slot1(n1), slot2(n2), m); }
  const cplx& at(int comp, int n1, int n2, int m) const {
    return (*this)(comp, slot1(n1), slot2(n2), m);
  }

  std::size_t size() const { return c.size(); }
  cplx* comp_data(int comp) { return c.data() + std::size_t(comp) * grid.block(); }
  const cplx* comp_data(int comp) const { return c.data() + std::size_t(comp) * grid.block(); }

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(cplx a) {
    for (auto& v : c) v *= a;
    return *this;
  }
};

// Samples indexed (component, ix, iy, jz) on x = ix/nh, y = iy/ny, z = (jz+1/2)/nz.
struct PhysField {
  GridSpec grid;
  int ncomp = 1;
  std::vector<cplx> v;

  PhysField() = default;
  PhysField(const GridSpec& g, int comps) : grid(g), ncomp(comps), v(g.block() * std::size_t(comps)) {}

  std::size_t index(int comp, int ix, int iy, int jz) const {
    return ((std::size_t(comp) * grid.nh + ix) * grid.ny() + iy) * grid.nz + jz;
  }
  cplx& operator()(int comp, int ix, int iy, int jz) { return v[index(comp, ix, iy, jz)]; }
  const cplx& operator()(int comp, int ix, int iy, int jz) const { return v[index(comp, ix, iy, jz)]; }
  cplx* comp_data(int comp) { return v.data() + std::size_t(comp) * grid.block(); }
  const cplx* comp_data(int comp) const { return v.data() + std::size_t(comp) * grid.block(); }

  double x(int ix) const { return double(ix) / grid.nh; }
  double y(int iy) const { return double(iy) / grid.ny(); }
  double z(int jz) const { return (jz + 0.5) / grid.nz; }
};

inline void require_compatible(const SpectralField& a, const SpectralField& b, const char* what) {
  if (!(a.grid == b.grid) || a.ncomp != b.ncomp)
    throw DimensionError(std::string(what) + ": grid or component mismatch");
  if (a.basis != b.basis) throw BasisError(std::string(what) + ": basis mismatch");
}

inline SpectralField& SpectralField::operator+=(const SpectralField& o) {
  require_compatible(*this, o, "operator+=");
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += o.c[i];
  return *this;
}

inline SpectralField& SpectralField::operator-=(const SpectralField& o) {
  require_compatible(*this, o, "operator-=");
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= o.c[i];
  return *this;
}

inline SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
inline SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
inline SpectralField operator*(cplx s, SpectralField a) { return a *= s; }
inline SpectralField operator*(double s, SpectralField a) { return a *= cplx(s); }

// y += a*x
inline void axpy(cplx a, const SpectralField& x, SpectralField& y) {
  require_compatible(x, y, "axpy");
  for (std::size_t i = 0; i < y.c.size(); ++i) y.c[i] += a * x.c[i];
}

inline SpectralField zeros_like(const SpectralField& f) { return SpectralField(f.grid, f.ncomp, f.basis); }

// <f,g> = sum f conj(g); equals the L2 inner product over T^2 x (0,1).
inline cplx inner(const SpectralField& f, const SpectralField& g) {
  require_compatible(f, g, "inner");
  cplx s = 0.0;
  for (std::size_t i = 0; i < f.c.size(); ++i) s += f.c[i] * std::conj(g.c[i]);
  return s;
}

inline double norm2(const SpectralField& f) {
  double s = 0.0;
  for (const auto& v : f.c) s += std::norm(v);
  return s;
}

inline double l2(const SpectralField& f) { return std::sqrt(norm2(f)); }

inline double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  require_compatible(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.c.size(); ++i) m = std::max(m, std::abs(a.c[i] - b.c[i]));
  return m;
}

inline double max_abs(const SpectralField& a) {
  double m = 0.0;
  for (const auto& v : a.c) m = std::max(m, std::abs(v));
  return m;
}

inline bool all_finite(const SpectralField& f) {
  for (const auto& v : f.c)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

inline SpectralField component(const SpectralField& f, int comp) {
  SpectralField out(f.grid, 1, f.basis);
  std::copy(f.comp_data(comp), f.comp_data(comp) + f.grid.block(), out.c.begin());
  return out;
}

inline SpectralField stack(const SpectralField& a, const SpectralField& b) {
  if (a.ncomp != 1 || b.ncomp != 1) throw DimensionError("stack expects scalar fields");
  require_compatible(a, b, "stack");
  SpectralField out(a.grid, 2, a.basis);
  std::copy(a.c.begin(), a.c.end(), out.comp_data(0));
  std::copy(b.c.begin(), b.c.end(), out.comp_data(1));
  return out;
}

// Conjugate field: coefficients conj(a(-k)), i.e. the spectrum of the pointwise conjugate.
inline SpectralField conj_field(const SpectralField& f) {
  SpectralField out = zeros_like(f);
  const int nh = f.grid.nh, ny = f.grid.ny(), nz = f.grid.nz;
  for (int c = 0; c < f.ncomp; ++c)
    for (int i1 = 0; i1 < nh; ++i1)
      for (int i2 = 0; i2 < ny; ++i2) {
        const int j1 = (nh - i1) % nh, j2 = (ny - i2) % ny;
        for (int m = 0; m < nz; ++m) out(c, i1, i2, m) = std::conj(f(c, j1, j2, m));
      }
  return out;
}

// Projection onto real-valued fields: (f + conj_field(f)) / 2.
inline SpectralField real_part(const SpectralField& f) {
  SpectralField out = conj_field(f);
  for (std::size_t i = 0; i < out.c.size(); ++i) out.c[i] = 0.5 * (out.c[i] + f.c[i]);
  return out;
}

// Zero every mode outside the dealiasing band.
inline void dealias_inplace(SpectralField& f) {
  const GridSpec& g = f.grid;
  for (int c = 0; c < f.ncomp; ++c)
    for (int i1 = 0; i1 < g.nh; ++i1)
      for (int i2 = 0; i2 < g.ny(); ++i2)
        for (int m = 0; m < g.nz; ++m)
          if (!g.kept(i1, i2, m)) f(c, i1, i2, m) = 0.0;
}

inline SpectralField dealias(SpectralField f) {
  dealias_inplace(f);
  return f;
}

}  // namespace rotape
