#pragma once

#include <cmath>
#include <numbers>
#include <sstream>

#include "rotape/field.hpp"
#include "rotape/transform.hpp"

namespace rotape {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace detail {

// Derivative wavenumber along an axis; the Nyquist slot maps to 0 so that
// real fields stay real.
inline double dk(int i, int n) {
  if (n == 1 || i == n / 2) return 0.0;
  return kTwoPi * GridSpec::wavenumber(i, n);
}

inline double multiplier(double k, double r, double tau) {
  if (k == 0.0) return r > 0.0 ? 0.0 : 1.0;
  return std::pow(k, r) * std::exp(tau * k);
}

}  // namespace detail

// Multiply each coefficient by |k|^r e^{tau|k|}.
inline SpectralField apply_A_exp(const SpectralField& f, double r, double tau) {
  SpectralField out = zeros_like(f);
  const GridSpec& g = f.grid;
  for (int i1 = 0; i1 < g.nh; ++i1)
    for (int i2 = 0; i2 < g.ny(); ++i2) {
      const double k = g.kmag(i1, i2);
      const double w = detail::multiplier(k, r, tau);
      for (int c = 0; c < f.ncomp; ++c)
        for (int m = 0; m < g.nz; ++m) {
          const cplx a = f(c, i1, i2, m);
          if (a == cplx(0.0)) continue;
          if (!(w <= 1e300)) {
            std::ostringstream os;
            os << "apply_A_exp multiplier exceeds 1e300 on shell |k|=" << k << " (n=("
               << g.n1(i1) << "," << g.n2(i2) << "), r=" << r << ", tau=" << tau << ")";
            throw OverflowError(os.str());
          }
          out(c, i1, i2, m) = w * a;
        }
    }
  return out;
}

// Vertical derivative. Order 1 swaps cos <-> sin tags, order 2 is diagonal.
inline SpectralField dz(const SpectralField& f, int order = 1) {
  if (order < 1 || order > 2) throw Error("dz: order must be 1 or 2");
  const GridSpec& g = f.grid;
  if (order == 2) {
    SpectralField out = f;
    for (std::size_t h = 0; h < std::size_t(f.ncomp) * g.horizontal(); ++h)
      for (int m = 0; m < g.nz; ++m) out.c[h * g.nz + m] *= -(m * kPi) * (m * kPi);
    return out;
  }
  const Basis nb = f.basis == Basis::cos ? Basis::sin : Basis::cos;
  const double sign = f.basis == Basis::cos ? -1.0 : 1.0;
  SpectralField out(g, f.ncomp, nb);
  for (std::size_t h = 0; h < std::size_t(f.ncomp) * g.horizontal(); ++h) {
    out.c[h * g.nz] = 0.0;
    for (int m = 1; m < g.nz; ++m) out.c[h * g.nz + m] = sign * m * kPi * f.c[h * g.nz + m];
  }
  return out;
}

inline SpectralField dx(const SpectralField& f) {
  SpectralField out = zeros_like(f);
  const GridSpec& g = f.grid;
  for (int c = 0; c < f.ncomp; ++c)
    for (int i1 = 0; i1 < g.nh; ++i1) {
      const cplx ik(0.0, detail::dk(i1, g.nh));
      for (int i2 = 0; i2 < g.ny(); ++i2)
        for (int m = 0; m < g.nz; ++m) out(c, i1, i2, m) = ik * f(c, i1, i2, m);
    }
  return out;
}

inline SpectralField dy(const SpectralField& f) {
  SpectralField out = zeros_like(f);
  const GridSpec& g = f.grid;
  for (int c = 0; c < f.ncomp; ++c)
    for (int i1 = 0; i1 < g.nh; ++i1)
      for (int i2 = 0; i2 < g.ny(); ++i2) {
        const cplx ik(0.0, detail::dk(i2, g.ny()));
        for (int m = 0; m < g.nz; ++m) out(c, i1, i2, m) = ik * f(c, i1, i2, m);
      }
  return out;
}

// Horizontal gradient of a scalar field.
inline SpectralField grad_h(const SpectralField& f) {
  if (f.ncomp != 1) throw DimensionError("grad_h expects a scalar field");
  return stack(dx(f), dy(f));
}

inline SpectralField div_h(const SpectralField& v) {
  if (v.ncomp != 2) throw DimensionError("div_h expects a 2-vector field");
  return dx(component(v, 0)) + dy(component(v, 1));
}

// (a, b)^perp = (-b, a)
inline SpectralField perp(const SpectralField& v) {
  if (v.ncomp != 2) throw DimensionError("perp expects a 2-vector field");
  SpectralField out = zeros_like(v);
  const std::size_t n = v.grid.block();
  for (std::size_t i = 0; i < n; ++i) {
    out.c[i] = -v.c[n + i];
    out.c[n + i] = v.c[i];
  }
  return out;
}

inline Basis product_basis(Basis a, Basis b) {
  return a == b ? Basis::cos : Basis::sin;
}

// Pointwise product of samples. Scalars broadcast against vectors.
inline PhysField multiply(const PhysField& a, const PhysField& b) {
  if (!(a.grid == b.grid)) throw DimensionError("multiply: grid mismatch");
  const int nc = std::max(a.ncomp, b.ncomp);
  if (a.ncomp != b.ncomp && a.ncomp != 1 && b.ncomp != 1)
    throw DimensionError("multiply: component mismatch");
  PhysField out(a.grid, nc);
  const std::size_t n = a.grid.block();
  for (int c = 0; c < nc; ++c) {
    const cplx* pa = a.comp_data(a.ncomp == 1 ? 0 : c);
    const cplx* pb = b.comp_data(b.ncomp == 1 ? 0 : c);
    cplx* po = out.comp_data(c);
    for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
  }
  return out;
}

// Dealiased pseudo-spectral product.
inline SpectralField product(const SpectralField& f, const SpectralField& g) {
  if (!(f.grid == g.grid)) throw DimensionError("product: grid mismatch");
  SpectralField out = forward(multiply(inverse(f), inverse(g)), product_basis(f.basis, g.basis));
  dealias_inplace(out);
  return out;
}

inline SpectralField product(const SpectralField& f, const SpectralField& g, Basis expected) {
  if (product_basis(f.basis, g.basis) != expected)
    throw BasisError("product: basis tags do not close to the requested basis");
  return product(f, g);
}

inline double vertical_mean_fraction(const SpectralField& v) {
  double m0 = 0.0, all = 0.0;
  const GridSpec& g = v.grid;
  for (std::size_t h = 0; h < std::size_t(v.ncomp) * g.horizontal(); ++h)
    for (int m = 0; m < g.nz; ++m) {
      const double a = std::norm(v.c[h * g.nz + m]);
      all += a;
      if (m == 0) m0 += a;
    }
  return all > 0.0 ? std::sqrt(m0 / all) : 0.0;
}

// w = -int_0^z div Vt ds, in the sqrt2 sin(m pi z) basis.
inline SpectralField w_from_baroclinic(const SpectralField& vt) {
  if (vt.ncomp != 2 || vt.basis != Basis::cos)
    throw DimensionError("w_from_baroclinic expects a cosine-basis 2-vector");
  if (vertical_mean_fraction(vt) > 1e-12)
    throw Error("w_from_baroclinic: input has a nonzero vertical mean (m=0) part");
  const GridSpec& g = vt.grid;
  SpectralField w(g, 1, Basis::sin);
  for (int i1 = 0; i1 < g.nh; ++i1) {
    const double k1 = detail::dk(i1, g.nh);
    for (int i2 = 0; i2 < g.ny(); ++i2) {
      const double k2 = detail::dk(i2, g.ny());
      for (int m = 1; m < g.nz; ++m) {
        const cplx d = cplx(0.0, k1) * vt(0, i1, i2, m) + cplx(0.0, k2) * vt(1, i1, i2, m);
        w(0, i1, i2, m) = -d / (m * kPi);
      }
    }
  }
  return w;
}

}  // namespace rotape
