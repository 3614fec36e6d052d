#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "rotape/decomposition.hpp"
#include "rotape/norms.hpp"
#include "rotape/parallel.hpp"
#include "rotape/random_fields.hpp"
#include "rotape/spectral_ops.hpp"
#include "rotape/transform.hpp"

namespace rotape {

// Trilinear product estimates. Apart from banach_algebra (a per-level bound
// on ||A^r e^{tau A}(fg)(z)||) each kind bounds |<A^r e^{tau A} B(f,g), A^r e^{tau A} h>|:
//   type1       B = f.grad g
//   type2       B = (int_0^z div f) dz g
//   type3       B = (div f) g
//   diff_type1  commutator of A^r e^{tau A} with f.grad
//   diff_type2  commutator of A^r e^{tau A} with (div .) g
//   diff_type4  commutator of A^r e^{tau A} with (int_0^z div .) dz g
enum class LemmaKind { banach_algebra, type1, type2, type3, diff_type1, diff_type2, diff_type4 };

inline const std::vector<LemmaKind>& all_lemma_kinds() {
  static const std::vector<LemmaKind> k{LemmaKind::banach_algebra, LemmaKind::type1,      LemmaKind::type2,
                                        LemmaKind::type3,          LemmaKind::diff_type1, LemmaKind::diff_type2,
                                        LemmaKind::diff_type4};
  return k;
}

inline const char* to_string(LemmaKind k) {
  switch (k) {
    case LemmaKind::banach_algebra: return "banach_algebra";
    case LemmaKind::type1: return "type1";
    case LemmaKind::type2: return "type2";
    case LemmaKind::type3: return "type3";
    case LemmaKind::diff_type1: return "diff_type1";
    case LemmaKind::diff_type2: return "diff_type2";
    case LemmaKind::diff_type4: return "diff_type4";
  }
  return "?";
}

inline LemmaKind parse_lemma_kind(const std::string& s) {
  for (LemmaKind k : all_lemma_kinds())
    if (s == to_string(k)) return k;
  throw ConfigError("unknown lemma kind: " + s);
}

// Smallest admissible r (exclusive).
inline double lemma_min_r(LemmaKind k) {
  switch (k) {
    case LemmaKind::banach_algebra:
    case LemmaKind::type1:
    case LemmaKind::type3: return 1.0;
    case LemmaKind::type2: return 1.5;
    default: return 2.0;
  }
}

struct LemmaResult {
  double lhs = 0.0;
  double rhs_unit = 0.0;
  double ratio = 0.0;
  std::string note;  // set when r lies in a range flagged for logging
};

namespace lemma_detail {

inline void check_args(LemmaKind kind, const SpectralField& f, const SpectralField& g, const SpectralField& h,
                       double r, double tau) {
  if (!(r > lemma_min_r(kind)))
    throw HypothesisError(std::string(to_string(kind)) + ": requires r > " + std::to_string(lemma_min_r(kind)));
  if (!(tau >= 0.0)) throw HypothesisError("tau must be nonnegative");
  for (const SpectralField* p : {&f, &g, &h})
    if (p->basis != Basis::cos) throw BasisError("lemma inputs must be cosine-basis fields");
  if (!(f.grid == g.grid) || !(f.grid == h.grid)) throw DimensionError("lemma inputs must share a grid");
  if (kind == LemmaKind::banach_algebra) {
    if (f.ncomp != 1 || g.ncomp != 1) throw DimensionError("banach_algebra takes scalar f and g");
    return;
  }
  if (f.ncomp != 2) throw DimensionError("f must be a 2-vector field");
  if (g.ncomp != h.ncomp) throw DimensionError("g and h must have the same number of components");
  if ((kind == LemmaKind::type2 || kind == LemmaKind::diff_type4) && vertical_mean_fraction(f) > 1e-12)
    throw HypothesisError("type2/diff_type4 require a baroclinic f");
}

// Copy coefficients into a grid with more modes (dealias fraction 1).
inline SpectralField pad(const SpectralField& f, int nh, int nz) {
  const GridSpec& s = f.grid;
  GridSpec g{nh, nz, 1.0, s.planar};
  SpectralField out(g, f.ncomp, f.basis);
  for (int c = 0; c < f.ncomp; ++c)
    for (int i1 = 0; i1 < s.nh; ++i1)
      for (int i2 = 0; i2 < s.ny(); ++i2) {
        const int n1 = s.n1(i1), n2 = s.n2(i2);
        if (2 * std::abs(n1) >= s.nh || (!s.planar && 2 * std::abs(n2) >= s.nh)) continue;  // Nyquist
        for (int m = 0; m < s.nz; ++m) {
          const cplx a = f(c, i1, i2, m);
          if (a != cplx(0.0)) out.at(c, n1, n2, m) = a;
        }
      }
  return out;
}

inline int max_n(const SpectralField& f) {
  int n = 0;
  const GridSpec& g = f.grid;
  for (int c = 0; c < f.ncomp; ++c)
    for (int i1 = 0; i1 < g.nh; ++i1)
      for (int i2 = 0; i2 < g.ny(); ++i2)
        for (int m = 0; m < g.nz; ++m)
          if (f(c, i1, i2, m) != cplx(0.0)) n = std::max({n, std::abs(g.n1(i1)), std::abs(g.n2(i2))});
  return n;
}

inline int max_m(const SpectralField& f) {
  int mm = 0;
  const GridSpec& g = f.grid;
  for (std::size_t h = 0; h < std::size_t(f.ncomp) * g.horizontal(); ++h)
    for (int m = 0; m < g.nz; ++m)
      if (f.c[h * g.nz + m] != cplx(0.0)) mm = std::max(mm, m);
  return mm;
}

// Grid on which a quadratic product is alias-free on the modes of the third field.
inline std::pair<int, int> product_grid(const SpectralField& f, const SpectralField& g, const SpectralField& h) {
  const int K = std::max({max_n(f), max_n(g), max_n(h)});
  const int M = std::max({max_m(f), max_m(g), max_m(h)});
  int nh = std::max(4, f.grid.nh);
  while (nh < 3 * K + 1) nh *= 2;
  int nz = std::max(2, f.grid.nz);
  while (nz < (3 * M) / 2 + 1) nz *= 2;
  return {nh, nz};
}

// Componentwise a * b with a scalar broadcast over the components of b.
inline PhysField times(const PhysField& a, const PhysField& b) { return multiply(a, b); }

// f.grad g on the padded grid.
inline SpectralField advect(const SpectralField& f, const SpectralField& g) {
  const PhysField f1 = inverse(component(f, 0)), f2 = inverse(component(f, 1));
  PhysField p = times(f1, inverse(dx(g)));
  const PhysField q = times(f2, inverse(dy(g)));
  for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] += q.v[i];
  return forward(p, Basis::cos);
}

inline SpectralField div_times(const SpectralField& f, const SpectralField& g) {
  return forward(times(inverse(div_h(f)), inverse(g)), Basis::cos);
}

// psi = int_0^z div f, sine basis.
inline SpectralField psi_of(const SpectralField& f) { return -1.0 * w_from_baroclinic(f); }

inline SpectralField psi_times_dz(const SpectralField& psi, const SpectralField& g) {
  return forward(times(inverse(psi), inverse(dz(g))), Basis::cos);
}

// Transform-path value of <A^r e^{tau A} B, A^r e^{tau A} h> minus the
// commutator partner for the diff kinds.
inline cplx inner_value(LemmaKind kind, const SpectralField& f0, const SpectralField& g0, const SpectralField& h0,
                        double r, double tau) {
  auto [nh, nz] = product_grid(f0, g0, h0);
  const SpectralField f = pad(f0, nh, nz), g = pad(g0, nh, nz), h = pad(h0, nh, nz);
  const SpectralField wh = apply_A_exp(apply_A_exp(h, r, tau), r, tau);  // A^{2r} e^{2 tau A} h
  const SpectralField Wh = apply_A_exp(h, r, tau);
  switch (kind) {
    case LemmaKind::type1: return inner(advect(f, g), wh);
    case LemmaKind::type3: return inner(div_times(f, g), wh);
    case LemmaKind::type2: return inner(psi_times_dz(psi_of(f), g), wh);
    case LemmaKind::diff_type1:
      return inner(advect(f, g), wh) - inner(advect(f, apply_A_exp(g, r, tau)), Wh);
    case LemmaKind::diff_type2:
      return inner(div_times(f, g), wh) - inner(div_times(apply_A_exp(f, r, tau), g), Wh);
    case LemmaKind::diff_type4: {
      const SpectralField psi = psi_of(f);
      return inner(psi_times_dz(psi, g), wh) - inner(psi_times_dz(apply_A_exp(psi, r, tau), g), Wh);
    }
    default: throw Error("inner_value: kind has no inner-product form");
  }
}

// Per-level horizontal norm z -> ||A^a e^{tau A} f(z)||_{L^2(T^2)} through a
// vertical Gram matrix; mean_only restricts to the k = 0 coefficient.
class LevelNorm {
 public:
  LevelNorm(const SpectralField& f, double a, double tau, bool mean_only = false)
      : nz_(f.grid.nz), basis_(f.basis), gram_(std::size_t(nz_) * nz_, 0.0) {
    const GridSpec& g = f.grid;
    std::vector<cplx> col(nz_);
    for (int i1 = 0; i1 < g.nh; ++i1)
      for (int i2 = 0; i2 < g.ny(); ++i2) {
        const double k = g.kmag(i1, i2);
        if (mean_only && k != 0.0) continue;
        const double w = mean_only ? 1.0 : detail::multiplier(k, a, tau);
        if (w == 0.0) continue;
        for (int c = 0; c < f.ncomp; ++c) {
          bool any = false;
          for (int m = 0; m < nz_; ++m) {
            col[m] = f(c, i1, i2, m) * w;
            any = any || col[m] != cplx(0.0);
          }
          if (!any) continue;
          if (!(w <= 1e300)) throw OverflowError("LevelNorm: multiplier exceeds 1e300");
          for (int m = 0; m < nz_; ++m)
            for (int mp = m; mp < nz_; ++mp) gram_[std::size_t(m) * nz_ + mp] += (col[m] * std::conj(col[mp])).real();
        }
      }
    for (int m = 0; m < nz_; ++m)
      for (int mp = 0; mp < m; ++mp) gram_[std::size_t(m) * nz_ + mp] = gram_[std::size_t(mp) * nz_ + m];
  }

  double operator()(double z) const {
    thread_local std::vector<double> phi;
    phi.resize(nz_);
    for (int m = 0; m < nz_; ++m) {
      if (basis_ == Basis::cos) phi[m] = m == 0 ? 1.0 : std::sqrt(2.0) * std::cos(m * kPi * z);
      else phi[m] = m == 0 ? 0.0 : std::sqrt(2.0) * std::sin(m * kPi * z);
    }
    double s = 0.0;
    for (int m = 0; m < nz_; ++m) {
      if (phi[m] == 0.0) continue;
      double row = 0.0;
      for (int mp = 0; mp < nz_; ++mp) row += gram_[std::size_t(m) * nz_ + mp] * phi[mp];
      s += phi[m] * row;
    }
    return std::sqrt(std::max(s, 0.0));
  }

 private:
  int nz_;
  Basis basis_;
  std::vector<double> gram_;
};

inline double integrate01(const std::function<double(double)>& fn) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 15>::integrate(fn, 0.0, 1.0, 20, 1e-13);
}

inline double gnorm(const SpectralField& f, double a, double tau) { return std::sqrt(seminorm2(f, a, tau)); }

inline double rhs_unit(LemmaKind kind, const SpectralField& f, const SpectralField& g, const SpectralField& h,
                       double r, double tau) {
  const double rh = r + 0.5;
  switch (kind) {
    case LemmaKind::type1:
    case LemmaKind::type3: {
      // type1: the first factor carries f; type3 swaps the roles of f and g there
      const SpectralField& lead = kind == LemmaKind::type1 ? f : g;
      const SpectralField& other = kind == LemmaKind::type1 ? g : f;
      const LevelNorm lr(lead, r, tau), l0(lead, 0.0, 0.0, true), oh(other, rh, tau);
      const LevelNorm fh(f, rh, tau), gh(g, rh, tau), hh(h, rh, tau), hr(h, r, tau);
      return integrate01([&](double z) {
        return (lr(z) + l0(z)) * oh(z) * hh(z) + fh(z) * gh(z) * hr(z);
      });
    }
    case LemmaKind::type2: return gnorm(f, rh, tau) * norm_rst(dz(g), NormSpec{r, 0, tau}) * gnorm(h, rh, tau);
    case LemmaKind::diff_type1:
    case LemmaKind::diff_type2: {
      const LevelNorm f0(f, r, 0.0), g0(g, r, 0.0), h0(h, r, 0.0);
      const double a = integrate01([&](double z) { return f0(z) * g0(z) * h0(z); });
      if (tau == 0.0) return a;
      const LevelNorm fh(f, rh, tau), gh(g, rh, tau), hh(h, rh, tau);
      return a + tau * integrate01([&](double z) { return fh(z) * gh(z) * hh(z); });
    }
    case LemmaKind::diff_type4: {
      const SpectralField gz = dz(g);
      const double a = gnorm(gz, r, 0.0) * gnorm(f, r, 0.0) * gnorm(h, r, 0.0);
      return a + tau * gnorm(gz, rh, tau) * gnorm(f, rh, tau) * gnorm(h, rh, tau);
    }
    default: throw Error("rhs_unit: unsupported kind");
  }
}

inline double wk(int n1, int n2, double r, double tau) {
  return detail::multiplier(kTwoPi * std::sqrt(double(n1) * n1 + double(n2) * n2), r, tau);
}

// Horizontal coefficients of a scalar cosine-basis field on the level z.
struct LevelCoeffs {
  std::vector<int> n1, n2;
  std::vector<cplx> c;
};

inline LevelCoeffs level_coeffs(const SpectralField& f, double z) {
  const GridSpec& g = f.grid;
  std::vector<double> phi(g.nz);
  for (int m = 0; m < g.nz; ++m) phi[m] = m == 0 ? 1.0 : std::sqrt(2.0) * std::cos(m * kPi * z);
  LevelCoeffs out;
  for (int i1 = 0; i1 < g.nh; ++i1)
    for (int i2 = 0; i2 < g.ny(); ++i2) {
      cplx v = 0.0;
      bool any = false;
      for (int m = 0; m < g.nz; ++m) {
        const cplx a = f(0, i1, i2, m);
        if (a == cplx(0.0)) continue;
        any = true;
        v += a * phi[m];
      }
      if (!any) continue;
      out.n1.push_back(g.n1(i1));
      out.n2.push_back(g.n2(i2));
      out.c.push_back(v);
    }
  return out;
}

// (|mean| , ||A^r e^{tau A} f(z)||) of one level.
inline std::pair<double, double> level_parts(const LevelCoeffs& f, double r, double tau) {
  double mean = 0.0, s = 0.0;
  for (std::size_t i = 0; i < f.c.size(); ++i) {
    if (f.n1[i] == 0 && f.n2[i] == 0) mean = std::abs(f.c[i]);
    const double w = wk(f.n1[i], f.n2[i], r, tau);
    s += w * w * std::norm(f.c[i]);
  }
  return {mean, std::sqrt(s)};
}

// Per-level bound; the product coefficients come from a direct convolution so
// that each one carries relative rather than absolute rounding error. The
// largest ratio over 2 nz + 1 equispaced levels is reported.
inline LemmaResult banach(const SpectralField& f, const SpectralField& g, double r, double tau) {
  const int K = std::max(max_n(f), max_n(g));
  const int side = 4 * K + 1;
  std::vector<cplx> prod(std::size_t(side) * side);
  const int samples = 2 * f.grid.nz;
  std::vector<double> lv(samples + 1), rv(samples + 1);
  double rmax = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double z = double(i) / samples;
    const LevelCoeffs a = level_coeffs(f, z), b = level_coeffs(g, z);
    std::fill(prod.begin(), prod.end(), cplx(0.0));
    for (std::size_t p = 0; p < a.c.size(); ++p)
      for (std::size_t q = 0; q < b.c.size(); ++q) {
        const int k1 = a.n1[p] + b.n1[q] + 2 * K, k2 = a.n2[p] + b.n2[q] + 2 * K;
        prod[std::size_t(k1) * side + k2] += a.c[p] * b.c[q];
      }
    double l = 0.0;
    for (int k1 = 0; k1 < side; ++k1)
      for (int k2 = 0; k2 < side; ++k2) {
        const cplx v = prod[std::size_t(k1) * side + k2];
        if (v == cplx(0.0)) continue;
        const double w = wk(k1 - 2 * K, k2 - 2 * K, r, tau);
        l += w * w * std::norm(v);
      }
    const auto [fm, fr] = level_parts(a, r, tau);
    const auto [gm, gr] = level_parts(b, r, tau);
    lv[i] = std::sqrt(l);
    rv[i] = (fm + fr) * (gm + gr);
    rmax = std::max(rmax, rv[i]);
  }
  // levels where the bound is at roundoff size carry no information
  LemmaResult res;
  for (int i = 0; i <= samples; ++i) {
    if (!(rv[i] > 1e-10 * rmax)) continue;
    const double q = lv[i] / rv[i];
    if (q > res.ratio || res.rhs_unit == 0.0) res = {lv[i], rv[i], q, ""};
  }
  return res;
}

// Trigonometric polynomial term c * cos(p pi z) or c * sin(p pi z), used for
// exact vertical integrals of basis-function products.
struct Trig {
  bool sine;
  int p;
  double c;
};

inline std::vector<Trig> trig_product(const std::vector<Trig>& a, const std::vector<Trig>& b) {
  std::vector<Trig> out;
  auto push = [&](bool s, int p, double c) {
    if (p < 0) {
      p = -p;
      if (s) c = -c;
    }
    if (s && p == 0) return;
    out.push_back({s, p, c});
  };
  for (const Trig& x : a)
    for (const Trig& y : b) {
      const double h = 0.5 * x.c * y.c;
      if (!x.sine && !y.sine) {
        push(false, x.p - y.p, h);
        push(false, x.p + y.p, h);
      } else if (x.sine && y.sine) {
        push(false, x.p - y.p, h);
        push(false, x.p + y.p, -h);
      } else {
        const Trig& s = x.sine ? x : y;
        const Trig& c = x.sine ? y : x;
        push(true, s.p + c.p, h);
        push(true, s.p - c.p, h);
      }
    }
  return out;
}

inline double trig_integral(const std::vector<Trig>& t) {
  double s = 0.0;
  for (const Trig& x : t) {
    if (!x.sine) s += x.p == 0 ? x.c : 0.0;
    else if (x.p % 2 == 1) s += x.c * 2.0 / (x.p * kPi);
  }
  return s;
}

inline std::vector<Trig> basis_fn(Basis b, int m) {
  if (b == Basis::cos) return {{false, m, m == 0 ? 1.0 : std::sqrt(2.0)}};
  return {{true, m, std::sqrt(2.0)}};
}

struct Mode {
  int c, n1, n2, m;
  cplx a;
};

inline std::vector<Mode> modes_of(const SpectralField& f) {
  std::vector<Mode> out;
  const GridSpec& g = f.grid;
  for (int c = 0; c < f.ncomp; ++c)
    for (int i1 = 0; i1 < g.nh; ++i1)
      for (int i2 = 0; i2 < g.ny(); ++i2)
        for (int m = 0; m < g.nz; ++m)
          if (f(c, i1, i2, m) != cplx(0.0)) out.push_back({c, g.n1(i1), g.n2(i2), m, f(c, i1, i2, m)});
  return out;
}

}  // namespace lemma_detail

// Upper bound on active coefficients per field for the exact-convolution path.
inline constexpr std::size_t kExactModeLimit = 3;

// Inner-product LHS by an explicit convolution sum with exact vertical
// integrals; each field may carry at most kExactModeLimit coefficients.
inline double lhs_exact(LemmaKind kind, const SpectralField& f, const SpectralField& g, const SpectralField& h,
                        double r, double tau) {
  using namespace lemma_detail;
  check_args(kind, f, g, h, r, tau);
  if (kind == LemmaKind::banach_algebra) throw Error("lhs_exact: banach_algebra has no inner-product form");
  const auto fm = modes_of(f), gm = modes_of(g), hm = modes_of(h);
  if (fm.size() > kExactModeLimit || gm.size() > kExactModeLimit || hm.size() > kExactModeLimit)
    throw Error("lhs_exact: too many active modes");
  const cplx I(0.0, 1.0);
  cplx total = 0.0;
  for (const Mode& a : fm)
    for (const Mode& b : gm)
      for (const Mode& e : hm) {
        if (a.n1 + b.n1 != e.n1 || a.n2 + b.n2 != e.n2) continue;
        const double wl = wk(e.n1, e.n2, r, tau);
        const double ja[2] = {kTwoPi * a.n1, kTwoPi * a.n2}, kb[2] = {kTwoPi * b.n1, kTwoPi * b.n2};
        cplx coef = 0.0;
        double weight = wl * wl;
        std::vector<Trig> v;
        switch (kind) {
          case LemmaKind::type1:
          case LemmaKind::diff_type1:
            // f_d d_d g_c h_c*
            if (b.c != e.c) continue;
            coef = a.a * I * kb[a.c] * b.a * std::conj(e.a);
            v = trig_product(trig_product(basis_fn(Basis::cos, a.m), basis_fn(Basis::cos, b.m)),
                             basis_fn(Basis::cos, e.m));
            if (kind == LemmaKind::diff_type1) weight -= wk(b.n1, b.n2, r, tau) * wl;
            break;
          case LemmaKind::type3:
          case LemmaKind::diff_type2:
            if (b.c != e.c) continue;
            coef = I * ja[a.c] * a.a * b.a * std::conj(e.a);
            v = trig_product(trig_product(basis_fn(Basis::cos, a.m), basis_fn(Basis::cos, b.m)),
                             basis_fn(Basis::cos, e.m));
            if (kind == LemmaKind::diff_type2) weight -= wk(a.n1, a.n2, r, tau) * wl;
            break;
          case LemmaKind::type2:
          case LemmaKind::diff_type4:
            if (b.c != e.c || a.m == 0 || b.m == 0) continue;
            // psi: i j_d a sqrt2 sin(m pi z)/(m pi); dz g: -m pi b sqrt2 sin(m pi z)
            coef = I * ja[a.c] * a.a / (a.m * kPi) * (-b.m * kPi) * b.a * std::conj(e.a);
            v = trig_product(trig_product(basis_fn(Basis::sin, a.m), basis_fn(Basis::sin, b.m)),
                             basis_fn(Basis::cos, e.m));
            if (kind == LemmaKind::diff_type4) weight -= wk(a.n1, a.n2, r, tau) * wl;
            break;
          default: break;
        }
        total += weight * coef * trig_integral(v);
      }
  return std::abs(total);
}

// Inner-product LHS through transform products on an alias-free grid.
inline double lhs_transform(LemmaKind kind, const SpectralField& f, const SpectralField& g, const SpectralField& h,
                            double r, double tau) {
  lemma_detail::check_args(kind, f, g, h, r, tau);
  if (kind == LemmaKind::banach_algebra) return lemma_detail::banach(f, g, r, tau).lhs;
  return std::abs(lemma_detail::inner_value(kind, f, g, h, r, tau));
}

inline double rhs_unit(LemmaKind kind, const SpectralField& f, const SpectralField& g, const SpectralField& h,
                       double r, double tau) {
  lemma_detail::check_args(kind, f, g, h, r, tau);
  if (kind == LemmaKind::banach_algebra) return lemma_detail::banach(f, g, r, tau).rhs_unit;
  return lemma_detail::rhs_unit(kind, f, g, h, r, tau);
}

// LHS, unit-constant RHS and their ratio (0/0 -> 0). banach_algebra reports
// the level z with the largest ratio; h is ignored there.
inline LemmaResult check(LemmaKind kind, const SpectralField& f, const SpectralField& g, const SpectralField& h,
                         double r, double tau) {
  using namespace lemma_detail;
  check_args(kind, f, g, h, r, tau);
  LemmaResult res;
  if (kind == LemmaKind::banach_algebra) {
    res = banach(f, g, r, tau);
  } else {
    const bool few = modes_of(f).size() <= kExactModeLimit && modes_of(g).size() <= kExactModeLimit &&
                     modes_of(h).size() <= kExactModeLimit;
    res.lhs = few ? lhs_exact(kind, f, g, h, r, tau) : std::abs(inner_value(kind, f, g, h, r, tau));
    res.rhs_unit = lemma_detail::rhs_unit(kind, f, g, h, r, tau);
    res.ratio = res.rhs_unit > 0.0 ? res.lhs / res.rhs_unit : (res.lhs > 0.0 ? HUGE_VAL : 0.0);
  }
  if (kind == LemmaKind::type2 && r <= 2.0) res.note = "r in (3/2, 2]";
  return res;
}

struct LemmaRow {
  LemmaKind kind;
  double r, tau;
  int nh, nz;
  std::uint64_t seed;
  double lhs, rhs_unit, ratio;
};

struct EnsembleSpec {
  LemmaKind kind = LemmaKind::type1;
  double r = 2.5;
  double tau = 0.1;
  int nh = 16;
  int nz = 8;
  int samples = 200;
  std::uint64_t seed = 1;
  double tau_gen = 0.3;  // generator radius, must exceed tau
  double eta_gen = 0.3;
  int threads = 1;
};

// Random (f, g, h) for one sample; f is baroclinic for the psi-based kinds.
inline std::array<SpectralField, 3> lemma_sample(const EnsembleSpec& spec, std::uint64_t seed) {
  const GridSpec g{spec.nh, spec.nz};
  const int nc = spec.kind == LemmaKind::banach_algebra ? 1 : 2;
  SpectralField f = random_analytic(g, nc, spec.tau_gen, spec.eta_gen, 3 * seed);
  if (spec.kind == LemmaKind::type2 || spec.kind == LemmaKind::diff_type4) f = baroclinic(f);
  return {f, random_analytic(g, nc, spec.tau_gen, spec.eta_gen, 3 * seed + 1),
          random_analytic(g, nc, spec.tau_gen, spec.eta_gen, 3 * seed + 2)};
}

inline std::vector<LemmaRow> run_ensemble(const EnsembleSpec& spec) {
  if (!(spec.tau_gen > spec.tau)) throw ConfigError("tau_gen must exceed tau");
  if (spec.samples < 0) throw ConfigError("samples must be nonnegative");
  std::vector<LemmaRow> rows(spec.samples);
  auto work = [&](int i) {
    const std::uint64_t seed = spec.seed + std::uint64_t(i);
    const auto fgh = lemma_sample(spec, seed);
    const LemmaResult r = check(spec.kind, fgh[0], fgh[1], fgh[2], spec.r, spec.tau);
    rows[i] = {spec.kind, spec.r, spec.tau, spec.nh, spec.nz, seed, r.lhs, r.rhs_unit, r.ratio};
  };
  parallel_for(spec.samples, spec.threads, work);
  return rows;
}

// Random inputs with at most kExactModeLimit coefficients per field. h gets
// a coefficient on the sum of the first wavenumbers and vertical modes of f
// and g, so at least one triad has a nonzero vertical integral.
inline std::array<SpectralField, 3> sparse_lemma_inputs(LemmaKind kind, const GridSpec& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const bool baro = kind == LemmaKind::type2 || kind == LemmaKind::diff_type4;
  const int nc = kind == LemmaKind::banach_algebra ? 1 : 2;
  const int span = std::max(1, grid.nh / 6);
  std::uniform_int_distribution<int> n(-span, span), c(0, nc - 1);
  std::normal_distribution<double> nd;
  auto make = [&](int count, bool baroclinic_only) {
    SpectralField f(grid, nc);
    std::uniform_int_distribution<int> m(baroclinic_only ? 1 : 0, std::max(1, (grid.nz - 1) / 2));
    for (int i = 0; i < count; ++i) f.at(c(rng), n(rng), n(rng), m(rng)) = cplx(nd(rng), nd(rng));
    return f;
  };
  SpectralField f = make(int(kExactModeLimit), baro), g = make(int(kExactModeLimit), baro), h = make(2, false);
  const auto fm = lemma_detail::modes_of(f), gm = lemma_detail::modes_of(g);
  if (!fm.empty() && !gm.empty())
    h.at(gm[0].c, fm[0].n1 + gm[0].n1, fm[0].n2 + gm[0].n2, std::min(grid.nz - 1, fm[0].m + gm[0].m)) =
        cplx(nd(rng), nd(rng));
  return {f, g, h};
}

struct PathGap {
  double max_rel = 0.0;  // over trials with a nonzero exact LHS
  int compared = 0;
  int degenerate = 0;    // exact LHS identically zero
};

// Relative gap between the exact-convolution and transform LHS paths.
inline PathGap exact_transform_gap(LemmaKind kind, double r, double tau, const GridSpec& grid, int trials,
                                   std::uint64_t seed) {
  if (kind == LemmaKind::banach_algebra) throw Error("exact_transform_gap: banach_algebra has no inner-product form");
  PathGap gap;
  for (int i = 0; i < trials; ++i) {
    const auto [f, g, h] = sparse_lemma_inputs(kind, grid, seed + std::uint64_t(i));
    const double ex = lhs_exact(kind, f, g, h, r, tau);
    if (ex == 0.0) {
      ++gap.degenerate;
      continue;
    }
    ++gap.compared;
    gap.max_rel = std::max(gap.max_rel, std::abs(ex - lhs_transform(kind, f, g, h, r, tau)) / ex);
  }
  return gap;
}

inline double max_ratio(const std::vector<LemmaRow>& rows) {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.ratio);
  return m;
}

inline void write_lemma_csv(std::ostream& os, const std::vector<LemmaRow>& rows, bool header = true) {
  if (header) os << "kind,r,tau,nh,nz,seed,lhs,rhs_unit,ratio\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%d,%d,%llu,%.17g,%.17g,%.17g\n", to_string(r.kind), r.r, r.tau,
                  r.nh, r.nz, static_cast<unsigned long long>(r.seed), r.lhs, r.rhs_unit, r.ratio);
    os << buf;
  }
}

}  // namespace rotape
