#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <numbers>

#include "rotape/errors.hpp"

namespace rotape {

// Horizontal modes run over -nh/2+1..nh/2 per axis (FFT order), vertical
// cosine modes over m = 0..nz-1. A planar grid keeps only n2 = 0 and has a
// single collocation point in y.
struct GridSpec {
  int nh = 16;
  int nz = 8;
  double dealias_fraction = 2.0 / 3.0;
  bool planar = false;

  int ny() const { return planar ? 1 : nh; }
  std::size_t horizontal() const { return std::size_t(nh) * std::size_t(ny()); }
  std::size_t block() const { return horizontal() * std::size_t(nz); }

  // Signed wavenumber index of FFT slot i along an axis of length n.
  static int wavenumber(int i, int n) { return i <= n / 2 ? i : i - n; }
  int n1(int i1) const { return wavenumber(i1, nh); }
  int n2(int i2) const { return planar ? 0 : wavenumber(i2, nh); }

  double kmag(int i1, int i2) const {
    const double a = n1(i1), b = n2(i2);
    return 2.0 * std::numbers::pi * std::sqrt(a * a + b * b);
  }

  bool kept(int i1, int i2, int m) const {
    const double hcut = dealias_fraction * nh / 2.0;
    const double zcut = dealias_fraction * nz;
    return std::abs(n1(i1)) <= hcut && std::abs(n2(i2)) <= hcut && m <= zcut;
  }

  void validate() const {
    if (nh < 4 || nh % 2 != 0) throw DimensionError("nh must be even and >= 4");
    if (nz < 2) throw DimensionError("nz must be >= 2");
    if (!(dealias_fraction > 0.0 && dealias_fraction <= 1.0))
      throw DimensionError("dealias_fraction must lie in (0,1]");
    if (dealias_fraction * nh < 2.0) throw DimensionError("dealias_fraction*nh must be >= 2");
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.nh == b.nh && a.nz == b.nz && a.dealias_fraction == b.dealias_fraction &&
           a.planar == b.planar;
  }
};

}  // namespace rotape
