#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "rotape/field.hpp"

namespace rotape {

// PESP1: one ASCII header line, then little-endian float64 (re, im) pairs in
// (component, n1, n2, m) order with n1, n2 in FFT order. Planar grids are
// recognized on read from the payload length (n2 has a single slot).
struct Snapshot {
  SpectralField field;
  double t = 0.0;
};

namespace detail {

inline double to_le(double v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  u = __builtin_bswap64(u);
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace detail

inline void write_snapshot(const std::string& path, const SpectralField& f, double t) {
  if (f.basis != Basis::cos) throw BasisError("snapshots hold cosine-basis fields only");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open snapshot for writing: " + path);
  char head[160];
  std::snprintf(head, sizeof head, "PESP1 nh=%d nz=%d comps=%d t=%.17g\n", f.grid.nh, f.grid.nz,
                f.ncomp, t);
  os << head;
  for (const cplx& v : f.c) {
    const double re = detail::to_le(v.real()), im = detail::to_le(v.imag());
    os.write(reinterpret_cast<const char*>(&re), 8);
    os.write(reinterpret_cast<const char*>(&im), 8);
  }
  if (!os) throw Error("snapshot write failed: " + path);
}

inline Snapshot read_snapshot(const std::string& path, double dealias_fraction = 2.0 / 3.0) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open snapshot: " + path);
  std::string line;
  std::getline(is, line);
  int nh = 0, nz = 0, comps = 0;
  double t = 0.0;
  if (std::sscanf(line.c_str(), "PESP1 nh=%d nz=%d comps=%d t=%lf", &nh, &nz, &comps, &t) != 4)
    throw Error("not a PESP1 snapshot: " + path);
  const auto start = is.tellg();
  is.seekg(0, std::ios::end);
  const auto bytes = std::size_t(is.tellg() - start);
  is.seekg(start);
  GridSpec g{nh, nz, dealias_fraction, false};
  const std::size_t full = std::size_t(comps) * g.block() * 16;
  if (bytes != full) {
    g.planar = true;
    if (bytes != std::size_t(comps) * g.block() * 16)
      throw Error("snapshot payload size does not match its header: " + path);
  }
  g.validate();
  Snapshot s{SpectralField(g, comps), t};
  for (cplx& v : s.field.c) {
    double re, im;
    is.read(reinterpret_cast<char*>(&re), 8);
    is.read(reinterpret_cast<char*>(&im), 8);
    v = cplx(detail::to_le(re), detail::to_le(im));
  }
  if (!is) throw Error("truncated snapshot: " + path);
  return s;
}

}  // namespace rotape
