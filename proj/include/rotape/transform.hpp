#pragma once

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "rotape/field.hpp"

namespace rotape {

namespace detail {

// FFTW plans for one grid shape. Planning is serialized; execution through
// the new-array interface is reentrant, so a plan set is shared by all users.
class PlanSet {
 public:
  explicit PlanSet(const GridSpec& g) : nh_(g.nh), ny_(g.ny()), nz_(g.nz) {
    const std::size_t n = g.block();
    fftw_complex* buf = fftw_alloc_complex(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    int dims[2] = {nh_, ny_};
    fwd_ = fftw_plan_many_dft(2, dims, nz_, buf, nullptr, nz_, 1, buf, nullptr, nz_, 1,
                              FFTW_FORWARD, flags);
    bwd_ = fftw_plan_many_dft(2, dims, nz_, buf, nullptr, nz_, 1, buf, nullptr, nz_, 1,
                              FFTW_BACKWARD, flags);
    lvl_fwd_ = fftw_plan_dft_2d(nh_, ny_, buf, buf, FFTW_FORWARD, flags);
    lvl_bwd_ = fftw_plan_dft_2d(nh_, ny_, buf, buf, FFTW_BACKWARD, flags);
    double* d = reinterpret_cast<double*>(buf);
    fftw_iodim z{nz_, 2, 2};
    fftw_iodim many[2] = {{int(g.horizontal()), 2 * nz_, 2 * nz_}, {2, 1, 1}};
    auto r2r = [&](fftw_r2r_kind k) { return fftw_plan_guru_r2r(1, &z, 2, many, d, d, &k, flags); };
    dct_fwd_ = r2r(FFTW_REDFT10);
    dct_inv_ = r2r(FFTW_REDFT01);
    dst_fwd_ = r2r(FFTW_RODFT10);
    dst_inv_ = r2r(FFTW_RODFT01);
    fftw_free(buf);
  }
  ~PlanSet() {
    for (auto p : {fwd_, bwd_, lvl_fwd_, lvl_bwd_, dct_fwd_, dct_inv_, dst_fwd_, dst_inv_}) fftw_destroy_plan(p);
  }
  PlanSet(const PlanSet&) = delete;
  PlanSet& operator=(const PlanSet&) = delete;

  void fft(cplx* data, bool forward) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(forward ? fwd_ : bwd_, p, p);
  }
  // 2D FFT of one contiguous horizontal level.
  void fft_level(cplx* data, bool forward) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(forward ? lvl_fwd_ : lvl_bwd_, p, p);
  }
  void vertical(cplx* data, Basis b, bool forward) const {
    auto* p = reinterpret_cast<double*>(data);
    fftw_plan plan = b == Basis::cos ? (forward ? dct_fwd_ : dct_inv_) : (forward ? dst_fwd_ : dst_inv_);
    fftw_execute_r2r(plan, p, p);
  }

 private:
  int nh_, ny_, nz_;
  fftw_plan fwd_, bwd_, lvl_fwd_, lvl_bwd_, dct_fwd_, dct_inv_, dst_fwd_, dst_inv_;
};

inline std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

inline const PlanSet& plans_for(const GridSpec& g) {
  static std::map<std::tuple<int, int, int>, std::unique_ptr<PlanSet>> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto key = std::make_tuple(g.nh, g.ny(), g.nz);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_unique<PlanSet>(g)).first;
  return *it->second;
}

}  // namespace detail

// Orthonormal projection of grid samples onto e^{ik.x} (x) {1, sqrt2 cos} or {sqrt2 sin}.
inline SpectralField forward(const PhysField& f, Basis basis = Basis::cos) {
  const GridSpec& g = f.grid;
  const auto& plans = detail::plans_for(g);
  SpectralField out(g, f.ncomp, basis);
  const int nz = g.nz;
  const double hscale = 1.0 / double(g.horizontal());
  const double c0 = hscale / (2.0 * nz);
  const double cm = hscale / (std::sqrt(2.0) * nz);
  for (int comp = 0; comp < f.ncomp; ++comp) {
    cplx* d = out.comp_data(comp);
    std::copy(f.comp_data(comp), f.comp_data(comp) + g.block(), d);
    plans.fft(d, true);
    plans.vertical(d, basis, true);
    for (std::size_t h = 0; h < g.horizontal(); ++h) {
      cplx* col = d + h * nz;
      if (basis == Basis::cos) {
        col[0] *= c0;
        for (int m = 1; m < nz; ++m) col[m] *= cm;
      } else {
        // DST-II slot k holds mode m = k+1; mode nz is not representable.
        for (int m = nz - 1; m >= 1; --m) col[m] = col[m - 1] * cm;
        col[0] = 0.0;
      }
    }
  }
  return out;
}

inline PhysField inverse(const SpectralField& f) {
  const GridSpec& g = f.grid;
  const auto& plans = detail::plans_for(g);
  PhysField out(g, f.ncomp);
  const int nz = g.nz;
  const double s = 1.0 / std::sqrt(2.0);
  for (int comp = 0; comp < f.ncomp; ++comp) {
    cplx* d = out.comp_data(comp);
    std::copy(f.comp_data(comp), f.comp_data(comp) + g.block(), d);
    for (std::size_t h = 0; h < g.horizontal(); ++h) {
      cplx* col = d + h * nz;
      if (f.basis == Basis::cos) {
        for (int m = 1; m < nz; ++m) col[m] *= s;
      } else {
        for (int m = 0; m < nz - 1; ++m) col[m] = col[m + 1] * s;
        col[nz - 1] = 0.0;
      }
    }
    plans.vertical(d, f.basis, false);
    plans.fft(d, false);
  }
  return out;
}

// Inverse transform of a field whose m >= 1 coefficients vanish; only the
// m = 0 level is transformed and broadcast over z.
inline PhysField inverse_barotropic(const SpectralField& f) {
  const GridSpec& g = f.grid;
  const auto& plans = detail::plans_for(g);
  PhysField out(g, f.ncomp);
  std::vector<cplx> level(g.horizontal());
  for (int comp = 0; comp < f.ncomp; ++comp) {
    const cplx* src = f.comp_data(comp);
    for (std::size_t h = 0; h < g.horizontal(); ++h) level[h] = src[h * g.nz];
    plans.fft_level(level.data(), false);
    cplx* d = out.comp_data(comp);
    for (std::size_t h = 0; h < g.horizontal(); ++h)
      for (int m = 0; m < g.nz; ++m) d[h * g.nz + m] = level[h];
  }
  return out;
}

// m = 0 part of forward(f): vertical mean followed by a single level FFT.
inline SpectralField forward_p0(const PhysField& f) {
  const GridSpec& g = f.grid;
  const auto& plans = detail::plans_for(g);
  SpectralField out(g, f.ncomp);
  std::vector<cplx> level(g.horizontal());
  const double scale = 1.0 / (double(g.horizontal()) * g.nz);
  for (int comp = 0; comp < f.ncomp; ++comp) {
    const cplx* src = f.comp_data(comp);
    for (std::size_t h = 0; h < g.horizontal(); ++h) {
      cplx s = 0.0;
      for (int m = 0; m < g.nz; ++m) s += src[h * g.nz + m];
      level[h] = s * scale;
    }
    plans.fft_level(level.data(), true);
    cplx* d = out.comp_data(comp);
    for (std::size_t h = 0; h < g.horizontal(); ++h) d[h * g.nz] = level[h];
  }
  return out;
}

}  // namespace rotape
