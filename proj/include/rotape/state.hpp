#pragma once

#include "rotape/field.hpp"

namespace rotape {

// Rotating-frame variables: vbar (m = 0) and V+- = e^{-+i Omega t} P+- V.
struct RotatingState {
  double t = 0.0;
  SpectralField vbar;
  SpectralField vplus;
  SpectralField vminus;
};

}  // namespace rotape
