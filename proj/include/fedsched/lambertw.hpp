// Copyright 2026 The fedsched Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <limits>
#include <sstream>

#include "fedsched/error.hpp"

namespace fedsched {

template <typename Scalar = double>
struct LambertResult {
  Scalar w{};
  Scalar residual{};  // |w e^w - z|
  int iterations = 0;
};

class LambertWError : public Error {
 public:
  using Error::Error;
};

/// Principal branch W0 of the Lambert W function on z >= 0, i.e. the w >= 0
/// solving w e^w = z.
///
/// Starts from log(1 + z), which bounds W0(z) from above on z >= 0, and
/// refines with Halley steps written in the overflow-free form
/// t = (w - z e^{-w}) / (w + 1). Throws std::domain_error for z < 0 or NaN and
/// LambertWError if the iteration fails to settle within `max_iterations`.
template <typename Scalar = double>
LambertResult<Scalar> lambert_w0(Scalar z, int max_iterations = 50) {
  using std::abs;
  using std::exp;
  using std::log1p;

  if (!(z >= Scalar(0)) || !std::isfinite(static_cast<double>(z))) {
    throw std::domain_error("lambert_w0: argument must be finite and >= 0");
  }
  if (z == Scalar(0)) return {Scalar(0), Scalar(0), 0};

  constexpr Scalar kEps = std::numeric_limits<Scalar>::epsilon();
  Scalar w = log1p(z);
  for (int it = 1; it <= max_iterations; ++it) {
    const Scalar t = (w - z * exp(-w)) / (w + Scalar(1));
    const Scalar step = t / (Scalar(1) - (w + Scalar(2)) * t / (Scalar(2) * (w + Scalar(1))));
    w -= step;
    if (abs(step) <= Scalar(4) * kEps * (Scalar(1) + abs(w))) {
      return {w, abs(w * exp(w) - z), it};
    }
  }

  std::ostringstream msg;
  msg << "lambert_w0: no convergence after " << max_iterations << " iterations (z=" << z
      << ", w=" << w << ")";
  throw LambertWError(msg.str());
}

}  // namespace fedsched
