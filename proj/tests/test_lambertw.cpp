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

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fedsched/lambertw.hpp"
#include "oracles.hpp"

using fedsched::lambert_w0;

TEST_CASE("lambert_w0 fixed points") {
  CHECK(lambert_w0(0.0).w == 0.0);
  CHECK(lambert_w0(0.0).iterations == 0);
  CHECK(lambert_w0(std::numbers::e).w == doctest::Approx(1.0).epsilon(1e-12));

  // Omega constant, frozen from the bisection oracle.
  const double omega = fedsched::oracle::lambert_w0_bisection(1.0);
  CHECK(omega == doctest::Approx(0.5671432904097838).epsilon(1e-12));
  CHECK(std::abs(lambert_w0(1.0).w - omega) < 1e-12);

  const auto big = lambert_w0(1e6);
  CHECK(std::abs(big.w * std::exp(big.w) - 1e6) <= 1e-6);
  CHECK(big.iterations <= 50);
}

TEST_CASE("lambert_w0 matches bisection on [0, 100]") {
  for (int i = 0; i <= 2000; ++i) {
    const double z = 100.0 * i / 2000.0;
    CHECK(std::abs(lambert_w0(z).w - fedsched::oracle::lambert_w0_bisection(z)) < 1e-10);
  }
}

TEST_CASE("lambert_w0 residual and monotonicity on a log grid") {
  double previous = -1.0;
  for (int i = 0; i < 4000; ++i) {
    const double z = std::pow(10.0, -12.0 + 21.0 * i / 3999.0);
    const auto r = lambert_w0(z);
    CHECK(r.w >= 0.0);
    CHECK(r.residual <= 1e-12 * std::max(1.0, z));
    CHECK(r.w > previous);
    previous = r.w;
  }
}

TEST_CASE("lambert_w0 rejects arguments outside the nonnegative domain") {
  CHECK_THROWS_AS(lambert_w0(-1e-3), std::domain_error);
  CHECK_THROWS_AS(lambert_w0(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(lambert_w0(INFINITY), std::domain_error);
}

TEST_CASE("lambert_w0 reports non-convergence") {
  CHECK_THROWS_AS(lambert_w0(1e6, 1), fedsched::LambertWError);
}

TEST_CASE("lambert_w0 works in long double") {
  const auto r = lambert_w0<long double>(std::numbers::e_v<long double>);
  CHECK(std::abs(static_cast<double>(r.w) - 1.0) < 1e-15);
}
