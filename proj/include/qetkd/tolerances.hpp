// Copyright 2026 The qetkd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

namespace qetkd {

/// Numerical tolerances shared by every module.
struct Tolerances {
  static constexpr double hermitian = 1e-12;
  static constexpr double unitary = 1e-12;
  static constexpr double state_norm = 1e-12;
  static constexpr double basis_norm = 1e-12;
  static constexpr double trace = 1e-10;
  static constexpr double psd = 1e-10;
  static constexpr double eigen_reconstruction = 1e-10;
  static constexpr double orthonormality = 1e-10;
  static constexpr double imaginary_residue = 1e-10;
  static constexpr double commutator = 1e-10;
  static constexpr double kraus_completeness = 1e-10;
  static constexpr double degeneracy = 1e-9;
  static constexpr double objective_norm = 1e-12;
  static constexpr double threshold_bisection = 1e-4;
  static constexpr double energy_zero = 1e-12;  // |E_B| below this has no sign
  static constexpr double optimal_coupling = 1e-3;
};

/// Largest register the dense simulator accepts (2^12 = 4096 amplitudes).
inline constexpr int kMaxSites = 12;

}  // namespace qetkd
