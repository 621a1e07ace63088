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

#include <stdexcept>
#include <string>

namespace qetkd {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on arguments was violated (bad site, bad coupling, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A matrix failed a structural check (Hermiticity, unit trace, PSD, ...).
class InvalidOperator : public Error {
 public:
  using Error::Error;
};

/// An expectation value carried an imaginary part above tolerance.
class ImaginaryResidue : public Error {
 public:
  ImaginaryResidue(const std::string& what, double residue)
      : Error(what), residue_(residue) {}
  double residue() const noexcept { return residue_; }

 private:
  double residue_;
};

/// The requested eigenlevel is degenerate with its neighbour.
class DegenerateGround : public Error {
 public:
  DegenerateGround(const std::string& what, double gap)
      : Error(what), gap_(gap) {}
  double gap() const noexcept { return gap_; }

 private:
  double gap_;
};

/// Alice's projector does not commute with the receiver's Hamiltonian.
class PartitionViolation : public Error {
 public:
  PartitionViolation(const std::string& what, double commutator_norm)
      : Error(what), commutator_norm_(commutator_norm) {}
  double commutator_norm() const noexcept { return commutator_norm_; }

 private:
  double commutator_norm_;
};

/// No Bob basis can teleport energy for this measurement basis.
class DegenerateObjective : public Error {
 public:
  using Error::Error;
};

/// Kraus operators do not satisfy sum K^dagger K = I.
class CompletenessViolation : public Error {
 public:
  using Error::Error;
};

/// A Kraus operator acts on a site it is not allowed to touch.
class SupportViolation : public Error {
 public:
  using Error::Error;
};

/// A key session was aborted (too many erasures, failed verification, ...).
class ProtocolAbort : public Error {
 public:
  using Error::Error;
};

}  // namespace qetkd
