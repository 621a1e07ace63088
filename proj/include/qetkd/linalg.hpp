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

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qetkd/errors.hpp"
#include "qetkd/tolerances.hpp"

namespace qetkd {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

enum class Axis { X, Y, Z };

inline char axis_char(Axis a) {
  switch (a) {
    case Axis::X: return 'X';
    case Axis::Y: return 'Y';
    case Axis::Z: return 'Z';
  }
  return '?';
}

inline Axis axis_from_char(char c) {
  switch (c) {
    case 'X': case 'x': return Axis::X;
    case 'Y': case 'y': return Axis::Y;
    case 'Z': case 'z': return Axis::Z;
    default: throw InvalidArgument(std::string("unknown Pauli axis '") + c + "'");
  }
}

namespace detail {

inline int sites_for_dim(Eigen::Index dim) {
  if (dim < 1 || !std::has_single_bit(static_cast<std::uint64_t>(dim))) {
    throw InvalidOperator("dimension " + std::to_string(dim) + " is not a power of two");
  }
  return std::countr_zero(static_cast<std::uint64_t>(dim));
}

inline void check_sites(int n_sites) {
  if (n_sites < 1 || n_sites > kMaxSites) {
    throw InvalidArgument("n_sites must be in [1, " + std::to_string(kMaxSites) +
                          "], got " + std::to_string(n_sites));
  }
}

/// Bit of basis index belonging to `site`; site 0 is the most significant qubit.
inline std::uint64_t site_bit(int site, int n_sites) {
  return std::uint64_t{1} << (n_sites - 1 - site);
}

}  // namespace detail

/// Dense square operator on a register of qubits.
class Operator {
 public:
  explicit Operator(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw InvalidOperator("operator must be square");
    n_sites_ = detail::sites_for_dim(m_.rows());
  }

  static Operator identity(int n_sites) {
    detail::check_sites(n_sites);
    const Eigen::Index d = Eigen::Index{1} << n_sites;
    return Operator(Matrix::Identity(d, d));
  }

  static Operator zero(int n_sites) {
    detail::check_sites(n_sites);
    const Eigen::Index d = Eigen::Index{1} << n_sites;
    return Operator(Matrix::Zero(d, d));
  }

  const Matrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }
  int n_sites() const noexcept { return n_sites_; }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  double hermiticity_defect() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }
  bool is_hermitian(double tol = Tolerances::hermitian) const {
    return hermiticity_defect() <= tol;
  }
  bool is_unitary(double tol = Tolerances::unitary) const {
    return (m_ * m_.adjoint() - Matrix::Identity(dim(), dim())).norm() <= tol;
  }
  double frobenius_norm() const { return m_.norm(); }

  Operator adjoint() const { return Operator(m_.adjoint()); }

  friend Operator operator*(const Operator& a, const Operator& b) {
    check_same(a, b);
    return Operator(a.m_ * b.m_);
  }
  friend Operator operator+(const Operator& a, const Operator& b) {
    check_same(a, b);
    return Operator(a.m_ + b.m_);
  }
  friend Operator operator-(const Operator& a, const Operator& b) {
    check_same(a, b);
    return Operator(a.m_ - b.m_);
  }
  friend Operator operator*(Complex s, const Operator& a) { return Operator(s * a.m_); }
  friend Operator operator*(double s, const Operator& a) { return Operator(s * a.m_); }

  /// Adds `s` times the identity.
  Operator shifted(double s) const {
    return Operator(m_ + s * Matrix::Identity(dim(), dim()));
  }

 private:
  static void check_same(const Operator& a, const Operator& b) {
    if (a.dim() != b.dim()) {
      throw InvalidOperator("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
    }
  }

  Matrix m_;
  int n_sites_ = 0;
};

inline Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

/// Normalised state vector.
class PureState {
 public:
  explicit PureState(Vector amplitudes) : v_(std::move(amplitudes)) {
    n_sites_ = detail::sites_for_dim(v_.size());
    if (std::abs(v_.norm() - 1.0) > Tolerances::state_norm) {
      throw InvalidOperator("state norm " + std::to_string(v_.norm()) + " differs from 1");
    }
  }

  /// Rescales a non-zero vector to unit norm.
  static PureState normalized(const Vector& v) {
    const double n = v.norm();
    if (n == 0.0) throw InvalidOperator("cannot normalise the zero vector");
    return PureState(v / n);
  }

  /// Computational basis state |index>.
  static PureState basis(int n_sites, std::uint64_t index) {
    detail::check_sites(n_sites);
    Vector v = Vector::Zero(Eigen::Index{1} << n_sites);
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return PureState(std::move(v));
  }

  const Vector& amplitudes() const noexcept { return v_; }
  Eigen::Index dim() const noexcept { return v_.size(); }
  int n_sites() const noexcept { return n_sites_; }

 private:
  Vector v_;
  int n_sites_ = 0;
};

/// Hermitian, positive semidefinite, unit-trace matrix.
class DensityMatrix {
 public:
  explicit DensityMatrix(const Matrix& m) {
    if (m.rows() != m.cols()) throw InvalidOperator("density matrix must be square");
    n_sites_ = detail::sites_for_dim(m.rows());
    const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm > Tolerances::hermitian) {
      throw InvalidOperator("density matrix not Hermitian (defect " + std::to_string(herm) + ")");
    }
    rho_ = 0.5 * (m + m.adjoint());
    const Complex tr = rho_.trace();
    if (std::abs(tr - Complex{1.0, 0.0}) > Tolerances::trace) {
      throw InvalidOperator("density matrix trace " + std::to_string(tr.real()) + " differs from 1");
    }
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(rho_, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .minCoeff();
    if (min_eig < -Tolerances::psd) {
      throw InvalidOperator("density matrix has negative eigenvalue " + std::to_string(min_eig));
    }
  }

  static DensityMatrix from_pure(const PureState& psi) {
    return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
  }

  static DensityMatrix maximally_mixed(int n_sites) {
    detail::check_sites(n_sites);
    const Eigen::Index d = Eigen::Index{1} << n_sites;
    return DensityMatrix(Matrix::Identity(d, d) / static_cast<double>(d));
  }

  const Matrix& matrix() const noexcept { return rho_; }
  Eigen::Index dim() const noexcept { return rho_.rows(); }
  int n_sites() const noexcept { return n_sites_; }

 private:
  Matrix rho_;
  int n_sites_ = 0;
};

/// Single-site factor of a Pauli product.
struct PauliFactor {
  int site = 0;
  Axis axis = Axis::Z;
  friend bool operator==(const PauliFactor&, const PauliFactor&) = default;
};

/// Real coefficient times a product of Pauli matrices on distinct sites.
struct PauliTerm {
  double coefficient = 0.0;
  std::vector<PauliFactor> factors;
  friend bool operator==(const PauliTerm&, const PauliTerm&) = default;
};

inline void validate_term(const PauliTerm& t, int n_sites) {
  if (!std::isfinite(t.coefficient)) throw InvalidArgument("non-finite term coefficient");
  std::uint64_t seen = 0;
  for (const auto& f : t.factors) {
    if (f.site < 0 || f.site >= n_sites) {
      throw InvalidArgument("term site " + std::to_string(f.site) + " outside [0, " +
                            std::to_string(n_sites) + ")");
    }
    const std::uint64_t bit = std::uint64_t{1} << f.site;
    if (seen & bit) {
      throw InvalidArgument("site " + std::to_string(f.site) + " repeated within one term");
    }
    seen |= bit;
  }
}

namespace detail {

// P|j> = i^{#Y} (-1)^{popcount(j & zmask)} |j ^ xmask>
inline void add_pauli_string(Matrix& m, Complex coeff, const std::vector<PauliFactor>& factors,
                             int n_sites) {
  std::uint64_t xmask = 0, zmask = 0;
  int n_y = 0;
  for (const auto& f : factors) {
    const auto bit = site_bit(f.site, n_sites);
    if (f.axis != Axis::Z) xmask |= bit;
    if (f.axis != Axis::X) zmask |= bit;
    if (f.axis == Axis::Y) ++n_y;
  }
  static constexpr Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const Complex base = coeff * kIPow[n_y % 4];
  const auto dim = static_cast<std::uint64_t>(m.rows());
  for (std::uint64_t j = 0; j < dim; ++j) {
    const bool odd = std::popcount(j & zmask) & 1;
    m(static_cast<Eigen::Index>(j ^ xmask), static_cast<Eigen::Index>(j)) += odd ? -base : base;
  }
}

}  // namespace detail

/// Single-site Pauli embedded in an n-site register.
inline Operator pauli_on_site(Axis axis, int site, int n_sites) {
  detail::check_sites(n_sites);
  if (site < 0 || site >= n_sites) {
    throw InvalidArgument("site " + std::to_string(site) + " outside [0, " +
                          std::to_string(n_sites) + ")");
  }
  const Eigen::Index d = Eigen::Index{1} << n_sites;
  Matrix m = Matrix::Zero(d, d);
  detail::add_pauli_string(m, 1.0, {{site, axis}}, n_sites);
  return Operator(std::move(m));
}

/// n·σ on one site for a real 3-vector n.
inline Operator pauli_vector_on_site(const std::array<double, 3>& n, int site, int n_sites) {
  return n[0] * pauli_on_site(Axis::X, site, n_sites) +
         n[1] * pauli_on_site(Axis::Y, site, n_sites) +
         n[2] * pauli_on_site(Axis::Z, site, n_sites);
}

/// Coefficient-weighted sum of Pauli products. An empty list yields the zero operator.
inline Operator assemble(const std::vector<PauliTerm>& terms, int n_sites) {
  detail::check_sites(n_sites);
  for (const auto& t : terms) validate_term(t, n_sites);
  const Eigen::Index d = Eigen::Index{1} << n_sites;
  Matrix m = Matrix::Zero(d, d);
  for (const auto& t : terms) detail::add_pauli_string(m, t.coefficient, t.factors, n_sites);
  return Operator(std::move(m));
}

struct Eigensystem {
  Eigen::VectorXd values;  // ascending
  Matrix vectors;          // columns
};

inline Eigensystem eigendecompose(const Operator& h) {
  if (!h.is_hermitian()) {
    throw InvalidOperator("eigendecompose needs a Hermitian operator (defect " +
                          std::to_string(h.hermiticity_defect()) + ")");
  }
  const Matrix sym = 0.5 * (h.matrix() + h.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw InvalidOperator("eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace detail {

inline double real_or_throw(Complex z, const char* what) {
  if (std::abs(z.imag()) > Tolerances::imaginary_residue) {
    throw ImaginaryResidue(std::string(what) + ": imaginary part " + std::to_string(z.imag()),
                           z.imag());
  }
  return z.real();
}

}  // namespace detail

/// Tr[rho A].
inline double expectation(const DensityMatrix& rho, const Operator& a) {
  if (rho.dim() != a.dim()) throw InvalidOperator("expectation: dimension mismatch");
  const Complex tr = (rho.matrix().transpose().cwiseProduct(a.matrix())).sum();
  return detail::real_or_throw(tr, "expectation");
}

/// <psi|A|psi>.
inline double expectation(const PureState& psi, const Operator& a) {
  if (psi.dim() != a.dim()) throw InvalidOperator("expectation: dimension mismatch");
  const Complex v = psi.amplitudes().dot(a.matrix() * psi.amplitudes());
  return detail::real_or_throw(v, "expectation");
}

/// Tr[M A] for an arbitrary (unnormalised) matrix M; used for sub-ensemble weights.
inline double trace_product(const Matrix& m, const Operator& a) {
  const Complex tr = (m.transpose().cwiseProduct(a.matrix())).sum();
  return detail::real_or_throw(tr, "trace_product");
}

/// ||rho - sigma||_1 / 2.
inline double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw InvalidOperator("trace_distance: dimension mismatch");
  const Matrix diff = rho.matrix() - sigma.matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (diff + diff.adjoint()),
                                               Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

/// Mixture (1 - p) a + p b.
inline DensityMatrix mix(const DensityMatrix& a, const DensityMatrix& b, double p) {
  if (a.dim() != b.dim()) throw InvalidOperator("mix: dimension mismatch");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("mixing probability outside [0, 1]");
  return DensityMatrix((1.0 - p) * a.matrix() + p * b.matrix());
}

/// rho_site ⊗ rho_rest: the state with every correlation between `site` and the
/// remaining register removed, marginals kept.
inline DensityMatrix product_of_marginals(const DensityMatrix& rho, int site) {
  const int n = rho.n_sites();
  if (site < 0 || site >= n) throw InvalidArgument("product_of_marginals: bad site");
  const auto bit = detail::site_bit(site, n);
  const auto d = static_cast<std::uint64_t>(rho.dim());
  const auto& m = rho.matrix();
  // reduced matrices indexed by (site bit) and by the full index with the site bit cleared
  Eigen::Matrix2cd local = Eigen::Matrix2cd::Zero();
  Matrix rest = Matrix::Zero(rho.dim(), rho.dim());
  for (std::uint64_t i = 0; i < d; ++i) {
    for (std::uint64_t j = 0; j < d; ++j) {
      const Complex v = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if ((i & ~bit) == (j & ~bit)) local((i & bit) ? 1 : 0, (j & bit) ? 1 : 0) += v;
      if ((i & bit) == (j & bit)) {
        rest(static_cast<Eigen::Index>(i & ~bit), static_cast<Eigen::Index>(j & ~bit)) += v;
      }
    }
  }
  Matrix out(rho.dim(), rho.dim());
  for (std::uint64_t i = 0; i < d; ++i) {
    for (std::uint64_t j = 0; j < d; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          local((i & bit) ? 1 : 0, (j & bit) ? 1 : 0) *
          rest(static_cast<Eigen::Index>(i & ~bit), static_cast<Eigen::Index>(j & ~bit));
    }
  }
  return DensityMatrix(out);
}

}  // namespace qetkd

namespace qetkd {

/// Lowest eigenpair with the degeneracy check and a fixed global phase
/// (largest-magnitude amplitude real and positive).
struct GroundPair {
  PureState state;
  double energy;
  double gap;
};

inline GroundPair lowest_eigenpair(const Operator& h) {
  const auto es = eigendecompose(h);
  const double gap = es.values.size() > 1 ? es.values(1) - es.values(0) : 0.0;
  if (es.values.size() > 1 && gap < Tolerances::degeneracy) {
    throw DegenerateGround("ground level is degenerate (gap " + std::to_string(gap) + ")", gap);
  }
  Vector v = es.vectors.col(0);
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  v *= std::conj(v(arg)) / std::abs(v(arg));
  return {PureState::normalized(v), es.values(0), gap};
}

}  // namespace qetkd
