#pragma once

// Dense finite-dimensional Hilbert-space substrate: state vectors, operators
// with checked unitary/projector refinements, Kronecker products, partial
// trace and Haar sampling.
//
// Composite indexing is row-major with the first factor most significant:
// for a (x) b with dims (m, n), amplitude index is i * n + j.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tsv/errors.hpp"
#include "tsv/rng.hpp"

namespace tsv {

using Complex = std::complex<double>;

namespace tol {
// Structural checks performed when a value is constructed.
inline constexpr double kConstruction = 1e-10;
// Equality assertions on computed results.
inline constexpr double kEquality = 1e-12;
}  // namespace tol

class StateVector {
 public:
  explicit StateVector(Eigen::VectorXcd amps) : amps_(std::move(amps)) {
    if (amps_.size() == 0) throw InvalidArgument("StateVector: dim must be >= 1");
  }
  StateVector(std::initializer_list<Complex> amps)
      : StateVector(Eigen::Map<const Eigen::VectorXcd>(amps.begin(), static_cast<Eigen::Index>(amps.size()))) {}

  static StateVector basis(std::size_t dim, std::size_t k) {
    if (k >= dim) throw InvalidArgument("StateVector::basis: index " + std::to_string(k) + " out of range");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
    v(static_cast<Eigen::Index>(k)) = 1.0;
    return StateVector(std::move(v));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
  Complex operator[](std::size_t k) const { return amps_(static_cast<Eigen::Index>(k)); }
  const Eigen::VectorXcd& amps() const noexcept { return amps_; }

  double norm() const { return amps_.norm(); }

  // Unit-norm copy. Throws on a zero vector.
  StateVector normalized() const {
    const double n = norm();
    if (!(n > 0.0)) throw InvalidArgument("StateVector::normalized: zero vector");
    return StateVector(amps_ / n);
  }

 private:
  Eigen::VectorXcd amps_;
};

class Operator {
 public:
  explicit Operator(Eigen::MatrixXcd m) : m_(std::move(m)) {
    if (m_.rows() == 0) throw InvalidArgument("Operator: dim must be >= 1");
    if (m_.rows() != m_.cols()) throw InvalidArgument("Operator: matrix must be square");
  }

  static Operator identity(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return Operator(Eigen::MatrixXcd::Identity(d, d));
  }
  static Operator zero(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return Operator(Eigen::MatrixXcd::Zero(d, d));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const Eigen::MatrixXcd& matrix() const noexcept { return m_; }
  Complex operator()(std::size_t i, std::size_t j) const {
    return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  Operator adjoint() const { return Operator(m_.adjoint()); }
  Complex trace() const { return m_.trace(); }

  bool is_hermitian(double tolerance = tol::kConstruction) const {
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tolerance;
  }

  friend Operator operator*(const Operator& a, const Operator& b) {
    check_same_dim("Operator*", a, b);
    return Operator(a.m_ * b.m_);
  }
  friend Operator operator+(const Operator& a, const Operator& b) {
    check_same_dim("Operator+", a, b);
    return Operator(a.m_ + b.m_);
  }
  friend Operator operator-(const Operator& a, const Operator& b) {
    check_same_dim("Operator-", a, b);
    return Operator(a.m_ - b.m_);
  }
  friend Operator operator*(Complex s, const Operator& a) { return Operator(s * a.m_); }

 protected:
  static void check_same_dim(const char* where, const Operator& a, const Operator& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch(where, a.dim(), b.dim());
  }

  Eigen::MatrixXcd m_;
};

// Largest elementwise modulus of a - b.
inline double max_abs_diff(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("max_abs_diff", a.dim(), b.dim());
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("max_abs_diff", a.dim(), b.dim());
  return (a.amps() - b.amps()).cwiseAbs().maxCoeff();
}

/// Operator checked on construction to satisfy ||U^dagger U - I||_max <= 1e-10.
class Unitary : public Operator {
 public:
  explicit Unitary(Operator op) : Operator(std::move(op)) {
    const auto d = m_.rows();
    const double err = (m_.adjoint() * m_ - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff();
    if (err > tol::kConstruction) {
      throw InvalidArgument("Unitary: ||U^dagger U - I||_max = " + std::to_string(err));
    }
  }
  explicit Unitary(Eigen::MatrixXcd m) : Unitary(Operator(std::move(m))) {}

  static Unitary identity(std::size_t dim) { return Unitary(Operator::identity(dim)); }

  Unitary adjoint() const { return Unitary(Operator::adjoint()); }
};

/// Hermitian idempotent operator, checked to 1e-10 on construction.
class Projector : public Operator {
 public:
  explicit Projector(Operator op) : Operator(std::move(op)) {
    if (!is_hermitian()) throw InvalidArgument("Projector: not Hermitian");
    const double err = (m_ * m_ - m_).cwiseAbs().maxCoeff();
    if (err > tol::kConstruction) {
      throw InvalidArgument("Projector: ||P^2 - P||_max = " + std::to_string(err));
    }
  }
  explicit Projector(Eigen::MatrixXcd m) : Projector(Operator(std::move(m))) {}

  // |psi><psi| for the normalized direction of psi.
  static Projector onto(const StateVector& psi) {
    const Eigen::VectorXcd v = psi.normalized().amps();
    return Projector(Operator(v * v.adjoint()));
  }

  // Sum of |k><k| over the listed computational basis indices.
  static Projector onto_basis(std::size_t dim, std::span<const std::size_t> indices) {
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t k : indices) {
      if (k >= dim) throw InvalidArgument("Projector::onto_basis: index out of range");
      m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;
    }
    return Projector(Operator(std::move(m)));
  }
  static Projector onto_basis(std::size_t dim, std::initializer_list<std::size_t> indices) {
    return onto_basis(dim, std::span<const std::size_t>(indices.begin(), indices.size()));
  }

  Projector complement() const {
    const auto d = m_.rows();
    return Projector(Operator(Eigen::MatrixXcd::Identity(d, d) - m_));
  }
};

inline Complex inner(const StateVector& phi, const StateVector& psi) {
  if (phi.dim() != psi.dim()) throw DimensionMismatch("inner", phi.dim(), psi.dim());
  return phi.amps().dot(psi.amps());  // Eigen conjugates the left operand
}

// Matrix-vector product. The result is not renormalized.
inline StateVector apply(const Operator& op, const StateVector& psi) {
  if (op.dim() != psi.dim()) throw DimensionMismatch("apply", op.dim(), psi.dim());
  return StateVector(op.matrix() * psi.amps());
}

// |a><b|
inline Operator outer(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("outer", a.dim(), b.dim());
  return Operator(a.amps() * b.amps().adjoint());
}

inline Operator density(const StateVector& psi) { return outer(psi, psi); }

inline StateVector tensor(const StateVector& a, const StateVector& b) {
  const auto n = b.amps().size();
  Eigen::VectorXcd out(a.amps().size() * n);
  for (Eigen::Index i = 0; i < a.amps().size(); ++i) out.segment(i * n, n) = a.amps()(i) * b.amps();
  return StateVector(std::move(out));
}

inline Operator tensor(const Operator& a, const Operator& b) {
  const auto n = b.matrix().rows();
  const auto m = a.matrix().rows();
  Eigen::MatrixXcd out(m * n, m * n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) out.block(i * n, j * n, n, n) = a.matrix()(i, j) * b.matrix();
  return Operator(std::move(out));
}

/// Reduced density operator on factor `keep` of a composite with factor
/// dimensions `dims`. The input must be Hermitian.
inline Operator partial_trace(const Operator& rho, std::size_t keep, std::span<const std::size_t> dims) {
  if (dims.empty() || keep >= dims.size()) throw InvalidArgument("partial_trace: keep index out of range");
  const std::size_t total = std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  if (total != rho.dim()) throw DimensionMismatch("partial_trace", total, rho.dim());
  if (!rho.is_hermitian()) throw InvalidArgument("partial_trace: operator is not Hermitian");

  // Split every composite index as (outer, kept, inner).
  std::size_t inner_dim = 1;
  for (std::size_t f = keep + 1; f < dims.size(); ++f) inner_dim *= dims[f];
  const std::size_t kept = dims[keep];
  const std::size_t outer_dim = total / (kept * inner_dim);

  const auto d = static_cast<Eigen::Index>(kept);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  const auto& m = rho.matrix();
  for (std::size_t o = 0; o < outer_dim; ++o)
    for (std::size_t in = 0; in < inner_dim; ++in)
      for (std::size_t r = 0; r < kept; ++r)
        for (std::size_t c = 0; c < kept; ++c) {
          const auto row = static_cast<Eigen::Index>((o * kept + r) * inner_dim + in);
          const auto col = static_cast<Eigen::Index>((o * kept + c) * inner_dim + in);
          out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += m(row, col);
        }
  return Operator(std::move(out));
}

inline Operator partial_trace(const Operator& rho, std::size_t keep, std::initializer_list<std::size_t> dims) {
  return partial_trace(rho, keep, std::span<const std::size_t>(dims.begin(), dims.size()));
}

// Haar-uniform pure state: normalized circular complex Gaussian vector.
inline StateVector random_state(std::size_t dim, Rng& rng) {
  if (dim == 0) throw InvalidArgument("random_state: dim must be >= 1");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = rng.complex_normal();
  return StateVector(v / v.norm());
}

/// Haar-uniform unitary.
///
/// Columns of a complex Gaussian matrix are orthonormalized by modified
/// Gram-Schmidt with one re-orthogonalization pass. Gram-Schmidt leaves the
/// implied R factor with a positive real diagonal, which is the phase
/// convention that makes Q Haar distributed.
inline Unitary random_unitary(std::size_t dim, Rng& rng) {
  if (dim == 0) throw InvalidArgument("random_unitary: dim must be >= 1");
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXcd q(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) q(i, j) = rng.complex_normal();

  for (Eigen::Index j = 0; j < d; ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    q.col(j) /= q.col(j).norm();
  }
  return Unitary(Operator(std::move(q)));
}

inline Unitary pauli_x() {
  Eigen::MatrixXcd m(2, 2);
  m << 0, 1, 1, 0;
  return Unitary(std::move(m));
}

inline Unitary pauli_z() {
  Eigen::MatrixXcd m(2, 2);
  m << 1, 0, 0, -1;
  return Unitary(std::move(m));
}

inline Unitary hadamard() {
  Eigen::MatrixXcd m(2, 2);
  m << 1, 1, 1, -1;
  return Unitary(m / std::sqrt(2.0));
}

}  // namespace tsv
