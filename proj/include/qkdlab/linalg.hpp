#pragma once

#include <complex>
#include <initializer_list>
#include <vector>

#include "qkdlab/rng.hpp"

namespace qkd {

using cplx = std::complex<double>;

// Dense complex vector. Dimensions in this project never exceed 64, so the
// representation is deliberately plain.
class Ket {
 public:
  Ket() = default;
  explicit Ket(int dim) : amp_(static_cast<std::size_t>(dim)) {}
  Ket(std::initializer_list<cplx> init) : amp_(init) {}

  int dim() const { return static_cast<int>(amp_.size()); }
  cplx& operator[](int i) { return amp_[static_cast<std::size_t>(i)]; }
  const cplx& operator[](int i) const { return amp_[static_cast<std::size_t>(i)]; }

  double norm2() const;  // <x|x>
  double norm() const;
  Ket normalized() const;  // throws std::invalid_argument on (near-)zero vector

  Ket& operator+=(const Ket& o);
  Ket& operator-=(const Ket& o);
  Ket& operator*=(cplx s);

 private:
  std::vector<cplx> amp_;
};

Ket operator+(Ket a, const Ket& b);
Ket operator-(Ket a, const Ket& b);
Ket operator*(cplx s, Ket a);

// <a|b>, conjugate-linear in the left argument.
cplx dot(const Ket& a, const Ket& b);
Ket tensor(const Ket& a, const Ket& b);  // a is the slow (left) factor

// Dense square complex matrix, row-major.
class Operator {
 public:
  Operator() = default;
  explicit Operator(int dim) : dim_(dim), m_(static_cast<std::size_t>(dim) * dim) {}
  static Operator identity(int dim);

  int dim() const { return dim_; }
  cplx& at(int i, int j) { return m_[static_cast<std::size_t>(i) * dim_ + j]; }
  const cplx& at(int i, int j) const { return m_[static_cast<std::size_t>(i) * dim_ + j]; }

  Operator adjoint() const;
  cplx trace() const;

  Operator& operator+=(const Operator& o);
  Operator& operator-=(const Operator& o);
  Operator& operator*=(cplx s);

 private:
  int dim_ = 0;
  std::vector<cplx> m_;
};

Operator operator+(Operator a, const Operator& b);
Operator operator-(Operator a, const Operator& b);
Operator operator*(cplx s, Operator a);
Operator operator*(const Operator& a, const Operator& b);
Ket operator*(const Operator& a, const Ket& x);

Operator tensor(const Operator& a, const Operator& b);  // a is the slow factor
Operator outer(const Ket& a, const Ket& b);             // |a><b|

double max_abs(const Operator& a);
double max_abs_diff(const Operator& a, const Operator& b);
bool is_hermitian(const Operator& a, double tol);
bool is_unitary(const Operator& a, double tol);

// Eigendecomposition of a Hermitian matrix by cyclic Jacobi with exact 2x2
// block diagonalization per rotation. A = V diag(values) V^dagger, values
// ascending. Intended for the small dimensions used here (<= 64).
struct EigResult {
  std::vector<double> values;
  Operator vectors;  // columns are eigenvectors
};
EigResult hermitian_eig(const Operator& a);

// Positive-semidefinite square root. Eigenvalues with |lambda| <= clamp_tol
// are treated as an exact null space and clamped to zero (sqrt would blow
// roundoff up to sqrt(eps)); anything below -clamp_tol throws
// std::domain_error.
Operator hermitian_sqrt(const Operator& a, double clamp_tol = 1e-12);

// |<a|b>|^2 / (|a|^2 |b|^2). Throws std::invalid_argument on a zero vector;
// callers that need a fidelity-of-empty-branch convention handle it upstream.
double pure_fidelity(const Ket& a, const Ket& b);

// Validated density matrix: Hermitian within tol, eigenvalues >= -tol, trace
// within tol of the declared trace (sub-normalized states are legal).
class DensityMatrix {
 public:
  static DensityMatrix make(Operator op, double declared_trace = 1.0, double tol = 1e-12);

  int dim() const { return op_.dim(); }
  const Operator& op() const { return op_; }
  double declared_trace() const { return declared_trace_; }

 private:
  DensityMatrix(Operator op, double declared_trace)
      : op_(std::move(op)), declared_trace_(declared_trace) {}
  Operator op_;
  double declared_trace_;
};

// Trace out every tensor factor except dims[keep]. The first factor is the
// slowest index. Product of dims must equal rho.dim().
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& dims, int keep);

// Uhlmann fidelity Tr^2 sqrt(sqrt(r0) r1 sqrt(r0)) for trace-1 states.
double mixed_fidelity(const DensityMatrix& r0, const DensityMatrix& r1);

// Haar-distributed unitary: QR (modified Gram-Schmidt, positive diagonal) of
// a complex Ginibre matrix.
Operator random_unitary(int dim, CounterRng& rng);
Ket random_ket(int dim, CounterRng& rng);

}  // namespace qkd
