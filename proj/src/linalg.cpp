#include "qkdlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qkd {

double Ket::norm2() const {
  double s = 0;
  for (const cplx& a : amp_) s += std::norm(a);
  return s;
}

double Ket::norm() const { return std::sqrt(norm2()); }

Ket Ket::normalized() const {
  const double n = norm();
  if (n < 1e-150) throw std::invalid_argument("Ket::normalized: zero vector");
  Ket out = *this;
  out *= cplx(1.0 / n, 0.0);
  return out;
}

Ket& Ket::operator+=(const Ket& o) {
  for (int i = 0; i < dim(); ++i) amp_[static_cast<std::size_t>(i)] += o[i];
  return *this;
}

Ket& Ket::operator-=(const Ket& o) {
  for (int i = 0; i < dim(); ++i) amp_[static_cast<std::size_t>(i)] -= o[i];
  return *this;
}

Ket& Ket::operator*=(cplx s) {
  for (cplx& a : amp_) a *= s;
  return *this;
}

Ket operator+(Ket a, const Ket& b) { return a += b; }
Ket operator-(Ket a, const Ket& b) { return a -= b; }
Ket operator*(cplx s, Ket a) { return a *= s; }

cplx dot(const Ket& a, const Ket& b) {
  cplx s = 0;
  for (int i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

Ket tensor(const Ket& a, const Ket& b) {
  Ket out(a.dim() * b.dim());
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < b.dim(); ++j) out[i * b.dim() + j] = a[i] * b[j];
  return out;
}

Operator Operator::identity(int dim) {
  Operator out(dim);
  for (int i = 0; i < dim; ++i) out.at(i, i) = 1.0;
  return out;
}

Operator Operator::adjoint() const {
  Operator out(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) out.at(i, j) = std::conj(at(j, i));
  return out;
}

cplx Operator::trace() const {
  cplx s = 0;
  for (int i = 0; i < dim_; ++i) s += at(i, i);
  return s;
}

Operator& Operator::operator+=(const Operator& o) {
  for (std::size_t i = 0; i < m_.size(); ++i) m_[i] += o.m_[i];
  return *this;
}

Operator& Operator::operator-=(const Operator& o) {
  for (std::size_t i = 0; i < m_.size(); ++i) m_[i] -= o.m_[i];
  return *this;
}

Operator& Operator::operator*=(cplx s) {
  for (cplx& a : m_) a *= s;
  return *this;
}

Operator operator+(Operator a, const Operator& b) { return a += b; }
Operator operator-(Operator a, const Operator& b) { return a -= b; }
Operator operator*(cplx s, Operator a) { return a *= s; }

Operator operator*(const Operator& a, const Operator& b) {
  const int d = a.dim();
  Operator out(d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      const cplx aik = a.at(i, k);
      if (aik == cplx(0.0)) continue;
      for (int j = 0; j < d; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

Ket operator*(const Operator& a, const Ket& x) {
  const int d = a.dim();
  Ket out(d);
  for (int i = 0; i < d; ++i) {
    cplx s = 0;
    for (int j = 0; j < d; ++j) s += a.at(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

Operator tensor(const Operator& a, const Operator& b) {
  const int da = a.dim(), db = b.dim();
  Operator out(da * db);
  for (int i = 0; i < da; ++i)
    for (int j = 0; j < da; ++j) {
      const cplx aij = a.at(i, j);
      if (aij == cplx(0.0)) continue;
      for (int k = 0; k < db; ++k)
        for (int l = 0; l < db; ++l) out.at(i * db + k, j * db + l) = aij * b.at(k, l);
    }
  return out;
}

Operator outer(const Ket& a, const Ket& b) {
  Operator out(a.dim());
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < b.dim(); ++j) out.at(i, j) = a[i] * std::conj(b[j]);
  return out;
}

double max_abs(const Operator& a) {
  double m = 0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a.at(i, j)));
  return m;
}

double max_abs_diff(const Operator& a, const Operator& b) {
  double m = 0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a.at(i, j) - b.at(i, j)));
  return m;
}

bool is_hermitian(const Operator& a, double tol) {
  for (int i = 0; i < a.dim(); ++i)
    for (int j = i; j < a.dim(); ++j)
      if (std::abs(a.at(i, j) - std::conj(a.at(j, i))) > tol) return false;
  return true;
}

bool is_unitary(const Operator& a, double tol) {
  return max_abs_diff(a.adjoint() * a, Operator::identity(a.dim())) <= tol;
}

namespace {

double off_diag_norm(const Operator& a) {
  double s = 0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j)
      if (i != j) s += std::norm(a.at(i, j));
  return std::sqrt(s);
}

// Unitary zeroing A[p][q] exactly: columns are the eigenvectors of the 2x2
// Hermitian block [[app, apq], [conj(apq), aqq]].
struct BlockRotation {
  cplx jpp, jpq, jqp, jqq;  // 2x2 unitary in the (p,q) plane
};

BlockRotation block_eigenvectors(double app, double aqq, cplx apq) {
  const double half = 0.5 * (app + aqq);
  const double diff = 0.5 * (app - aqq);
  const double r = std::hypot(diff, std::abs(apq));
  const double lam_hi = half + r;
  // Two algebraically equivalent eigenvector expressions; take the better
  // conditioned one.
  cplx v0, v1;
  if (std::abs(lam_hi - app) >= std::abs(lam_hi - aqq)) {
    v0 = apq;
    v1 = cplx(lam_hi - app, 0.0);
  } else {
    v0 = cplx(lam_hi - aqq, 0.0);
    v1 = std::conj(apq);
  }
  const double n = std::sqrt(std::norm(v0) + std::norm(v1));
  v0 /= n;
  v1 /= n;
  // Second column: the orthogonal complement, automatically the other
  // eigenvector of a 2x2 Hermitian block.
  return BlockRotation{v0, -std::conj(v1), v1, std::conj(v0)};
}

}  // namespace

EigResult hermitian_eig(const Operator& a_in) {
  const int d = a_in.dim();
  if (d == 0) throw std::invalid_argument("hermitian_eig: empty matrix");
  if (!is_hermitian(a_in, 1e-10 * std::max(1.0, max_abs(a_in))))
    throw std::invalid_argument("hermitian_eig: matrix is not Hermitian");

  Operator a = a_in;
  // Work on the exactly Hermitian part so rotations stay unitary.
  for (int i = 0; i < d; ++i) {
    a.at(i, i) = cplx(a.at(i, i).real(), 0.0);
    for (int j = i + 1; j < d; ++j) {
      const cplx m = 0.5 * (a.at(i, j) + std::conj(a.at(j, i)));
      a.at(i, j) = m;
      a.at(j, i) = std::conj(m);
    }
  }

  Operator v = Operator::identity(d);
  const double scale = std::max(1.0, max_abs(a));
  const double tol = 1e-14 * scale;

  for (int sweep = 0; sweep < 100; ++sweep) {
    if (off_diag_norm(a) <= tol) break;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        const cplx apq = a.at(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const BlockRotation j =
            block_eigenvectors(a.at(p, p).real(), a.at(q, q).real(), apq);
        // A <- J^dagger A J, touching only rows/columns p and q.
        for (int k = 0; k < d; ++k) {
          const cplx akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = akp * j.jpp + akq * j.jqp;
          a.at(k, q) = akp * j.jpq + akq * j.jqq;
        }
        for (int k = 0; k < d; ++k) {
          const cplx apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = std::conj(j.jpp) * apk + std::conj(j.jqp) * aqk;
          a.at(q, k) = std::conj(j.jpq) * apk + std::conj(j.jqq) * aqk;
        }
        a.at(p, q) = 0.0;
        a.at(q, p) = 0.0;
        a.at(p, p) = cplx(a.at(p, p).real(), 0.0);
        a.at(q, q) = cplx(a.at(q, q).real(), 0.0);
        for (int k = 0; k < d; ++k) {
          const cplx vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = vkp * j.jpp + vkq * j.jqp;
          v.at(k, q) = vkp * j.jpq + vkq * j.jqq;
        }
      }
  }

  EigResult out{std::vector<double>(static_cast<std::size_t>(d)), Operator(d)};
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return a.at(x, x).real() < a.at(y, y).real(); });
  for (int c = 0; c < d; ++c) {
    out.values[static_cast<std::size_t>(c)] = a.at(order[static_cast<std::size_t>(c)],
                                                   order[static_cast<std::size_t>(c)])
                                                  .real();
    for (int r = 0; r < d; ++r)
      out.vectors.at(r, c) = v.at(r, order[static_cast<std::size_t>(c)]);
  }
  return out;
}

Operator hermitian_sqrt(const Operator& a, double clamp_tol) {
  EigResult eig = hermitian_eig(a);
  const int d = a.dim();
  Operator out(d);
  for (int k = 0; k < d; ++k) {
    double lam = eig.values[static_cast<std::size_t>(k)];
    if (lam < -clamp_tol)
      throw std::domain_error("hermitian_sqrt: eigenvalue " + std::to_string(lam) +
                              " below -" + std::to_string(clamp_tol));
    // Two-sided clamp: sqrt amplifies roundoff-sized eigenvalues of an exact
    // null space to sqrt(eps)-sized junk, so the whole window collapses to 0.
    lam = lam <= clamp_tol ? 0.0 : lam;
    const double s = std::sqrt(lam);
    for (int i = 0; i < d; ++i) {
      const cplx vs = eig.vectors.at(i, k) * s;
      for (int j = 0; j < d; ++j) out.at(i, j) += vs * std::conj(eig.vectors.at(j, k));
    }
  }
  return out;
}

double pure_fidelity(const Ket& a, const Ket& b) {
  const double na2 = a.norm2(), nb2 = b.norm2();
  if (na2 < 1e-300 || nb2 < 1e-300)
    throw std::invalid_argument("pure_fidelity: zero vector");
  return std::norm(dot(a, b)) / (na2 * nb2);
}

DensityMatrix DensityMatrix::make(Operator op, double declared_trace, double tol) {
  if (!is_hermitian(op, tol)) throw std::invalid_argument("DensityMatrix: not Hermitian");
  const double tr = op.trace().real();
  if (std::abs(tr - declared_trace) > tol * std::max(1.0, std::abs(declared_trace)))
    throw std::invalid_argument("DensityMatrix: trace " + std::to_string(tr) +
                                " != declared " + std::to_string(declared_trace));
  EigResult eig = hermitian_eig(op);
  if (!eig.values.empty() && eig.values.front() < -tol)
    throw std::invalid_argument("DensityMatrix: negative eigenvalue " +
                                std::to_string(eig.values.front()));
  return DensityMatrix(std::move(op), declared_trace);
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& dims, int keep) {
  const int nf = static_cast<int>(dims.size());
  if (keep < 0 || keep >= nf) throw std::invalid_argument("partial_trace: bad keep index");
  long long prod = 1;
  for (int dv : dims) prod *= dv;
  if (prod != rho.dim()) throw std::invalid_argument("partial_trace: dims do not factor rho");

  std::vector<long long> stride(static_cast<std::size_t>(nf), 1);
  for (int f = nf - 2; f >= 0; --f)
    stride[static_cast<std::size_t>(f)] =
        stride[static_cast<std::size_t>(f + 1)] * dims[static_cast<std::size_t>(f + 1)];

  long long rest = 1;
  for (int f = 0; f < nf; ++f)
    if (f != keep) rest *= dims[static_cast<std::size_t>(f)];

  const int dk = dims[static_cast<std::size_t>(keep)];
  Operator out(dk);
  for (long long m = 0; m < rest; ++m) {
    // Decompose the rest-index into the non-kept factors.
    long long base = 0, mm = m;
    for (int f = nf - 1; f >= 0; --f) {
      if (f == keep) continue;
      const int df = dims[static_cast<std::size_t>(f)];
      base += (mm % df) * stride[static_cast<std::size_t>(f)];
      mm /= df;
    }
    for (int r = 0; r < dk; ++r)
      for (int c = 0; c < dk; ++c)
        out.at(r, c) += rho.op().at(static_cast<int>(base + r * stride[static_cast<std::size_t>(keep)]),
                                    static_cast<int>(base + c * stride[static_cast<std::size_t>(keep)]));
  }
  return DensityMatrix::make(std::move(out), rho.declared_trace(), 1e-10);
}

double mixed_fidelity(const DensityMatrix& r0, const DensityMatrix& r1) {
  const Operator s = hermitian_sqrt(r0.op());
  Operator m = s * r1.op() * s;
  // Symmetrize away the roundoff before the second square root.
  Operator mh = 0.5 * (m + m.adjoint());
  const Operator r = hermitian_sqrt(mh);
  const double t = r.trace().real();
  return t * t;
}

Operator random_unitary(int dim, CounterRng& rng) {
  Operator z(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) z.at(i, j) = cplx(rng.next_normal(), rng.next_normal());
  // Modified Gram-Schmidt, two passes for orthogonality at machine precision.
  // Diagonal of R stays positive, which is what makes the result Haar.
  Operator q(dim);
  for (int j = 0; j < dim; ++j) {
    Ket v(dim);
    for (int i = 0; i < dim; ++i) v[i] = z.at(i, j);
    for (int pass = 0; pass < 2; ++pass)
      for (int k = 0; k < j; ++k) {
        cplx proj = 0;
        for (int i = 0; i < dim; ++i) proj += std::conj(q.at(i, k)) * v[i];
        for (int i = 0; i < dim; ++i) v[i] -= proj * q.at(i, k);
      }
    const double n = v.norm();
    for (int i = 0; i < dim; ++i) q.at(i, j) = v[i] / n;
  }
  return q;
}

Ket random_ket(int dim, CounterRng& rng) {
  Ket v(dim);
  for (int i = 0; i < dim; ++i) v[i] = cplx(rng.next_normal(), rng.next_normal());
  return v.normalized();
}

}  // namespace qkd
