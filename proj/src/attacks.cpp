#include "qkdlab/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qkdlab/parallel.hpp"
#include "qkdlab/rng.hpp"

namespace qkd {

bool feasible(const AttackParams& p) {
  if (!(p.e >= 0.0 && p.e <= 0.5)) return false;
  if (!(p.delta >= -0.5)) return false;
  return p.delta <= 2.0 * p.e - 0.5;
}

GramTable gram_table_of(const AttackParams& p) {
  return GramTable{1.0 - p.e, 1.0 - p.e, p.e, p.e, 0.5 - p.e - p.delta, 0.5 - p.e + p.delta};
}

GramTable ProbeGeometry::gram_table() const {
  return GramTable{psi[0].norm2(), psi[3].norm2(), psi[1].norm2(), psi[2].norm2(),
                   dot(psi[0], psi[3]).real(), dot(psi[1], psi[2]).real()};
}

Operator ProbeGeometry::full_gram() const {
  static constexpr int order[4] = {0, 3, 1, 2};  // uu, ubar_ubar, u_ubar, ubar_u
  Operator g(4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      g.at(r, c) = dot(psi[static_cast<std::size_t>(order[r])],
                       psi[static_cast<std::size_t>(order[c])]);
  return g;
}

double ProbeGeometry::qber() const { return 0.5 * (psi[1].norm2() + psi[2].norm2()); }

double ProbeGeometry::delta() const {
  return 0.5 * (dot(psi[1], psi[2]).real() - dot(psi[0], psi[3]).real());
}

double qber_of_attack(const ProbeGeometry& g) { return g.qber(); }

namespace {

double clamped_cos(double num, double den, const char* what) {
  if (den < 1e-300) return 1.0;  // caller handles the zero-norm pair separately
  const double c = num / den;
  if (std::abs(c) > 1.0 + 1e-12)
    throw std::domain_error(std::string("realize_probe_geometry: |cos| > 1 for ") + what +
                            " (violated Schwartz bound)");
  return std::clamp(c, -1.0, 1.0);
}

Ket pad4(const Ket& k) {
  Ket out(4);
  for (int i = 0; i < k.dim() && i < 4; ++i) out[i] = k[i];
  return out;
}

}  // namespace

ProbeGeometry realize_probe_geometry(const AttackParams& p) {
  if (!feasible(p)) {
    std::string why;
    if (!(p.e >= 0.0 && p.e <= 0.5))
      why = "e outside [0, 1/2]";
    else if (!(p.delta >= -0.5))
      why = "delta < -1/2, i.e. |1/2-e+delta| > e";
    else
      why = "delta > 1/2-|1-2e|, i.e. |1/2-e+delta| > e";
    throw std::invalid_argument("realize_probe_geometry: infeasible (e=" + std::to_string(p.e) +
                                ", delta=" + std::to_string(p.delta) + "): " + why);
  }
  const double e = p.e;
  const double sc = std::sqrt(1.0 - e);  // correct-pair norm
  const double se = std::sqrt(e);

  ProbeGeometry g;
  for (Ket& k : g.psi) k = Ket(4);

  g.psi[0][0] = sc;  // psi_uu
  const double ct = clamped_cos(0.5 - e - p.delta, 1.0 - e, "correct pair");
  g.psi[3][0] = sc * ct;  // psi_ubar_ubar
  g.psi[3][1] = sc * std::sqrt(std::max(0.0, 1.0 - ct * ct));

  if (e > 0.0) {
    g.psi[1][2] = se;  // psi_u_ubar
    const double cf = clamped_cos(0.5 - e + p.delta, e, "error pair");
    g.psi[2][2] = se * cf;  // psi_ubar_u
    g.psi[2][3] = se * std::sqrt(std::max(0.0, 1.0 - cf * cf));
  }
  // e == 0: both error vectors are the zero ket.
  return g;
}

AttackExecutor executor_from_unitary(const Operator& u, const Ket& w) {
  const int d = w.dim();
  if (u.dim() != 2 * d)
    throw std::invalid_argument("executor_from_unitary: u must act on signal (x) probe");
  if (!is_unitary(u, 1e-10)) throw std::invalid_argument("executor_from_unitary: u not unitary");

  AttackExecutor ex;
  for (int m = 0; m < 2; ++m) {
    Ket em(2);
    em[m] = 1.0;
    const Ket out = u * tensor(em, w);
    for (int n = 0; n < 2; ++n) {
      Ket phi(d);
      for (int i = 0; i < d; ++i) phi[i] = out[n * d + i];
      ex.phi[static_cast<std::size_t>(m * 2 + n)] = phi;
    }
  }
  return ex;
}

AttackExecutor executor_from_geometry(const ProbeGeometry& g) {
  const double c = std::cos(kSignalAngle), s = std::sin(kSignalAngle);
  const double c2 = c * c, s2 = s * s, sc = s * c;
  const Ket& puu = g.psi[0];
  const Ket& pue = g.psi[1];  // psi_u_ubar
  const Ket& peu = g.psi[2];  // psi_ubar_u
  const Ket& pee = g.psi[3];  // psi_ubar_ubar

  AttackExecutor ex;
  ex.phi[0] = cplx(c2) * puu + cplx(s2) * pee - cplx(sc) * (pue + peu);        // Phi00
  ex.phi[1] = cplx(c2) * pue - cplx(s2) * peu + cplx(sc) * (puu - pee);        // Phi01
  ex.phi[2] = cplx(c2) * peu - cplx(s2) * pue + cplx(sc) * (puu - pee);        // Phi10
  ex.phi[3] = cplx(s2) * puu + cplx(c2) * pee + cplx(sc) * (pue + peu);        // Phi11
  return ex;
}

SbAttack sb_attack(double e) {
  if (!(e >= 0.0 && e <= 0.5)) throw std::invalid_argument("sb_attack: e outside [0, 1/2]");
  const double s = std::sqrt(2.0 * e), c = std::sqrt(1.0 - 2.0 * e);

  Operator u(4);  // controlled-NOT in the computational basis
  u.at(0, 0) = 1.0;
  u.at(1, 1) = 1.0;
  u.at(2, 3) = 1.0;
  u.at(3, 2) = 1.0;

  Ket w(2);
  const double r = std::sqrt(0.5);
  w[0] = r * (c + s);
  w[1] = r * (c - s);

  const AttackExecutor ex = executor_from_unitary(u, w);
  ProbeGeometry g;
  for (int sent = 0; sent < 2; ++sent)
    for (int bob = 0; bob < 2; ++bob)
      g.psi[static_cast<std::size_t>(sent * 2 + bob)] = pad4(ex.psi(Basis::U, sent, bob));
  return SbAttack{u, w, g};
}

double XCoefficients::sum_sq() const {
  return x0 * x0 + x1 * x1 + x2 * x2 + x3 * x3 + x5 * x5 + x6 * x6;
}
double XCoefficients::unitarity_cross() const { return x1 * x6 + x2 * x5; }
double XCoefficients::symmetry_cross() const { return x1 * x5 + x2 * x6; }

XCoefficients x_from_angles(const AngleParams& a) {
  const double sl = std::sin(a.lambda), cl = std::cos(a.lambda);
  const double sm = std::sin(a.mu), cm = std::cos(a.mu);
  const double sp = std::sin(a.phi), cp = std::cos(a.phi);
  const double st = std::sin(a.theta), ct = std::cos(a.theta);
  return XCoefficients{
      sl * cm,        // X0
      cl * ct * cp,   // X1
      cl * ct * sp,   // X2
      sl * sm,        // X3
      cl * st * cp,   // X5
      -cl * st * sp,  // X6 (the sign keeps X1*X6 + X2*X5 = 0 for all angles)
  };
}

AngleTargets angle_targets(const XCoefficients& x) {
  const double core = 2.0 * (x.x0 * x.x3 + x.x1 * x.x2);
  const double cross = 2.0 * x.x5 * x.x6;
  return AngleTargets{core + cross, core - cross, 2.0 * (x.x1 * x.x5 + x.x2 * x.x6),
                      1.0 - 2.0 * (x.x5 * x.x5 + x.x6 * x.x6)};
}

AngleAttack attack_from_angles(const AngleParams& a) {
  const XCoefficients x = x_from_angles(a);

  AttackExecutor ex;
  ex.phi[0] = Ket{x.x0, x.x1, x.x2, x.x3};  // Phi00
  ex.phi[1] = Ket{0.0, x.x5, x.x6, 0.0};    // Phi01
  ex.phi[2] = Ket{0.0, x.x6, x.x5, 0.0};    // Phi10
  ex.phi[3] = Ket{x.x3, x.x2, x.x1, x.x0};  // Phi11

  ProbeGeometry g;
  for (int sent = 0; sent < 2; ++sent)
    for (int bob = 0; bob < 2; ++bob)
      g.psi[static_cast<std::size_t>(sent * 2 + bob)] = ex.psi(Basis::U, sent, bob);

  return AngleAttack{a, x, ex, g, g.params()};
}

namespace {

AngleParams to_params(const std::array<double, 4>& v) { return {v[0], v[1], v[2], v[3]}; }

std::array<double, 4> residual_at(const std::array<double, 4>& v, double e) {
  const AngleTargets t = angle_targets(x_from_angles(to_params(v)));
  const double tgt = 1.0 - 2.0 * e;
  return {t.a - tgt, t.d - tgt, t.c, t.b - tgt * tgt};
}

double inf_norm(const std::array<double, 4>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Partial-pivot Gaussian elimination on a 4x4 system; returns false on a
// (near-)singular pivot.
bool solve4(std::array<std::array<double, 4>, 4> m, std::array<double, 4> rhs,
            std::array<double, 4>& out) {
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (std::abs(m[piv][col]) < 1e-13) return false;
    std::swap(m[col], m[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (int r = col + 1; r < 4; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  for (int r = 3; r >= 0; --r) {
    double s = rhs[r];
    for (int c = r + 1; c < 4; ++c) s -= m[r][c] * out[c];
    out[r] = s / m[r][r];
  }
  return true;
}

}  // namespace

AngleSolution solve_optimal_angles(double e) {
  if (!(e > 0.0 && e < 0.5))
    throw std::invalid_argument("solve_optimal_angles: e must be in (0, 1/2)");

  // Start 0 is the closed-form solution of the target system; the rest cover
  // the angle box in case a caller perturbs the targets.
  const double half_pi = 1.5707963267948966;
  const std::array<std::array<double, 4>, 8> starts = {{
      {0.5 * std::acos(2.0 * e - 1.0), 0.5 * std::asin(1.0 - 2.0 * e),
       -0.5 * std::asin(1.0 - 2.0 * e), half_pi},
      {0.4, 0.3, -0.2, 1.2},
      {1.0, 0.8, 0.5, 2.0},
      {0.7, -0.6, 1.1, 0.9},
      {1.3, 0.2, -1.0, 2.3},
      {0.2, 1.4, 0.8, 1.7},
      {0.9, -1.1, -0.4, 0.6},
      {1.5, 0.5, 0.25, 2.8},
  }};

  for (int si = 0; si < static_cast<int>(starts.size()); ++si) {
    std::array<double, 4> x = starts[static_cast<std::size_t>(si)];
    std::array<double, 4> f = residual_at(x, e);
    double fn = inf_norm(f);
    int it = 0;
    for (; it < 200 && fn > 1e-10; ++it) {
      // Numeric Jacobian, central differences.
      std::array<std::array<double, 4>, 4> jac{};
      const double h = 1e-7;
      for (int c = 0; c < 4; ++c) {
        std::array<double, 4> xp = x, xm = x;
        xp[static_cast<std::size_t>(c)] += h;
        xm[static_cast<std::size_t>(c)] -= h;
        const std::array<double, 4> fp = residual_at(xp, e);
        const std::array<double, 4> fm = residual_at(xm, e);
        for (int r = 0; r < 4; ++r) jac[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
            (fp[static_cast<std::size_t>(r)] - fm[static_cast<std::size_t>(r)]) / (2.0 * h);
      }
      std::array<double, 4> step{};
      std::array<double, 4> rhs = {-f[0], -f[1], -f[2], -f[3]};
      if (!solve4(jac, rhs, step)) break;

      double lam = 1.0;
      bool accepted = false;
      for (int bt = 0; bt < 30; ++bt, lam *= 0.5) {
        std::array<double, 4> trial;
        for (int i = 0; i < 4; ++i)
          trial[static_cast<std::size_t>(i)] =
              x[static_cast<std::size_t>(i)] + lam * step[static_cast<std::size_t>(i)];
        const std::array<double, 4> ft = residual_at(trial, e);
        if (inf_norm(ft) <= (1.0 - 1e-4 * lam) * fn) {
          x = trial;
          f = ft;
          fn = inf_norm(f);
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
    if (fn <= 1e-10) {
      const AngleParams angles = to_params(x);
      return AngleSolution{angles, angle_targets(x_from_angles(angles)), fn, it, si};
    }
  }
  throw std::runtime_error("solve_optimal_angles: no Newton start converged at e=" +
                           std::to_string(e));
}

namespace {

// Vector-level representatives of the eight ray symmetries of the signal set:
// rotations by k*pi/4 and their compositions with the basis swap. Products of
// representatives close only up to sign, which conjugation cancels.
std::array<Operator, 8> dihedral_representatives() {
  const double r = std::sqrt(0.5);
  Operator rot(2);
  rot.at(0, 0) = r;
  rot.at(0, 1) = -r;
  rot.at(1, 0) = r;
  rot.at(1, 1) = r;
  Operator swap(2);
  swap.at(0, 1) = 1.0;
  swap.at(1, 0) = 1.0;

  std::array<Operator, 8> reps;
  reps[0] = Operator::identity(2);
  for (int k = 1; k < 4; ++k) reps[static_cast<std::size_t>(k)] = rot * reps[static_cast<std::size_t>(k - 1)];
  for (int k = 0; k < 4; ++k) reps[static_cast<std::size_t>(4 + k)] = reps[static_cast<std::size_t>(k)] * swap;
  return reps;
}

// pi_g(l) = m with R_l R_g = +/- R_m.
std::array<std::array<int, 8>, 8> multiplication_table(const std::array<Operator, 8>& reps) {
  std::array<std::array<int, 8>, 8> table{};
  for (int g = 0; g < 8; ++g)
    for (int l = 0; l < 8; ++l) {
      const Operator prod = reps[static_cast<std::size_t>(l)] * reps[static_cast<std::size_t>(g)];
      int found = -1;
      for (int m = 0; m < 8 && found < 0; ++m) {
        if (max_abs_diff(prod, reps[static_cast<std::size_t>(m)]) < 1e-9 ||
            max_abs_diff(prod, cplx(-1.0) * reps[static_cast<std::size_t>(m)]) < 1e-9)
          found = m;
      }
      if (found < 0) throw std::logic_error("dihedral table: product fell outside the orbit");
      table[static_cast<std::size_t>(g)][static_cast<std::size_t>(l)] = found;
    }
  return table;
}

}  // namespace

SymmetrizationReport symmetrize_and_verify(const Operator& u, const Ket& w, double tol) {
  const int d = w.dim();
  if (u.dim() != 2 * d)
    throw std::invalid_argument("symmetrize_and_verify: u must act on signal (x) probe");
  if (!is_unitary(u, 1e-10)) throw std::invalid_argument("symmetrize_and_verify: u not unitary");
  if (std::abs(w.norm2() - 1.0) > 1e-10)
    throw std::invalid_argument("symmetrize_and_verify: w not normalized");

  const std::array<Operator, 8> reps = dihedral_representatives();
  const std::array<std::array<int, 8>, 8> table = multiplication_table(reps);
  const Operator id_probe = Operator::identity(d);

  // Orbit elements U_g = Q_g^+ U Q_g with Q_g = R_g (x) I.
  std::array<Operator, 8> orbit;
  for (int g = 0; g < 8; ++g) {
    const Operator q = tensor(reps[static_cast<std::size_t>(g)], id_probe);
    orbit[static_cast<std::size_t>(g)] = q.adjoint() * u * q;
  }

  // Utilde = sum_g U_g (x) |g><g| on signal (x) probe (x) pointer.
  const int joint_dim = 2 * d;
  const int full = joint_dim * 8;
  Operator util(full);
  for (int g = 0; g < 8; ++g)
    for (int j = 0; j < joint_dim; ++j)
      for (int k = 0; k < joint_dim; ++k)
        util.at(j * 8 + g, k * 8 + g) = orbit[static_cast<std::size_t>(g)].at(j, k);

  // Pointer-register permutations X_g |l> = |pi_g(l)>.
  std::array<Operator, 8> xg;
  for (int g = 0; g < 8; ++g) {
    Operator x(8);
    for (int l = 0; l < 8; ++l)
      x.at(table[static_cast<std::size_t>(g)][static_cast<std::size_t>(l)], l) = 1.0;
    xg[static_cast<std::size_t>(g)] = x;
  }

  SymmetrizationReport rep{};
  rep.unitarity_residual = max_abs_diff(util.adjoint() * util, Operator::identity(full));

  // Invariance of the averaged unitary and of Eve's initial state.
  Ket h(8);
  for (int g = 0; g < 8; ++g) h[g] = std::sqrt(0.125);
  const Operator omega = tensor(outer(w, w), outer(h, h));
  for (int g = 0; g < 8; ++g) {
    const Operator rt = tensor(tensor(reps[static_cast<std::size_t>(g)].adjoint(), id_probe),
                               xg[static_cast<std::size_t>(g)]);
    rep.unitary_residual =
        std::max(rep.unitary_residual, max_abs_diff(rt * util * rt.adjoint(), util));
    const Operator rhat = tensor(id_probe, xg[static_cast<std::size_t>(g)]);
    rep.omega_residual =
        std::max(rep.omega_residual, max_abs_diff(rhat * omega * rhat.adjoint(), omega));
  }

  // Probe images of the averaged attack and their product constraints.
  AttackExecutor ex;
  const Ket wh = tensor(w, h);
  for (int m = 0; m < 2; ++m) {
    Ket em(2);
    em[m] = 1.0;
    const Ket out = util * tensor(em, wh);
    for (int n = 0; n < 2; ++n) {
      Ket phi(d * 8);
      for (int i = 0; i < d * 8; ++i) phi[i] = out[n * d * 8 + i];
      ex.phi[static_cast<std::size_t>(m * 2 + n)] = phi;
    }
  }
  rep.phi_orth_residual = std::abs(dot(ex.phi[0], ex.phi[1]));
  rep.phi_sum_residual = std::abs(dot(ex.phi[1], ex.phi[2]) + dot(ex.phi[0], ex.phi[3]) -
                                  cplx(1.0 - 2.0 * ex.phi[1].norm2()));

  const Ket p00 = ex.psi(Basis::U, 0, 0), p01 = ex.psi(Basis::U, 0, 1);
  const Ket p10 = ex.psi(Basis::U, 1, 0), p11 = ex.psi(Basis::U, 1, 1);
  rep.averaged.e = 0.5 * (p01.norm2() + p10.norm2());
  rep.averaged.delta = 0.5 * (dot(p01, p10).real() - dot(p00, p11).real());

  rep.pass = rep.unitary_residual <= tol && rep.omega_residual <= tol &&
             rep.phi_orth_residual <= tol && rep.phi_sum_residual <= tol &&
             rep.unitarity_residual <= tol;
  return rep;
}

SymmetrizationTrials symmetrize_random_trials(int trials, std::uint64_t seed, double tol) {
  if (trials < 1) throw std::invalid_argument("symmetrize_random_trials: trials must be >= 1");
  SymmetrizationTrials out;
  out.trials = trials;
  out.reports.resize(static_cast<std::size_t>(trials));
  parallel_for(trials, ExecPolicy::Parallel, [&](std::int64_t i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    const Operator u = random_unitary(8, rng);
    const Ket w = random_ket(4, rng);
    out.reports[static_cast<std::size_t>(i)] = symmetrize_and_verify(u, w, tol);
  });
  out.max_residual = 0.0;
  out.all_pass = true;
  for (const SymmetrizationReport& r : out.reports) {
    out.max_residual = std::max({out.max_residual, r.unitary_residual, r.omega_residual,
                                 r.phi_orth_residual, r.phi_sum_residual, r.unitarity_residual});
    out.all_pass = out.all_pass && r.pass;
  }
  return out;
}

}  // namespace qkd
