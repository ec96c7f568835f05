#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qkdlab/bb84.hpp"
#include "qkdlab/linalg.hpp"

namespace qkd {

// Disturbance / overlap-split coordinates of an individual entangling probe.
// e is the induced sifted-key error rate; delta splits the two relevant probe
// overlaps: <psi_uu|psi_ubar_ubar> = 1/2 - e - delta (correct branch) and
// <psi_u_ubar|psi_ubar_u> = 1/2 - e + delta (error branch).
struct AttackParams {
  double e;
  double delta;
};

// True iff the pair of overlap constraints |1/2-e-delta| <= 1-e and
// |1/2-e+delta| <= e holds, which for e in [0, 1/2] collapses to
// -1/2 <= delta <= 1/2 - |1-2e|. Written as delta <= 2e - 1/2 so the upper
// boundary matches the same floating-point expression callers use.
bool feasible(const AttackParams& p);

// The six probe inner products pinned by (e, delta); everything Eve can do
// depends on the geometry only through these.
struct GramTable {
  double n2_correct_u;     // |psi_uu|^2         = 1 - e
  double n2_correct_ubar;  // |psi_ubar_ubar|^2  = 1 - e
  double n2_error_u;       // |psi_u_ubar|^2     = e
  double n2_error_ubar;    // |psi_ubar_u|^2     = e
  double ip_correct;       // <psi_uu|psi_ubar_ubar>   = 1/2 - e - delta
  double ip_error;         // <psi_u_ubar|psi_ubar_u>  = 1/2 - e + delta
};
GramTable gram_table_of(const AttackParams& p);

// Probe states left behind by a U-basis exchange: psi[sent*2 + bob], i.e.
// psi[0]=psi_uu, psi[1]=psi_u_ubar, psi[2]=psi_ubar_u, psi[3]=psi_ubar_ubar.
struct ProbeGeometry {
  std::array<Ket, 4> psi;

  const Ket& correct_u() const { return psi[0]; }
  const Ket& error_u() const { return psi[1]; }
  const Ket& error_ubar() const { return psi[2]; }
  const Ket& correct_ubar() const { return psi[3]; }

  GramTable gram_table() const;
  Operator full_gram() const;  // 4x4, ordered (uu, ubar_ubar, u_ubar, ubar_u)
  double qber() const;         // mean of the two error-branch squared norms
  double delta() const;
  AttackParams params() const { return {qber(), delta()}; }
};

double qber_of_attack(const ProbeGeometry& g);

// Canonical 4-dim realization of a feasible (e, delta): the correct pair
// spans coordinates {0,1}, the error pair spans {2,3}. Throws
// std::invalid_argument on infeasible parameters (names the violated bound).
ProbeGeometry realize_probe_geometry(const AttackParams& p);

// Entangling probe as an explicit unitary plus initial probe state.
struct SbAttack {
  Operator u;  // 4x4: controlled-NOT, signal controls, probe targets
  Ket w;       // 2-dim initial probe state
  ProbeGeometry geometry;  // induced psi set, embedded in the 4-dim layout
};

// Controlled-NOT probe in the computational (symmetric) basis with
// w = [(C+S) e0 + (C-S) e1]/sqrt(2), S = sqrt(2e), C = sqrt(1-2e). Its error
// probe states coincide: psi_u_ubar = psi_ubar_u, and the induced table is
// the (e, delta = 2e - 1/2) one.
SbAttack sb_attack(double e);

// Build the executor from an explicit unitary on signal (x) probe: Phi_mn are
// the probe blocks of U(e_m (x) w). Requires u unitary within 1e-10.
AttackExecutor executor_from_unitary(const Operator& u, const Ket& w);

// Executor whose U-basis branch extraction reproduces g.psi exactly; the Phi
// vectors come from inverting the alpha = pi/8 basis change.
AttackExecutor executor_from_geometry(const ProbeGeometry& g);

// Four-angle parametrization of the real symmetric attack family.
struct AngleParams {
  double lambda;
  double mu;
  double phi;
  double theta;
};

// Real coefficients of the probe images in an orthonormal probe basis w0..w3:
//   Phi00 = (X0, X1, X2, X3)     Phi01 = (0, X5, X6, 0)
//   Phi10 = (0, X6, X5, 0)       Phi11 = (X3, X2, X1, X0)
// The angle map keeps sum X_i^2 = 1 and X1*X6 + X2*X5 = 0 identically.
struct XCoefficients {
  double x0, x1, x2, x3, x5, x6;
  double sum_sq() const;
  double unitarity_cross() const;  // X1*X6 + X2*X5
  double symmetry_cross() const;   // X1*X5 + X2*X6
};
XCoefficients x_from_angles(const AngleParams& a);

// Scalar invariants of the angle family:
//   a = 2(X0X3 + X1X2 + X5X6), b = 2(X0X3 + X1X2 - X5X6),
//   c = 2(X1X5 + X2X6),        d = 1 - 2(X5^2 + X6^2).
// An attack is symmetric iff a = d and c = 0; then e = (1-d)/2, 2delta = -b.
struct AngleTargets {
  double a, b, c, d;
};
AngleTargets angle_targets(const XCoefficients& x);

struct AngleAttack {
  AngleParams angles;
  XCoefficients x;
  AttackExecutor executor;  // probe dim 4
  ProbeGeometry geometry;
  AttackParams params;  // measured from the geometry
};
AngleAttack attack_from_angles(const AngleParams& a);

// Damped Newton with 8 fixed starts on the square residual system
// (a - (1-2e), d - (1-2e), c, b - (1-2e)^2). Throws std::runtime_error if no
// start converges. Requires 0 < e < 1/2.
struct AngleSolution {
  AngleParams angles;
  AngleTargets targets;
  double residual;
  int iterations;
  int start_index;
};
AngleSolution solve_optimal_angles(double e);

// Group-average an arbitrary attack over the 8 lifted dihedral symmetries of
// the signal set and verify, numerically, that the average is invariant and
// that its probe images satisfy the symmetric-attack product constraints.
// u acts on signal (x) probe (2d x 2d, d <= 4), w is the initial probe state.
struct SymmetrizationReport {
  double unitary_residual;   // max_g |Rtilde_g Utilde Rtilde_g^+ - Utilde|
  double omega_residual;     // max_g |Rhat_g omega Rhat_g^+ - omega|
  double phi_orth_residual;  // |<Phi00|Phi01>| of the averaged attack
  double phi_sum_residual;   // |<Phi01|Phi10> + <Phi00|Phi11> - (1 - 2|Phi01|^2)|
  double unitarity_residual; // |Utilde^+ Utilde - I|
  AttackParams averaged;     // (e, delta) of the averaged attack
  bool pass;
};
SymmetrizationReport symmetrize_and_verify(const Operator& u, const Ket& w, double tol = 1e-10);

// Property check over Haar-random attacks: each trial draws a unitary on
// signal (x) 4-dim probe plus a probe state, averages it over the dihedral
// orbit, and verifies invariance and the product constraints.
struct SymmetrizationTrials {
  int trials;
  double max_residual;
  bool all_pass;
  std::vector<SymmetrizationReport> reports;
};
SymmetrizationTrials symmetrize_random_trials(int trials, std::uint64_t seed, double tol = 1e-10);

}  // namespace qkd
