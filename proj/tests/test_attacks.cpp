#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "qkdlab/attacks.hpp"
#include "qkdlab/bb84.hpp"
#include "qkdlab/rng.hpp"

using namespace qkd;

namespace {

double max_psi_diff(const std::array<Ket, 4>& a, const std::array<Ket, 4>& b) {
  double m = 0.0;
  for (int k = 0; k < 4; ++k) {
    const Ket& x = a[static_cast<std::size_t>(k)];
    const Ket& y = b[static_cast<std::size_t>(k)];
    REQUIRE(x.dim() == y.dim());
    for (int i = 0; i < x.dim(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  }
  return m;
}

void check_tables_close(const GramTable& got, const GramTable& want, double tol) {
  CHECK(std::abs(got.n2_correct_u - want.n2_correct_u) < tol);
  CHECK(std::abs(got.n2_correct_ubar - want.n2_correct_ubar) < tol);
  CHECK(std::abs(got.n2_error_u - want.n2_error_u) < tol);
  CHECK(std::abs(got.n2_error_ubar - want.n2_error_ubar) < tol);
  CHECK(std::abs(got.ip_correct - want.ip_correct) < tol);
  CHECK(std::abs(got.ip_error - want.ip_error) < tol);
}

}  // namespace

TEST_CASE("feasibility region") {
  CHECK(feasible({0.0, -0.5}));
  CHECK(feasible({0.25, 0.0}));   // upper edge: 2e - 1/2 = 0
  CHECK(feasible({0.5, 0.5}));
  CHECK(feasible({0.1, -0.5}));
  CHECK_FALSE(feasible({0.0, 0.0}));
  CHECK_FALSE(feasible({0.25, 1e-12}));
  CHECK_FALSE(feasible({0.1, -0.5 - 1e-12}));
  CHECK_FALSE(feasible({-0.01, -0.5}));
  CHECK_FALSE(feasible({0.51, 0.0}));

  // The upper boundary is the exact floating-point value 2e - 1/2, so the
  // boundary attack itself always passes and one ulp above always fails.
  for (double e : {0.05, 0.1, 0.17, 0.3, 0.45}) {
    const double upper = 2.0 * e - 0.5;
    CHECK(feasible({e, upper}));
    CHECK_FALSE(feasible({e, std::nextafter(upper, 1.0)}));
  }
}

TEST_CASE("gram table of parameters") {
  const GramTable t = gram_table_of({0.25, -0.0625});
  CHECK(t.n2_correct_u == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(t.n2_correct_ubar == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(t.n2_error_u == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(t.n2_error_ubar == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(t.ip_correct == doctest::Approx(0.3125).epsilon(1e-15));  // 1/2 - e - delta
  CHECK(t.ip_error == doctest::Approx(0.1875).epsilon(1e-15));    // 1/2 - e + delta
}

TEST_CASE("canonical realization") {
  SUBCASE("reproduces the requested table over the feasible region") {
    for (double e : {0.05, 0.15, 0.25, 0.35, 0.45}) {
      const double lo = -0.5, hi = 2.0 * e - 0.5;
      for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const AttackParams p{e, lo + t * (hi - lo)};
        const ProbeGeometry g = realize_probe_geometry(p);
        check_tables_close(g.gram_table(), gram_table_of(p), 1e-12);
        CHECK(g.qber() == doctest::Approx(e).epsilon(1e-13));
        CHECK(g.delta() == doctest::Approx(p.delta).epsilon(1e-12));
        CHECK(qber_of_attack(g) == doctest::Approx(e).epsilon(1e-13));

        // Correct and error pairs live in orthogonal 2-dim subspaces.
        CHECK(std::abs(dot(g.psi[0], g.psi[1])) < 1e-14);
        CHECK(std::abs(dot(g.psi[0], g.psi[2])) < 1e-14);
        CHECK(std::abs(dot(g.psi[3], g.psi[1])) < 1e-14);
        CHECK(std::abs(dot(g.psi[3], g.psi[2])) < 1e-14);
      }
    }
  }

  SUBCASE("spot check e = 1/4, delta = -1/16") {
    const ProbeGeometry g = realize_probe_geometry({0.25, -0.0625});
    const GramTable t = g.gram_table();
    CHECK(std::abs(t.n2_correct_u - 0.75) < 1e-12);
    CHECK(std::abs(t.n2_error_u - 0.25) < 1e-12);
    CHECK(std::abs(t.ip_correct - 0.3125) < 1e-12);
    CHECK(std::abs(t.ip_error - 0.1875) < 1e-12);
  }

  SUBCASE("full gram is hermitian with the documented layout") {
    const ProbeGeometry g = realize_probe_geometry({0.2, -0.2});
    const Operator fg = g.full_gram();
    CHECK(is_hermitian(fg, 1e-12));
    CHECK(fg.at(0, 0).real() == doctest::Approx(0.8).epsilon(1e-13));
    CHECK(fg.at(1, 1).real() == doctest::Approx(0.8).epsilon(1e-13));
    CHECK(fg.at(2, 2).real() == doctest::Approx(0.2).epsilon(1e-13));
    CHECK(fg.at(3, 3).real() == doctest::Approx(0.2).epsilon(1e-13));
    CHECK(fg.at(0, 1).real() == doctest::Approx(0.5 - 0.2 + 0.2).epsilon(1e-13));
    CHECK(fg.at(2, 3).real() == doctest::Approx(0.5 - 0.2 - 0.2).epsilon(1e-13));
    CHECK(std::abs(fg.at(0, 2)) < 1e-14);  // cross-pair block vanishes
  }

  SUBCASE("noiseless boundary point collapses to a single probe state") {
    const ProbeGeometry g = realize_probe_geometry({0.0, -0.5});
    CHECK(g.psi[1].norm() < 1e-15);
    CHECK(g.psi[2].norm() < 1e-15);
    CHECK(pure_fidelity(g.psi[0], g.psi[3]) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(g.qber() == 0.0);
    CHECK(g.delta() == doctest::Approx(-0.5).epsilon(1e-13));
  }

  SUBCASE("infeasible parameters are rejected with the violated bound named") {
    CHECK_THROWS_AS((void)realize_probe_geometry({0.1, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)realize_probe_geometry({0.1, -0.6}), std::invalid_argument);
    CHECK_THROWS_AS((void)realize_probe_geometry({0.7, -0.5}), std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)realize_probe_geometry({0.2, 0.5}),
                         doctest::Contains("delta > 1/2-|1-2e|"), std::invalid_argument);
  }
}

TEST_CASE("controlled-not probe") {
  SUBCASE("error probes coincide and the table is the boundary one") {
    for (double e : {0.05, 0.10, 0.15, 0.20, 0.25, 0.30}) {
      const SbAttack sb = sb_attack(e);
      CHECK(is_unitary(sb.u, 1e-12));
      CHECK(sb.w.norm() == doctest::Approx(1.0).epsilon(1e-13));
      const Ket diff = sb.geometry.psi[1] - sb.geometry.psi[2];
      CHECK(diff.norm() < 1e-12);
      check_tables_close(sb.geometry.gram_table(), gram_table_of({e, 2.0 * e - 0.5}), 1e-12);
      CHECK(sb.geometry.qber() == doctest::Approx(e).epsilon(1e-12));
    }
  }

  SUBCASE("correct-pair overlap is 1 - 3e") {
    const SbAttack sb = sb_attack(0.1);
    const double ip = dot(sb.geometry.psi[0], sb.geometry.psi[3]).real();
    CHECK(ip == doctest::Approx(1.0 - 3.0 * 0.1).epsilon(1e-13));
    // Normalized overlap (the square root of the correct-branch fidelity).
    CHECK(ip / (1.0 - 0.1) == doctest::Approx(0.7 / 0.9).epsilon(1e-13));
  }

  SUBCASE("probes become orthogonal at e = 1/3") {
    const SbAttack sb = sb_attack(1.0 / 3.0);
    CHECK(std::abs(dot(sb.geometry.psi[0], sb.geometry.psi[3])) < 1e-13);
  }

  SUBCASE("geometry matches the executor built from (u, w)") {
    const SbAttack sb = sb_attack(0.12);
    const AttackExecutor ex = executor_from_unitary(sb.u, sb.w);
    CHECK(ex.probe_dim() == 2);
    for (int s = 0; s < 2; ++s)
      for (int b = 0; b < 2; ++b) {
        const Ket branch = ex.psi(Basis::U, s, b);
        const Ket& stored = sb.geometry.psi[static_cast<std::size_t>(s * 2 + b)];
        for (int i = 0; i < 2; ++i) CHECK(std::abs(branch[i] - stored[i]) < 1e-12);
        CHECK(std::abs(stored[2]) + std::abs(stored[3]) < 1e-15);
      }
  }

  SUBCASE("edge error rates are accepted") {
    CHECK(sb_attack(0.0).geometry.qber() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(sb_attack(0.5).geometry.qber() == doctest::Approx(0.5).epsilon(1e-13));
    CHECK_THROWS_AS((void)sb_attack(0.6), std::invalid_argument);
    CHECK_THROWS_AS((void)sb_attack(-0.1), std::invalid_argument);
  }
}

TEST_CASE("executor construction") {
  CounterRng rng(2025);

  SUBCASE("unitary input: probability is conserved branch by branch") {
    for (int trial = 0; trial < 5; ++trial) {
      const Operator u = random_unitary(8, rng);
      const Ket w = random_ket(4, rng);
      const AttackExecutor ex = executor_from_unitary(u, w);
      for (int m = 0; m < 2; ++m)
        CHECK(ex.phi[static_cast<std::size_t>(2 * m)].norm2() +
                  ex.phi[static_cast<std::size_t>(2 * m + 1)].norm2() ==
              doctest::Approx(1.0).epsilon(1e-12));
      // Orthogonality of the two evolved columns.
      const cplx cross = dot(ex.phi[0], ex.phi[2]) + dot(ex.phi[1], ex.phi[3]);
      CHECK(std::abs(cross) < 1e-12);
      for (int b = 0; b < 2; ++b)
        for (int bit = 0; bit < 2; ++bit)
          CHECK(ex.joint(static_cast<Basis>(b), bit).norm() ==
                doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("non-unitary and mismatched inputs are rejected") {
    CHECK_THROWS_AS((void)executor_from_unitary(Operator(4), Ket(2)), std::invalid_argument);
    const Operator u = random_unitary(8, rng);
    CHECK_THROWS_AS((void)executor_from_unitary(u, random_ket(2, rng)), std::invalid_argument);
  }

  SUBCASE("geometry round trip reproduces the branch states exactly") {
    for (double e : {0.08, 0.2, 0.33}) {
      const AttackParams p{e, -0.5 + 0.8 * e};  // 40% of the way up the feasible range
      const ProbeGeometry g = realize_probe_geometry(p);
      const AttackExecutor ex = executor_from_geometry(g);
      std::array<Ket, 4> back;
      for (int s = 0; s < 2; ++s)
        for (int b = 0; b < 2; ++b)
          back[static_cast<std::size_t>(s * 2 + b)] = ex.psi(Basis::U, s, b);
      CHECK(max_psi_diff(back, g.psi) < 1e-12);
    }
  }

  SUBCASE("arbitrary attack survives psi -> phi -> psi") {
    for (int trial = 0; trial < 5; ++trial) {
      const Operator u = random_unitary(8, rng);
      const Ket w = random_ket(4, rng);
      const AttackExecutor ex = executor_from_unitary(u, w);
      ProbeGeometry g;
      for (int s = 0; s < 2; ++s)
        for (int b = 0; b < 2; ++b)
          g.psi[static_cast<std::size_t>(s * 2 + b)] = ex.psi(Basis::U, s, b);
      const AttackExecutor ex2 = executor_from_geometry(g);
      std::array<Ket, 4> back;
      for (int s = 0; s < 2; ++s)
        for (int b = 0; b < 2; ++b)
          back[static_cast<std::size_t>(s * 2 + b)] = ex2.psi(Basis::U, s, b);
      CHECK(max_psi_diff(back, g.psi) < 1e-11);
    }
  }
}

TEST_CASE("angle parametrization") {
  CounterRng rng(404);

  SUBCASE("normalization and the orthogonality identity hold for all angles") {
    for (int trial = 0; trial < 50; ++trial) {
      const AngleParams a{rng.next_double() * 6.4 - 3.2, rng.next_double() * 6.4 - 3.2,
                          rng.next_double() * 6.4 - 3.2, rng.next_double() * 6.4 - 3.2};
      const XCoefficients x = x_from_angles(a);
      CHECK(x.sum_sq() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(x.unitarity_cross()) < 1e-14);
    }
  }

  SUBCASE("phi = pi/4 kills the symmetry cross term") {
    for (int trial = 0; trial < 20; ++trial) {
      const AngleParams a{rng.next_double() * 3.0, rng.next_double() * 3.0,
                          std::atan(1.0),  // pi/4
                          rng.next_double() * 3.0};
      CHECK(std::abs(x_from_angles(a).symmetry_cross()) < 1e-14);
    }
  }

  SUBCASE("targets equal the probe-image inner products") {
    for (int trial = 0; trial < 20; ++trial) {
      const AngleParams a{rng.next_double() * 6.4 - 3.2, rng.next_double() * 6.4 - 3.2,
                          rng.next_double() * 6.4 - 3.2, rng.next_double() * 6.4 - 3.2};
      const AngleAttack at = attack_from_angles(a);
      const AngleTargets t = angle_targets(at.x);
      const auto& phi = at.executor.phi;

      const double ip_0011 = dot(phi[0], phi[3]).real();
      const double ip_0110 = dot(phi[1], phi[2]).real();
      const double ip_0001 = dot(phi[0], phi[1]).real();
      const double ip_1110 = dot(phi[3], phi[2]).real();
      CHECK(t.a == doctest::Approx(ip_0110 + ip_0011).epsilon(1e-12));
      CHECK(t.b == doctest::Approx(ip_0011 - ip_0110).epsilon(1e-12));
      CHECK(t.c == doctest::Approx(ip_0001 + ip_1110).epsilon(1e-12));
      CHECK(t.d == doctest::Approx(1.0 - 2.0 * phi[1].norm2()).epsilon(1e-12));
    }
  }

  SUBCASE("executor images carry the documented coefficient layout") {
    const AngleParams a{0.7, -0.4, 1.1, 0.3};
    const AngleAttack at = attack_from_angles(a);
    const XCoefficients& x = at.x;
    const double want00[4] = {x.x0, x.x1, x.x2, x.x3};
    const double want01[4] = {0.0, x.x5, x.x6, 0.0};
    const double want10[4] = {0.0, x.x6, x.x5, 0.0};
    const double want11[4] = {x.x3, x.x2, x.x1, x.x0};
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(at.executor.phi[0][i] - want00[i]) < 1e-14);
      CHECK(std::abs(at.executor.phi[1][i] - want01[i]) < 1e-14);
      CHECK(std::abs(at.executor.phi[2][i] - want10[i]) < 1e-14);
      CHECK(std::abs(at.executor.phi[3][i] - want11[i]) < 1e-14);
    }
  }

  SUBCASE("branch probabilities sum to one for any angles") {
    for (int trial = 0; trial < 20; ++trial) {
      const AngleParams a{rng.next_double() * 6.4 - 3.2, rng.next_double() * 6.4 - 3.2,
                          rng.next_double() * 6.4 - 3.2, rng.next_double() * 6.4 - 3.2};
      const AngleAttack at = attack_from_angles(a);
      CHECK(at.geometry.psi[0].norm2() + at.geometry.psi[1].norm2() ==
            doctest::Approx(1.0).epsilon(1e-12));
      CHECK(at.geometry.psi[2].norm2() + at.geometry.psi[3].norm2() ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("lambda = pi/2, mu = pi/4 is the no-disturbance attack") {
    const double quarter = std::atan(1.0);
    const AngleAttack at = attack_from_angles({2.0 * quarter, quarter, 0.37, -1.2});
    CHECK(at.params.e < 1e-13);
    CHECK(at.params.delta == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(pure_fidelity(at.geometry.psi[0], at.geometry.psi[3]) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("optimal angle solution") {
  SUBCASE("hits the strongest feasible overlap split across the error range") {
    for (double e : {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45}) {
      const AngleSolution sol = solve_optimal_angles(e);
      CHECK(sol.residual <= 1e-10);
      CHECK(std::abs(sol.targets.a - (1.0 - 2.0 * e)) < 1e-8);
      CHECK(std::abs(sol.targets.d - (1.0 - 2.0 * e)) < 1e-8);
      CHECK(std::abs(sol.targets.c) < 1e-8);
      CHECK(std::abs(sol.targets.b - (1.0 - 2.0 * e) * (1.0 - 2.0 * e)) < 1e-8);

      const AngleAttack at = attack_from_angles(sol.angles);
      CHECK(std::abs(at.params.e - e) < 1e-8);
      CHECK(std::abs(2.0 * at.params.delta + (1.0 - 2.0 * e) * (1.0 - 2.0 * e)) < 1e-8);
      CHECK(feasible(at.params));
    }
  }

  SUBCASE("stays solvable near both ends of the error range") {
    for (double e : {0.001, 0.01, 0.49, 0.499}) {
      const AngleSolution sol = solve_optimal_angles(e);
      CHECK(sol.residual <= 1e-10);
      const AngleAttack at = attack_from_angles(sol.angles);
      CHECK(std::abs(at.params.e - e) < 1e-7);
    }
  }

  SUBCASE("rejects degenerate error rates") {
    CHECK_THROWS_AS((void)solve_optimal_angles(0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)solve_optimal_angles(0.5), std::invalid_argument);
    CHECK_THROWS_AS((void)solve_optimal_angles(-0.2), std::invalid_argument);
  }
}

TEST_CASE("dihedral symmetrization") {
  SUBCASE("doing nothing is already symmetric") {
    const SymmetrizationReport r =
        symmetrize_and_verify(Operator::identity(8), []() {
          Ket w(4);
          w[0] = 1.0;
          return w;
        }());
    CHECK(r.pass);
    CHECK(r.unitary_residual < 1e-12);
    CHECK(r.omega_residual < 1e-12);
    CHECK(r.phi_orth_residual < 1e-12);
    CHECK(r.phi_sum_residual < 1e-12);
    CHECK(r.unitarity_residual < 1e-12);
    CHECK(r.averaged.e < 1e-12);
    CHECK(r.averaged.delta == doctest::Approx(-0.5).epsilon(1e-12));
  }

  SUBCASE("controlled-not probe averages to its own error rate and split") {
    const SbAttack sb = sb_attack(0.2);
    const SymmetrizationReport r = symmetrize_and_verify(sb.u, sb.w);
    CHECK(r.pass);
    CHECK(r.unitary_residual <= 1e-10);
    CHECK(r.omega_residual <= 1e-10);
    CHECK(r.phi_orth_residual <= 1e-10);
    CHECK(r.phi_sum_residual <= 1e-10);
    CHECK(r.unitarity_residual <= 1e-10);
    CHECK(r.averaged.e == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(r.averaged.delta == doctest::Approx(2.0 * 0.2 - 0.5).epsilon(1e-9));
  }

  SUBCASE("malformed inputs are rejected") {
    CHECK_THROWS_AS((void)symmetrize_and_verify(Operator(8), Ket(4)), std::invalid_argument);
    CounterRng rng(5);
    const Operator u = random_unitary(8, rng);
    Ket long_w = random_ket(4, rng);
    long_w *= cplx(2.0);
    CHECK_THROWS_AS((void)symmetrize_and_verify(u, long_w), std::invalid_argument);
    CHECK_THROWS_AS((void)symmetrize_and_verify(random_unitary(7, rng), random_ket(3, rng)),
                    std::invalid_argument);
  }

  SUBCASE("random attacks all symmetrize within tolerance") {
    const SymmetrizationTrials t = symmetrize_random_trials(10, 31337);
    CHECK(t.trials == 10);
    CHECK(t.all_pass);
    CHECK(t.max_residual <= 1e-10);
    CHECK(t.reports.size() == 10);
    for (const SymmetrizationReport& r : t.reports) {
      CHECK(r.pass);
      // A random attack may disturb more than half the bits, so check the
      // Schwartz constraints directly rather than the e <= 1/2 parameter box.
      CHECK(r.averaged.e >= -1e-12);
      CHECK(r.averaged.e <= 1.0 + 1e-12);
      CHECK(std::abs(0.5 - r.averaged.e - r.averaged.delta) <= 1.0 - r.averaged.e + 1e-9);
      CHECK(std::abs(0.5 - r.averaged.e + r.averaged.delta) <= r.averaged.e + 1e-9);
    }
  }
}
