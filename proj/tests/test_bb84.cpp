#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "qkdlab/attacks.hpp"
#include "qkdlab/bb84.hpp"

using namespace qkd;

TEST_CASE("signal states") {
  const double c = std::cos(kSignalAngle), s = std::sin(kSignalAngle);

  const Ket u = encode(Basis::U, 0), ubar = encode(Basis::U, 1);
  const Ket v = encode(Basis::V, 0), vbar = encode(Basis::V, 1);

  CHECK(std::abs(u[0] - c) < 1e-15);
  CHECK(std::abs(u[1] - s) < 1e-15);
  CHECK(std::abs(ubar[0] + s) < 1e-15);
  CHECK(std::abs(ubar[1] - c) < 1e-15);
  CHECK(std::abs(v[0] - s) < 1e-15);
  CHECK(std::abs(v[1] - c) < 1e-15);
  CHECK(std::abs(vbar[0] - c) < 1e-15);
  CHECK(std::abs(vbar[1] + s) < 1e-15);

  // Same basis: orthonormal. Opposite basis: all overlaps have modulus 1/sqrt(2).
  CHECK(std::abs(dot(u, ubar)) < 1e-15);
  CHECK(std::abs(dot(v, vbar)) < 1e-15);
  CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-15));
  for (int bu = 0; bu < 2; ++bu)
    for (int bv = 0; bv < 2; ++bv)
      CHECK(pure_fidelity(encode(Basis::U, bu), encode(Basis::V, bv)) ==
            doctest::Approx(0.5).epsilon(1e-13));

  const SignalState sig = make_signal(Basis::V, 1);
  CHECK(sig.basis == Basis::V);
  CHECK(sig.bit == 1);
  CHECK(std::abs(sig.ket[0] - vbar[0]) < 1e-15);
}

TEST_CASE("identity attack leaves signals untouched") {
  const AttackExecutor id = AttackExecutor::identity();
  CHECK(id.probe_dim() == 4);

  for (int b = 0; b < 2; ++b) {
    const Basis basis = static_cast<Basis>(b);
    for (int bit = 0; bit < 2; ++bit) {
      const Ket j = id.joint(basis, bit);
      CHECK(j.norm() == doctest::Approx(1.0).epsilon(1e-14));
      // Wrong-bit branch in the matching basis must vanish.
      CHECK(id.psi(basis, bit, 1 - bit).norm() < 1e-14);
      CHECK(id.psi(basis, bit, bit).norm2() == doctest::Approx(1.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("branch extraction") {
  const AttackExecutor id = AttackExecutor::identity(2);
  const Ket joint = id.joint(Basis::U, 0);

  SUBCASE("pure branches: deterministic same-basis, unbiased cross-basis") {
    CHECK(pure_branch(joint, Basis::U, 0).prob == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(pure_branch(joint, Basis::U, 1).prob < 1e-14);
    CHECK(pure_branch(joint, Basis::V, 0).prob == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(pure_branch(joint, Basis::V, 1).prob == doctest::Approx(0.5).epsilon(1e-13));
    const PureBranch b = pure_branch(joint, Basis::V, 0);
    CHECK(b.probe.norm() == doctest::Approx(1.0).epsilon(1e-13));
  }

  SUBCASE("density-matrix branches agree with pure ones") {
    const DensityMatrix dm = DensityMatrix::make(outer(joint, joint));
    for (int b = 0; b < 2; ++b)
      for (int bit = 0; bit < 2; ++bit) {
        const DmBranch db = dm_branch(dm, static_cast<Basis>(b), bit);
        const PureBranch pb = pure_branch(joint, static_cast<Basis>(b), bit);
        CHECK(db.prob == doctest::Approx(pb.prob).epsilon(1e-12));
        CHECK(db.probe_unnormalized.trace().real() ==
              doctest::Approx(db.prob).epsilon(1e-12));
      }
  }

  SUBCASE("sampled measurement matches Born statistics") {
    CounterRng rng(99);
    for (int i = 0; i < 50; ++i) {
      CHECK(measure_pure(joint, Basis::U, rng).bit == 0);
    }
    int ones = 0;
    const int trials = 20000;
    for (int i = 0; i < trials; ++i) ones += measure_pure(joint, Basis::V, rng).bit;
    // p = 1/2; allow 4.5 sigma.
    CHECK(std::abs(ones / double(trials) - 0.5) < 4.5 * std::sqrt(0.25 / trials));

    const DensityMatrix dm = DensityMatrix::make(outer(joint, joint));
    const MeasureOutcome mo = measure(dm, Basis::U, rng);
    CHECK(mo.bit == 0);
    CHECK(mo.probe.op().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("exchange with no eavesdropper is error-free") {
  const Exchange ex = run_exchange(AttackExecutor::identity(), 20000, 42);
  CHECK(ex.summary.n == 20000);
  CHECK(ex.summary.errors == 0);
  CHECK(ex.summary.qber == 0.0);
  CHECK(ex.summary.seed == 42);

  // Basis choices are fair coins: sifted ~ Binomial(n, 1/2).
  const double n = 20000.0;
  CHECK(std::abs(ex.summary.sifted - 0.5 * n) < 4.5 * std::sqrt(0.25 * n));

  // Probe must stay in its initial ray (collapse can flip the global phase).
  for (int i = 0; i < 100; ++i) {
    const auto& p = ex.records[static_cast<std::size_t>(i)].probe;
    CHECK(std::abs(std::abs(p[0]) - 1.0) < 1e-12);
    CHECK(std::abs(p[1]) + std::abs(p[2]) + std::abs(p[3]) < 1e-12);
  }
}

TEST_CASE("record bookkeeping is internally consistent") {
  const SbAttack sb = sb_attack(0.08);
  const Exchange ex = run_exchange(executor_from_unitary(sb.u, sb.w), 50000, 7);

  std::uint64_t sifted = 0, errors = 0, round_check = 0;
  bool flags_ok = true;
  for (const ExchangeRecord& r : ex.records) {
    flags_ok = flags_ok && (r.sifted == (r.alice_basis == r.bob_basis));
    flags_ok = flags_ok && (r.error == (r.sifted && r.alice_bit != r.bob_bit));
    sifted += r.sifted ? 1 : 0;
    errors += r.error ? 1 : 0;
    round_check += (r.round == round_check) ? 1 : 0;
  }
  CHECK(flags_ok);
  CHECK(ex.records.size() == 50000);
  CHECK(round_check == 50000);  // rounds are 0..n-1 in order
  CHECK(sifted == ex.summary.sifted);
  CHECK(errors == ex.summary.errors);
  CHECK(ex.summary.qber == doctest::Approx(double(errors) / double(sifted)).epsilon(1e-15));

  // Collapsed probes are normalized (2-dim probe, padded with zeros).
  for (int i = 0; i < 100; ++i) {
    const auto& p = ex.records[static_cast<std::size_t>(i)].probe;
    const double n2 = std::norm(p[0]) + std::norm(p[1]) + std::norm(p[2]) + std::norm(p[3]);
    CHECK(std::abs(n2 - 1.0) < 1e-10);
    CHECK(std::abs(p[2]) + std::abs(p[3]) < 1e-12);
  }
}

TEST_CASE("entangling probe induces its designed error rate") {
  const double e = 0.1;
  const SbAttack sb = sb_attack(e);
  const Exchange ex = run_exchange(executor_from_unitary(sb.u, sb.w), 1000000, 2024);

  const double sig = std::sqrt(e * (1.0 - e) / double(ex.summary.sifted));
  CHECK(std::abs(ex.summary.qber - e) < 4.5 * sig);
  CHECK(ex.summary.qber_stderr ==
        doctest::Approx(std::sqrt(ex.summary.qber * (1.0 - ex.summary.qber) /
                                  double(ex.summary.sifted)))
            .epsilon(1e-12));
}

TEST_CASE("exchange is reproducible from its seed") {
  const SbAttack sb = sb_attack(0.15);
  const AttackExecutor at = executor_from_unitary(sb.u, sb.w);
  const Exchange a = run_exchange(at, 5000, 11);
  const Exchange b = run_exchange(at, 5000, 11);
  const Exchange c = run_exchange(at, 5000, 12);

  CHECK(a.summary.sifted == b.summary.sifted);
  CHECK(a.summary.errors == b.summary.errors);
  bool identical = a.records.size() == b.records.size();
  for (std::size_t i = 0; identical && i < a.records.size(); ++i) {
    const ExchangeRecord &ra = a.records[i], &rb = b.records[i];
    identical = ra.round == rb.round && ra.alice_basis == rb.alice_basis &&
                ra.bob_basis == rb.bob_basis && ra.alice_bit == rb.alice_bit &&
                ra.bob_bit == rb.bob_bit && ra.sifted == rb.sifted && ra.error == rb.error &&
                ra.probe == rb.probe;
  }
  CHECK(identical);
  CHECK((a.summary.sifted != c.summary.sifted || a.summary.errors != c.summary.errors));
}

TEST_CASE("qber estimation") {
  std::vector<ExchangeRecord> recs;
  for (int i = 0; i < 1000; ++i) {
    ExchangeRecord r{};
    r.round = static_cast<std::uint64_t>(i);
    r.sifted = (i % 2 == 0);      // 500 sifted
    r.error = r.sifted && (i % 20 == 0);  // 50 of them errors
    recs.push_back(r);
  }
  const QberEstimate q = estimate_qber(recs);
  CHECK(q.sifted == 500);
  CHECK(q.errors == 50);
  CHECK(q.qber == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(q.stderr_ == doctest::Approx(std::sqrt(0.1 * 0.9 / 500.0)).epsilon(1e-13));

  CHECK_THROWS_AS((void)estimate_qber(std::vector<ExchangeRecord>{}), std::invalid_argument);
  std::vector<ExchangeRecord> unsifted(3);
  for (auto& r : unsifted) r.sifted = false;
  CHECK_THROWS_AS((void)estimate_qber(unsifted), std::invalid_argument);
}

TEST_CASE("record csv layout") {
  const Exchange ex = run_exchange(AttackExecutor::identity(), 3, 1);
  std::ostringstream os;
  write_records_csv(os, ex.records);
  const std::string text = os.str();
  CHECK(text.rfind("round,alice_basis,alice_bit,bob_basis,bob_bit,sifted,error\n", 0) == 0);
  int lines = 0;
  for (char ch : text) lines += (ch == '\n') ? 1 : 0;
  CHECK(lines == 4);
}
