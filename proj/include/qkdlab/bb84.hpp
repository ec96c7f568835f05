#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qkdlab/linalg.hpp"
#include "qkdlab/parallel.hpp"
#include "qkdlab/rng.hpp"

namespace qkd {

// Four-state protocol with two bases tilted pi/8 from the computational axis,
// so that same-basis states are orthogonal and cross-basis overlaps are 1/2:
//   u    = cos(a) e0 + sin(a) e1     (basis U, bit 0)
//   ubar = -sin(a) e0 + cos(a) e1    (basis U, bit 1)
//   v    = sin(a) e0 + cos(a) e1     (basis V, bit 0)
//   vbar = cos(a) e0 - sin(a) e1     (basis V, bit 1)
inline constexpr double kSignalAngle = 0.39269908169872415480783042290994;  // pi/8

enum class Basis : std::uint8_t { U = 0, V = 1 };

struct SignalState {
  Basis basis;
  int bit;
  Ket ket;  // 2-dim
};

Ket encode(Basis basis, int bit);
SignalState make_signal(Basis basis, int bit);

// Eve's transformation, held as the four probe-space images Phi[m][n] of the
// computational product states: U (e_m (x) w) = e_0 (x) Phi_m0 + e_1 (x) Phi_m1.
// That is enough to evolve every signal state in either basis.
struct AttackExecutor {
  std::array<Ket, 4> phi;  // index m*2 + n

  int probe_dim() const { return phi[0].dim(); }

  // Joint signal (x) probe state after the interaction, signal as slow factor.
  Ket joint(Basis basis, int bit) const;
  Ket joint(const Ket& signal) const;

  // Probe vector left behind when Bob's measurement in `basis` yields
  // `bob_bit` while Alice sent `sent_bit` (unnormalized; its squared norm is
  // the branch probability).
  Ket psi(Basis basis, int sent_bit, int bob_bit) const;

  // No interaction: probe stays in w = first basis vector.
  static AttackExecutor identity(int probe_dim = 4);
};

// Deterministic measurement branch of a pure joint state: project the signal
// factor of `joint` onto encode(basis, bit).
struct PureBranch {
  double prob;
  Ket probe;  // normalized unless prob ~ 0 (then zero ket)
};
PureBranch pure_branch(const Ket& joint, Basis basis, int bit);

// Same for a general density matrix on signal (x) probe.
struct DmBranch {
  double prob;
  Operator probe_unnormalized;  // trace == prob
};
DmBranch dm_branch(const DensityMatrix& joint, Basis basis, int bit);

// Born sampling on top of the branch primitives. Throws std::runtime_error if
// the sampled branch has probability below 1e-15 (renormalization guard).
struct MeasureOutcome {
  int bit;
  DensityMatrix probe;
};
MeasureOutcome measure(const DensityMatrix& joint, Basis basis, CounterRng& rng);

struct PureMeasureOutcome {
  int bit;
  Ket probe;
};
PureMeasureOutcome measure_pure(const Ket& joint, Basis basis, CounterRng& rng);

struct ExchangeRecord {
  std::uint64_t round;
  Basis alice_basis;
  Basis bob_basis;
  std::uint8_t alice_bit;
  std::uint8_t bob_bit;
  bool sifted;  // bases matched
  bool error;   // sifted and bob_bit != alice_bit
  std::array<cplx, 4> probe;  // Eve's collapsed probe state (padded to 4)
};

struct ExchangeSummary {
  std::uint64_t n = 0;
  std::uint64_t sifted = 0;
  std::uint64_t errors = 0;
  double qber = 0;         // errors / sifted
  double qber_stderr = 0;  // sqrt(q(1-q)/sifted)
  std::uint64_t seed = 0;
};

struct Exchange {
  std::vector<ExchangeRecord> records;
  ExchangeSummary summary;
};

// n rounds of prepare / attack / measure / sift. Round i draws all its
// randomness from CounterRng(seed, i), so the result is identical for the
// serial and OpenMP paths and for any worker count.
Exchange run_exchange(const AttackExecutor& attack, std::uint64_t n, std::uint64_t seed,
                      ExecPolicy policy = ExecPolicy::Parallel);

struct QberEstimate {
  double qber;
  double stderr_;
  std::uint64_t sifted;
  std::uint64_t errors;
};
// Throws std::invalid_argument if no sifted rounds are present.
QberEstimate estimate_qber(const std::vector<ExchangeRecord>& records);

// CSV: round,alice_basis,alice_bit,bob_basis,bob_bit,sifted,error
void write_records_csv(std::ostream& os, const std::vector<ExchangeRecord>& records);

}  // namespace qkd
