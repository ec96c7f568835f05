#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qkdlab/attacks.hpp"
#include "qkdlab/bb84.hpp"
#include "qkdlab/linalg.hpp"

namespace qkd {

// Minimum-error discrimination of two equiprobable pure states.
//
// Inputs are normalized and the second state is rephased so the overlap is
// real non-negative; f is the squared overlap (fidelity). The measurement
// directions chi0/chi1 are orthonormal and chi_k is the best projector for
// "the state was phi_k". For (near-)identical rays the measurement carries
// no information; `degenerate` is set and any guess is a coin toss.
struct Discrimination {
  Ket phi0, phi1;  // normalized, phase-fixed inputs
  double f;        // |<phi0|phi1>|^2
  Ket chi0, chi1;  // orthonormal measurement directions
  bool degenerate;

  double p_err() const;  // (1 - sqrt(1 - f)) / 2, or 1/2 when degenerate
};

Discrimination helstrom(const Ket& phi0, const Ket& phi1);

// Average collision probability of the posterior when discriminating two
// equiprobable pure states of fidelity f with the optimal measurement.
double collision_probability_pure(double f);

// Fidelities of the probe-state pairs Eve must discriminate once the basis
// is public, conditioned on Bob receiving the bit correctly (f_eq) or an
// error (f_neq). At e = 0 the error branch is empty and f_neq is 0.
struct ConditionalFidelities {
  double f_eq;
  double f_neq;
};

ConditionalFidelities conditional_fidelities(const AttackParams& p);

// A projective strategy for Eve, chosen after basis disclosure: for each
// basis an orthonormal list of directions. Outcome k < directions.size()
// fires with probability |<dir_k|probe>|^2; the orthogonal remainder is the
// residual outcome with id directions.size().
struct BasisMeasurement {
  std::vector<Ket> directions;
};

struct EveStrategy {
  std::array<BasisMeasurement, 2> per_basis;  // indexed by Basis

  const BasisMeasurement& for_basis(Basis b) const {
    return per_basis[static_cast<std::size_t>(b)];
  }
};

// Helstrom measurement of the correct-branch pair in each basis: Eve's
// optimum when reconciliation discards every error position, so only kept
// bits matter.
EveStrategy helstrom_strategy(const ProbeGeometry& g);

// One tabulated measurement outcome: its probability and the posterior
// distribution of Alice's bit given that outcome.
struct OutcomeCell {
  Basis basis;
  int outcome;
  double prob;
  std::array<double, 2> posterior;
};

// Collision-probability bookkeeping. cp is the arithmetic average
// sum_m P(m) sum_s P(s|m)^2 over measurement outcomes joined with the
// reconciled error flag, i.e. the flag-weighted mix of cp_eq and cp_neq,
// which are the same average restricted to correctly received / errored
// positions. cp_bound
// is the per-bit geometric combination (1-f_eq/2)^(1-e) (1-f_neq/2)^e that
// enters the security bound; the two coincide when f_eq = f_neq. Empirical
// estimates carry bootstrap standard errors (se_*), analytic ones set them
// to 0.
struct CollisionStats {
  double cp = 0.0;
  double cp_eq = 0.0;
  double cp_neq = 0.0;
  double cp_bound = 0.0;
  double se_cp = 0.0;
  double se_cp_eq = 0.0;
  double se_cp_neq = 0.0;
  std::uint64_t n = 0;  // records used (0 for analytic stats)
  std::vector<OutcomeCell> cells;
};

// Two-stage measurement without error-position leakage: stage 1 projects
// the probe onto the correct-vs-error subspace (orthogonal for symmetrized
// attacks), stage 2 discriminates within the selected subspace. The
// returned stats are the analytic values for the geometry's (e, delta).
struct TwoStageResult {
  EveStrategy strategy;
  CollisionStats stats;
  ConditionalFidelities fids;
};

TwoStageResult two_stage_strategy(const ProbeGeometry& g);

// Analytic stats of the reference strategy in which reconciliation leaks
// every error position to Eve, who then discriminates each pair optimally.
CollisionStats leakage_assisted_stats(const AttackParams& p);

// Runs a strategy over the sifted records of an exchange, sampling Eve's
// outcome per record, and tabulates empirical posteriors by
// (basis, outcome, error flag). Standard errors come from 200 bootstrap
// resamples of the outcome table. Throws std::invalid_argument when no
// sifted record is present.
CollisionStats simulate_eve(const std::vector<ExchangeRecord>& records, const EveStrategy& strat,
                            std::uint64_t seed);

}  // namespace qkd
