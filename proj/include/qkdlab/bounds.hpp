#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qkdlab/parallel.hpp"

namespace qkd {

// Binary entropy in bits; arguments are clamped to [0,1] and the endpoint
// values follow the continuity convention h(0) = h(1) = 0.
double binary_entropy(double e);

// Discarded fraction against the strongest individual attack when
// reconciliation discards error positions: log2((1+2e-7e^2)/(1-e)^2) up to
// e = 1/3, and 1 beyond ("nothing left to discard"). Domain [0, 1/2].
double tau_error_discard(double e);

// The same attack re-costed when errors are corrected instead of
// discarded: only the kept fraction (1-e) pays, so (1-e) * tau_error_discard.
// Raw curve (not monotone); see monotonicize.
double tau_sb_with_ec(double e);

// Upper bound on the discarded fraction for any individual attack under
// error correction: log2(1 + 4e - 4e^2).
double tau_lutkenhaus(double e);

// Discarded fraction needed for a given average collision probability:
// 1 + log2(cp). Domain [1/2, 1].
double tau_from_cp(double cp);

// Discarded fraction achieved by the probe pair at (e, delta) when Eve uses
// the optimal per-branch measurements:
// (1-e) log2(2 - f_eq) + e log2(2 - f_neq).
double attack_tau(double e, double delta);

// Maximizes attack_tau over the feasible delta range at fixed e by grid
// scan plus golden-section refinement. Sanity-asserts the closed-form
// optimum 2 delta* = -(1-2e)^2 (within 10 * resolution) and agreement with
// tau_lutkenhaus (within 1e-9); throws std::logic_error if either fails.
struct OptimizeResult {
  double delta_star;
  double tau_star;
};
OptimizeResult optimize_delta(double e, double resolution = 1e-5);

enum class CurveKind { ErrorDiscard, SbWithEc, Lutkenhaus, OptimizedEc };
const char* curve_kind_name(CurveKind k);

struct CurvePoint {
  double e;
  double tau;
};

// Sampled discarded-fraction curve; tau is always clamped to [0,1], and a
// monotonicized curve is non-decreasing in e.
struct SecurityCurve {
  CurveKind kind;
  std::vector<CurvePoint> samples;  // ordered by e
  bool monotonicized = false;
};

SecurityCurve sample_curve(CurveKind kind, const std::vector<double>& es,
                           ExecPolicy policy = ExecPolicy::Parallel);

// Running maximum over e. A discarded fraction sufficient at some QBER is
// sufficient at any lower QBER (the eavesdropper may always add noise), so
// the operational curve is the monotone envelope. Idempotent.
SecurityCurve monotonicize(SecurityCurve curve);

// e grid [start, stop] with the given step; stop is included when it falls
// on the lattice (within one part in 1e9 of a step).
std::vector<double> linear_grid(double start, double stop, double step);

// Expected secret gain (bits) of an n-bit sifted key at QBER e under the
// two reconciliation styles: g_d discards errors and pays tau_error_discard
// on kept bits, g_c corrects them and pays the optimized-EC fraction plus
// the h(e) correction leakage on all bits.
struct GainModel {
  std::uint64_t n;
  double e;
  double g_d;
  double g_c;
};
GainModel gains(std::uint64_t n, double e);

// Draws (e, delta) uniformly from the feasible region and checks
// attack_tau(e, delta) <= tau_lutkenhaus(e) + 1e-9 for every sample. Throws
// std::runtime_error naming the offending pair on violation. Slack is
// bound minus achieved; min_slack locates the tightest sample.
struct BoundCheckReport {
  std::uint64_t samples;
  double max_slack;
  double min_slack;
  double argmin_e;
  double argmin_delta;
};
BoundCheckReport verify_bound_random(std::uint64_t samples, std::uint64_t seed,
                                     ExecPolicy policy = ExecPolicy::Parallel);

// CSV exports: curves as e,tau,kind,monotonicized; gains as e,n,g_d,g_c.
void write_curve_csv(std::ostream& os, const SecurityCurve& curve);
void write_gains_csv(std::ostream& os, const std::vector<GainModel>& rows);

}  // namespace qkd
