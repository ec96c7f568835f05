#include "qkdlab/eve.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include "qkdlab/rng.hpp"

namespace qkd {

double Discrimination::p_err() const {
  if (degenerate) return 0.5;
  return 0.5 * (1.0 - std::sqrt(std::max(0.0, 1.0 - f)));
}

namespace {

// Any unit vector orthogonal to p0 (dim >= 2): take the coordinate axis with
// the smallest overlap and project p0 out of it.
Ket orthogonal_completion(const Ket& p0) {
  const int d = p0.dim();
  int best = 0;
  double best_abs = std::abs(p0[0]);
  for (int i = 1; i < d; ++i)
    if (std::abs(p0[i]) < best_abs) {
      best = i;
      best_abs = std::abs(p0[i]);
    }
  Ket e(d);
  e[best] = 1.0;
  return (e - dot(p0, e) * p0).normalized();
}

}  // namespace

Discrimination helstrom(const Ket& phi0, const Ket& phi1) {
  if (phi0.dim() != phi1.dim()) throw std::invalid_argument("helstrom: dimension mismatch");
  if (phi0.norm2() < 1e-30 || phi1.norm2() < 1e-30)
    throw std::invalid_argument("helstrom: zero input state");

  Ket p0 = phi0.normalized();
  Ket p1 = phi1.normalized();
  const cplx ip = dot(p0, p1);
  const double sf = std::min(1.0, std::abs(ip));
  if (sf > 0.0) p1 *= std::conj(ip) / std::abs(ip);  // now <p0|p1> = sf >= 0
  const double f = sf * sf;

  if (f >= 1.0 - 1e-12) {
    if (p0.dim() < 2)
      throw std::invalid_argument("helstrom: identical rays in dimension 1 admit no measurement");
    return Discrimination{p0, p1, 1.0, p0, orthogonal_completion(p0), true};
  }
  if (f < 1e-24) {
    // (Near-)orthogonal inputs: project the tiny overlap out instead of
    // dividing by sqrt(1 - f) ~ 1.
    Ket chi1 = (p1 - cplx(sf) * p0).normalized();
    return Discrimination{p0, p1, f, p0, chi1, false};
  }

  const double den = 2.0 * std::sqrt(1.0 - f);
  const double t0 = (std::sqrt(1.0 - sf) + std::sqrt(1.0 + sf)) / den;
  const double t1 = (std::sqrt(1.0 - sf) - std::sqrt(1.0 + sf)) / den;
  const Ket chi0 = (cplx(t0) * p0 + cplx(t1) * p1).normalized();
  const Ket chi1 = (cplx(t1) * p0 + cplx(t0) * p1).normalized();
  return Discrimination{p0, p1, f, chi0, chi1, false};
}

double collision_probability_pure(double f) {
  if (f < -1e-12 || f > 1.0 + 1e-12)
    throw std::invalid_argument("collision_probability_pure: fidelity outside [0, 1]");
  return 1.0 - 0.5 * std::clamp(f, 0.0, 1.0);
}

ConditionalFidelities conditional_fidelities(const AttackParams& p) {
  if (!feasible(p))
    throw std::invalid_argument("conditional_fidelities: infeasible (e, delta)");
  const double seq = std::abs(0.5 - p.e - p.delta) / (1.0 - p.e);
  ConditionalFidelities out;
  out.f_eq = std::min(1.0, seq * seq);
  if (p.e == 0.0) {
    out.f_neq = 0.0;  // empty branch
  } else {
    const double sneq = std::abs(0.5 - p.e + p.delta) / p.e;
    out.f_neq = std::min(1.0, sneq * sneq);
  }
  return out;
}

namespace {

// Fidelities read off the realized states rather than the (e, delta)
// formulas; identical on faithful geometries but immune to last-ulp
// feasibility violations of measured parameters.
ConditionalFidelities fidelities_of_geometry(const ProbeGeometry& g) {
  ConditionalFidelities out;
  const double nc = g.psi[0].norm() * g.psi[3].norm();
  out.f_eq = nc < 1e-30 ? 0.0 : std::min(1.0, std::norm(dot(g.psi[0], g.psi[3])) / (nc * nc));
  const double ne = g.psi[1].norm() * g.psi[2].norm();
  out.f_neq = ne < 1e-30 ? 0.0 : std::min(1.0, std::norm(dot(g.psi[1], g.psi[2])) / (ne * ne));
  return out;
}

// In-order modified Gram-Schmidt; directions that collapse (norm below tol)
// are dropped. A no-op for the orthonormal sets produced by symmetric
// geometries.
std::vector<Ket> orthonormalize(std::vector<Ket> dirs) {
  std::vector<Ket> out;
  for (Ket& v : dirs) {
    for (const Ket& u : out) v -= dot(u, v) * u;
    if (v.norm2() > 1e-20) out.push_back(v.normalized());
  }
  return out;
}

std::array<Ket, 4> basis_states(const AttackExecutor& ex, Basis b) {
  return {ex.psi(b, 0, 0), ex.psi(b, 0, 1), ex.psi(b, 1, 0), ex.psi(b, 1, 1)};
}

}  // namespace

EveStrategy helstrom_strategy(const ProbeGeometry& g) {
  const AttackExecutor ex = executor_from_geometry(g);
  EveStrategy strat;
  for (int b = 0; b < 2; ++b) {
    const std::array<Ket, 4> psi = basis_states(ex, static_cast<Basis>(b));
    const Discrimination d = helstrom(psi[0], psi[3]);
    strat.per_basis[static_cast<std::size_t>(b)].directions = {d.chi0, d.chi1};
  }
  return strat;
}

namespace {

// Shared cell layout of the two-stage and the leakage-assisted strategies:
// per basis, outcomes {0,1} discriminate the correct pair and {2,3} the
// error pair. Probabilities and posteriors follow from the minimum-error
// statistics of each pair.
CollisionStats analytic_two_branch_stats(double e, const ConditionalFidelities& fids) {
  CollisionStats st;
  const double q_eq = 0.5 * (1.0 - std::sqrt(std::max(0.0, 1.0 - fids.f_eq)));
  const double q_neq = 0.5 * (1.0 - std::sqrt(std::max(0.0, 1.0 - fids.f_neq)));

  for (int b = 0; b < 2; ++b) {
    for (int k = 0; k < 2; ++k) {
      st.cells.push_back(OutcomeCell{static_cast<Basis>(b), k, 0.5 * (1.0 - e) * 0.5,
                                     {k == 0 ? 1.0 - q_eq : q_eq, k == 0 ? q_eq : 1.0 - q_eq}});
      if (e > 0.0)
        st.cells.push_back(OutcomeCell{static_cast<Basis>(b), 2 + k, 0.5 * e * 0.5,
                                       {k == 0 ? 1.0 - q_neq : q_neq,
                                        k == 0 ? q_neq : 1.0 - q_neq}});
    }
  }
  for (const OutcomeCell& c : st.cells)
    st.cp += c.prob * (c.posterior[0] * c.posterior[0] + c.posterior[1] * c.posterior[1]);
  st.cp_eq = 1.0 - 0.5 * fids.f_eq;
  st.cp_neq = e > 0.0 ? 1.0 - 0.5 * fids.f_neq : 0.0;
  st.cp_bound = std::pow(1.0 - 0.5 * fids.f_eq, 1.0 - e) * std::pow(1.0 - 0.5 * fids.f_neq, e);
  return st;
}

}  // namespace

TwoStageResult two_stage_strategy(const ProbeGeometry& g) {
  const AttackExecutor ex = executor_from_geometry(g);
  const ConditionalFidelities fids = fidelities_of_geometry(g);

  TwoStageResult res;
  res.fids = fids;
  for (int b = 0; b < 2; ++b) {
    const std::array<Ket, 4> psi = basis_states(ex, static_cast<Basis>(b));
    std::vector<Ket> dirs;
    const Discrimination corr = helstrom(psi[0], psi[3]);
    dirs.push_back(corr.chi0);
    dirs.push_back(corr.chi1);
    if (psi[1].norm2() > 1e-20 && psi[2].norm2() > 1e-20) {
      const Discrimination err = helstrom(psi[1], psi[2]);
      dirs.push_back(err.chi0);
      dirs.push_back(err.chi1);
    }
    res.strategy.per_basis[static_cast<std::size_t>(b)].directions =
        orthonormalize(std::move(dirs));
  }
  res.stats = analytic_two_branch_stats(g.qber(), fids);
  return res;
}

CollisionStats leakage_assisted_stats(const AttackParams& p) {
  return analytic_two_branch_stats(p.e, conditional_fidelities(p));
}

namespace {

// Domain tags keep Eve's streams independent of the exchange streams that
// were keyed with the same user seed, and the bootstrap independent of the
// outcome sampling.
constexpr std::uint64_t kEveTag = 0x45564553414D504CULL;
constexpr std::uint64_t kBootTag = 0x424F4F5453545241ULL;

// Joint outcome table: (basis, outcome id, alice bit, bob error?). Outcome
// ids are bounded by 4 directions + 1 residual.
constexpr int kMaxOutcomes = 8;
constexpr std::size_t kTableSize = 2 * kMaxOutcomes * 2 * 2;

std::size_t table_index(int b, int id, int s, int err) {
  return static_cast<std::size_t>(((b * kMaxOutcomes + id) * 2 + s) * 2 + err);
}

struct CpTriple {
  double cp, cp_eq, cp_neq;
};

CpTriple cp_of_table(const std::vector<double>& t) {
  CpTriple out{0.0, 0.0, 0.0};
  double n_all = 0, n_eq = 0, n_neq = 0;
  for (double v : t) n_all += v;
  for (std::size_t i = 3; i < kTableSize; i += 4) n_neq += t[i] + t[i - 2];
  n_eq = n_all - n_neq;

  for (int b = 0; b < 2; ++b)
    for (int id = 0; id < kMaxOutcomes; ++id) {
      const double c0 = t[table_index(b, id, 0, 0)], c1 = t[table_index(b, id, 1, 0)];
      const double e0 = t[table_index(b, id, 0, 1)], e1 = t[table_index(b, id, 1, 1)];
      const double m_eq = c0 + c1;
      if (m_eq > 0 && n_eq > 0) {
        const double p0 = c0 / m_eq, p1 = c1 / m_eq;
        out.cp_eq += (m_eq / n_eq) * (p0 * p0 + p1 * p1);
      }
      const double m_neq = e0 + e1;
      if (m_neq > 0 && n_neq > 0) {
        const double p0 = e0 / m_neq, p1 = e1 / m_neq;
        out.cp_neq += (m_neq / n_neq) * (p0 * p0 + p1 * p1);
      }
    }
  // Eve reads the reconciliation transcript, so her posterior conditions on
  // the announced error flag as well as on her outcome; pooling the flag
  // into one cell would estimate a strictly weaker eavesdropper whenever an
  // outcome mixes correct and errored rounds (e.g. a plain Helstrom
  // measurement), and would not match the analytic references.
  if (n_all > 0) out.cp = (n_eq * out.cp_eq + n_neq * out.cp_neq) / n_all;
  return out;
}

}  // namespace

CollisionStats simulate_eve(const std::vector<ExchangeRecord>& records, const EveStrategy& strat,
                            std::uint64_t seed) {
  std::vector<double> table(kTableSize, 0.0);
  std::uint64_t n_sifted = 0;

  const std::int64_t nrec = static_cast<std::int64_t>(records.size());
#ifdef _OPENMP
#pragma omp parallel
  {
    std::vector<double> local(kTableSize, 0.0);
    std::uint64_t local_sifted = 0;
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < nrec; ++i) {
#else
  {
    std::vector<double>& local = table;
    std::uint64_t& local_sifted = n_sifted;
    for (std::int64_t i = 0; i < nrec; ++i) {
#endif
      const ExchangeRecord& r = records[static_cast<std::size_t>(i)];
      if (!r.sifted) continue;
      Ket probe(4);
      for (int k = 0; k < 4; ++k) probe[k] = r.probe[static_cast<std::size_t>(k)];
      const double pn2 = probe.norm2();
      if (pn2 < 1e-30) continue;

      const BasisMeasurement& meas = strat.for_basis(r.alice_basis);
      CounterRng rng(seed ^ kEveTag, r.round);
      const double u = rng.next_double();
      double cum = 0.0;
      int id = static_cast<int>(meas.directions.size());  // residual by default
      for (std::size_t k = 0; k < meas.directions.size(); ++k) {
        cum += std::norm(dot(meas.directions[k], probe)) / pn2;
        if (u < cum) {
          id = static_cast<int>(k);
          break;
        }
      }
      local[table_index(static_cast<int>(r.alice_basis), id, r.alice_bit, r.error ? 1 : 0)] += 1.0;
      ++local_sifted;
    }
#ifdef _OPENMP
#pragma omp critical
    {
      for (std::size_t k = 0; k < kTableSize; ++k) table[k] += local[k];
      n_sifted += local_sifted;
    }
  }
#else
  }
#endif

  if (n_sifted == 0) throw std::invalid_argument("simulate_eve: no sifted records");

  CollisionStats st;
  st.n = n_sifted;
  const CpTriple point = cp_of_table(table);
  st.cp = point.cp;
  st.cp_eq = point.cp_eq;
  st.cp_neq = point.cp_neq;

  double n_neq = 0;
  for (std::size_t i = 3; i < kTableSize; i += 4) n_neq += table[i] + table[i - 2];
  const double w_neq = n_neq / static_cast<double>(n_sifted);
  st.cp_bound = std::pow(st.cp_eq, 1.0 - w_neq) *
                (st.cp_neq > 0.0 ? std::pow(st.cp_neq, w_neq) : 1.0);

  for (int b = 0; b < 2; ++b)
    for (int id = 0; id < kMaxOutcomes; ++id) {
      double m = 0, m0 = 0;
      for (int s = 0; s < 2; ++s)
        for (int err = 0; err < 2; ++err) {
          const double v = table[table_index(b, id, s, err)];
          m += v;
          if (s == 0) m0 += v;
        }
      if (m > 0)
        st.cells.push_back(OutcomeCell{static_cast<Basis>(b), id,
                                       m / static_cast<double>(n_sifted),
                                       {m0 / m, (m - m0) / m}});
    }

  // Bootstrap over the sufficient statistics: resample the outcome table as
  // a multinomial via a chain of binomials.
  constexpr int kResamples = 200;
  double s1[3] = {0, 0, 0}, s2[3] = {0, 0, 0};
  for (int rs = 0; rs < kResamples; ++rs) {
    CounterRng rng(seed ^ kBootTag, static_cast<std::uint64_t>(rs));
    std::mt19937_64 gen(rng.next_u64());
    std::vector<double> draw(kTableSize, 0.0);
    long long remaining = static_cast<long long>(n_sifted);
    double wsum = static_cast<double>(n_sifted);
    for (std::size_t k = 0; k < kTableSize && remaining > 0; ++k) {
      if (table[k] <= 0.0) continue;
      const double p = std::clamp(table[k] / wsum, 0.0, 1.0);
      long long x;
      if (p >= 1.0) {
        x = remaining;
      } else {
        std::binomial_distribution<long long> bin(remaining, p);
        x = bin(gen);
      }
      draw[k] = static_cast<double>(x);
      remaining -= x;
      wsum -= table[k];
    }
    const CpTriple boot = cp_of_table(draw);
    const double vals[3] = {boot.cp, boot.cp_eq, boot.cp_neq};
    for (int j = 0; j < 3; ++j) {
      s1[j] += vals[j];
      s2[j] += vals[j] * vals[j];
    }
  }
  double se[3];
  for (int j = 0; j < 3; ++j) {
    const double mean = s1[j] / kResamples;
    const double var = std::max(0.0, (s2[j] - kResamples * mean * mean) / (kResamples - 1));
    se[j] = std::sqrt(var);
  }
  st.se_cp = se[0];
  st.se_cp_eq = se[1];
  st.se_cp_neq = se[2];
  return st;
}

}  // namespace qkd
