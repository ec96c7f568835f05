#include "qkdlab/bb84.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace qkd {

Ket encode(Basis basis, int bit) {
  const double c = std::cos(kSignalAngle), s = std::sin(kSignalAngle);
  Ket k(2);
  if (basis == Basis::U) {
    if (bit == 0) {
      k[0] = c;
      k[1] = s;
    } else {
      k[0] = -s;
      k[1] = c;
    }
  } else {
    if (bit == 0) {
      k[0] = s;
      k[1] = c;
    } else {
      k[0] = c;
      k[1] = -s;
    }
  }
  return k;
}

SignalState make_signal(Basis basis, int bit) { return SignalState{basis, bit, encode(basis, bit)}; }

Ket AttackExecutor::joint(const Ket& signal) const {
  const int d = probe_dim();
  Ket out(2 * d);
  for (int n = 0; n < 2; ++n)
    for (int i = 0; i < d; ++i)
      out[n * d + i] = signal[0] * phi[0 * 2 + n][i] + signal[1] * phi[1 * 2 + n][i];
  return out;
}

Ket AttackExecutor::joint(Basis basis, int bit) const { return joint(encode(basis, bit)); }

Ket AttackExecutor::psi(Basis basis, int sent_bit, int bob_bit) const {
  const Ket j = joint(basis, sent_bit);
  const Ket b = encode(basis, bob_bit);
  const int d = probe_dim();
  Ket out(d);
  for (int i = 0; i < d; ++i)
    out[i] = std::conj(b[0]) * j[0 * d + i] + std::conj(b[1]) * j[1 * d + i];
  return out;
}

AttackExecutor AttackExecutor::identity(int probe_dim) {
  AttackExecutor ex;
  for (int m = 0; m < 2; ++m)
    for (int n = 0; n < 2; ++n) {
      Ket k(probe_dim);
      if (m == n) k[0] = 1.0;  // Phi_mm = w, Phi_mn ("flip") = 0
      ex.phi[static_cast<std::size_t>(m * 2 + n)] = k;
    }
  return ex;
}

PureBranch pure_branch(const Ket& joint, Basis basis, int bit) {
  const int d = joint.dim() / 2;
  const Ket b = encode(basis, bit);
  Ket probe(d);
  for (int i = 0; i < d; ++i)
    probe[i] = std::conj(b[0]) * joint[0 * d + i] + std::conj(b[1]) * joint[1 * d + i];
  const double p = probe.norm2();
  if (p > 1e-300) {
    const double inv = 1.0 / std::sqrt(p);
    for (int i = 0; i < d; ++i) probe[i] *= inv;
  }
  return PureBranch{p, probe};
}

DmBranch dm_branch(const DensityMatrix& joint, Basis basis, int bit) {
  const int d = joint.dim() / 2;
  if (2 * d != joint.dim()) throw std::invalid_argument("dm_branch: dim not 2 x probe");
  const Ket b = encode(basis, bit);
  // probe[i][j] = sum_{m,n} conj(b_m) rho[(m,i),(n,j)] b_n
  Operator probe(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      cplx s = 0;
      for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n)
          s += std::conj(b[m]) * joint.op().at(m * d + i, n * d + j) * b[n];
      probe.at(i, j) = s;
    }
  return DmBranch{probe.trace().real(), probe};
}

MeasureOutcome measure(const DensityMatrix& joint, Basis basis, CounterRng& rng) {
  DmBranch b0 = dm_branch(joint, basis, 0);
  DmBranch b1 = dm_branch(joint, basis, 1);
  const double total = b0.prob + b1.prob;
  const double u = rng.next_double() * total;
  const int bit = (u < b0.prob) ? 0 : 1;
  DmBranch& chosen = (bit == 0) ? b0 : b1;
  if (chosen.prob < 1e-15)
    throw std::runtime_error("measure: sampled branch has probability < 1e-15");
  Operator cond = cplx(1.0 / chosen.prob, 0.0) * chosen.probe_unnormalized;
  return MeasureOutcome{bit, DensityMatrix::make(std::move(cond), 1.0, 1e-9)};
}

PureMeasureOutcome measure_pure(const Ket& joint, Basis basis, CounterRng& rng) {
  PureBranch b0 = pure_branch(joint, basis, 0);
  PureBranch b1 = pure_branch(joint, basis, 1);
  const double total = b0.prob + b1.prob;
  const double u = rng.next_double() * total;
  const int bit = (u < b0.prob) ? 0 : 1;
  PureBranch& chosen = (bit == 0) ? b0 : b1;
  if (chosen.prob < 1e-15)
    throw std::runtime_error("measure_pure: sampled branch has probability < 1e-15");
  return PureMeasureOutcome{bit, chosen.probe};
}

Exchange run_exchange(const AttackExecutor& attack, std::uint64_t n, std::uint64_t seed,
                      ExecPolicy policy) {
  if (attack.probe_dim() > 4)
    throw std::invalid_argument("run_exchange: probe dimension > 4 not supported");

  // The four signal evolutions are round-independent; precompute them.
  std::array<Ket, 4> joints;
  for (int b = 0; b < 2; ++b)
    for (int bit = 0; bit < 2; ++bit)
      joints[static_cast<std::size_t>(b * 2 + bit)] =
          attack.joint(static_cast<Basis>(b), bit);

  Exchange ex;
  ex.records.resize(n);
  std::int64_t sifted = 0, errors = 0;

  auto body = [&](std::int64_t i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    const int ab = rng.next_bit();
    const int abit = rng.next_bit();
    const int bb = rng.next_bit();
    const Ket& joint = joints[static_cast<std::size_t>(ab * 2 + abit)];
    const PureMeasureOutcome m = measure_pure(joint, static_cast<Basis>(bb), rng);

    ExchangeRecord& r = ex.records[static_cast<std::size_t>(i)];
    r.round = static_cast<std::uint64_t>(i);
    r.alice_basis = static_cast<Basis>(ab);
    r.bob_basis = static_cast<Basis>(bb);
    r.alice_bit = static_cast<std::uint8_t>(abit);
    r.bob_bit = static_cast<std::uint8_t>(m.bit);
    r.sifted = (ab == bb);
    r.error = r.sifted && (m.bit != abit);
    r.probe = {cplx(0), cplx(0), cplx(0), cplx(0)};
    for (int k = 0; k < m.probe.dim(); ++k) r.probe[static_cast<std::size_t>(k)] = m.probe[k];
  };

#ifdef _OPENMP
  if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(static) reduction(+ : sifted, errors)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      body(i);
      const ExchangeRecord& r = ex.records[static_cast<std::size_t>(i)];
      sifted += r.sifted ? 1 : 0;
      errors += r.error ? 1 : 0;
    }
  } else
#endif
  {
    (void)policy;
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      body(i);
      const ExchangeRecord& r = ex.records[static_cast<std::size_t>(i)];
      sifted += r.sifted ? 1 : 0;
      errors += r.error ? 1 : 0;
    }
  }

  ex.summary.n = n;
  ex.summary.sifted = static_cast<std::uint64_t>(sifted);
  ex.summary.errors = static_cast<std::uint64_t>(errors);
  ex.summary.seed = seed;
  if (sifted > 0) {
    const double q = static_cast<double>(errors) / static_cast<double>(sifted);
    ex.summary.qber = q;
    ex.summary.qber_stderr = std::sqrt(q * (1.0 - q) / static_cast<double>(sifted));
  }
  return ex;
}

QberEstimate estimate_qber(const std::vector<ExchangeRecord>& records) {
  std::uint64_t sifted = 0, errors = 0;
  for (const ExchangeRecord& r : records) {
    if (r.sifted) {
      ++sifted;
      if (r.error) ++errors;
    }
  }
  if (sifted == 0) throw std::invalid_argument("estimate_qber: no sifted rounds");
  const double q = static_cast<double>(errors) / static_cast<double>(sifted);
  return QberEstimate{q, std::sqrt(q * (1.0 - q) / static_cast<double>(sifted)), sifted, errors};
}

void write_records_csv(std::ostream& os, const std::vector<ExchangeRecord>& records) {
  os << "round,alice_basis,alice_bit,bob_basis,bob_bit,sifted,error\n";
  for (const ExchangeRecord& r : records) {
    os << r.round << ',' << (r.alice_basis == Basis::U ? 'U' : 'V') << ','
       << static_cast<int>(r.alice_bit) << ',' << (r.bob_basis == Basis::U ? 'U' : 'V') << ','
       << static_cast<int>(r.bob_bit) << ',' << (r.sifted ? 1 : 0) << ',' << (r.error ? 1 : 0)
       << '\n';
  }
}

}  // namespace qkd
