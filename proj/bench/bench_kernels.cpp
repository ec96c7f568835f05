// Serial vs OpenMP timings for the three kernels that carry the lab's
// runtime: the exchange loop, the optimized-curve sweep, and the random
// bound check. Each row also asserts that the two paths agree exactly —
// round i draws from its own counter stream, so scheduling cannot change
// any result, only the wall time.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <vector>

#include "qkdlab/attacks.hpp"
#include "qkdlab/bb84.hpp"
#include "qkdlab/bounds.hpp"
#include "qkdlab/parallel.hpp"

namespace {

using namespace qkd;

template <class Fn>
double best_ms(int reps, const Fn& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

struct Row {
  const char* name;
  double serial_ms;
  double parallel_ms;
  bool agree;
};

double exchange_checksum(const Exchange& ex) {
  // Folds every record, including the collapsed probe amplitudes, so a
  // single diverging round shows up.
  double acc = 0.0;
  for (const ExchangeRecord& r : ex.records) {
    acc += static_cast<double>(r.bob_bit) + 2.0 * r.error + 0.5 * r.sifted;
    for (const cplx& z : r.probe) acc += std::norm(z);
  }
  return acc + static_cast<double>(ex.summary.errors);
}

}  // namespace

int main() {
  std::vector<Row> rows;

  {
    const SbAttack sb = sb_attack(0.1);
    const AttackExecutor ex = executor_from_unitary(sb.u, sb.w);
    constexpr std::uint64_t kN = 200000, kSeed = 42;
    double cs = 0.0, cp = 0.0;
    const double s = best_ms(3, [&] { cs = exchange_checksum(run_exchange(ex, kN, kSeed, ExecPolicy::Serial)); });
    const double p = best_ms(3, [&] { cp = exchange_checksum(run_exchange(ex, kN, kSeed, ExecPolicy::Parallel)); });
    rows.push_back({"exchange        sb e=0.1, n=2e5", s, p, cs == cp});
  }
  {
    const std::vector<double> es = linear_grid(0.001, 0.499, 0.001);
    SecurityCurve a, b;
    const double s = best_ms(2, [&] { a = sample_curve(CurveKind::OptimizedEc, es, ExecPolicy::Serial); });
    const double p = best_ms(2, [&] { b = sample_curve(CurveKind::OptimizedEc, es, ExecPolicy::Parallel); });
    bool agree = a.samples.size() == b.samples.size();
    for (std::size_t i = 0; agree && i < a.samples.size(); ++i)
      agree = a.samples[i].tau == b.samples[i].tau;
    rows.push_back({"curve sweep     optimized-ec, 499 pts", s, p, agree});
  }
  {
    BoundCheckReport a{}, b{};
    const double s = best_ms(2, [&] { a = verify_bound_random(100000, 7, ExecPolicy::Serial); });
    const double p = best_ms(2, [&] { b = verify_bound_random(100000, 7, ExecPolicy::Parallel); });
    rows.push_back({"bound sweep     1e5 random attacks", s, p,
                    a.min_slack == b.min_slack && a.max_slack == b.max_slack});
  }

  std::printf("threads: %d\n", hardware_threads());
  std::printf("%-40s %10s %10s %8s %6s\n", "kernel", "serial", "openmp", "speedup", "agree");
  bool all_agree = true;
  for (const Row& r : rows) {
    std::printf("%-40s %8.1fms %8.1fms %7.2fx %6s\n", r.name, r.serial_ms, r.parallel_ms,
                r.serial_ms / r.parallel_ms, r.agree ? "yes" : "NO");
    all_agree = all_agree && r.agree;
  }
  if (!all_agree) {
    std::printf("serial and parallel paths disagree\n");
    return 1;
  }
  return 0;
}
