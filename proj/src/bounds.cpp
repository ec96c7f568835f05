#include "qkdlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "qkdlab/attacks.hpp"
#include "qkdlab/eve.hpp"
#include "qkdlab/rng.hpp"

namespace qkd {

namespace {

double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

void require_qber(double e, const char* who) {
  if (!(e >= 0.0 && e <= 0.5))
    throw std::invalid_argument(std::string(who) + ": e outside [0, 1/2]");
}

}  // namespace

double binary_entropy(double e) {
  e = clamp_unit(e);
  if (e <= 0.0 || e >= 1.0) return 0.0;
  return -e * std::log2(e) - (1.0 - e) * std::log2(1.0 - e);
}

double tau_error_discard(double e) {
  require_qber(e, "tau_error_discard");
  if (e > 1.0 / 3.0) return 1.0;
  const double num = 1.0 + 2.0 * e - 7.0 * e * e;
  const double den = (1.0 - e) * (1.0 - e);
  return clamp_unit(std::log2(num / den));
}

double tau_sb_with_ec(double e) {
  require_qber(e, "tau_sb_with_ec");
  return clamp_unit((1.0 - e) * tau_error_discard(e));
}

double tau_lutkenhaus(double e) {
  require_qber(e, "tau_lutkenhaus");
  return clamp_unit(std::log2(1.0 + 4.0 * e - 4.0 * e * e));
}

double tau_from_cp(double cp) {
  if (!(cp >= 0.5 - 1e-12 && cp <= 1.0 + 1e-12))
    throw std::invalid_argument("tau_from_cp: collision probability outside [1/2, 1]");
  return clamp_unit(1.0 + std::log2(std::clamp(cp, 0.5, 1.0)));
}

double attack_tau(double e, double delta) {
  const ConditionalFidelities f = conditional_fidelities(AttackParams{e, delta});
  return clamp_unit((1.0 - e) * std::log2(2.0 - f.f_eq) + e * std::log2(2.0 - f.f_neq));
}

OptimizeResult optimize_delta(double e, double resolution) {
  if (!(e > 0.0 && e < 0.5))
    throw std::invalid_argument("optimize_delta: e must be in (0, 1/2)");
  if (!(resolution > 0.0)) throw std::invalid_argument("optimize_delta: resolution must be > 0");

  const double lo = -0.5;
  const double hi = 2.0 * e - 0.5;
  // The affine grid arithmetic below can land one ulp outside [lo, hi];
  // attack_tau is strict about feasibility, so clamp at the boundary.
  const auto tau_at = [e, lo, hi](double d) { return attack_tau(e, std::clamp(d, lo, hi)); };

  // Coarse scan.
  const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / resolution)) + 1);
  int best = 0;
  double best_tau = -1.0;
  for (int i = 0; i < n; ++i) {
    const double d = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    const double t = tau_at(d);
    if (t > best_tau) {
      best_tau = t;
      best = i;
    }
  }

  // Golden-section refinement on the bracket around the best grid point.
  double a = lo + (hi - lo) * static_cast<double>(std::max(0, best - 1)) / (n - 1);
  double b = lo + (hi - lo) * static_cast<double>(std::min(n - 1, best + 1)) / (n - 1);
  const double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = tau_at(x1), f2 = tau_at(x2);
  while (b - a > 1e-12) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = tau_at(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = tau_at(x1);
    }
  }
  OptimizeResult res;
  res.delta_star = std::clamp(0.5 * (a + b), lo, hi);
  res.tau_star = tau_at(res.delta_star);

  const double closed_form = -(1.0 - 2.0 * e) * (1.0 - 2.0 * e);
  if (std::abs(2.0 * res.delta_star - closed_form) > 10.0 * resolution)
    throw std::logic_error("optimize_delta: optimum drifted from 2*delta = -(1-2e)^2 at e=" +
                           std::to_string(e));
  if (std::abs(res.tau_star - tau_lutkenhaus(e)) > 1e-9)
    throw std::logic_error("optimize_delta: maximum does not meet the closed-form bound at e=" +
                           std::to_string(e));
  return res;
}

const char* curve_kind_name(CurveKind k) {
  switch (k) {
    case CurveKind::ErrorDiscard: return "error-discard";
    case CurveKind::SbWithEc: return "sb-with-ec";
    case CurveKind::Lutkenhaus: return "lutkenhaus";
    case CurveKind::OptimizedEc: return "optimized-ec";
  }
  return "unknown";
}

namespace {

double curve_value(CurveKind kind, double e) {
  switch (kind) {
    case CurveKind::ErrorDiscard: return tau_error_discard(e);
    case CurveKind::SbWithEc: return tau_sb_with_ec(e);
    case CurveKind::Lutkenhaus: return tau_lutkenhaus(e);
    case CurveKind::OptimizedEc:
      // Endpoints are outside optimize_delta's open domain but have exact
      // limits: no attack at e=0, full bit at e=1/2.
      if (e <= 0.0) return 0.0;
      if (e >= 0.5) return 1.0;
      return optimize_delta(e).tau_star;
  }
  throw std::invalid_argument("curve_value: unknown kind");
}

}  // namespace

SecurityCurve sample_curve(CurveKind kind, const std::vector<double>& es, ExecPolicy policy) {
  SecurityCurve c;
  c.kind = kind;
  c.samples.resize(es.size());
  parallel_for(static_cast<std::int64_t>(es.size()), policy, [&](std::int64_t i) {
    const double e = es[static_cast<std::size_t>(i)];
    require_qber(e, "sample_curve");
    c.samples[static_cast<std::size_t>(i)] = CurvePoint{e, curve_value(kind, e)};
  });
  return c;
}

SecurityCurve monotonicize(SecurityCurve curve) {
  double running = 0.0;
  for (CurvePoint& p : curve.samples) {
    running = std::max(running, p.tau);
    p.tau = running;
  }
  curve.monotonicized = true;
  return curve;
}

std::vector<double> linear_grid(double start, double stop, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("linear_grid: step must be > 0");
  if (stop < start) throw std::invalid_argument("linear_grid: stop < start");
  std::vector<double> out;
  const double span = stop - start;
  const std::int64_t n = static_cast<std::int64_t>(std::floor(span / step + 1e-9));
  out.reserve(static_cast<std::size_t>(n + 1));
  for (std::int64_t i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

GainModel gains(std::uint64_t n, double e) {
  if (n < 1) throw std::invalid_argument("gains: n must be >= 1");
  require_qber(e, "gains");
  const double nd = static_cast<double>(n);
  const double h = binary_entropy(e);
  const double tau_d = tau_error_discard(e);
  const double tau_c = curve_value(CurveKind::OptimizedEc, e);
  GainModel g;
  g.n = n;
  g.e = e;
  g.g_d = nd * (1.0 - e) * (1.0 - tau_d) - nd * h;
  g.g_c = nd * (1.0 - tau_c) - nd * h;
  if (g.g_c < g.g_d - 1e-9 * nd)
    throw std::logic_error("gains: corrected gain fell below discard gain at e=" +
                           std::to_string(e));
  return g;
}

BoundCheckReport verify_bound_random(std::uint64_t samples, std::uint64_t seed,
                                     ExecPolicy policy) {
  if (samples < 1) throw std::invalid_argument("verify_bound_random: samples must be >= 1");

  std::vector<double> es(samples), ds(samples), slack(samples);
  parallel_for(static_cast<std::int64_t>(samples), policy, [&](std::int64_t i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    double e, d;
    // Rejection sampling of the feasible wedge delta <= 2e - 1/2.
    do {
      e = 0.5 * rng.next_double();
      d = rng.next_double() - 0.5;
    } while (d > 2.0 * e - 0.5);
    es[static_cast<std::size_t>(i)] = e;
    ds[static_cast<std::size_t>(i)] = d;
    slack[static_cast<std::size_t>(i)] = tau_lutkenhaus(e) - attack_tau(e, d);
  });

  BoundCheckReport rep;
  rep.samples = samples;
  rep.max_slack = slack[0];
  rep.min_slack = slack[0];
  rep.argmin_e = es[0];
  rep.argmin_delta = ds[0];
  for (std::uint64_t i = 0; i < samples; ++i) {
    rep.max_slack = std::max(rep.max_slack, slack[i]);
    if (slack[i] < rep.min_slack) {
      rep.min_slack = slack[i];
      rep.argmin_e = es[i];
      rep.argmin_delta = ds[i];
    }
  }
  if (rep.min_slack < -1e-9)
    throw std::runtime_error("verify_bound_random: bound violated at e=" +
                             std::to_string(rep.argmin_e) +
                             ", delta=" + std::to_string(rep.argmin_delta));
  return rep;
}

namespace {

void put_number(std::ostream& os, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  os << buf;
}

}  // namespace

void write_curve_csv(std::ostream& os, const SecurityCurve& curve) {
  os << "e,tau,kind,monotonicized\n";
  for (const CurvePoint& p : curve.samples) {
    put_number(os, p.e);
    os << ',';
    put_number(os, p.tau);
    os << ',' << curve_kind_name(curve.kind) << ',' << (curve.monotonicized ? 1 : 0) << '\n';
  }
}

void write_gains_csv(std::ostream& os, const std::vector<GainModel>& rows) {
  os << "e,n,g_d,g_c\n";
  for (const GainModel& g : rows) {
    put_number(os, g.e);
    os << ',' << g.n << ',';
    put_number(os, g.g_d);
    os << ',';
    put_number(os, g.g_c);
    os << '\n';
  }
}

}  // namespace qkd
