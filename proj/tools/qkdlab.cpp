// Command-line front end: curve export, attack construction reports, seeded
// Monte Carlo runs, and the invariant verifier.
//
// Exit codes: 0 success, 1 failed invariant, 2 usage or infeasible input.
// Every output embeds the tool version, the seed, and (where applicable) the
// grid in '#' header comments or JSON fields; given an explicit --seed, all
// outputs are byte-identical across runs and thread counts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qkdlab/attacks.hpp"
#include "qkdlab/bb84.hpp"
#include "qkdlab/bounds.hpp"
#include "qkdlab/eve.hpp"
#include "qkdlab/parallel.hpp"
#include "svg_plot.hpp"

namespace {

using nlohmann::json;
using namespace qkd;

constexpr const char* kVersion = "1.0.0";

struct GridSpec {
  double start = 0.0;
  double stop = 0.5;
  double step = 0.005;
};

double parse_double(const std::string& s, const char* what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (...) {
    pos = 0;
  }
  if (s.empty() || pos != s.size())
    throw std::invalid_argument(std::string(what) + ": bad number '" + s + "'");
  return v;
}

GridSpec parse_grid(const std::string& spec) {
  std::istringstream in(spec);
  std::string part;
  std::vector<double> vals;
  while (std::getline(in, part, ':')) vals.push_back(parse_double(part, "--grid"));
  if (vals.size() != 3) throw std::invalid_argument("--grid expects start:stop:step");
  GridSpec g{vals[0], vals[1], vals[2]};
  if (!(g.step > 0.0)) throw std::invalid_argument("--grid step must be > 0");
  if (!(g.start < g.stop)) throw std::invalid_argument("--grid start must be below stop");
  return g;
}

std::string num12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void put_file_header(std::ostream& os, std::uint64_t seed, const GridSpec* grid) {
  os << "# qkdlab " << kVersion << "\n";
  os << "# seed " << seed << "\n";
  if (grid)
    os << "# grid " << num12(grid->start) << ":" << num12(grid->stop) << ":" << num12(grid->step)
       << "\n";
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw std::invalid_argument("cannot write " + p.string());
  return os;
}

int cmd_curves(const GridSpec& grid, const std::string& format, const std::string& out_dir,
               std::uint64_t seed) {
  const std::vector<double> es = linear_grid(grid.start, grid.stop, grid.step);
  const std::filesystem::path dir(out_dir);
  std::error_code dir_ec;
  std::filesystem::create_directories(dir, dir_ec);
  if (dir_ec) throw std::invalid_argument("cannot write " + dir.string() + ": " + dir_ec.message());

  const SecurityCurve discard = sample_curve(CurveKind::ErrorDiscard, es);
  const SecurityCurve sb = sample_curve(CurveKind::SbWithEc, es);
  const SecurityCurve envelope = sample_curve(CurveKind::Lutkenhaus, es);
  const SecurityCurve optimized = sample_curve(CurveKind::OptimizedEc, es);
  const SecurityCurve sb_monotone = monotonicize(sb);

  json files = json::array();
  const auto emit = [&](const SecurityCurve& c, const std::string& name) {
    std::ofstream os = open_out(dir / name);
    put_file_header(os, seed, &grid);
    write_curve_csv(os, c);
    files.push_back((dir / name).string());
  };
  emit(discard, "error-discard.csv");
  emit(sb, "sb-with-ec.csv");
  emit(sb_monotone, "sb-with-ec-monotone.csv");
  emit(envelope, "lutkenhaus.csv");
  emit(optimized, "optimized-ec.csv");

  if (format == "svg") {
    std::ofstream os = open_out(dir / "sb_vs_envelope.svg");
    write_curve_svg(os,
                    {{"SB attack with error correction", "#d62728", false, sb.samples},
                     {"Lutkenhaus bound", "#1f77b4", false, envelope.samples}},
                    SvgAxes{});
    files.push_back((dir / "sb_vs_envelope.svg").string());
  }

  const json out = {{"version", kVersion},
                    {"subcommand", "curves"},
                    {"points", es.size()},
                    {"files", files}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

json gram_as_json(const ProbeGeometry& g) {
  json gram = json::array();
  const Operator g4 = g.full_gram();
  for (int i = 0; i < 4; ++i) {
    json row = json::array();
    for (int j = 0; j < 4; ++j) row.push_back(g4.at(i, j).real());
    gram.push_back(std::move(row));
  }
  return gram;
}

int cmd_attack(const std::string& type, double e, bool have_delta, double delta,
               const std::string& out_path) {
  AttackParams params{};
  json extra = json::object();
  if (type == "sb") {
    params = {e, 2.0 * e - 0.5};
  } else if (type == "optimal") {
    const OptimizeResult r = optimize_delta(e);
    params = {e, r.delta_star};
    const AngleSolution sol = solve_optimal_angles(e);
    extra["angles"] = {{"lambda", sol.angles.lambda},
                       {"mu", sol.angles.mu},
                       {"phi", sol.angles.phi},
                       {"theta", sol.angles.theta},
                       {"residual", sol.residual}};
  } else {  // param
    if (!have_delta) throw std::invalid_argument("attack param requires --delta");
    params = {e, delta};
  }

  const ProbeGeometry geometry =
      (type == "sb") ? sb_attack(e).geometry : realize_probe_geometry(params);
  const ConditionalFidelities f = conditional_fidelities(params);
  const CollisionStats cs = leakage_assisted_stats(params);

  json out = {
      {"version", kVersion},
      {"subcommand", "attack"},
      {"type", type},
      {"e", params.e},
      {"delta", params.delta},
      {"gram_order", {"uu", "ubar_ubar", "u_ubar", "ubar_u"}},
      {"gram", gram_as_json(geometry)},
      {"fidelities",
       {{"f_eq", f.f_eq},
        {"f_neq", f.f_neq},
        {"sqrt_f_eq", std::sqrt(f.f_eq)},
        {"sqrt_f_neq", std::sqrt(f.f_neq)}}},
      {"collision",
       {{"cp", cs.cp}, {"cp_eq", cs.cp_eq}, {"cp_neq", cs.cp_neq}, {"cp_bound", cs.cp_bound}}},
      {"tau", attack_tau(params.e, params.delta)},
  };
  for (auto& [key, value] : extra.items()) out[key] = value;

  std::cout << out.dump(2) << "\n";
  if (!out_path.empty()) open_out(out_path) << out.dump(2) << "\n";
  return 0;
}

struct McSetup {
  AttackParams params;
  AttackExecutor executor;
  EveStrategy strategy;
  CollisionStats analytic;  // se fields zero
};

McSetup make_mc_setup(const std::string& type, double e, bool have_delta, double delta) {
  if (type == "identity") {
    const ProbeGeometry g = realize_probe_geometry({0.0, -0.5});
    TwoStageResult ts = two_stage_strategy(g);
    return {{0.0, -0.5}, executor_from_geometry(g), std::move(ts.strategy), std::move(ts.stats)};
  }
  if (type == "sb") {
    const SbAttack sb = sb_attack(e);
    const AttackParams p{e, 2.0 * e - 0.5};
    // Helstrom on the kept-bit pair; for this attack the error probes
    // coincide, so the leakage-assisted stats are its analytic reference.
    return {p, executor_from_unitary(sb.u, sb.w), helstrom_strategy(sb.geometry),
            leakage_assisted_stats(p)};
  }
  AttackParams p{e, 0.0};
  if (type == "optimal") {
    p.delta = optimize_delta(e).delta_star;
  } else {  // param
    if (!have_delta) throw std::invalid_argument("montecarlo param requires --delta");
    p.delta = delta;
  }
  const ProbeGeometry g = realize_probe_geometry(p);
  TwoStageResult ts = two_stage_strategy(g);
  return {p, executor_from_geometry(g), std::move(ts.strategy), std::move(ts.stats)};
}

int cmd_montecarlo(const std::string& type, double e, bool have_delta, double delta,
                   std::uint64_t n, std::uint64_t seed, const std::string& out_path) {
  const McSetup setup = make_mc_setup(type, e, have_delta, delta);
  const Exchange ex = run_exchange(setup.executor, n, seed);
  // Exchange rounds and Eve's sampling draw from domain-separated streams,
  // so one seed drives both without correlation.
  const CollisionStats emp = simulate_eve(ex.records, setup.strategy, seed);

  const auto field = [](double empirical, double se, double analytic) {
    json f = {{"empirical", empirical}, {"stderr", se}, {"analytic", analytic}};
    const double diff = empirical - analytic;
    if (se > 0.0)
      f["z"] = diff / se;
    else
      f["z"] = (diff == 0.0) ? json(0.0) : json();
    return f;
  };

  json out = {
      {"version", kVersion},
      {"subcommand", "montecarlo"},
      {"attack", {{"type", type}, {"e", setup.params.e}, {"delta", setup.params.delta}}},
      {"n", n},
      {"seed", seed},
      {"sifted", ex.summary.sifted},
      {"errors", ex.summary.errors},
      {"qber", field(ex.summary.qber, ex.summary.qber_stderr, setup.params.e)},
      {"collision",
       {{"cp", field(emp.cp, emp.se_cp, setup.analytic.cp)},
        {"cp_eq", field(emp.cp_eq, emp.se_cp_eq, setup.analytic.cp_eq)},
        {"cp_neq", field(emp.cp_neq, emp.se_cp_neq, setup.analytic.cp_neq)}}},
  };

  if (!out_path.empty()) {
    std::ofstream os = open_out(out_path);
    put_file_header(os, seed, nullptr);
    os << "# attack " << type << " e " << num12(setup.params.e) << " delta "
       << num12(setup.params.delta) << " n " << n << "\n";
    write_records_csv(os, ex.records);
    out["records_csv"] = out_path;
  }

  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_verify(std::uint64_t samples, int trials, std::uint64_t seed, double inject,
               const std::string& out_path) {
  json checks = json::array();
  bool all = true;
  const auto add = [&](const char* name, bool pass, json detail) {
    detail["name"] = name;
    detail["pass"] = pass;
    checks.push_back(std::move(detail));
    all = all && pass;
  };

  {
    // The explicit CNOT attack must average to the symmetric (e, 2e-1/2)
    // geometry under the dihedral group.
    const SbAttack sb = sb_attack(0.2);
    const SymmetrizationReport r = symmetrize_and_verify(sb.u, sb.w);
    const bool pass = r.pass && std::abs(r.averaged.e - 0.2) <= 1e-9 &&
                      std::abs(r.averaged.delta + 0.1) <= 1e-9;
    add("sb-symmetrization", pass,
        {{"unitary_residual", r.unitary_residual},
         {"omega_residual", r.omega_residual},
         {"phi_orth_residual", r.phi_orth_residual},
         {"phi_sum_residual", r.phi_sum_residual},
         {"averaged_e", r.averaged.e},
         {"averaged_delta", r.averaged.delta}});
  }
  {
    const SymmetrizationTrials t = symmetrize_random_trials(trials, seed);
    add("random-symmetrization", t.all_pass && t.max_residual <= 1e-10,
        {{"trials", t.trials}, {"max_residual", t.max_residual}});
  }
  {
    json detail;
    bool pass = false;
    try {
      const BoundCheckReport r = verify_bound_random(samples, seed);
      pass = r.min_slack >= -1e-9;
      detail = {{"samples", r.samples},
                {"min_slack", r.min_slack},
                {"max_slack", r.max_slack},
                {"argmin_e", r.argmin_e},
                {"argmin_delta", r.argmin_delta}};
    } catch (const std::exception& ex) {
      detail = {{"error", ex.what()}};
    }
    add("bound-no-violation", pass, detail);
  }
  {
    // The optimized attack must fill the envelope across the QBER grid.
    // `inject` shifts the optimizer's delta before checking; a nonzero shift
    // is the negative control and must fail this check.
    double max_tau_gap = 0.0;
    double max_delta_gap = 0.0;
    for (int i = 1; i <= 49; ++i) {
      const double qber = i * 0.01;
      const OptimizeResult r = optimize_delta(qber);
      const double d = std::clamp(r.delta_star + inject, -0.5, 2.0 * qber - 0.5);
      max_tau_gap = std::max(max_tau_gap, std::abs(attack_tau(qber, d) - tau_lutkenhaus(qber)));
      const double closed = (1.0 - 2.0 * qber) * (1.0 - 2.0 * qber);
      max_delta_gap = std::max(max_delta_gap, std::abs(2.0 * d + closed));
    }
    add("optimal-fills-envelope", max_tau_gap <= 1e-9 && max_delta_gap <= 1e-4,
        {{"max_tau_gap", max_tau_gap},
         {"max_2delta_gap", max_delta_gap},
         {"injected_delta_perturbation", inject}});
  }

  const json out = {{"version", kVersion}, {"subcommand", "verify"},
                    {"seed", seed},        {"samples", samples},
                    {"trials", trials},    {"pass", all},
                    {"checks", checks}};
  std::cout << out.dump(2) << "\n";
  if (!out_path.empty()) open_out(out_path) << out.dump(2) << "\n";
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entangling-probe attack laboratory for BB84"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  int threads = 0;

  CLI::App* curves = app.add_subcommand(
      "curves", "export the discarded-fraction curves as CSV (and optionally SVG)");
  std::string grid_str = "0:0.5:0.005";
  std::string curves_format = "csv";
  std::string curves_out = "curves-out";
  std::uint64_t curves_seed = 0;
  curves->add_option("--grid", grid_str, "QBER grid start:stop:step")->capture_default_str();
  curves->add_option("--format", curves_format, "csv | svg (svg adds the two-curve plot)")
      ->check(CLI::IsMember({"csv", "svg"}))
      ->capture_default_str();
  curves->add_option("--out", curves_out, "output directory")->capture_default_str();
  curves->add_option("--seed", curves_seed, "seed recorded in the file headers")
      ->capture_default_str();
  curves->add_option("--threads", threads, "worker threads (default: all)");

  CLI::App* attack =
      app.add_subcommand("attack", "construct an attack and print its geometry report");
  std::string attack_type;
  double attack_e = 0.0;
  double attack_delta = 0.0;
  std::string attack_out;
  attack->add_option("type", attack_type, "sb | optimal | param")
      ->required()
      ->check(CLI::IsMember({"sb", "optimal", "param"}));
  attack->add_option("--e", attack_e, "QBER induced by the attack")->required();
  attack->add_option("--delta", attack_delta, "overlap imbalance (param only)");
  attack->add_option("--out", attack_out, "also write the JSON report to this file");

  CLI::App* mc = app.add_subcommand(
      "montecarlo", "run a seeded exchange plus Eve's sampling; report z-scores");
  std::string mc_type;
  double mc_e = 0.0;
  double mc_delta = 0.0;
  std::uint64_t mc_n = 100000;
  std::uint64_t mc_seed = 1;
  std::string mc_out;
  mc->add_option("type", mc_type, "sb | optimal | param | identity")
      ->required()
      ->check(CLI::IsMember({"sb", "optimal", "param", "identity"}));
  mc->add_option("--e", mc_e, "QBER induced by the attack");
  mc->add_option("--delta", mc_delta, "overlap imbalance (param only)");
  mc->add_option("--n", mc_n, "signal count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  mc->add_option("--seed", mc_seed, "seed for the exchange and Eve's sampling")
      ->capture_default_str();
  mc->add_option("--out", mc_out, "write the per-round records CSV to this file");
  mc->add_option("--threads", threads, "worker threads (default: all)");

  CLI::App* verify =
      app.add_subcommand("verify", "run the invariant suite; exit 0 iff all checks pass");
  std::uint64_t v_samples = 10000;
  int v_trials = 20;
  std::uint64_t v_seed = 1;
  double v_inject = 0.0;
  std::string v_out;
  verify->add_option("--samples", v_samples, "random feasible attacks to test against the bound")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  verify->add_option("--trials", v_trials, "random symmetrization trials")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  verify->add_option("--seed", v_seed, "seed for the random suites")->capture_default_str();
  verify->add_option("--inject-delta-perturbation", v_inject,
                     "negative-control hook: shift the optimizer's delta before checking");
  verify->add_option("--out", v_out, "also write the JSON report to this file");
  verify->add_option("--threads", threads, "worker threads (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (threads > 0) set_thread_count(threads);

  try {
    if (app.got_subcommand(curves))
      return cmd_curves(parse_grid(grid_str), curves_format, curves_out, curves_seed);
    if (app.got_subcommand(attack)) {
      if (attack->count("--delta") && attack_type != "param")
        throw std::invalid_argument("--delta only applies to attack param");
      return cmd_attack(attack_type, attack_e, attack->count("--delta") > 0, attack_delta,
                        attack_out);
    }
    if (app.got_subcommand(mc)) {
      if (mc_type == "identity") {
        if (mc->count("--e") || mc->count("--delta"))
          throw std::invalid_argument("montecarlo identity takes no --e/--delta");
      } else if (!mc->count("--e")) {
        throw std::invalid_argument("montecarlo " + mc_type + " requires --e");
      }
      if (mc->count("--delta") && mc_type != "param")
        throw std::invalid_argument("--delta only applies to montecarlo param");
      return cmd_montecarlo(mc_type, mc_e, mc->count("--delta") > 0, mc_delta, mc_n, mc_seed,
                            mc_out);
    }
    return cmd_verify(v_samples, v_trials, v_seed, v_inject, v_out);
  } catch (const std::invalid_argument& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
}
