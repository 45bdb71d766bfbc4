// Command-line front end: simulate-absolute, simulate-shape, compare, check.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "shapedyn/checks.hpp"
#include "shapedyn/compare.hpp"
#include "shapedyn/dynamics_absolute.hpp"
#include "shapedyn/io.hpp"
#include "shapedyn/shape_reduced.hpp"

namespace fs = std::filesystem;
using namespace shapedyn;

namespace {

enum Exit { kOk = 0, kUsage = 2, kRuntime = 3, kComparison = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io::ConfigError("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

std::vector<std::string> state_header(std::size_t n) {
  std::vector<std::string> h{"t"};
  for (const char* p : {"x", "v"})
    for (std::size_t i = 1; i <= n; ++i)
      for (const char* c : {"x", "y", "z"}) h.push_back(p + std::to_string(i) + c);
  return h;
}

int simulate_absolute(const std::string& config, const std::string& out) {
  const auto cfg = io::load_config(config);
  if (!cfg.absolute) throw UsageError("simulate-absolute needs 'initial_absolute'");
  const fs::path dir = prepare_out(out);
  const Trajectory tr = integrate(cfg.masses, *cfg.absolute, cfg.duration, cfg.integrator, cfg.potential);
  io::CsvWriter traj((dir / "trajectory.csv").string(), state_header(cfg.masses.size()));
  io::CsvWriter cons((dir / "conserved.csv").string(), {"t", "E", "Px", "Py", "Pz", "Jx", "Jy", "Jz", "D"});
  for (std::size_t k = 0; k < tr.size(); ++k) {
    std::vector<double> row{tr.t[k]};
    for (const auto* block : {&tr.states[k].config.x, &tr.states[k].vel})
      for (const auto& v : *block) row.insert(row.end(), {v.x(), v.y(), v.z()});
    traj.row(row);
    const auto& q = tr.conserved[k];
    cons.row({tr.t[k], q.E, q.P.x(), q.P.y(), q.P.z(), q.J.x(), q.J.y(), q.J.z(), q.D});
  }
  return kOk;
}

int simulate_shape(const std::string& config, const std::string& out) {
  const auto cfg = io::load_config(config);
  if (!cfg.shape) throw UsageError("simulate-shape needs 'initial_shape'");
  if (cfg.masses.size() != 3) throw UsageError("simulate-shape needs three masses");
  if (!cfg.shape->L.isZero(0.0)) throw UsageError("simulate-shape needs L = 0");
  if (cfg.potential.kind == PotentialKind::Newton) throw UsageError("simulate-shape needs a scale-invariant potential");
  if (!three_body_in_domain(cfg.shape->s1, cfg.shape->s2)) throw UsageError("initial shape outside the chart domain");
  const fs::path dir = prepare_out(out);
  const ShapeTrajectory tr = integrate_shape(cfg.masses, *cfg.shape, cfg.duration, cfg.integrator, cfg.potential);
  io::CsvWriter csv((dir / "shape.csv").string(), {"t", "s1", "s2", "lambda", "s1dot", "s2dot", "lamdot", "E_s"});
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const auto& s = tr.states[k];
    csv.row({tr.tau[k], s.s1, s.s2, s.lambda, s.s1dot, s.s2dot, s.lamdot, tr.energy[k]});
  }
  return kOk;
}

int compare(const std::string& config, double threshold, const std::string& out) {
  const auto cfg = io::load_config(config);
  if (!cfg.absolute) throw UsageError("compare needs 'initial_absolute'");
  if (cfg.masses.size() != 3) throw UsageError("compare needs three masses");
  if (!(threshold >= 0.0)) throw UsageError("threshold must be nonnegative");
  if (!(cfg.duration > 0.0)) throw UsageError("duration must be positive");
  if (cfg.potential.kind == PotentialKind::Newton) throw UsageError("compare needs a scale-invariant potential");
  const AbsoluteState s0 = to_cm_frame(cfg.masses, *cfg.absolute);
  const auto q = conserved(cfg.masses, s0);
  const double scale = std::sqrt(i_cm(cfg.masses, s0.config.x) * 2.0 * kinetic_energy(cfg.masses, s0));
  if (q.J.norm() > 1e-9 * std::max(scale, 1e-300)) throw UsageError("compare needs zero angular momentum");
  const auto sc0 = shape_coordinates(s0.config.x);
  if (!three_body_in_domain(sc0.s1, sc0.s2)) throw UsageError("initial shape outside the chart domain");
  const fs::path dir = prepare_out(out);

  CompareOptions opt;
  opt.integrator = cfg.integrator;
  const MassVector mr = cfg.reduced_masses ? *cfg.reduced_masses : cfg.masses;
  if (mr.size() != 3) throw UsageError("reduced_masses needs three entries");
  const ComparisonResult r = compare_runs(cfg.masses, mr, s0, cfg.duration, opt, cfg.potential);

  io::CsvWriter csv((dir / "compare.csv").string(), {"t", "tau", "s1_full", "s2_full", "s1_reduced", "s2_reduced"});
  std::vector<double> s1, s2;
  for (const auto& s : r.reduced.states) {
    s1.push_back(s.s1);
    s2.push_back(s.s2);
  }
  const Pchip f1(r.reduced.tau, s1), f2(r.reduced.tau, s2);
  for (std::size_t k = 0; k < r.full.size(); ++k) {
    const auto sc = shape_coordinates(r.full.states[k].config.x);
    const double tau = std::min(r.tau_full[k], r.reduced.tau.back());
    csv.row({r.full.t[k], r.tau_full[k], sc.s1, sc.s2, f1(tau), f2(tau)});
  }

  CheckReport rep{"compare", {}};
  rep.results.push_back({"s1_max_deviation", r.samples, r.max_s1, r.max_s1, threshold, r.max_s1 <= threshold});
  rep.results.push_back({"s2_max_deviation", r.samples, r.max_s2, r.max_s2, threshold, r.max_s2 <= threshold});
  io::json j = io::to_json(rep);
  j["results"][0]["mean"] = r.mean_s1;
  j["results"][1]["mean"] = r.mean_s2;
  j["threshold"] = threshold;
  io::write_json((dir / "compare.json").string(), j);
  return rep.pass() ? kOk : kComparison;
}

int check(const std::string& suite, std::int64_t seed, const std::string& out) {
  bool known = false;
  for (const auto& s : check_suites()) known = known || s == suite;
  if (!known) throw UsageError("unknown suite '" + suite + "'");
  const fs::path dir = prepare_out(out);
  const CheckReport rep = run_check(suite, static_cast<std::uint64_t>(seed));
  io::write_json((dir / ("check_" + suite + ".json")).string(), io::to_json(rep));
  return rep.pass() ? kOk : kComparison;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity-reduced N-body dynamics"};
  app.require_subcommand(1);
  std::string config, out, suite;
  double threshold = 1e-5;
  std::int64_t seed = 0;

  auto* sa = app.add_subcommand("simulate-absolute", "integrate in absolute space");
  sa->add_option("--config", config)->required();
  sa->add_option("--out", out)->required();
  auto* ss = app.add_subcommand("simulate-shape", "integrate the reduced three-body equations");
  ss->add_option("--config", config)->required();
  ss->add_option("--out", out)->required();
  auto* cp = app.add_subcommand("compare", "full versus reduced three-body run");
  cp->add_option("--config", config)->required();
  cp->add_option("--threshold", threshold)->required();
  cp->add_option("--out", out)->required();
  auto* ck = app.add_subcommand("check", "run a property suite");
  ck->add_option("--suite", suite)->required();
  ck->add_option("--seed", seed)->required();
  ck->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return kUsage;
  }

  try {
    if (*sa) return simulate_absolute(config, out);
    if (*ss) return simulate_shape(config, out);
    if (*cp) return compare(config, threshold, out);
    return check(suite, seed, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return kUsage;
  } catch (const io::ConfigError& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    const bool usage = e.kind() == ErrorKind::InvalidArgument || e.kind() == ErrorKind::ChartDomain;
    return usage ? kUsage : kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return kRuntime;
  }
}
