#include "pfimex/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "pfimex/config.hpp"

namespace pfimex {

namespace {

namespace fs = std::filesystem;

long steps_for(double span, double h) {
  if (!(h > 0.0)) return 0;
  const double r = span / h;
  const long n = std::lround(r);
  return std::abs(r - static_cast<double>(n)) <= 1e-9 * std::max(1.0, r) ? n : static_cast<long>(std::ceil(r));
}

std::string out_path(const ExperimentSpec& spec, const std::string& name) {
  return (fs::path(spec.out_dir) / name).string();
}

int run_experiment(const ExperimentSpec& spec, bool quiet, std::ostream& out, std::ostream& err) {
  fs::create_directories(spec.out_dir);
  const auto start = std::chrono::steady_clock::now();
  int code = kExitOk;

  switch (spec.kind) {
    case ExperimentKind::Converge: {
      const ConvergenceResult r = run_convergence(spec);
      write_convergence_csv(r, out_path(spec, "convergence.csv"));
      for (const auto& c : r.curves) {
        if (!quiet) {
          for (const auto& row : c.rows) {
            out << c.label << "  h=" << row.h << "  error=" << row.error
                << (row.failure.empty() ? "" : "  (" + row.failure + ")") << '\n';
          }
        }
        out << "slope " << c.label << ' ' << c.slope << '\n';
      }
      break;
    }
    case ExperimentKind::M2Sweep: {
      const SweepResult r = run_m2_sweep(spec);
      write_sweep_csv(r, out_path(spec, "m2sweep.csv"));
      out << "max mobility " << r.mobility_max0 << '\n';
      for (const auto& c : r.curves) {
        out << "threshold " << c.label << ' ';
        if (c.m2_star) {
          out << "m2*=" << *c.m2_star << " alpha*=" << *c.alpha_star << " +/- " << c.uncertainty / r.mobility_max0;
        } else {
          out << "not bracketed";
        }
        out << (c.monotone_above ? "" : " (errors not monotone above threshold)") << '\n';
      }
      break;
    }
    case ExperimentKind::StabilityMap: {
      const StabilityMap m = run_stability_map(spec);
      write_map_csv(m, out_path(spec, "stability_matrix.csv"), out_path(spec, "stability_cells.csv"),
                    out_path(spec, "stability_boundary.csv"));
      if (!quiet) {
        for (std::size_t i = 0; i < m.h_list.size(); ++i) {
          out << "h=" << m.h_list[i] << "  boundary=";
          if (m.boundary[i]) {
            out << *m.boundary[i];
          } else {
            out << "none";
          }
          out << (m.non_monotone[i] ? "  (non-monotone)" : "") << '\n';
        }
      }
      break;
    }
    case ExperimentKind::Simulate: {
      const SimulationResult r = run_simulate(spec, true);
      std::ofstream csv(out_path(spec, "record.csv"));
      write_record_csv(r.record, csv);
      if (r.record.failure) {
        std::ofstream f(out_path(spec, "failure.txt"));
        f << "step " << r.record.failure->step << "\ntime " << r.record.failure->time << "\nreason "
          << r.record.failure->reason << '\n';
        err << "numerical failure at step " << r.record.failure->step << " (t = " << r.record.failure->time
            << "): " << r.record.failure->reason << '\n';
        code = kExitNumerical;
      }
      if (!quiet) {
        out << "steps " << r.record.steps << "  final t " << r.record.final_time << "  snapshots "
            << r.snapshots.size() << "  energy monotone " << (r.record.energy_monotone ? "yes" : "no") << '\n';
      }
      break;
    }
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(spec, to_string(spec.kind), wall);
  return code;
}

}  // namespace

std::string describe_plan(const ExperimentSpec& spec) {
  std::ostringstream os;
  const double span = spec.t_end - spec.t0;
  std::size_t points = 1;
  for (auto n : spec.grid.n) points *= n;
  os << "experiment " << to_string(spec.kind) << "\nmodel " << spec.model.preset << "\ngrid points " << points
     << '\n';
  long runs = 0, steps = 0;
  switch (spec.kind) {
    case ExperimentKind::Converge:
      for (double h : spec.h_list) steps += steps_for(span, h);
      steps *= static_cast<long>(spec.schemes.size());
      runs = static_cast<long>(spec.schemes.size() * spec.h_list.size());
      if (spec.reference.kind == ReferenceKind::Richardson) {
        runs += 2;
        steps += 3 * steps_for(span, spec.reference.h_fine);
      }
      break;
    case ExperimentKind::M2Sweep: {
      const std::size_t nm = spec.m2_list.empty() ? spec.alpha_list.size() : spec.m2_list.size();
      runs = static_cast<long>(spec.schemes.size() * nm);
      steps = runs * steps_for(span, spec.h);
      if (spec.reference.kind == ReferenceKind::Richardson) {
        runs += 2;
        steps += 3 * steps_for(span, spec.reference.h_fine);
      }
      break;
    }
    case ExperimentKind::StabilityMap:
      runs = static_cast<long>(spec.h_list.size() * spec.param_list.size());
      steps = runs * spec.steps;
      os << "cells " << runs << " (" << spec.h_list.size() << " h x " << spec.param_list.size() << " params)\n";
      break;
    case ExperimentKind::Simulate:
      runs = 1;
      steps = steps_for(span, spec.h);
      break;
  }
  if (spec.prepare) {
    runs += 1;
    steps += steps_for(spec.prepare->t_end, spec.prepare->h);
  }
  os << "runs " << runs << "\nstep budget " << steps << '\n';
  return os.str();
}

void write_manifest(const ExperimentSpec& spec, const std::string& command, double wall_seconds) {
  nlohmann::ordered_json m;
  m["version"] = kVersion;
  m["command"] = command;
  nlohmann::ordered_json seeds;
  seeds["seed"] = spec.seed;
  if (const auto* r = std::get_if<RandomIC>(&spec.initial)) seeds["initial_condition"] = r->seed;
  m["seeds"] = seeds;
  if (spec.prepare) m["preparation"] = {{"t_end", spec.prepare->t_end}, {"h", spec.prepare->h}};
  m["timings"] = {{"wall_seconds", wall_seconds}};
  m["config"] = config_to_json(spec);
  fs::create_directories(spec.out_dir);
  std::ofstream os(out_path(spec, "manifest.json"));
  if (!os) throw Error("cannot write manifest into '" + spec.out_dir + "'");
  os << m.dump(2) << '\n';
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pseudo-spectral IMEX solvers for fourth-order phase-field equations"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int threads = -1;
  std::uint64_t seed = 0;
  bool quiet = false;

  std::vector<CLI::App*> subs;
  for (const char* name : {"simulate", "converge", "m2sweep", "stabmap", "validate"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides out_dir)");
    sub->add_option("--threads", threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", seed, "override the random seed");
    sub->add_flag("--quiet", quiet, "only print summary lines");
    subs.push_back(sub);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  const bool seed_given = chosen->count("--seed") > 0;

  try {
    ExperimentSpec spec = parse_config_file(config_path);
    if (!out_dir.empty()) spec.out_dir = out_dir;
    if (threads >= 0) spec.threads = threads;
    if (seed_given) {
      spec.seed = seed;
      if (auto* r = std::get_if<RandomIC>(&spec.initial)) r->seed = seed;
    }
    if (command == "validate") {
      // Building the model and grid catches errors the parser cannot see.
      build_model(spec);
      build_grid(spec);
      for (const auto& s : spec.schemes) s.validate();
      spec.split.validate();
      out << "config ok\n" << describe_plan(spec);
      return kExitOk;
    }
    if (command != to_string(spec.kind)) {
      err << "error: subcommand '" << command << "' does not match experiment '" << to_string(spec.kind)
          << "' in " << config_path << '\n';
      return kExitConfig;
    }
    return run_experiment(spec, quiet, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace pfimex
