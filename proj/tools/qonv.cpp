// qonv: command-line front end for the experiment harness.
//
//   qonv run <config-file> [--out DIR] [--jobs N] [--seed-offset K]
//   qonv theory --instances N --max-size M [--seed S] [--out DIR]
//   qonv bound --c C --eps E1,E2,... [--out DIR]
//
// Exit codes: 0 pass, 1 assertion failure, 2 configuration error, 3 I/O error.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qonv/harness/config.hpp"
#include "qonv/harness/experiments.hpp"
#include "qonv/platform.hpp"

namespace h = qonv::harness;

namespace {

std::vector<double> parse_eps_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& e : h::split_list(text)) out.push_back(h::parse_double(e, "--eps"));
  return out;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"qonv: QNN neural-field laboratory"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment described by a config file");
  std::string config_path, out_dir;
  std::size_t jobs = 1;
  std::uint64_t seed_offset = 0;
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_option("--jobs", jobs, "parallel (model, seed) runs")->check(CLI::PositiveNumber);
  run->add_option("--seed-offset", seed_offset, "added to every configured seed");

  auto* theory = app.add_subcommand("theory", "verify the risk chain on random lattice problems");
  std::size_t instances = 1000, max_size = 16;
  std::uint64_t theory_seed = 0;
  std::string theory_out;
  theory->add_option("--instances", instances, "number of random instances")->required();
  theory->add_option("--max-size", max_size, "largest lattice size")->required();
  theory->add_option("--seed", theory_seed, "instance generator seed");
  theory->add_option("--out", theory_out, "write theory.csv and theory_summary.csv here");

  auto* bound = app.add_subcommand("bound", "tabulate the Gaussian-count lower bound");
  double c = 1.0;
  std::string eps_text, bound_out;
  bound->add_option("--c", c, "constant c > 0")->required();
  bound->add_option("--eps", eps_text, "comma-separated target errors")->required();
  bound->add_option("--out", bound_out, "write bound.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*run) {
    const auto cfg = h::load_config(config_path);
    h::RunOptions opt;
    opt.out_dir = out_dir;
    opt.jobs = jobs;
    opt.seed_offset = seed_offset;
    const auto outcome = h::run_config(cfg, opt);
    std::cout << outcome.report;
    return outcome.exit_code;
  }
  if (*theory) {
    if (max_size < 3) throw qonv::ConfigError("--max-size must be >= 3");
    const auto rep = h::run_theory(instances, max_size, theory_seed);
    if (!theory_out.empty()) {
      h::write_atomic(std::filesystem::path(theory_out) / "theory.csv", h::theory_csv(rep));
      h::write_atomic(std::filesystem::path(theory_out) / "theory_summary.csv", h::theory_summary_csv(rep));
    }
    std::cout << h::theory_summary_csv(rep);
    for (const auto& r : rep.rows) {
      if (r.violated) std::cerr << "violation at instance " << r.index << "\n" << r.record;
    }
    return rep.passed() ? 0 : 1;
  }
  if (!(c > 0.0)) throw qonv::ConfigError("--c must be > 0");
  const auto eps = parse_eps_list(eps_text);
  for (double e : eps) {
    if (!(e > 0.0)) throw qonv::ConfigError("--eps values must be > 0");
  }
  const std::string table = h::bound_csv(h::run_bound_table(c, eps));
  if (!bound_out.empty()) h::write_atomic(std::filesystem::path(bound_out) / "bound.csv", table);
  std::cout << table;
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  qonv::tune_allocator();
  try {
    return dispatch(argc, argv);
  } catch (const qonv::Error& e) {
    std::cerr << "qonv: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "qonv: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "qonv: " << e.what() << "\n";
    return 1;
  }
}
