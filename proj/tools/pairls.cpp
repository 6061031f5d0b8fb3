// pairls: command-line front end.
//
//   pairls solve  <file.smt2> [--cutoff S] [--seed N] [--L N] [--K N] [--bms-t N]
//                 [--trace path] [--swap-mode-thresholds] [--no-pair] [--one-level]
//                 [--max-steps N] [--trace-steps] [--print-model]
//   pairls gen    --input <file.smt2> --sr R --weights unit|random --seed N --out <file>
//   pairls bench  --dir D --cutoff S --jobs N --report out.csv [--ablations]
//   pairls oracle <file.smt2> --lo L --hi H
//   pairls cnf    <file.smt2>
//
// Exit codes: 0 success, 10 hard-infeasible / no solution, 2 parse error,
// 3 unsupported feature, 1 other failures.

#include <climits>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pairls/pairls.hpp"

namespace {

constexpr int kExitNoSolution = 10;
constexpr int kExitParse = 2;
constexpr int kExitUnsupported = 3;

using namespace pairls;

int report_smt_error(const smtlib::SmtError& e) {
  std::cerr << "error: " << e.what() << '\n';
  return e.unsupported() ? kExitUnsupported : kExitParse;
}

struct SolveArgs {
  std::string file;
  double cutoff = 300;
  uint64_t seed = 1;
  uint32_t L = 20, K = 10, bms_t = 100;
  std::string trace;
  bool swap = false, no_pair = false, one_level = false;
  std::optional<uint64_t> max_steps;
  bool trace_steps = false;
  bool print_model = false;
};

// Writes and flushes one trace row per improvement.
class TraceWriter : public SearchObserver {
 public:
  TraceWriter(const std::string& path, bool steps) : steps_(steps) {
    if (path.empty()) return;
    os_.open(path);
    if (!os_) throw std::runtime_error("cannot write " + path);
    bench::write_trace_header(os_, steps_);
    os_.flush();
  }
  void on_improvement(const TracePoint& p) override {
    if (!os_.is_open()) return;
    if (steps_)
      os_ << p.step << ',' << p.cost << '\n';
    else
      os_ << p.elapsed_seconds << ',' << p.cost << '\n';
    os_.flush();
  }

 private:
  std::ofstream os_;
  bool steps_;
};

int run_solve(const SolveArgs& a) {
  Formula f;
  try {
    f = smtlib::to_cnf(smtlib::parse_file(a.file));
  } catch (const smtlib::SmtError& e) {
    return report_smt_error(e);
  }
  SolverConfig cfg;
  cfg.cutoff_seconds = a.cutoff;
  cfg.seed = a.seed;
  cfg.L = a.L;
  cfg.K = a.K;
  cfg.bms_t = a.bms_t;
  cfg.swap_mode_thresholds = a.swap;
  cfg.use_pairs = !a.no_pair;
  cfg.two_level = !a.one_level;
  cfg.max_steps = a.max_steps;

  TraceWriter trace(a.trace, a.trace_steps);
  const SolveResult r = solve(f, cfg, &trace);
  std::cout << "c steps " << r.steps << " time " << r.elapsed_seconds << '\n';
  if (!r.feasible()) {
    std::cout << "UNKNOWN\n";
    return kExitNoSolution;
  }
  if (a.print_model) {
    for (uint32_t v = 0; v < f.num_int_vars(); ++v)
      std::cout << "v " << f.int_name(v) << ' ' << r.best->ints[v] << '\n';
    for (uint32_t v = 0; v < f.num_bool_vars(); ++v)
      std::cout << "v " << f.bool_name(v) << ' ' << (r.best->bools[v] ? "true" : "false") << '\n';
  }
  std::cout << "o " << r.cost << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local search for weighted partial MaxSAT modulo linear integer arithmetic"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve_cmd = app.add_subcommand("solve", "run the local search solver");
  solve_cmd->add_option("file", sa.file, "input .smt2")->required();
  solve_cmd->add_option("--cutoff", sa.cutoff, "wall-clock cutoff in seconds");
  solve_cmd->add_option("--seed", sa.seed, "random seed");
  solve_cmd->add_option("--L", sa.L, "mode-switch factor")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--K", sa.K, "literals drawn for pairwise candidates")
      ->check(CLI::PositiveNumber);
  solve_cmd->add_option("--bms-t", sa.bms_t, "BMS sample count")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--trace", sa.trace, "write improvements as CSV");
  solve_cmd->add_flag("--swap-mode-thresholds", sa.swap,
                      "integer mode budget from the boolean literal share and vice versa");
  solve_cmd->add_flag("--no-pair", sa.no_pair, "critical moves only");
  solve_cmd->add_flag("--one-level", sa.one_level, "no fragile/safe distinction");
  solve_cmd->add_option("--max-steps", sa.max_steps, "step budget");
  solve_cmd->add_flag("--trace-steps", sa.trace_steps, "trace rows use step numbers, not time");
  solve_cmd->add_flag("--print-model", sa.print_model, "print the best assignment");

  std::string gen_in, gen_out, gen_weights = "unit";
  double gen_sr = 0.25;
  uint64_t gen_seed = 0;
  bool gen_repl = false;
  auto* gen_cmd = app.add_subcommand("gen", "generate a MaxSMT instance from an SMT script");
  gen_cmd->add_option("--input", gen_in)->required();
  gen_cmd->add_option("--sr", gen_sr, "share of atoms made soft, in (0,1]")->required();
  gen_cmd->add_option("--weights", gen_weights)->check(CLI::IsMember({"unit", "random"}));
  gen_cmd->add_option("--seed", gen_seed);
  gen_cmd->add_option("--out", gen_out)->required();
  gen_cmd->add_flag("--with-replacement", gen_repl, "sample atoms with replacement");

  std::string bench_dir, bench_report, bench_work, bench_evolution, bench_cutoffs;
  double bench_cutoff = 300;
  unsigned bench_jobs = 1;
  bool bench_ablations = false;
  auto* bench_cmd = app.add_subcommand("bench", "run the solver over a directory");
  bench_cmd->add_option("--dir", bench_dir)->required();
  bench_cmd->add_option("--cutoff", bench_cutoff);
  bench_cmd->add_option("--jobs", bench_jobs)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--report", bench_report)->required();
  bench_cmd->add_option("--work-dir", bench_work, "traces and logs (default: <report>.d)");
  bench_cmd->add_flag("--ablations", bench_ablations, "also run --no-pair and --one-level");
  bench_cmd->add_option("--evolution", bench_evolution, "write mean cost_P per cutoff");
  bench_cmd->add_option("--cutoffs", bench_cutoffs, "comma-separated cutoffs for --evolution");

  std::string oracle_file;
  int64_t oracle_lo = -5, oracle_hi = 5;
  uint64_t oracle_budget = 10'000'000;
  auto* oracle_cmd = app.add_subcommand("oracle", "exact optimum over a bounded box");
  oracle_cmd->add_option("file", oracle_file)->required();
  oracle_cmd->add_option("--lo", oracle_lo);
  oracle_cmd->add_option("--hi", oracle_hi);
  oracle_cmd->add_option("--budget", oracle_budget, "maximum assignments enumerated");

  std::string cnf_file;
  auto* cnf_cmd = app.add_subcommand("cnf", "print the clause form as SMT-LIB");
  cnf_cmd->add_option("file", cnf_file)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve_cmd) return run_solve(sa);

    if (*gen_cmd) {
      try {
        bench::GenSpec spec;
        spec.soft_ratio = gen_sr;
        spec.weights = gen_weights == "random" ? bench::WeightMode::Random : bench::WeightMode::Unit;
        spec.seed = gen_seed;
        spec.with_replacement = gen_repl;
        const auto out = bench::generate(smtlib::parse_file(gen_in), spec);
        std::ofstream os(gen_out);
        if (!os) throw std::runtime_error("cannot write " + gen_out);
        os << smtlib::emit(out);
        return 0;
      } catch (const smtlib::SmtError& e) {
        return report_smt_error(e);
      }
    }

    if (*bench_cmd) {
      bench::BatchOptions opt;
      opt.solver = std::filesystem::read_symlink("/proc/self/exe");
      opt.work_dir = bench_work.empty() ? bench_report + ".d" : bench_work;
      opt.cutoff_seconds = bench_cutoff;
      opt.jobs = bench_jobs;
      std::vector<bench::RunConfig> configs{{"default", {}}};
      if (bench_ablations) {
        configs.push_back({"no_pair", {"--no-pair"}});
        configs.push_back({"one_level", {"--one-level"}});
      }
      const auto report = bench::run_batch(bench_dir, configs, opt);
      bench::write_report(report, bench_report);
      if (!bench_evolution.empty()) {
        std::vector<double> cutoffs;
        std::stringstream ss(bench_cutoffs.empty() ? std::to_string(bench_cutoff) : bench_cutoffs);
        for (std::string item; std::getline(ss, item, ',');) cutoffs.push_back(std::stod(item));
        std::ofstream(bench_evolution) << bench::emit_evolution(report.records, cutoffs);
      }
      for (const auto& s : report.summary)
        std::cout << s.config << ": runs " << s.runs << " feasible " << s.feasible << " wins "
                  << s.wins << " mean_cost_p " << s.mean_cost_p << '\n';
      return 0;
    }

    if (*oracle_cmd) {
      Formula f;
      try {
        f = smtlib::to_cnf(smtlib::parse_file(oracle_file));
      } catch (const smtlib::SmtError& e) {
        return report_smt_error(e);
      }
      const auto r = oracle::brute_force_optimum(
          f, oracle::DomainBox::uniform(f, oracle_lo, oracle_hi), oracle_budget);
      if (!r.hard_feasible) {
        std::cout << "hard-infeasible\n";
        return kExitNoSolution;
      }
      std::cout << "optimum " << r.optimum << '\n';
      return 0;
    }

    if (*cnf_cmd) {
      try {
        std::cout << smtlib::emit(smtlib::to_cnf(smtlib::parse_file(cnf_file)));
      } catch (const smtlib::SmtError& e) {
        return report_smt_error(e);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
