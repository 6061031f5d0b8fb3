#pragma once

// Benchmark tooling: MaxSMT instance generation from SMT scripts (random
// arithmetic atoms turned into unit soft assertions), a process-isolated
// batch runner, winner/cost_P reporting and cost_P-over-time tables.

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pairls/rng.hpp"
#include "pairls/search.hpp"
#include "pairls/smtlib.hpp"

namespace pairls::bench {

namespace fs = std::filesystem;

enum class WeightMode { Unit, Random };

struct GenSpec {
  double soft_ratio = 0.25;
  WeightMode weights = WeightMode::Unit;
  uint64_t seed = 0;
  bool with_replacement = false;
};

inline constexpr double kSoftRatioPresets[] = {0.10, 0.25, 0.50, 1.00};

class GenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Number of soft assertions drawn from `atoms` atoms: ceil(ratio * atoms).
inline size_t soft_count(double ratio, size_t atoms) {
  // guard against 0.1 * 10 landing just above 1
  const double x = ratio * static_cast<double>(atoms);
  const double r = std::round(x);
  const auto n = static_cast<size_t>(std::fabs(x - r) < 1e-9 ? r : std::ceil(x));
  return std::min(n, atoms);
}

/// The source script with ceil(SR * A) of its A distinct arithmetic atoms
/// appended as unit soft assertions. Unit weights are 1; random weights are
/// uniform on [1, A].
inline smtlib::ParsedScript generate(const smtlib::ParsedScript& source, const GenSpec& spec) {
  if (!(spec.soft_ratio > 0.0 && spec.soft_ratio <= 1.0))
    throw GenerateError("soft ratio must lie in (0, 1]");
  const auto atoms = smtlib::collect_atoms(source);
  if (atoms.empty()) throw GenerateError("source has no arithmetic atoms");
  const size_t total = atoms.size();
  const size_t n = soft_count(spec.soft_ratio, total);

  Rng rng(spec.seed);
  std::vector<size_t> picked;
  if (spec.with_replacement) {
    for (size_t i = 0; i < n; ++i) picked.push_back(rng.below(total));
  } else {
    std::vector<size_t> idx(total);
    for (size_t i = 0; i < total; ++i) idx[i] = i;
    for (size_t i = 0; i < n; ++i) {
      const size_t j = i + rng.below(total - i);
      std::swap(idx[i], idx[j]);
      picked.push_back(idx[i]);
    }
  }

  smtlib::ParsedScript out = source;
  if (out.logic.empty()) out.logic = "QF_LIA";
  out.warnings.clear();
  for (size_t i : picked) {
    const int64_t w =
        spec.weights == WeightMode::Unit ? 1 : rng.between(1, static_cast<int64_t>(total));
    out.soft.push_back({smtlib::atom_term(atoms[i]), w, {}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Traces and reports

/// `elapsed_seconds,cost` rows; header and malformed lines are skipped.
inline std::vector<std::pair<double, int64_t>> read_trace(const fs::path& path) {
  std::vector<std::pair<double, int64_t>> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    try {
      size_t used = 0;
      const double t = std::stod(line.substr(0, comma), &used);
      const int64_t c = std::stoll(line.substr(comma + 1));
      out.emplace_back(t, c);
    } catch (const std::exception&) {
    }
  }
  return out;
}

inline void write_trace_header(std::ostream& os, bool steps) {
  os << (steps ? "step,cost\n" : "elapsed_seconds,cost\n");
}

/// cost / total soft weight, or 1 when no feasible solution exists.
inline double cost_p(std::optional<int64_t> cost, int64_t soft_total) {
  if (!cost) return 1.0;
  if (soft_total <= 0) return 0.0;
  return static_cast<double>(*cost) / static_cast<double>(soft_total);
}

struct RunRecord {
  std::string instance;
  std::string config;
  std::optional<int64_t> cost;  // unset: no feasible solution (or failure)
  int64_t soft_total = 0;
  double time_to_best = 0;
  std::string trace_path;
  std::string error;
  bool winner = false;
  std::vector<std::pair<double, int64_t>> trace;

  double cost_p() const { return bench::cost_p(cost, soft_total); }
};

struct ConfigSummary {
  std::string config;
  size_t runs = 0;
  size_t feasible = 0;
  size_t wins = 0;
  double mean_cost_p = 0;
};

struct RunReport {
  std::vector<RunRecord> records;
  std::vector<ConfigSummary> summary;
};

/// Per instance, every configuration reaching the best feasible cost wins.
inline void mark_winners(std::vector<RunRecord>& records) {
  std::map<std::string, std::optional<int64_t>> best;
  for (const auto& r : records) {
    if (!r.cost) continue;
    auto& b = best[r.instance];
    if (!b || *r.cost < *b) b = r.cost;
  }
  for (auto& r : records) {
    const auto it = best.find(r.instance);
    r.winner = r.cost && it != best.end() && *it->second == *r.cost;
  }
}

inline std::vector<ConfigSummary> summarize(const std::vector<RunRecord>& records) {
  std::vector<ConfigSummary> out;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const ConfigSummary& s) { return s.config == r.config; });
    if (it == out.end()) {
      out.push_back({r.config});
      it = out.end() - 1;
    }
    ++it->runs;
    it->feasible += r.cost ? 1 : 0;
    it->wins += r.winner ? 1 : 0;
    it->mean_cost_p += r.cost_p();
  }
  for (auto& s : out)
    if (s.runs) s.mean_cost_p /= static_cast<double>(s.runs);
  return out;
}

/// Best cost reached by `time` according to the trace.
inline std::optional<int64_t> cost_at(const std::vector<std::pair<double, int64_t>>& trace,
                                      double time) {
  std::optional<int64_t> best;
  for (const auto& [t, c] : trace)
    if (t <= time && (!best || c < *best)) best = c;
  return best;
}

/// Rows `cutoff,<config>...` holding the mean cost_P over instances of the
/// best cost each run had reached by that cutoff.
inline std::string emit_evolution(const std::vector<RunRecord>& records,
                                  const std::vector<double>& cutoffs) {
  std::vector<std::string> configs;
  for (const auto& r : records)
    if (std::find(configs.begin(), configs.end(), r.config) == configs.end())
      configs.push_back(r.config);
  std::ostringstream os;
  os << "cutoff";
  for (const auto& c : configs) os << ',' << c;
  os << '\n';
  for (double cut : cutoffs) {
    os << cut;
    for (const auto& c : configs) {
      double sum = 0;
      size_t n = 0;
      for (const auto& r : records) {
        if (r.config != c) continue;
        sum += cost_p(cost_at(r.trace, cut), r.soft_total);
        ++n;
      }
      os << ',' << (n ? sum / static_cast<double>(n) : 1.0);
    }
    os << '\n';
  }
  return os.str();
}

inline void write_report(const RunReport& report, const fs::path& path) {
  std::ofstream os(path);
  os << "instance,config,status,cost,cost_p,time_to_best,winner,trace,error\n";
  for (const auto& r : report.records) {
    const char* status = !r.error.empty() ? "error" : (r.cost ? "feasible" : "no_solution");
    os << r.instance << ',' << r.config << ',' << status << ','
       << (r.cost ? std::to_string(*r.cost) : std::string()) << ',' << r.cost_p() << ','
       << r.time_to_best << ',' << (r.winner ? 1 : 0) << ',' << r.trace_path << ','
       << r.error << '\n';
  }
  std::ofstream ss(fs::path(path).concat(".summary.csv"));
  ss << "config,runs,feasible,wins,mean_cost_p\n";
  for (const auto& s : report.summary)
    ss << s.config << ',' << s.runs << ',' << s.feasible << ',' << s.wins << ','
       << s.mean_cost_p << '\n';
}

// ---------------------------------------------------------------------------
// Batch runner

struct RunConfig {
  std::string name;
  std::vector<std::string> args;  // extra `solve` arguments
};

struct BatchOptions {
  fs::path solver;    // executable providing the `solve` subcommand
  fs::path work_dir;  // traces and solver output
  double cutoff_seconds = 300;
  unsigned jobs = 1;
};

namespace detail {

struct Task {
  fs::path instance;
  const RunConfig* config = nullptr;
  fs::path trace, out;
  pid_t pid = -1;
  std::chrono::steady_clock::time_point started;
  int status = 0;
  bool killed = false;
};

inline pid_t spawn(const Task& t, const BatchOptions& opt) {
  std::vector<std::string> argv{opt.solver.string(), "solve", t.instance.string(), "--cutoff",
                                std::to_string(opt.cutoff_seconds), "--trace", t.trace.string()};
  argv.insert(argv.end(), t.config->args.begin(), t.config->args.end());
  std::vector<char*> cargv;
  for (auto& a : argv) cargv.push_back(a.data());
  cargv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, t.out.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, "/dev/null", O_WRONLY, 0);
  pid_t pid = -1;
  const int rc = posix_spawn(&pid, opt.solver.c_str(), &actions, nullptr, cargv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw std::runtime_error("cannot start " + opt.solver.string());
  return pid;
}

inline std::string last_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return last;
}

}  // namespace detail

/// Runs every `.smt2` file of `dir` (sorted by name) under every
/// configuration, each in its own process, `jobs` at a time. Failures are
/// recorded per run and never abort the batch.
inline RunReport run_batch(const fs::path& dir, const std::vector<RunConfig>& configs,
                           const BatchOptions& opt) {
  std::vector<fs::path> files;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".smt2") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  fs::create_directories(opt.work_dir);

  std::vector<detail::Task> tasks;
  for (const auto& f : files)
    for (const auto& c : configs) {
      detail::Task t;
      t.instance = f;
      t.config = &c;
      const std::string stem = f.stem().string() + "." + c.name;
      t.trace = opt.work_dir / (stem + ".trace.csv");
      t.out = opt.work_dir / (stem + ".out");
      tasks.push_back(std::move(t));
    }

  const auto grace = std::chrono::duration<double>(opt.cutoff_seconds * 2 + 10);
  const unsigned jobs = std::max(1u, opt.jobs);
  size_t next = 0;
  std::vector<size_t> running;
  while (next < tasks.size() || !running.empty()) {
    while (running.size() < jobs && next < tasks.size()) {
      auto& t = tasks[next];
      t.started = std::chrono::steady_clock::now();
      try {
        t.pid = detail::spawn(t, opt);
        running.push_back(next);
      } catch (const std::exception&) {
        t.pid = -1;
      }
      ++next;
    }
    bool progressed = false;
    for (size_t i = 0; i < running.size();) {
      auto& t = tasks[running[i]];
      int status = 0;
      if (waitpid(t.pid, &status, WNOHANG) == t.pid) {
        t.status = status;
        running.erase(running.begin() + static_cast<long>(i));
        progressed = true;
        continue;
      }
      if (std::chrono::steady_clock::now() - t.started > grace && !t.killed) {
        kill(t.pid, SIGKILL);
        t.killed = true;
      }
      ++i;
    }
    if (!progressed) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  RunReport report;
  for (const auto& t : tasks) {
    RunRecord r;
    r.instance = t.instance.filename().string();
    r.config = t.config->name;
    r.trace_path = t.trace.string();
    try {
      r.soft_total = smtlib::to_cnf(smtlib::parse_file(t.instance.string())).total_soft_weight();
    } catch (const std::exception& e) {
      r.error = std::string("parse: ") + e.what();
    }
    if (t.pid < 0) {
      r.error = "spawn failed";
    } else if (t.killed) {
      r.error = "killed after grace period";
    } else if (r.error.empty()) {
      const int code = WIFEXITED(t.status) ? WEXITSTATUS(t.status) : -1;
      const std::string last = detail::last_line(t.out);
      if (code == 0 && last.rfind("o ", 0) == 0) {
        r.cost = std::stoll(last.substr(2));
      } else if (code != 10) {
        r.error = "exit status " + std::to_string(code);
      }
    }
    r.trace = read_trace(t.trace);
    r.time_to_best = r.trace.empty() ? opt.cutoff_seconds
                                     : std::min(r.trace.back().first, opt.cutoff_seconds);
    report.records.push_back(std::move(r));
  }
  mark_winners(report.records);
  report.summary = summarize(report.records);
  return report;
}

}  // namespace pairls::bench
