#pragma once

// Subcommands of the command-line tool, callable as library functions. Each
// returns a process exit status and writes human-readable output to `out`
// and diagnostics to `err`.

#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pic/backends.hpp"

namespace pic::cli {

class ScenarioNotScalable : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;   // comparison above threshold
inline constexpr int kExitUsage = 2;  // bad arguments, config or IO errors

struct RunArgs {
  std::string scenario;  // built-in name or JSON path
  std::string backend = "serial";
  int workers = 0;       // 0: default worker count
  int regions = 0;       // 0: scenario value
  int steps = -1;        // -1: scenario value
  std::optional<std::uint64_t> seed;
  int dump_interval = 0;    // 0: dump at the last step only
  int energy_interval = 1;  // 0: no energy series
  std::string out;          // dump directory; empty: no files
  std::string trace;        // NDJSON task trace path (task backends)
};

// Loads the scenario and applies the overrides in args.
SimConfig configure(const RunArgs& args);

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);

// Region count entry of a plan: fixed, or a multiple of the worker count.
struct RegionSpec {
  int value = 1;
  bool per_worker = false;
  int resolve(int workers) const { return per_worker ? value * workers : value; }
  std::string str() const { return std::to_string(value) + (per_worker ? "x" : ""); }
};

RegionSpec parse_region_spec(const std::string& s);

struct BenchPlan {
  std::string scenario;
  std::vector<BackendKind> backends;
  std::vector<int> workers;
  std::vector<RegionSpec> regions;
  int repetitions = 5;
  std::string output = ".";
  int steps = -1;  // -1: scenario value
};

// JSON object with keys scenario, backends, workers, regions ("3x" allowed),
// repetitions, output, steps.
BenchPlan parse_bench_plan(const std::string& json_text);
BenchPlan load_bench_plan(const std::string& path);

struct Timing {
  double mean = 0;
  double stddev = 0;
  std::vector<double> samples;
};

struct BenchRow {
  std::string backend;
  int workers = 1;
  int regions = 1;
  Timing time;
  double speedup = 1;
};

// Wall time of the time loop over `repetitions` fresh runs.
Timing time_backend(const SimConfig& cfg, BackendKind kind, int workers, int regions,
                    int repetitions);

std::vector<BenchRow> run_bench(const BenchPlan& plan, std::ostream& log);
// Appends to `path`, writing the header when the file is new or its header
// differs.
void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path);
inline constexpr const char* kBenchHeader = "backend,workers,regions,mean_s,std_s,speedup";

int cmd_bench(const BenchPlan& plan, std::ostream& out, std::ostream& err);

int cmd_compare(const std::string& a, const std::string& b, double threshold, std::ostream& out,
                std::ostream& err);

struct WeakPlan {
  std::string scenario;
  std::vector<int> workers;
  std::string backend = "reduction-async";
  int regions_per_worker = 3;
  int repetitions = 3;
  int steps = -1;
  std::string output = ".";
};

struct WeakRow {
  int workers = 1;
  int ny = 0;
  int regions = 1;
  Timing time;
  double efficiency = 1;
  std::size_t particles_before = 0;
  std::size_t particles_after = 0;
};

// Scenario with ny (and box_y) multiplied by `factor`; throws
// ScenarioNotScalable for moving-window or laser scenarios.
SimConfig scale_in_y(const SimConfig& base, int factor);

std::vector<WeakRow> run_weakscale(const WeakPlan& plan, std::ostream& log);
void write_weak_csv(const std::vector<WeakRow>& rows, const std::string& path);
inline constexpr const char* kWeakHeader = "workers,ny,regions,mean_s,std_s,efficiency";

int cmd_weakscale(const WeakPlan& plan, std::ostream& out, std::ostream& err);

// Full command line (argv[0] excluded handling is CLI11's); used by the binary.
int main_entry(int argc, char** argv);

}  // namespace pic::cli
