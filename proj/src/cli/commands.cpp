#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pic/cli.hpp"
#include "pic/diagnostics.hpp"

namespace pic::cli {

namespace fs = std::filesystem;

namespace {

constexpr Quantity kDumped[] = {Quantity::ex, Quantity::ey, Quantity::ez, Quantity::bx, Quantity::by,
                                Quantity::bz, Quantity::jx, Quantity::jy, Quantity::jz};

int resolve_workers(int w) { return w >= 1 ? w : tasking::default_worker_count(); }

Timing summarize(std::vector<double> samples) {
  Timing t;
  t.samples = std::move(samples);
  const double n = static_cast<double>(t.samples.size());
  t.mean = std::accumulate(t.samples.begin(), t.samples.end(), 0.0) / n;
  double var = 0;
  for (double v : t.samples) var += (v - t.mean) * (v - t.mean);
  t.stddev = t.samples.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  return t;
}

void warn_if_noisy(const Timing& t, const std::string& what, std::ostream& log) {
  if (t.mean > 0 && t.stddev / t.mean > 0.05) {
    log << "warning: " << what << ": stddev/mean = " << std::fixed << std::setprecision(1)
        << 100.0 * t.stddev / t.mean << "% exceeds 5%\n"
        << std::defaultfloat;
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

bool csv_has_header(const std::string& path, const char* header) {
  std::ifstream in(path);
  std::string first;
  return in && std::getline(in, first) && first == header;
}

}  // namespace

SimConfig configure(const RunArgs& args) {
  SimConfig cfg = resolve_scenario(args.scenario);
  if (args.steps >= 0) cfg.n_steps = args.steps;
  if (args.seed) cfg.seed = *args.seed;
  if (args.regions >= 1) cfg.n_regions = args.regions;
  const BackendKind kind = parse_backend(args.backend);
  if (!is_task_backend(kind)) cfg.n_regions = 1;
  validate_config(cfg);
  return cfg;
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const BackendKind kind = parse_backend(args.backend);
    const SimConfig cfg = configure(args);
    const int workers = kind == BackendKind::serial ? 1 : resolve_workers(args.workers);
    SimState state = make_state(cfg);

    const bool write = !args.out.empty();
    if (write) fs::create_directories(args.out);
    const int dump_interval = args.dump_interval > 0 ? args.dump_interval : std::max(cfg.n_steps, 1);
    std::optional<EnergySeries> energy;
    if (write && args.energy_interval > 0) {
      energy.emplace(args.out + "/energy.ndjson");
      energy->append(energy_report(state, 0));
    }

    RunOptions opts;
    if (write) {
      opts.hook_interval = std::gcd(dump_interval, args.energy_interval > 0 ? args.energy_interval : dump_interval);
      opts.hook = [&](const SimState& s, int iter) {
        if (energy && iter % args.energy_interval == 0) energy->append(energy_report(s, iter));
        if (iter % dump_interval == 0) {
          for (Quantity q : kDumped) dump_field(s, q, dump_path(args.out, q, iter), 0, iter);
          for (int sp = 0; sp < static_cast<int>(cfg.species.size()); ++sp) {
            dump_field(s, Quantity::charge, dump_path(args.out, Quantity::charge, iter, sp), sp, iter);
          }
        }
      };
    }
    tasking::TraceRecorder trace;
    if (!args.trace.empty()) opts.observer = &trace;

    out << "scenario " << args.scenario << ": " << cfg.nx << "x" << cfg.ny << " cells, "
        << state.particle_count() << " particles, " << cfg.n_steps << " steps\n"
        << "backend " << backend_name(kind) << ", workers " << workers << ", regions "
        << state.n_regions() << "\n";

    run_backend(state, cfg.n_steps, kind, workers, opts);

    if (!args.trace.empty()) {
      std::ofstream tout(args.trace);
      if (!tout) throw IoError("cannot open '" + args.trace + "' for writing");
      trace.write(tout);
    }

    out << std::fixed << std::setprecision(4);
    for (std::size_t k = 0; k < kStageCount; ++k) {
      const auto st = static_cast<Stage>(k);
      out << "  " << std::left << std::setw(8) << stage_name(st) << " " << state.clock.seconds(st)
          << " s\n";
    }
    out << "total " << state.clock.loop_seconds << " s\n" << std::defaultfloat;
    return kExitOk;
  } catch (const UnknownBackend& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

RegionSpec parse_region_spec(const std::string& s) {
  RegionSpec r;
  std::string digits = s;
  if (!digits.empty() && (digits.back() == 'x' || digits.back() == 'X')) {
    r.per_worker = true;
    digits.pop_back();
  }
  std::size_t used = 0;
  try {
    r.value = std::stoi(digits, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (digits.empty() || used != digits.size() || r.value < 1) {
    throw std::invalid_argument("bad region count '" + s + "'");
  }
  return r;
}

BenchPlan parse_bench_plan(const std::string& text) {
  using json = nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(ConfigError::Code::parse_error, "", std::string("invalid JSON: ") + e.what());
  }
  BenchPlan plan;
  try {
    for (const auto& [key, _] : doc.items()) {
      if (key != "scenario" && key != "backends" && key != "workers" && key != "regions" &&
          key != "repetitions" && key != "output" && key != "steps") {
        throw ConfigError(ConfigError::Code::unknown_key, key, "unknown key '" + key + "'");
      }
    }
    plan.scenario = doc.at("scenario").get<std::string>();
    for (const auto& b : doc.at("backends")) plan.backends.push_back(parse_backend(b.get<std::string>()));
    plan.workers = doc.at("workers").get<std::vector<int>>();
    if (doc.contains("regions")) {
      for (const auto& r : doc.at("regions")) {
        plan.regions.push_back(parse_region_spec(r.is_string() ? r.get<std::string>()
                                                               : std::to_string(r.get<int>())));
      }
    } else {
      plan.regions.push_back({3, true});
    }
    plan.repetitions = doc.value("repetitions", 5);
    plan.output = doc.value("output", std::string("."));
    plan.steps = doc.value("steps", -1);
  } catch (const json::exception& e) {
    throw ConfigError(ConfigError::Code::parse_error, "", std::string("bench plan: ") + e.what());
  }
  if (plan.repetitions < 1) {
    throw ConfigError(ConfigError::Code::invalid_value, "repetitions", "repetitions: must be >= 1");
  }
  for (int w : plan.workers) {
    if (w < 1) throw ConfigError(ConfigError::Code::invalid_value, "workers", "workers: must be >= 1");
  }
  return plan;
}

BenchPlan load_bench_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bench_plan(ss.str());
}

Timing time_backend(const SimConfig& base, BackendKind kind, int workers, int regions,
                    int repetitions) {
  SimConfig cfg = base;
  cfg.n_regions = is_task_backend(kind) ? regions : 1;
  std::vector<double> samples;
  for (int k = 0; k < repetitions; ++k) {
    SimState state = make_state(cfg);
    run_backend(state, cfg.n_steps, kind, workers);
    samples.push_back(state.clock.loop_seconds);
  }
  return summarize(std::move(samples));
}

std::vector<BenchRow> run_bench(const BenchPlan& plan, std::ostream& log) {
  SimConfig cfg = resolve_scenario(plan.scenario);
  if (plan.steps >= 0) cfg.n_steps = plan.steps;

  // The baseline is always measured here, in this session, on this scenario.
  log << "baseline: serial x" << plan.repetitions << "\n";
  const Timing base = time_backend(cfg, BackendKind::serial, 1, 1, plan.repetitions);
  warn_if_noisy(base, "serial", log);

  std::vector<BenchRow> rows;
  for (BackendKind kind : plan.backends) {
    if (kind == BackendKind::serial) {
      rows.push_back({"serial", 1, 1, base, 1.0});
      continue;
    }
    for (int w : plan.workers) {
      std::vector<int> region_counts;
      if (is_task_backend(kind)) {
        for (const auto& r : plan.regions) {
          const int n = r.resolve(w);
          if (std::find(region_counts.begin(), region_counts.end(), n) == region_counts.end()) {
            region_counts.push_back(n);
          }
        }
      } else {
        region_counts.push_back(1);
      }
      for (int n : region_counts) {
        log << backend_name(kind) << " workers=" << w << " regions=" << n << "\n";
        const Timing t = time_backend(cfg, kind, w, n, plan.repetitions);
        const std::string what = std::string(backend_name(kind)) + " workers=" +
                                 std::to_string(w) + " regions=" + std::to_string(n);
        warn_if_noisy(t, what, log);
        rows.push_back({std::string(backend_name(kind)), w, n, t, base.mean / t.mean});
      }
    }
  }
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path) {
  const bool append = csv_has_header(path, kBenchHeader);
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  if (!append) out << kBenchHeader << "\n";
  for (const auto& r : rows) {
    out << r.backend << "," << r.workers << "," << r.regions << "," << fmt(r.time.mean) << ","
        << fmt(r.time.stddev) << "," << fmt(r.speedup) << "\n";
  }
}

int cmd_bench(const BenchPlan& plan, std::ostream& out, std::ostream& err) {
  try {
    const auto rows = run_bench(plan, err);
    fs::create_directories(plan.output);
    const std::string path = plan.output + "/bench.csv";
    write_bench_csv(rows, path);
    out << kBenchHeader << "\n";
    for (const auto& r : rows) {
      out << r.backend << "," << r.workers << "," << r.regions << "," << fmt(r.time.mean) << ","
          << fmt(r.time.stddev) << "," << fmt(r.speedup) << "\n";
    }
    out << "wrote " << path << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

int cmd_compare(const std::string& a, const std::string& b, double threshold, std::ostream& out,
                std::ostream& err) {
  try {
    const FieldReport ra = read_dump(a);
    const FieldReport rb = read_dump(b);
    const MapDifference d = compare_field_maps(ra, rb);
    out << "max_rel " << d.max_rel << "\n"
        << "l2_rel " << d.l2_rel << "\n";
    return d.max_rel <= threshold ? kExitOk : kExitFail;
  } catch (const ShapeMismatch& e) {
    err << "shape mismatch: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

SimConfig scale_in_y(const SimConfig& base, int factor) {
  if (base.moving_window || base.laser) {
    throw ScenarioNotScalable(
        "scenario is not scalable in y: moving-window and laser scenarios cannot be weak-scaled");
  }
  SimConfig cfg = base;
  cfg.ny = base.ny * factor;
  cfg.box_y = base.box_y * factor;
  return cfg;
}

std::vector<WeakRow> run_weakscale(const WeakPlan& plan, std::ostream& log) {
  const SimConfig base = resolve_scenario(plan.scenario);
  const BackendKind kind = parse_backend(plan.backend);
  std::vector<WeakRow> rows;
  double t1 = 0;
  // The 1-worker base measurement is the reference even when 1 is not listed.
  auto measure = [&](int w) {
    SimConfig cfg = scale_in_y(base, w);
    if (plan.steps >= 0) cfg.n_steps = plan.steps;
    WeakRow row;
    row.workers = w;
    row.ny = cfg.ny;
    row.regions = is_task_backend(kind) ? std::min(plan.regions_per_worker * w, cfg.ny / kMinRegionRows) : 1;
    cfg.n_regions = row.regions;
    std::vector<double> samples;
    for (int k = 0; k < plan.repetitions; ++k) {
      SimState state = make_state(cfg);
      row.particles_before = state.particle_count();
      run_backend(state, cfg.n_steps, kind, w);
      row.particles_after = state.particle_count();
      samples.push_back(state.clock.loop_seconds);
    }
    row.time = summarize(std::move(samples));
    warn_if_noisy(row.time, "weakscale workers=" + std::to_string(w), log);
    return row;
  };
  log << "weakscale base: " << backend_name(kind) << " workers=1\n";
  WeakRow first = measure(1);
  t1 = first.time.mean;
  for (int w : plan.workers) {
    WeakRow row;
    if (w == 1) {
      row = first;
    } else {
      log << "weakscale: workers=" << w << "\n";
      row = measure(w);
    }
    row.efficiency = t1 / row.time.mean;
    rows.push_back(row);
  }
  return rows;
}

void write_weak_csv(const std::vector<WeakRow>& rows, const std::string& path) {
  const bool append = csv_has_header(path, kWeakHeader);
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  if (!append) out << kWeakHeader << "\n";
  for (const auto& r : rows) {
    out << r.workers << "," << r.ny << "," << r.regions << "," << fmt(r.time.mean) << ","
        << fmt(r.time.stddev) << "," << fmt(r.efficiency) << "\n";
  }
}

int cmd_weakscale(const WeakPlan& plan, std::ostream& out, std::ostream& err) {
  try {
    const auto rows = run_weakscale(plan, err);
    fs::create_directories(plan.output);
    const std::string path = plan.output + "/weak.csv";
    write_weak_csv(rows, path);
    out << kWeakHeader << "\n";
    for (const auto& r : rows) {
      out << r.workers << "," << r.ny << "," << r.regions << "," << fmt(r.time.mean) << ","
          << fmt(r.time.stddev) << "," << fmt(r.efficiency) << "\n";
      if (r.particles_before != r.particles_after) {
        err << "warning: particle count changed at workers=" << r.workers << "\n";
      }
    }
    out << "wrote " << path << "\n";
    return kExitOk;
  } catch (const ScenarioNotScalable& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"2D3V electromagnetic particle-in-cell simulator with task-based backends"};
  app.require_subcommand(1);

  RunArgs run;
  std::uint64_t seed = 0;
  auto* run_cmd = app.add_subcommand("run", "run a scenario");
  run_cmd->add_option("scenario", run.scenario, "built-in scenario name or JSON file")->required();
  run_cmd->add_option("--backend", run.backend, "backend name")->capture_default_str();
  run_cmd->add_option("--workers", run.workers, "worker threads (default: physical cores)");
  run_cmd->add_option("--regions", run.regions, "number of regions (task backends)");
  run_cmd->add_option("--steps", run.steps, "override the number of steps");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "override the random seed");
  run_cmd->add_option("--dump-interval", run.dump_interval, "steps between field dumps");
  run_cmd->add_option("--energy-interval", run.energy_interval, "steps between energy records")
      ->capture_default_str();
  run_cmd->add_option("--out", run.out, "output directory for dumps and energy series");
  run_cmd->add_option("--trace", run.trace, "write an NDJSON task trace to this file");

  std::string plan_path;
  std::string bench_out;
  int bench_steps = -1;
  int bench_reps = 0;
  auto* bench_cmd = app.add_subcommand("bench", "run a benchmark plan and write bench.csv");
  bench_cmd->add_option("plan", plan_path, "benchmark plan (JSON)")->required();
  bench_cmd->add_option("--out", bench_out, "output directory (overrides the plan)");
  bench_cmd->add_option("--steps", bench_steps, "override the number of steps");
  bench_cmd->add_option("--repetitions", bench_reps, "override the repetition count");

  std::string dump_a, dump_b;
  double threshold = 1e-3;
  auto* cmp_cmd = app.add_subcommand("compare", "compare two field dumps");
  cmp_cmd->add_option("a", dump_a, "reference dump")->required();
  cmp_cmd->add_option("b", dump_b, "dump to compare")->required();
  cmp_cmd->add_option("--threshold", threshold, "maximum accepted relative error")
      ->capture_default_str();

  WeakPlan weak;
  auto* weak_cmd = app.add_subcommand("weakscale", "weak scaling in y, writes weak.csv");
  weak_cmd->add_option("scenario", weak.scenario, "base scenario")->required();
  weak_cmd->add_option("--workers", weak.workers, "worker counts")->required()->delimiter(',');
  weak_cmd->add_option("--backend", weak.backend, "backend name")->capture_default_str();
  weak_cmd->add_option("--regions", weak.regions_per_worker, "regions per worker")
      ->capture_default_str();
  weak_cmd->add_option("--repetitions", weak.repetitions, "runs per point")->capture_default_str();
  weak_cmd->add_option("--steps", weak.steps, "override the number of steps");
  weak_cmd->add_option("--out", weak.output, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  if (*run_cmd) {
    if (seed_opt->count()) run.seed = seed;
    return cmd_run(run, std::cout, std::cerr);
  }
  if (*bench_cmd) {
    BenchPlan plan;
    try {
      plan = load_bench_plan(plan_path);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitUsage;
    }
    if (!bench_out.empty()) plan.output = bench_out;
    if (bench_steps >= 0) plan.steps = bench_steps;
    if (bench_reps > 0) plan.repetitions = bench_reps;
    return cmd_bench(plan, std::cout, std::cerr);
  }
  if (*cmp_cmd) return cmd_compare(dump_a, dump_b, threshold, std::cout, std::cerr);
  if (*weak_cmd) return cmd_weakscale(weak, std::cout, std::cerr);
  return kExitUsage;
}

}  // namespace pic::cli
