// Acceptance gate: one PASS/FAIL/SKIP line per criterion.
//   pic_acceptance            run every criterion
//   pic_acceptance --only N   run criterion N; exit 0 pass, 1 fail, 77 skip

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pic/cli.hpp"
#include "pic/diagnostics.hpp"
#include "support/checks.hpp"

using namespace pic;
namespace fs = std::filesystem;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome judge(bool ok, const std::string& detail) {
  return {ok ? Verdict::pass : Verdict::fail, detail};
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

int cores() { return tasking::physical_core_count(); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Regions for task backends: three per worker, at least four, capped by rows.
int task_regions(const SimConfig& cfg, int workers) {
  return std::clamp(3 * workers, 4, cfg.ny / 8);
}

Outcome cross_backend() {
  const auto cfg = resolve_scenario("weibel-small");
  const int workers = std::max(tasking::default_worker_count(), 4);
  auto ref = make_state(cfg, 1);
  run_serial(ref, cfg.n_steps);
  const auto ref_bz = field_report(ref, Quantity::bz);
  std::ostringstream detail;
  bool ok = true;
  for (auto kind : all_backends()) {
    if (kind == BackendKind::serial) continue;
    const int regions = is_task_backend(kind) ? 16 : 1;
    auto s = make_state(cfg, regions);
    const auto t0 = std::chrono::steady_clock::now();
    run_backend(s, cfg.n_steps, kind, workers, {});
    const double err = compare_field_maps(ref_bz, field_report(s, Quantity::bz)).max_rel;
    ok = ok && err <= 1e-3;
    detail << backend_name(kind) << "=" << fmt("%.2e", err) << fmt(" (%.0fs) ", seconds_since(t0));
  }
  return judge(ok, "Bz max_rel vs serial at step 500, limit 1e-3: " + detail.str());
}

Outcome continuity() {
  const auto r = checks::continuity_trials(100000, 2024);
  return judge(r.trials == 100000 && r.max_ulps <= 8,
               fmt("%.0f trials, worst residual %.2f ulps (limit 8)", r.trials, r.max_ulps));
}

Outcome boris() {
  const auto r = checks::boris_trials(100000, 7);
  return judge(r.max_rotation_rel <= 1e-6 && r.max_norm_ulps <= 4,
               fmt("rotation rel %.2e (limit 1e-6), |u| change %.1f ulps (limit 4)",
                   r.max_rotation_rel, r.max_norm_ulps));
}

Outcome yee() {
  const auto r = checks::plane_wave(500);
  const double freq_err = std::abs(r.omega_measured - r.omega_discrete) / r.omega_discrete;
  return judge(r.energy_drift <= 1e-5 && freq_err <= 0.01,
               fmt("energy drift %.2e (limit 1e-5), omega %.6f vs discrete %.6f, rel %.2e "
                   "(limit 1e-2)",
                   r.energy_drift, r.omega_measured, r.omega_discrete, freq_err));
}

Outcome decomposition() {
  std::ostringstream detail;
  bool ok = true;
  for (int n : {1, 2, 4, 9}) {
    double worst = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
      worst = std::max(worst, checks::decomposition_error(n, seed));
    ok = ok && worst <= 1e-5;
    detail << n << " regions: " << fmt("%.2e", worst) << "; ";
  }
  return judge(ok, "max rel vs whole-grid deposit (limit 1e-5): " + detail.str());
}

Outcome commutative() {
  const auto r = checks::commutative_stress(1000, 4);
  const bool ok = r.wrong_sums == 0 && r.violations == 0 && r.first_before_second > 0 &&
                  r.second_before_first > 0;
  return judge(ok, fmt("1000 reps: wrong sums %.0f, overlaps %.0f, orders a<b %.0f, b<a %.0f",
                       r.wrong_sums, static_cast<double>(r.violations), r.first_before_second,
                       r.second_before_first));
}

// Wall time of one fresh run over `steps`.
double timed(const SimConfig& cfg, BackendKind kind, int workers, int regions, int steps) {
  auto s = make_state(cfg, regions);
  const auto t0 = std::chrono::steady_clock::now();
  run_backend(s, steps, kind, workers, {});
  return seconds_since(t0);
}

Outcome scaling() {
  const bool forced = std::getenv("PIC_ACCEPTANCE_FORCE_SCALING") != nullptr;
  if (cores() < 8 && !forced) {
    return {Verdict::skip, fmt("needs 8 physical cores, found %.0f", cores())};
  }
  constexpr int kReps = 5, kNeed = 4, kWorkers = 8, kSteps = 100;
  const auto weibel = resolve_scenario("weibel-small");
  const auto lwfa = resolve_scenario("lwfa-small");
  int a = 0, b = 0, c = 0, d = 0;
  for (int rep = 0; rep < kReps; ++rep) {
    const double serial = timed(weibel, BackendKind::serial, 1, 1, kSteps);
    const double ra1 = timed(weibel, BackendKind::reduction_async, kWorkers, kWorkers, kSteps);
    const double ra2 = timed(weibel, BackendKind::reduction_async, kWorkers, 2 * kWorkers, kSteps);
    const double ra3 = timed(weibel, BackendKind::reduction_async, kWorkers, 3 * kWorkers, kSteps);
    if (serial / ra3 >= 6.0) ++a;
    if (std::min(ra2, ra3) <= ra1) ++c;
    const double rs_odd = timed(weibel, BackendKind::reduction_sync, kWorkers, kWorkers + 1, kSteps);
    const double rs_even =
        timed(weibel, BackendKind::reduction_sync, kWorkers, 2 * kWorkers, kSteps);
    if (rs_odd > rs_even) ++d;

    const int lr = 3 * kWorkers;
    const double pf = timed(lwfa, BackendKind::parallel_for, kWorkers, 1, kSteps);
    double best_other = 0, ra = 0, tl = 0;
    for (auto kind : all_backends()) {
      if (kind == BackendKind::serial || kind == BackendKind::parallel_for) continue;
      const double t = timed(lwfa, kind, kWorkers, lr, kSteps);
      if (kind == BackendKind::reduction_async) ra = t;
      if (kind == BackendKind::tasklike) tl = t;
      best_other = std::max(best_other, t);
    }
    if (ra <= tl && pf >= best_other) ++b;
  }
  const bool ok = a >= kNeed && b >= kNeed && c >= kNeed && d >= kNeed;
  return judge(ok, fmt("trend held (of 5): (a) %.0f (b) %.0f (c) %.0f", a, b, c) +
                       fmt(" (d) %.0f; need 4", d));
}

Outcome weibel_growth() {
  const auto cfg = resolve_scenario("weibel-small");
  std::ostringstream detail;
  bool ok = true;
  for (auto kind : {BackendKind::serial, BackendKind::reduction_async}) {
    const int workers = kind == BackendKind::serial ? 1 : std::max(tasking::default_worker_count(), 4);
    auto s = make_state(cfg, kind == BackendKind::serial ? 1 : task_regions(cfg, workers));
    double w10 = 0, w500 = 0;
    RunOptions opts;
    opts.hook_interval = 10;
    opts.hook = [&](const SimState& st, int iter) {
      if (iter == 10) w10 = energy_report(st, iter).magnetic_energy;
      if (iter == 500) w500 = energy_report(st, iter).magnetic_energy;
    };
    run_backend(s, 500, kind, workers, opts);
    const double ratio = w10 > 0 ? w500 / w10 : 0;
    ok = ok && ratio >= 10;
    detail << backend_name(kind) << fmt(" %.3e -> %.3e (x%.0f); ", w10, w500, ratio);
  }
  return judge(ok, "magnetic energy step 10 -> 500, need x10: " + detail.str());
}

Outcome weak_scaling() {
  const int n = cores();
  if (n < 2) return {Verdict::skip, "needs at least 2 physical cores"};
  cli::WeakPlan plan;
  plan.scenario = "cold";
  for (int w = 1; w <= n; w *= 2) plan.workers.push_back(w);
  if (plan.workers.back() != n) plan.workers.push_back(n);
  plan.repetitions = 3;
  plan.steps = 100;
  plan.output = (fs::temp_directory_path() / "pic_acceptance_weak").string();
  fs::create_directories(plan.output);
  std::ostringstream log;
  const auto rows = cli::run_weakscale(plan, log);
  double worst = 1;
  bool conserved = true;
  for (const auto& r : rows) {
    worst = std::min(worst, r.efficiency);
    conserved = conserved && r.particles_before == r.particles_after;
  }
  return judge(worst >= 0.85 && conserved,
               fmt("worst efficiency %.3f up to %.0f workers (limit 0.85)", worst, n));
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "pic_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::vector<std::string>> runs;
  for (const char* tag : {"a", "b"}) {
    cli::RunArgs args;
    args.scenario = "weibel-small";
    args.seed = 12345;
    args.dump_interval = 100;
    args.energy_interval = 0;
    args.out = (root / tag).string();
    std::ostringstream out, err;
    if (cli::cmd_run(args, out, err) != cli::kExitOk) return {Verdict::fail, err.str()};
    std::vector<std::string> files;
    for (const auto& f : fs::directory_iterator(args.out)) files.push_back(f.path().filename());
    std::sort(files.begin(), files.end());
    runs.push_back(files);
  }
  if (runs[0] != runs[1] || runs[0].empty()) return {Verdict::fail, "dump sets differ"};
  auto bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  int identical = 0;
  for (const auto& f : runs[0]) identical += bytes(root / "a" / f) == bytes(root / "b" / f);
  const int total = static_cast<int>(runs[0].size());
  return judge(identical == total, fmt("%.0f of %.0f dumps byte-identical", identical, total));
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "cross-backend equivalence", cross_backend},
      {2, "charge continuity", continuity},
      {3, "Boris rotation", boris},
      {4, "vacuum Yee energy and dispersion", yee},
      {5, "decomposition oracle", decomposition},
      {6, "commutative exclusion", commutative},
      {7, "scaling trends", scaling},
      {8, "Weibel magnetic growth", weibel_growth},
      {9, "weak scaling", weak_scaling},
      {10, "serial determinism", determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int k = 1; k < argc; ++k) {
    const std::string a = argv[k];
    if (a == "--only" && k + 1 < argc) {
      only = std::atoi(argv[++k]);
    } else {
      std::cerr << "usage: pic_acceptance [--only N]\n";
      return 2;
    }
  }
  bool failed = false, skipped = false, matched = false;
  for (const auto& c : criteria()) {
    if (only && c.id != only) continue;
    matched = true;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
    std::printf("[%s] %2d %s: %s (%.1f s)\n", tag, c.id, c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    failed = failed || o.verdict == Verdict::fail;
    skipped = skipped || o.verdict == Verdict::skip;
  }
  if (!matched) {
    std::cerr << "no criterion " << only << "\n";
    return 2;
  }
  if (failed) return 1;
  return only && skipped ? 77 : 0;
}
