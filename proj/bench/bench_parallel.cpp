// Serial vs OpenMP timing for the two parallel kernels: the per-iteration
// inner loops of D-REPTILE and the per-seed cells of an experiment.
// Also confirms both paths produce identical results.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "dreptile/harness.hpp"

using namespace dreptile;

namespace {

template <class F>
double time_ms(F&& f, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

std::string csv(const std::vector<RunRecord>& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 3;
  std::printf("threads available: %d\n", omp_get_max_threads());

  ExperimentConfig cfg;
  cfg.meta.m = 8;
  cfg.meta.iterations = 50;
  const auto ctx = prepare_seed(cfg, 1);

  MetaConfig serial = cfg.meta, parallel = cfg.meta;
  serial.execution = Execution::Serial;
  parallel.execution = Execution::Parallel;
  ParamVector a, b;
  const double ts = time_ms([&] { a = d_reptile(serial, ctx.cat_tasks, 1); }, reps);
  const double tp = time_ms([&] { b = d_reptile(parallel, ctx.cat_tasks, 1); }, reps);
  std::printf("d_reptile m=%zu k=%zu iters=%zu: serial %.1f ms, parallel %.1f ms, speedup %.2fx, identical=%s\n",
              cfg.meta.m, cfg.meta.k, cfg.meta.iterations, ts, tp, ts / tp, a == b ? "yes" : "NO");

  ExperimentConfig grid;
  grid.seeds = {1, 2, 3, 4, 5, 6, 7, 8};
  grid.finetune_sizes = {0, 1, 4};
  grid.methods = {Method::DReptile, Method::Nft};
  grid.meta.iterations = 40;
  std::string ca, cb;
  grid.parallel = false;
  const double es = time_ms([&] { ca = csv(run_experiment(grid)); }, reps);
  grid.parallel = true;
  const double ep = time_ms([&] { cb = csv(run_experiment(grid)); }, reps);
  std::printf("run_experiment 8 seeds x 2 methods: serial %.1f ms, parallel %.1f ms, speedup %.2fx, identical=%s\n",
              es, ep, es / ep, ca == cb ? "yes" : "NO");
  return (a == b && ca == cb) ? 0 : 1;
}
