// Compares the serial reference kernels against the OpenMP ones on generated
// datasets and reports throughput. The outputs are asserted byte-identical
// before timing.

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "xcsr/kernels.hpp"
#include "xcsr/oracle.hpp"

using namespace xcsr;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto dt = std::chrono::steady_clock::now() - t0;
  return std::chrono::duration<double>(dt).count() / reps;
}

std::vector<CellMeta> shard_metas(const XcsrShard& s) {
  std::vector<CellMeta> metas;
  metas.reserve(s.cell_ids.size());
  std::size_t cell = 0;
  for (std::size_t line = 0; line < s.line_ids.size(); ++line)
    for (std::uint64_t k = 0; k < s.line_cell_counts[line]; ++k, ++cell)
      metas.push_back(
          {s.line_ids[line], s.cell_ids[cell], s.cell_value_counts[cell]});
  return metas;
}

}  // namespace

int main(int argc, char** argv) {
  std::uint64_t dim = 8192;
  std::uint64_t cols = 96;
  std::uint64_t value_size = 64;
  int reps = 5;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    const std::uint64_t v = std::strtoull(argv[i + 1], nullptr, 10);
    if (flag == "--dim") dim = v;
    else if (flag == "--cols") cols = v;
    else if (flag == "--value-size") value_size = v;
    else if (flag == "--reps") reps = static_cast<int>(v);
    else {
      std::fprintf(stderr, "usage: kernel_bench [--dim N] [--cols K] [--value-size S] [--reps R]\n");
      return 2;
    }
  }

  GenSpec spec;
  spec.mode = GenSpec::Mode::Heterogeneous;
  spec.global_dim = dim;
  spec.ranks = 1;
  spec.cols_min = cols / 2;
  spec.cols_max = cols;
  spec.value_count_mean = 5.0;
  spec.value_size = value_size;
  spec.seed = 42;

  std::printf("generating: dim=%llu cols<=%llu value_size=%llu ...\n",
              static_cast<unsigned long long>(dim),
              static_cast<unsigned long long>(cols),
              static_cast<unsigned long long>(value_size));
  Generated data = generate(spec);
  const XcsrShard& shard = data.shards[0];
  const double mib =
      static_cast<double>(shard.values.size()) / (1024.0 * 1024.0);
  std::printf("dataset: %llu cells, %.1f MiB of values\n",
              static_cast<unsigned long long>(shard.total_cells()), mib);
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; both columns run serially\n");
#endif

  const XcsrShard serial_t = kernels::local_transpose_serial(shard);
  const XcsrShard parallel_t = kernels::local_transpose_parallel(shard);
  if (!(serial_t == parallel_t)) {
    std::fprintf(stderr, "FATAL: serial and parallel transpose outputs differ\n");
    return 1;
  }

  const auto metas = shard_metas(serial_t);
  const auto frag_s = kernels::reorder_serial(metas, serial_t.values, value_size);
  const auto frag_p = kernels::reorder_parallel(metas, serial_t.values, value_size);
  if (!(frag_s == frag_p)) {
    std::fprintf(stderr, "FATAL: serial and parallel reorder outputs differ\n");
    return 1;
  }

  const double ts = time_of([&] { kernels::local_transpose_serial(shard); }, reps);
  const double tp = time_of([&] { kernels::local_transpose_parallel(shard); }, reps);
  const double rs =
      time_of([&] { kernels::reorder_serial(metas, serial_t.values, value_size); }, reps);
  const double rp =
      time_of([&] { kernels::reorder_parallel(metas, serial_t.values, value_size); }, reps);

  std::printf("\n%-18s %12s %12s %9s\n", "kernel", "serial", "openmp", "speedup");
  std::printf("%-18s %10.2f ms %10.2f ms %8.2fx\n", "local_transpose",
              ts * 1e3, tp * 1e3, ts / tp);
  std::printf("%-18s %10.2f ms %10.2f ms %8.2fx\n", "reorder_received",
              rs * 1e3, rp * 1e3, rs / rp);
  return 0;
}
