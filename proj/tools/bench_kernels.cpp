// Times the OpenMP kernels against their serial reference versions and
// reports the speedup. Build target only; not part of the test suite.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include <omp.h>

#include "bghgnn/graph.hpp"
#include "bghgnn/kernels.hpp"
#include "bghgnn/lowrank_fusion.hpp"
#include "bghgnn/rng.hpp"

using namespace bghgnn;
namespace ker = kernels;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return ms / reps;
}

void report(const char* name, double serial_ms, double parallel_ms) {
  printf("%-28s %10.3f ms %10.3f ms %8.2fx\n", name, serial_ms, parallel_ms,
         serial_ms / parallel_ms);
}

std::vector<double> random_vec(int64_t n, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

int main() {
  printf("threads: %d\n", omp_get_max_threads());
  printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");
  Rng rng(42);

  {
    const int64_t m = 384, k = 384, n = 384;
    std::vector<double> a = random_vec(m * k, rng), b = random_vec(k * n, rng);
    std::vector<double> c(static_cast<size_t>(m * n));
    report("matmul 384x384x384",
           time_ms([&] { ker::serial::matmul(a.data(), b.data(), c.data(), m, k, n, false, false, false); }, 3),
           time_ms([&] { ker::matmul(a.data(), b.data(), c.data(), m, k, n, false, false, false); }, 3));
  }

  {
    const int64_t rows = 1'000'000, cols = 16, segs = 50'000;
    std::vector<double> x = random_vec(rows * cols, rng);
    std::vector<double> y(static_cast<size_t>(segs * cols));
    std::vector<int64_t> ids(static_cast<size_t>(rows));
    for (int64_t i = 0; i < rows; ++i) ids[static_cast<size_t>(i)] = rng.uniform_int(segs);
    ker::SegmentIndex idx = ker::build_segment_index(ids, segs);
    report("segment_sum 1M x 16",
           time_ms([&] { ker::serial::segment_sum(x.data(), idx, y.data(), cols); }, 5),
           time_ms([&] { ker::segment_sum(x.data(), idx, y.data(), cols); }, 5));
    std::vector<double> sm(x.size());
    report("segment_softmax 1M x 16",
           time_ms([&] { ker::serial::segment_softmax(x.data(), idx, sm.data(), rows, cols); }, 3),
           time_ms([&] { ker::segment_softmax(x.data(), idx, sm.data(), rows, cols); }, 3));
  }

  {
    const int64_t src_rows = 200'000, out_rows = 1'000'000, cols = 32;
    std::vector<double> x = random_vec(src_rows * cols, rng);
    std::vector<double> y(static_cast<size_t>(out_rows * cols));
    std::vector<int64_t> idx(static_cast<size_t>(out_rows));
    for (int64_t i = 0; i < out_rows; ++i) idx[static_cast<size_t>(i)] = rng.uniform_int(src_rows);
    report("row_gather 1M x 32",
           time_ms([&] { ker::serial::row_gather(x.data(), idx.data(), y.data(), out_rows, cols); }, 5),
           time_ms([&] { ker::row_gather(x.data(), idx.data(), y.data(), out_rows, cols); }, 5));
  }

  {
    const int64_t n = 8'000'000;
    std::vector<double> a = random_vec(n, rng), b = random_vec(n, rng), y(static_cast<size_t>(n));
    report("elementwise mul 8M",
           time_ms([&] { ker::serial::ew_mul(a.data(), b.data(), y.data(), n); }, 5),
           time_ms([&] { ker::ew_mul(a.data(), b.data(), y.data(), n); }, 5));
    report("leaky_relu 8M",
           time_ms([&] { ker::serial::leaky_relu(a.data(), 0.2, y.data(), n); }, 5),
           time_ms([&] { ker::leaky_relu(a.data(), 0.2, y.data(), n); }, 5));
  }

  {
    // whole-graph fusion: parallel-over-nodes vs a forced single row at a time
    SchemaSpec spec;
    spec.seed = 7;
    spec.node_types = {{"u", 20000, {"a0", "a1", "a2", "a3", "a4", "a5"}, 0.0},
                       {"v", 20000, {"b0", "b1", "b2", "b3"}, 0.0}};
    for (int i = 0; i < 6; ++i)
      spec.edge_types.push_back({"r" + std::to_string(i), i % 2 ? "u" : "v", i % 2 ? "v" : "u", 2.0, -1, false});
    HeteroGraph g = synth_graph(spec);
    UnifiedSchema schema = build_unified_schema(g);
    UnifiedFeatures uf = project_features(g, schema);
    TypeCodebook cb = build_codebook(g, 8, 8, -1.0, 1.0, 3);
    NeighborRelationSummary nrs = neighbor_relation_summary(g, cb);
    FusionParams p = FusionParams::init(4, 32, schema.width(), 8, 8, 5);
    double par = time_ms([&] { fuse_graph(g, uf, cb, nrs, p); }, 3);
    double ser;
    {
      int saved = omp_get_max_threads();
      omp_set_num_threads(1);
      ser = time_ms([&] { fuse_graph(g, uf, cb, nrs, p); }, 3);
      omp_set_num_threads(saved);
    }
    report("fuse_graph 40k nodes r=4", ser, par);
  }

  return 0;
}
