#include "bghgnn/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace bghgnn::kernels {

namespace {
constexpr int64_t kParCutoff = 4096;  // skip thread fan-out for tiny work
}

SegmentIndex build_segment_index(const std::vector<int64_t>& ids, int64_t num_segments) {
  SegmentIndex idx;
  idx.num_segments = num_segments;
  const int64_t n = static_cast<int64_t>(ids.size());
  std::vector<int64_t> counts(static_cast<size_t>(num_segments), 0);
  for (int64_t i = 0; i < n; ++i) {
    int64_t s = ids[static_cast<size_t>(i)];
    if (s < 0 || s >= num_segments) throw std::out_of_range("segment id out of range");
    ++counts[static_cast<size_t>(s)];
  }
  idx.offsets.assign(static_cast<size_t>(num_segments) + 1, 0);
  for (int64_t s = 0; s < num_segments; ++s)
    idx.offsets[static_cast<size_t>(s) + 1] = idx.offsets[static_cast<size_t>(s)] + counts[static_cast<size_t>(s)];
  idx.order.resize(static_cast<size_t>(n));
  std::vector<int64_t> cursor(idx.offsets.begin(), idx.offsets.end() - 1);
  // stable counting sort: within a segment, rows keep ascending input order
  for (int64_t i = 0; i < n; ++i) {
    int64_t s = ids[static_cast<size_t>(i)];
    idx.order[static_cast<size_t>(cursor[static_cast<size_t>(s)]++)] = i;
  }
  return idx;
}

// ---------------- matmul ----------------

namespace {

inline double dot_op(const double* a, const double* b, int64_t m, int64_t k, int64_t n,
                     bool ta, bool tb, int64_t i, int64_t j) {
  // element (i, j) of op(a) * op(b); a stored m x k (or k x m when ta), b likewise
  double acc = 0.0;
  if (!ta && !tb) {
    const double* ar = a + i * k;
    for (int64_t p = 0; p < k; ++p) acc += ar[p] * b[p * n + j];
  } else if (ta && !tb) {
    for (int64_t p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
  } else if (!ta && tb) {
    const double* ar = a + i * k;
    const double* br = b + j * k;
    for (int64_t p = 0; p < k; ++p) acc += ar[p] * br[p];
  } else {
    for (int64_t p = 0; p < k; ++p) acc += a[p * m + i] * b[j * k + p];
  }
  return acc;
}

}  // namespace

void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
            bool trans_a, bool trans_b, bool accumulate) {
#pragma omp parallel for schedule(static) if (m * n * k > kParCutoff)
  for (int64_t i = 0; i < m; ++i) {
    double* cr = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      double v = dot_op(a, b, m, k, n, trans_a, trans_b, i, j);
      cr[j] = accumulate ? cr[j] + v : v;
    }
  }
}

void serial::matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
                    bool trans_a, bool trans_b, bool accumulate) {
  for (int64_t i = 0; i < m; ++i) {
    double* cr = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      double v = dot_op(a, b, m, k, n, trans_a, trans_b, i, j);
      cr[j] = accumulate ? cr[j] + v : v;
    }
  }
}

// ---------------- elementwise ----------------

#define BGHGNN_EW_LOOP(expr)                                   \
  _Pragma("omp parallel for schedule(static) if (n > kParCutoff)") \
  for (int64_t i = 0; i < n; ++i) { expr; }

void ew_add(const double* a, const double* b, double* y, int64_t n) { BGHGNN_EW_LOOP(y[i] = a[i] + b[i]) }
void ew_sub(const double* a, const double* b, double* y, int64_t n) { BGHGNN_EW_LOOP(y[i] = a[i] - b[i]) }
void ew_mul(const double* a, const double* b, double* y, int64_t n) { BGHGNN_EW_LOOP(y[i] = a[i] * b[i]) }
void scalar_mul(const double* a, double s, double* y, int64_t n) { BGHGNN_EW_LOOP(y[i] = a[i] * s) }
void leaky_relu(const double* x, double slope, double* y, int64_t n) {
  BGHGNN_EW_LOOP(y[i] = x[i] >= 0.0 ? x[i] : slope * x[i])
}
void exp_fwd(const double* x, double* y, int64_t n) { BGHGNN_EW_LOOP(y[i] = std::exp(x[i])) }
void log_fwd(const double* x, double* y, int64_t n) { BGHGNN_EW_LOOP(y[i] = std::log(x[i])) }

void serial::ew_add(const double* a, const double* b, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}
void serial::ew_sub(const double* a, const double* b, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
}
void serial::ew_mul(const double* a, const double* b, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}
void serial::scalar_mul(const double* a, double s, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] * s;
}
void serial::leaky_relu(const double* x, double slope, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] >= 0.0 ? x[i] : slope * x[i];
}
void serial::exp_fwd(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}
void serial::log_fwd(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = std::log(x[i]);
}

// ---------------- gather / segments ----------------

void row_gather(const double* x, const int64_t* rows, double* y, int64_t n_out, int64_t cols) {
#pragma omp parallel for schedule(static) if (n_out * cols > kParCutoff)
  for (int64_t i = 0; i < n_out; ++i) {
    const double* src = x + rows[i] * cols;
    double* dst = y + i * cols;
    for (int64_t j = 0; j < cols; ++j) dst[j] = src[j];
  }
}

void serial::row_gather(const double* x, const int64_t* rows, double* y, int64_t n_out, int64_t cols) {
  for (int64_t i = 0; i < n_out; ++i) {
    const double* src = x + rows[i] * cols;
    double* dst = y + i * cols;
    for (int64_t j = 0; j < cols; ++j) dst[j] = src[j];
  }
}

namespace {

inline void segment_sum_one(const double* x, const SegmentIndex& idx, double* y, int64_t cols, int64_t s) {
  double* dst = y + s * cols;
  for (int64_t j = 0; j < cols; ++j) dst[j] = 0.0;
  for (int64_t p = idx.offsets[static_cast<size_t>(s)]; p < idx.offsets[static_cast<size_t>(s) + 1]; ++p) {
    const double* src = x + idx.order[static_cast<size_t>(p)] * cols;
    for (int64_t j = 0; j < cols; ++j) dst[j] += src[j];
  }
}

inline void segment_softmax_one(const double* x, const SegmentIndex& idx, double* y, int64_t cols, int64_t s) {
  const int64_t lo = idx.offsets[static_cast<size_t>(s)];
  const int64_t hi = idx.offsets[static_cast<size_t>(s) + 1];
  if (lo == hi) return;
  for (int64_t j = 0; j < cols; ++j) {
    double mx = x[idx.order[static_cast<size_t>(lo)] * cols + j];
    for (int64_t p = lo + 1; p < hi; ++p)
      mx = std::max(mx, x[idx.order[static_cast<size_t>(p)] * cols + j]);
    double z = 0.0;
    for (int64_t p = lo; p < hi; ++p) {
      int64_t r = idx.order[static_cast<size_t>(p)];
      double e = std::exp(x[r * cols + j] - mx);
      y[r * cols + j] = e;
      z += e;
    }
    for (int64_t p = lo; p < hi; ++p) {
      int64_t r = idx.order[static_cast<size_t>(p)];
      y[r * cols + j] /= z;
    }
  }
}

}  // namespace

void segment_sum(const double* x, const SegmentIndex& idx, double* y, int64_t cols) {
  const int64_t ns = idx.num_segments;
#pragma omp parallel for schedule(static) if (static_cast<int64_t>(idx.order.size()) * cols > kParCutoff)
  for (int64_t s = 0; s < ns; ++s) segment_sum_one(x, idx, y, cols, s);
}

void serial::segment_sum(const double* x, const SegmentIndex& idx, double* y, int64_t cols) {
  for (int64_t s = 0; s < idx.num_segments; ++s) segment_sum_one(x, idx, y, cols, s);
}

void segment_mean(const double* x, const SegmentIndex& idx, double* y, int64_t cols) {
  const int64_t ns = idx.num_segments;
  for (int64_t s = 0; s < ns; ++s)
    if (idx.offsets[static_cast<size_t>(s)] == idx.offsets[static_cast<size_t>(s) + 1])
      throw std::domain_error("segment_mean: empty segment " + std::to_string(s));
#pragma omp parallel for schedule(static) if (static_cast<int64_t>(idx.order.size()) * cols > kParCutoff)
  for (int64_t s = 0; s < ns; ++s) {
    segment_sum_one(x, idx, y, cols, s);
    double inv = 1.0 / static_cast<double>(idx.offsets[static_cast<size_t>(s) + 1] - idx.offsets[static_cast<size_t>(s)]);
    double* dst = y + s * cols;
    for (int64_t j = 0; j < cols; ++j) dst[j] *= inv;
  }
}

void serial::segment_mean(const double* x, const SegmentIndex& idx, double* y, int64_t cols) {
  for (int64_t s = 0; s < idx.num_segments; ++s) {
    int64_t cnt = idx.offsets[static_cast<size_t>(s) + 1] - idx.offsets[static_cast<size_t>(s)];
    if (cnt == 0) throw std::domain_error("segment_mean: empty segment " + std::to_string(s));
    segment_sum_one(x, idx, y, cols, s);
    double* dst = y + s * cols;
    for (int64_t j = 0; j < cols; ++j) dst[j] /= static_cast<double>(cnt);
  }
}

void segment_softmax(const double* x, const SegmentIndex& idx, double* y, int64_t n, int64_t cols) {
  (void)n;
  const int64_t ns = idx.num_segments;
#pragma omp parallel for schedule(static) if (static_cast<int64_t>(idx.order.size()) * cols > kParCutoff)
  for (int64_t s = 0; s < ns; ++s) segment_softmax_one(x, idx, y, cols, s);
}

void serial::segment_softmax(const double* x, const SegmentIndex& idx, double* y, int64_t n, int64_t cols) {
  (void)n;
  for (int64_t s = 0; s < idx.num_segments; ++s) segment_softmax_one(x, idx, y, cols, s);
}

void expand_cols(const double* x, double* y, int64_t n, int64_t cols) {
#pragma omp parallel for schedule(static) if (n * cols > kParCutoff)
  for (int64_t i = 0; i < n; ++i) {
    double* dst = y + i * cols;
    for (int64_t j = 0; j < cols; ++j) dst[j] = x[i];
  }
}

void serial::expand_cols(const double* x, double* y, int64_t n, int64_t cols) {
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < cols; ++j) y[i * cols + j] = x[i];
}

double reduce_sum(const double* x, int64_t n) {
  // kept serial: a single fixed accumulation order in both variants
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double serial::reduce_sum(const double* x, int64_t n) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

// ---------------- backward helpers ----------------

void acc(double* dst, const double* src, int64_t n) { BGHGNN_EW_LOOP(dst[i] += src[i]) }
void acc_scaled(double* dst, const double* src, double s, int64_t n) { BGHGNN_EW_LOOP(dst[i] += s * src[i]) }
void acc_mul(double* dst, const double* a, const double* b, int64_t n) { BGHGNN_EW_LOOP(dst[i] += a[i] * b[i]) }
void acc_div(double* dst, const double* a, const double* b, int64_t n) { BGHGNN_EW_LOOP(dst[i] += a[i] / b[i]) }
void acc_scalar(double* dst, double v, int64_t n) { BGHGNN_EW_LOOP(dst[i] += v) }
void acc_leaky_relu_grad(double* dx, const double* g, const double* x, double slope, int64_t n) {
  BGHGNN_EW_LOOP(dx[i] += g[i] * (x[i] >= 0.0 ? 1.0 : slope))
}

void acc_row_scatter(double* dx, const double* g, const std::vector<int64_t>& rows,
                     int64_t n_dst_rows, int64_t cols) {
  SegmentIndex idx = build_segment_index(rows, n_dst_rows);
#pragma omp parallel for schedule(static) if (static_cast<int64_t>(rows.size()) * cols > kParCutoff)
  for (int64_t s = 0; s < n_dst_rows; ++s) {
    double* dst = dx + s * cols;
    for (int64_t p = idx.offsets[static_cast<size_t>(s)]; p < idx.offsets[static_cast<size_t>(s) + 1]; ++p) {
      const double* src = g + idx.order[static_cast<size_t>(p)] * cols;
      for (int64_t j = 0; j < cols; ++j) dst[j] += src[j];
    }
  }
}

void acc_row_sum(double* dx, const double* g, int64_t n, int64_t cols) {
#pragma omp parallel for schedule(static) if (n * cols > kParCutoff)
  for (int64_t i = 0; i < n; ++i) {
    double s = 0.0;
    const double* src = g + i * cols;
    for (int64_t j = 0; j < cols; ++j) s += src[j];
    dx[i] += s;
  }
}

void acc_segment_softmax_grad(double* dx, const double* alpha, const double* g,
                              const SegmentIndex& idx, int64_t cols) {
  const int64_t ns = idx.num_segments;
#pragma omp parallel for schedule(static) if (static_cast<int64_t>(idx.order.size()) * cols > kParCutoff)
  for (int64_t s = 0; s < ns; ++s) {
    const int64_t lo = idx.offsets[static_cast<size_t>(s)];
    const int64_t hi = idx.offsets[static_cast<size_t>(s) + 1];
    for (int64_t j = 0; j < cols; ++j) {
      double dot = 0.0;
      for (int64_t p = lo; p < hi; ++p) {
        int64_t r = idx.order[static_cast<size_t>(p)];
        dot += alpha[r * cols + j] * g[r * cols + j];
      }
      for (int64_t p = lo; p < hi; ++p) {
        int64_t r = idx.order[static_cast<size_t>(p)];
        dx[r * cols + j] += alpha[r * cols + j] * (g[r * cols + j] - dot);
      }
    }
  }
}

#undef BGHGNN_EW_LOOP

}  // namespace bghgnn::kernels
