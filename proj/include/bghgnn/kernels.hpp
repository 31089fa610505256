#pragma once

#include <cstdint>
#include <vector>

namespace bghgnn::kernels {

// Compute kernels behind the tensor ops. The default entry points are
// OpenMP-parallel; kernels::serial holds plain single-threaded reference
// versions of the forward set, used by the tests and the benchmark.
//
// Every parallel kernel partitions work by output element and keeps the
// per-element accumulation order identical to the serial version, so the
// two produce bit-identical results for any thread count.

// Sorted-by-segment view of a list of segment ids; order[] lists input row
// indices grouped by segment, ascending within each segment.
struct SegmentIndex {
  int64_t num_segments = 0;
  std::vector<int64_t> offsets;  // size num_segments + 1
  std::vector<int64_t> order;    // size n
};

SegmentIndex build_segment_index(const std::vector<int64_t>& ids, int64_t num_segments);

// c = op(a) * op(b), op = transpose when the flag is set; accumulate adds into c.
// a is m x k after op, b is k x n after op, c is m x n.
void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
            bool trans_a, bool trans_b, bool accumulate);

void ew_add(const double* a, const double* b, double* y, int64_t n);
void ew_sub(const double* a, const double* b, double* y, int64_t n);
void ew_mul(const double* a, const double* b, double* y, int64_t n);
void scalar_mul(const double* a, double s, double* y, int64_t n);
void leaky_relu(const double* x, double slope, double* y, int64_t n);
void exp_fwd(const double* x, double* y, int64_t n);
void log_fwd(const double* x, double* y, int64_t n);

// y[i, :] = x[rows[i], :]
void row_gather(const double* x, const int64_t* rows, double* y, int64_t n_out, int64_t cols);

// y[s, :] = sum / mean over rows of x with ids == s; y has num_segments rows
void segment_sum(const double* x, const SegmentIndex& idx, double* y, int64_t cols);
void segment_mean(const double* x, const SegmentIndex& idx, double* y, int64_t cols);

// softmax within each segment, per column; y aligned with x row-for-row
void segment_softmax(const double* x, const SegmentIndex& idx, double* y, int64_t n, int64_t cols);

// y[i, j] = x[i] for j in [0, cols)
void expand_cols(const double* x, double* y, int64_t n, int64_t cols);

double reduce_sum(const double* x, int64_t n);

// ---- accumulating backward helpers (single implementation, FD-checked) ----

void acc(double* dst, const double* src, int64_t n);                       // dst += src
void acc_scaled(double* dst, const double* src, double s, int64_t n);      // dst += s * src
void acc_mul(double* dst, const double* a, const double* b, int64_t n);    // dst += a .* b
void acc_div(double* dst, const double* a, const double* b, int64_t n);    // dst += a ./ b
void acc_scalar(double* dst, double v, int64_t n);                         // dst += v
void acc_leaky_relu_grad(double* dx, const double* g, const double* x, double slope, int64_t n);
// dx[rows[i], :] += g[i, :]  (scatter-add; grouped by destination row)
void acc_row_scatter(double* dx, const double* g, const std::vector<int64_t>& rows,
                     int64_t n_dst_rows, int64_t cols);
// dx[i] += sum_j g[i, j]
void acc_row_sum(double* dx, const double* g, int64_t n, int64_t cols);
// dx += alpha .* (g - rowwise-in-segment sum(alpha .* g)), the softmax backward
void acc_segment_softmax_grad(double* dx, const double* alpha, const double* g,
                              const SegmentIndex& idx, int64_t cols);

namespace serial {

void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
            bool trans_a, bool trans_b, bool accumulate);
void ew_add(const double* a, const double* b, double* y, int64_t n);
void ew_sub(const double* a, const double* b, double* y, int64_t n);
void ew_mul(const double* a, const double* b, double* y, int64_t n);
void scalar_mul(const double* a, double s, double* y, int64_t n);
void leaky_relu(const double* x, double slope, double* y, int64_t n);
void exp_fwd(const double* x, double* y, int64_t n);
void log_fwd(const double* x, double* y, int64_t n);
void row_gather(const double* x, const int64_t* rows, double* y, int64_t n_out, int64_t cols);
void segment_sum(const double* x, const SegmentIndex& idx, double* y, int64_t cols);
void segment_mean(const double* x, const SegmentIndex& idx, double* y, int64_t cols);
void segment_softmax(const double* x, const SegmentIndex& idx, double* y, int64_t n, int64_t cols);
void expand_cols(const double* x, double* y, int64_t n, int64_t cols);
double reduce_sum(const double* x, int64_t n);

}  // namespace serial

}  // namespace bghgnn::kernels
