#include "bghgnn/lowrank_fusion.hpp"

#include <cmath>
#include <stdexcept>

#include "bghgnn/rng.hpp"

namespace bghgnn {

FusionParams FusionParams::init(int64_t rank, int64_t out_dim, int64_t x_dim, int64_t o_dim,
                                int64_t w_dim, uint64_t seed) {
  if (rank < 1) throw std::invalid_argument("fusion: rank must be >= 1");
  if (out_dim < 1) throw std::invalid_argument("fusion: out_dim must be >= 1");
  FusionParams p;
  p.rank = rank;
  p.out_dim = out_dim;
  Rng rng(seed);
  auto make = [&](int64_t in_dim) {
    double s = 1.0 / std::sqrt(static_cast<double>(in_dim + 1));
    Tensor t({out_dim, in_dim + 1});
    for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = rng.uniform(-s, s);
    return t;
  };
  for (int64_t i = 0; i < rank; ++i) p.x_factors.push_back(make(x_dim));
  for (int64_t i = 0; i < rank; ++i) p.o_factors.push_back(make(o_dim));
  for (int64_t i = 0; i < rank; ++i) p.w_factors.push_back(make(w_dim));
  return p;
}

void FusionParams::validate(int64_t x1_len, int64_t o1_len, int64_t w1_len) const {
  if (static_cast<int64_t>(x_factors.size()) != rank ||
      static_cast<int64_t>(o_factors.size()) != rank ||
      static_cast<int64_t>(w_factors.size()) != rank)
    throw std::invalid_argument("fusion: factor count does not match rank");
  auto check = [&](const std::vector<Tensor>& fs, int64_t len, const char* which) {
    for (const Tensor& t : fs)
      if (t.ndim() != 2 || t.rows() != out_dim || t.cols() != len)
        throw std::invalid_argument(std::string("fusion: ") + which + "-factor shape " + t.shape_str() +
                                    " does not match [" + std::to_string(out_dim) + "," +
                                    std::to_string(len) + "]");
  };
  check(x_factors, x1_len, "x");
  check(o_factors, o1_len, "o");
  check(w_factors, w1_len, "w");
}

std::vector<double> append_one(const std::vector<double>& v) {
  std::vector<double> out = v;
  out.push_back(1.0);
  return out;
}

Tensor append_ones_col(const Tensor& m) {
  int64_t n = m.rows(), d = m.cols();
  Tensor out({n, d + 1});
  for (int64_t i = 0; i < n; ++i) {
    const double* src = m.data() + i * d;
    double* dst = out.data() + i * (d + 1);
    for (int64_t j = 0; j < d; ++j) dst[j] = src[j];
    dst[d] = 1.0;
  }
  return out;
}

Tensor kron_full(const std::vector<double>& x, const std::vector<double>& o,
                 const std::vector<double>& w, int64_t cap) {
  if (x.empty() || o.empty() || w.empty())
    throw std::invalid_argument("kron_full: inputs must be nonempty");
  int64_t a = static_cast<int64_t>(x.size());
  int64_t b = static_cast<int64_t>(o.size());
  int64_t c = static_cast<int64_t>(w.size());
  if (a * b * c > cap)
    throw std::invalid_argument("kron_full: dimension product exceeds cap (diagnostic op, tiny dims only)");
  Tensor t({a, b, c});
  for (int64_t i = 0; i < a; ++i)
    for (int64_t j = 0; j < b; ++j)
      for (int64_t k = 0; k < c; ++k) t.at((i * b + j) * c + k) = x[static_cast<size_t>(i)] * o[static_cast<size_t>(j)] * w[static_cast<size_t>(k)];
  return t;
}

namespace {

// y = F * v for one factor matrix
void apply_factor(const Tensor& f, const double* v, double* y) {
  int64_t rows = f.rows(), cols = f.cols();
  for (int64_t i = 0; i < rows; ++i) {
    double s = 0.0;
    const double* fr = f.data() + i * cols;
    for (int64_t j = 0; j < cols; ++j) s += fr[j] * v[j];
    y[i] = s;
  }
}

void fuse_row(const double* x1, const double* o1, const double* w1, const FusionParams& p,
              FusionVariant variant, double* out, double* scratch) {
  const int64_t d = p.out_dim;
  double* px = scratch;
  double* po = scratch + d;
  double* pw = scratch + 2 * d;
  if (variant == FusionVariant::kLowRank) {
    for (int64_t i = 0; i < d; ++i) out[i] = 0.0;
    for (int64_t r = 0; r < p.rank; ++r) {
      apply_factor(p.x_factors[static_cast<size_t>(r)], x1, px);
      apply_factor(p.o_factors[static_cast<size_t>(r)], o1, po);
      apply_factor(p.w_factors[static_cast<size_t>(r)], w1, pw);
      for (int64_t i = 0; i < d; ++i) out[i] += px[i] * po[i] * pw[i];
    }
  } else {
    const int64_t dd = d * d * d;
    for (int64_t i = 0; i < dd; ++i) out[i] = 0.0;
    for (int64_t r = 0; r < p.rank; ++r) {
      apply_factor(p.x_factors[static_cast<size_t>(r)], x1, px);
      apply_factor(p.o_factors[static_cast<size_t>(r)], o1, po);
      apply_factor(p.w_factors[static_cast<size_t>(r)], w1, pw);
      for (int64_t i = 0; i < d; ++i)
        for (int64_t j = 0; j < d; ++j)
          for (int64_t k = 0; k < d; ++k) out[(i * d + j) * d + k] += px[i] * po[j] * pw[k];
    }
  }
}

}  // namespace

std::vector<double> fuse(const std::vector<double>& x1, const std::vector<double>& o1,
                         const std::vector<double>& w1, const FusionParams& p,
                         FusionVariant variant) {
  p.validate(static_cast<int64_t>(x1.size()), static_cast<int64_t>(o1.size()),
             static_cast<int64_t>(w1.size()));
  std::vector<double> out(static_cast<size_t>(p.output_dim(variant)));
  std::vector<double> scratch(static_cast<size_t>(3 * p.out_dim));
  fuse_row(x1.data(), o1.data(), w1.data(), p, variant, out.data(), scratch.data());
  return out;
}

FusedEmbedding fuse_graph(const HeteroGraph& g, const UnifiedFeatures& uf, const TypeCodebook& cb,
                          const NeighborRelationSummary& nrs, const FusionParams& p,
                          FusionVariant variant) {
  Tensor x1 = append_ones_col(uf.values);
  Tensor o1 = append_ones_col(node_type_matrix(g, cb));
  Tensor w1 = append_ones_col(nrs.omega);
  p.validate(x1.cols(), o1.cols(), w1.cols());

  const int64_t out_dim = p.output_dim(variant);
  FusedEmbedding fe;
  fe.rows = Tensor({g.node_count, out_dim});
#pragma omp parallel
  {
    std::vector<double> scratch(static_cast<size_t>(3 * p.out_dim));
#pragma omp for schedule(static)
    for (int64_t v = 0; v < g.node_count; ++v)
      fuse_row(x1.data() + v * x1.cols(), o1.data() + v * o1.cols(), w1.data() + v * w1.cols(),
               p, variant, fe.rows.data() + v * out_dim, scratch.data());
  }
  return fe;
}

Tape::Id fuse_on_tape(Tape& tape, Tape::Id x1, Tape::Id o1, Tape::Id w1,
                      const std::vector<Tape::Id>& x_factors,
                      const std::vector<Tape::Id>& o_factors,
                      const std::vector<Tape::Id>& w_factors,
                      FusionVariant variant) {
  if (x_factors.size() != o_factors.size() || o_factors.size() != w_factors.size() || x_factors.empty())
    throw std::invalid_argument("fuse_on_tape: need the same nonzero number of factors per modality");
  Tape::Id out = -1;
  for (size_t r = 0; r < x_factors.size(); ++r) {
    Tape::Id px = tape.matmul(x1, x_factors[r], false, true);
    Tape::Id po = tape.matmul(o1, o_factors[r], false, true);
    Tape::Id pw = tape.matmul(w1, w_factors[r], false, true);
    Tape::Id term = variant == FusionVariant::kLowRank
                        ? tape.mul(tape.mul(px, po), pw)
                        : tape.row_kron(tape.row_kron(px, po), pw);
    out = r == 0 ? term : tape.add(out, term);
  }
  return out;
}

Tensor node_type_matrix(const HeteroGraph& g, const TypeCodebook& cb) {
  if (cb.node_type_vectors.rows() != g.num_node_types())
    throw std::invalid_argument("node_type_matrix: codebook does not cover this graph's node types");
  const int64_t d = cb.node_dim();
  Tensor out({g.node_count, d});
  for (int64_t v = 0; v < g.node_count; ++v) {
    const double* src = cb.node_type_vectors.data() + g.node_type_of[static_cast<size_t>(v)] * d;
    double* dst = out.data() + v * d;
    for (int64_t j = 0; j < d; ++j) dst[j] = src[j];
  }
  return out;
}

}  // namespace bghgnn
