#pragma once

#include <cstdint>
#include <vector>

#include "bghgnn/attr_fusion.hpp"
#include "bghgnn/graph.hpp"
#include "bghgnn/tape.hpp"
#include "bghgnn/tensor.hpp"
#include "bghgnn/type_encoding.hpp"

namespace bghgnn {

// How the three projected modalities are combined per rank:
//  kLowRank      h = sum_i (Wx_i x1) .* (Wo_i o1) .* (Ww_i w1)     (length d_h)
//                  equal to contracting the full interaction tensor
//                  x1 (x) o1 (x) w1 with the rank-decomposed weights
//  kPerRankKron  h = sum_i kron(Wx_i x1, Wo_i o1, Ww_i w1)          (length d_h^3)
//                  ablation variant, literal per-rank Kronecker products
enum class FusionVariant { kLowRank, kPerRankKron };

// Rank-r factor matrices per modality, each [out_dim, input_dim + 1];
// the +1 matches the constant 1 appended to every input vector.
struct FusionParams {
  int64_t rank = 4;
  int64_t out_dim = 32;
  std::vector<Tensor> x_factors, o_factors, w_factors;

  // uniform(-s, s) init with s = 1/sqrt(fan_in) per factor matrix
  static FusionParams init(int64_t rank, int64_t out_dim, int64_t x_dim, int64_t o_dim,
                           int64_t w_dim, uint64_t seed);

  int64_t output_dim(FusionVariant v) const {
    return v == FusionVariant::kLowRank ? out_dim : out_dim * out_dim * out_dim;
  }
  void validate(int64_t x1_len, int64_t o1_len, int64_t w1_len) const;
};

struct FusedEmbedding {
  Tensor rows;  // [node_count, output_dim]
};

std::vector<double> append_one(const std::vector<double>& v);
Tensor append_ones_col(const Tensor& m);  // [n, d] -> [n, d+1]

// Full three-way interaction tensor T[i,j,k] = x[i]*o[j]*w[k]; diagnostic
// only, so the element count is capped.
Tensor kron_full(const std::vector<double>& x, const std::vector<double>& o,
                 const std::vector<double>& w, int64_t cap = 1 << 20);

// Single-node fusion on appended vectors.
std::vector<double> fuse(const std::vector<double>& x1, const std::vector<double>& o1,
                         const std::vector<double>& w1, const FusionParams& p,
                         FusionVariant variant = FusionVariant::kLowRank);

// Whole-graph fusion; node rows are independent and computed in parallel.
FusedEmbedding fuse_graph(const HeteroGraph& g, const UnifiedFeatures& uf, const TypeCodebook& cb,
                          const NeighborRelationSummary& nrs, const FusionParams& p,
                          FusionVariant variant = FusionVariant::kLowRank);

// Recorded version for training: x1/o1/w1 are [n, dim+1] matrices already
// appended, factor ids are registered parameters in rank order.
Tape::Id fuse_on_tape(Tape& tape, Tape::Id x1, Tape::Id o1, Tape::Id w1,
                      const std::vector<Tape::Id>& x_factors,
                      const std::vector<Tape::Id>& o_factors,
                      const std::vector<Tape::Id>& w_factors,
                      FusionVariant variant = FusionVariant::kLowRank);

// [n, d_e] per-node matrix of node-type vectors (row v = codebook row of v's type)
Tensor node_type_matrix(const HeteroGraph& g, const TypeCodebook& cb);

}  // namespace bghgnn
