#pragma once

#include <cstdint>
#include <string>

#include "bghgnn/graph.hpp"
#include "bghgnn/tensor.hpp"

namespace bghgnn {

// Fixed random encodings for node and edge types: one i.i.d. uniform
// vector per type, sampled once per run and never learned.
struct TypeCodebook {
  Tensor node_type_vectors;  // [m, d_o]
  Tensor edge_type_vectors;  // [n, d_e]
  double low = -1.0, high = 1.0;
  uint64_t seed = 0;

  int64_t node_dim() const { return node_type_vectors.ndim() == 2 ? node_type_vectors.cols() : 0; }
  int64_t edge_dim() const { return edge_type_vectors.ndim() == 2 ? edge_type_vectors.cols() : 0; }

  std::string to_json_text(const HeteroGraph& g) const;
};

// Per-node mean of incident in-edge type vectors; zero for isolated nodes.
struct NeighborRelationSummary {
  Tensor omega;  // [node_count, d_e]
};

// d_node / d_edge of 0 default to m and n respectively.
TypeCodebook build_codebook(const HeteroGraph& g, int64_t d_node = 0, int64_t d_edge = 0,
                            double low = -1.0, double high = 1.0, uint64_t seed = 0);

NeighborRelationSummary neighbor_relation_summary(const HeteroGraph& g, const TypeCodebook& cb);

}  // namespace bghgnn
