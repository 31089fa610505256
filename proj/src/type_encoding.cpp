#include "bghgnn/type_encoding.hpp"

#include <stdexcept>

#include <json.hpp>

#include "bghgnn/rng.hpp"

namespace bghgnn {

TypeCodebook build_codebook(const HeteroGraph& g, int64_t d_node, int64_t d_edge,
                            double low, double high, uint64_t seed) {
  if (!(low < high)) throw std::invalid_argument("build_codebook: requires low < high");
  const int64_t m = g.num_node_types();
  const int64_t n = g.num_relations();
  if (d_node == 0) d_node = m;
  if (d_edge == 0) d_edge = n;
  if (m > 0 && d_node < 1) throw std::invalid_argument("build_codebook: node dim must be >= 1");
  if (n > 0 && d_edge < 1) throw std::invalid_argument("build_codebook: edge dim must be >= 1");

  TypeCodebook cb;
  cb.low = low;
  cb.high = high;
  cb.seed = seed;
  Rng rng(seed);
  cb.node_type_vectors = Tensor({m, d_node});
  for (int64_t i = 0; i < m * d_node; ++i) cb.node_type_vectors.at(i) = rng.uniform(low, high);
  cb.edge_type_vectors = Tensor({n, d_edge});
  for (int64_t i = 0; i < n * d_edge; ++i) cb.edge_type_vectors.at(i) = rng.uniform(low, high);
  return cb;
}

NeighborRelationSummary neighbor_relation_summary(const HeteroGraph& g, const TypeCodebook& cb) {
  if (cb.edge_type_vectors.rows() != g.num_relations())
    throw std::invalid_argument("neighbor_relation_summary: codebook does not cover this graph's edge types");
  const int64_t d = cb.edge_dim();
  NeighborRelationSummary out;
  out.omega = Tensor::zeros({g.node_count, d});
#pragma omp parallel for schedule(static) if (g.node_count * d > 4096)
  for (int64_t v = 0; v < g.node_count; ++v) {
    int64_t lo = g.in_offsets[static_cast<size_t>(v)];
    int64_t hi = g.in_offsets[static_cast<size_t>(v) + 1];
    if (lo == hi) continue;  // isolated: stays zero
    double* dst = out.omega.data() + v * d;
    for (int64_t p = lo; p < hi; ++p) {
      const double* src = cb.edge_type_vectors.data() + g.in_etype[static_cast<size_t>(p)] * d;
      for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
    }
    double inv = 1.0 / static_cast<double>(hi - lo);
    for (int64_t j = 0; j < d; ++j) dst[j] *= inv;
  }
  return out;
}

std::string TypeCodebook::to_json_text(const HeteroGraph& g) const {
  nlohmann::json j;
  j["seed"] = seed;
  j["bounds"] = {low, high};
  j["node_types"] = nlohmann::json::object();
  for (int64_t t = 0; t < node_type_vectors.rows(); ++t) {
    std::vector<double> v(node_type_vectors.data() + t * node_dim(),
                          node_type_vectors.data() + (t + 1) * node_dim());
    j["node_types"][g.node_type_names[static_cast<size_t>(t)]] = v;
  }
  j["edge_types"] = nlohmann::json::object();
  for (int64_t t = 0; t < edge_type_vectors.rows(); ++t) {
    std::vector<double> v(edge_type_vectors.data() + t * edge_dim(),
                          edge_type_vectors.data() + (t + 1) * edge_dim());
    j["edge_types"][g.edge_type_names[static_cast<size_t>(t)]] = v;
  }
  return j.dump(2);
}

}  // namespace bghgnn
