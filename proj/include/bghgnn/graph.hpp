#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bghgnn/tensor.hpp"

namespace bghgnn {

// One feature table per node type; channels are kept sorted and columns
// follow that order, so identical graphs serialize identically.
struct FeatureTable {
  std::vector<std::string> channels;
  Tensor values;  // [nodes of this type, |channels|]
};

struct Splits {
  std::vector<int64_t> train, val, test;
  bool present = false;
};

// Typed nodes and directed typed edges with per-type feature channels.
// Immutable after finalize(); safe for any number of concurrent readers.
struct HeteroGraph {
  int64_t node_count = 0;
  std::vector<int32_t> node_type_of;               // per node
  std::vector<std::pair<int64_t, int64_t>> edges;  // (src, dst)
  std::vector<int32_t> edge_type_of;               // per edge
  std::vector<std::string> node_type_names;
  std::vector<std::string> edge_type_names;
  std::vector<FeatureTable> features;              // per node type
  std::map<int64_t, int32_t> labels;
  Splits splits;

  // derived by finalize()
  std::vector<int64_t> type_local_index;           // node -> row in its type table
  std::vector<std::vector<int64_t>> nodes_by_type;
  std::vector<int64_t> in_offsets;                 // CSR over in-edges, keyed by dst
  std::vector<int64_t> in_src;
  std::vector<int32_t> in_etype;

  int64_t edge_count() const { return static_cast<int64_t>(edges.size()); }
  int64_t num_node_types() const { return static_cast<int64_t>(node_type_names.size()); }
  int64_t num_relations() const { return static_cast<int64_t>(edge_type_names.size()); }

  // Validates all structural invariants and rebuilds the derived indexes.
  // Throws std::runtime_error with a description on any violation.
  void finalize();
};

// Synthetic graph description. Edge counts come either from an explicit
// `count` or from expected_degree * |src type| (at least 1). When labels are
// configured, every node receives a balanced latent group; `planted` edge
// types connect same-group endpoints and `feature_signal` shifts one channel
// per class, which gives training something recoverable to find.
struct NodeTypeSpec {
  std::string name;
  int64_t count = 0;
  std::vector<std::string> channels;
  double feature_signal = 0.0;
};

struct EdgeTypeSpec {
  std::string name, src, dst;
  double expected_degree = 0.0;
  int64_t count = -1;  // -1: derive from expected_degree
  bool planted = false;
};

struct LabelSpec {
  std::string node_type;
  int64_t classes = 2;
  int64_t labeled_count = -1;  // -1: all nodes of the type
};

struct SchemaSpec {
  std::vector<NodeTypeSpec> node_types;
  std::vector<EdgeTypeSpec> edge_types;
  std::optional<LabelSpec> labels;
  uint64_t seed = 0;

  static SchemaSpec from_json_file(const std::filesystem::path& p);
  static SchemaSpec from_json_text(const std::string& text);
  std::string to_json_text() const;
};

// Reads nodes.tsv + edges.tsv (+ labels.tsv, splits.json) from dir.
// Node ids must be dense 0..N-1 in file order; type ids follow first
// appearance. Errors name the file and offending line.
HeteroGraph load_graph(const std::filesystem::path& dir);

// Inverse of load_graph; load(write(g)) == g for graphs whose type order
// matches first appearance (synth output always does).
void write_graph(const HeteroGraph& g, const std::filesystem::path& dir);

HeteroGraph synth_graph(const SchemaSpec& spec);

// Sorted, deduplicated in-neighbors of v, optionally restricted to one
// edge type.
std::vector<int64_t> neighbors(const HeteroGraph& g, int64_t v,
                               std::optional<int32_t> rel = std::nullopt);

// Gives every featureless node type `dim` seeded uniform channels; typed
// types are untouched.
HeteroGraph init_featureless(const HeteroGraph& g, int64_t dim = 256, uint64_t seed = 0);

// Adds a reversed copy of every edge under a fresh "<type>__inv" edge type.
HeteroGraph add_inverse_edges(const HeteroGraph& g);

// Field-by-field equality (bit-exact feature values).
bool graphs_equal(const HeteroGraph& a, const HeteroGraph& b);

}  // namespace bghgnn
