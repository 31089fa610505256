#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bghgnn/graph.hpp"
#include "bghgnn/lowrank_fusion.hpp"
#include "bghgnn/tape.hpp"
#include "bghgnn/tensor.hpp"

namespace bghgnn {

// Named parameter store. Values live here between epochs; each forward
// pass registers them on a fresh tape and the trainer applies updates
// back in registration order (single writer).
class ParamSet {
 public:
  size_t add(std::string name, Tensor init);
  size_t size() const { return values_.size(); }
  Tensor& value(size_t i) { return values_[i]; }
  const Tensor& value(size_t i) const { return values_[i]; }
  const std::string& name(size_t i) const { return names_[i]; }
  int64_t total_scalars() const;
  int64_t scalars_with_prefix(const std::string& prefix) const;
  std::vector<Tape::Id> register_all(Tape& tape) const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

struct GatOut {
  Tape::Id output = -1;     // [n, heads*out] (concat) or [n, out] (averaged)
  Tape::Id attention = -1;  // [n_edges + n (self loops), heads]
};

// One GAT layer over a typeless edge list. Attention rows align with the
// input edges; the trailing n rows are the internally added self loops.
// Output is linear; callers apply the inter-layer nonlinearity.
GatOut gat_forward(Tape& tape, const std::vector<std::pair<int64_t, int64_t>>& edges,
                   int64_t n_nodes, Tape::Id h, const std::vector<Tape::Id>& head_w,
                   const std::vector<Tape::Id>& head_a, double slope, bool concat_heads,
                   bool self_loops = true);

// Relation-specific layer: per-relation mean aggregation plus a self term,
// summed across relations, then leaky-relu.
Tape::Id rgcn_forward(Tape& tape, const HeteroGraph& g, Tape::Id h,
                      const std::vector<Tape::Id>& w_rel, Tape::Id w_self, double slope = 0.2);

// Mean negative log-likelihood of `labels` under row-wise softmax of the
// gathered `rows` of logits. Stable via a constant per-row shift.
Tape::Id nll_mean(Tape& tape, Tape::Id logits, const std::vector<int64_t>& rows,
                  const std::vector<int32_t>& labels);

enum class ModelKind { kBgHgnn, kRgcnBaseline };

struct ModelConfig {
  int64_t layers = 3;
  int64_t hidden = 32;
  int64_t heads = 4;  // hidden layers; the output layer always uses 1 head
  int64_t classes = 2;
  double slope = 0.2;
  bool self_loops = true;
  double dropout = 0.0;
  // fusion (bg-hgnn only)
  int64_t rank = 4;
  int64_t fuse_dim = 32;
  FusionVariant fusion_variant = FusionVariant::kLowRank;
  bool use_mask = false;
  // encodings
  int64_t type_dim = 0;       // 0: node-type count
  int64_t edge_type_dim = 0;  // 0: relation count
  double enc_low = -1.0, enc_high = 1.0;
  uint64_t enc_seed = 1;
  double sentinel = 0.0;
  int64_t feat_dim = 256;  // channels given to featureless node types
  uint64_t feat_seed = 2;
  uint64_t param_seed = 3;
};

struct ForwardOut {
  std::vector<Tape::Id> param_ids;
  Tape::Id logits = -1;              // [n, classes]
  Tape::Id embeddings = -1;          // [n, stack output width]
  std::vector<Tape::Id> attentions;  // one per GAT layer (bg-hgnn only)
};

struct ParamBreakdown {
  std::vector<std::pair<std::string, int64_t>> components;
  int64_t total = 0;
  std::string model;
  int64_t relations = 0, layers = 0, rank = 0, hidden = 0;
};

class Model {
 public:
  virtual ~Model() = default;
  virtual ForwardOut forward(Tape& tape, bool training = false) const = 0;
  virtual ParamBreakdown param_breakdown() const = 0;
  ModelKind kind() const { return kind_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  const HeteroGraph& graph() const { return graph_; }
  const ModelConfig& config() const { return cfg_; }

 protected:
  Model(ModelKind kind, HeteroGraph g, ModelConfig cfg)
      : kind_(kind), graph_(std::move(g)), cfg_(std::move(cfg)) {}
  ModelKind kind_;
  HeteroGraph graph_;  // after featureless initialization
  ModelConfig cfg_;
  ParamSet params_;
  mutable uint64_t dropout_tick_ = 0;
};

// bg-hgnn: unified features + type encodings -> low-rank fusion -> GAT
// stack -> linear head. rgcn baseline: per-type input projections ->
// relation-specific stack -> linear head.
std::unique_ptr<Model> build_model(ModelKind kind, const HeteroGraph& g, const ModelConfig& cfg);

}  // namespace bghgnn
