#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bghgnn/gnn.hpp"
#include "bghgnn/graph.hpp"
#include "bghgnn/train.hpp"

namespace bghgnn {

// Exact scalar-parameter census per component.
ParamBreakdown count_params(const Model& model);

// Central finite differences against the recorded gradients of the model's
// cross-entropy loss on the given rows; covers every parameter.
GradCheckReport model_grad_check(Model& model, const std::vector<int64_t>& rows,
                                 const std::vector<int32_t>& labels, double eps = 1e-5);

// Three relations with 1-d neighbor values from N(0,1), N(-1,1), N(1,1).
// Task: detect whether relation r1 is incident to a node. Arm (a) reduces
// everything to one shared channel (per-relation means averaged together);
// arm (b) keeps per-relation channels plus the relation-mix vector. Both
// arms are probed by an identical logistic model.
struct CollapseReport {
  int64_t n_nodes = 0;
  uint64_t seed = 0;
  double relation_mean[3] = {0, 0, 0};
  double relation_std[3] = {0, 0, 0};
  // mean of the collapsed statistic over nodes incident to {r2, r3} only;
  // sits near r1's mean, which is exactly the confusion being measured
  double confusion_stat_mean = 0.0;
  int64_t confusion_nodes = 0;
  double acc_mean_combine = 0.0;
  double acc_channelized = 0.0;
  std::string to_json_text() const;
};

CollapseReport collapse_experiment(int64_t n_nodes, uint64_t seed);

// Random small-graph pairs; counts cases where the relation-specific
// baseline separates a pair whose encoded inputs (x', o, omega) are
// identical. Zero violations is the expected outcome.
struct ExpressivenessResult {
  int64_t pairs_checked = 0;
  int64_t violations = 0;
};

ExpressivenessResult expressiveness_check(int64_t n_pairs, uint64_t seed);

// First-layer edge attention averaged by (source type, destination type),
// then thresholded. Self-loop entries are excluded; type pairs without
// edges read 0.
struct AttentionMatrix {
  Tensor real;    // [m, m], rows = source type
  Tensor binary;  // real >= threshold
  double threshold = 0.1;
  std::vector<std::string> type_names;
};

AttentionMatrix extract_attention_matrix(const Model& model, const HeteroGraph& g,
                                         double threshold = 0.1);

// Type sequences scored by multiplying averaged inter-type attention along
// the hops; descending. With an anchor, sequences start and end there.
struct MetaPath {
  std::vector<int32_t> types;
  double score = 0.0;
};

std::vector<MetaPath> top_metapaths(const AttentionMatrix& am, int64_t max_hops,
                                    std::optional<int32_t> anchor_type = std::nullopt);
std::vector<MetaPath> top_metapaths(const Model& model, const HeteroGraph& g, int64_t max_hops,
                                    std::optional<int32_t> anchor_type = std::nullopt);

// One CSV row per dataset tag: baseline/bg-hgnn parameter ratio, micro-F1
// gap, and relation density. Reports come in (rgcn-baseline, bg-hgnn)
// pairs sharing a dataset_tag.
struct TrendRow {
  std::string tag;
  int64_t relations = 0;
  double param_ratio = 0.0;
  double f1_gap = 0.0;
  double relation_density = 0.0;
};

std::vector<TrendRow> trend_rows(const std::vector<RunReport>& reports);
std::string emit_trend_csv(const std::vector<RunReport>& reports);
std::vector<TrendRow> parse_trend_csv(const std::string& csv);

}  // namespace bghgnn
