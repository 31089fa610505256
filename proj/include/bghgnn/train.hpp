#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bghgnn/gnn.hpp"
#include "bghgnn/graph.hpp"

namespace bghgnn {

enum class TaskKind { kNodeClassification, kLinkPrediction };
enum class OptimizerKind { kGradientDescent, kMomentum };
enum class LinkMode { kTwoHop, kRandomHop };

struct TrainConfig {
  int64_t epochs = 100;
  double lr = 0.05;
  uint64_t seed = 0;
  int64_t trials = 5;
  OptimizerKind optimizer = OptimizerKind::kGradientDescent;
  double momentum = 0.9;
  ModelKind model = ModelKind::kBgHgnn;
  TaskKind task = TaskKind::kNodeClassification;
  ModelConfig model_cfg;
  std::string target_relation;  // link task; empty = first relation
  LinkMode link_mode = LinkMode::kTwoHop;
};

struct EpochStat {
  double loss = 0.0;
  double train_acc = 0.0;
  double millis = 0.0;
};

struct RunReport {
  uint64_t seed = 0;
  std::string model, task, dataset_tag;
  int64_t epochs_run = 0;
  std::vector<EpochStat> history;
  double train_accuracy = 0.0;
  double micro_f1 = 0.0, macro_f1 = 0.0;  // node task, test split
  double roc_auc = 0.0, mrr = 0.0;        // link task, test pairs
  int64_t param_count = 0;
  double mean_epoch_ms = 0.0;
  int64_t relations = 0, edge_count = 0;

  std::string to_json_text() const;
  static RunReport from_json_text(const std::string& text);
};

// Full-batch gradient descent of the configured model on g; deterministic
// under cfg.seed. Throws (with the epoch index) if the loss diverges.
RunReport train(const HeteroGraph& g, const TrainConfig& cfg);

// Independent trials with seeds cfg.seed .. cfg.seed + trials - 1.
std::vector<RunReport> train_trials(const HeteroGraph& g, const TrainConfig& cfg,
                                    bool parallel = false);

// ---------------- metrics ----------------

// (micro, macro); macro averages per-class F1 over observed classes.
std::pair<double, double> f1_scores(const std::vector<int32_t>& pred,
                                    const std::vector<int32_t>& gold);

// Probability a random positive outranks a random negative, ties at 1/2.
double roc_auc(const std::vector<double>& scores, const std::vector<int32_t>& labels);

// Candidate lists of (score, is_positive) with exactly one positive each;
// tied scores get the average rank.
double mrr(const std::vector<std::vector<std::pair<double, bool>>>& candidate_lists);

// ---------------- link sampling ----------------

struct LinkPair {
  int64_t u = 0, v = 0;
  int32_t label = 0;
};

struct LinkSample {
  std::vector<LinkPair> train, val, test;
  // the graph with val/test positives removed, for message passing
  std::vector<std::pair<int64_t, int64_t>> message_edges;
  std::vector<int32_t> message_edge_types;
};

// Positives: held-out edges of the target relation (80/10/10). Negatives:
// balanced 1:1, endpoints at exactly two hops (two-hop mode) or anywhere
// (random-hop mode), never coinciding with an existing target edge.
LinkSample sample_link_pairs(const HeteroGraph& g, LinkMode mode, int32_t target_rel,
                             uint64_t seed);

// highest label + 1; throws when no labels exist
int64_t num_classes(const HeteroGraph& g);

}  // namespace bghgnn
