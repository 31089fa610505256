#include "bghgnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "bghgnn/rng.hpp"

namespace bghgnn {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<int32_t> argmax_rows(const Tensor& logits, const std::vector<int64_t>& rows) {
  std::vector<int32_t> out;
  out.reserve(rows.size());
  for (int64_t r : rows) {
    int32_t best = 0;
    for (int64_t j = 1; j < logits.cols(); ++j)
      if (logits(r, j) > logits(r, best)) best = static_cast<int32_t>(j);
    out.push_back(best);
  }
  return out;
}

struct SgdState {
  std::vector<Tensor> velocity;
};

void apply_update(Model& model, const Tape& tape, const std::vector<Tape::Id>& pids,
                  const TrainConfig& cfg, SgdState& st) {
  ParamSet& ps = model.params();
  if (cfg.optimizer == OptimizerKind::kMomentum && st.velocity.empty())
    for (size_t i = 0; i < ps.size(); ++i) st.velocity.push_back(Tensor::zeros(ps.value(i).shape()));
  for (size_t i = 0; i < ps.size(); ++i) {
    const Tensor& g = tape.grad(pids[i]);
    Tensor& v = ps.value(i);
    if (cfg.optimizer == OptimizerKind::kMomentum) {
      Tensor& vel = st.velocity[i];
      for (int64_t j = 0; j < v.numel(); ++j) {
        vel.at(j) = cfg.momentum * vel.at(j) + g.at(j);
        v.at(j) -= cfg.lr * vel.at(j);
      }
    } else {
      for (int64_t j = 0; j < v.numel(); ++j) v.at(j) -= cfg.lr * g.at(j);
    }
  }
}

Splits derive_splits(const HeteroGraph& g, uint64_t seed) {
  if (g.splits.present) return g.splits;
  Splits sp;
  std::vector<int64_t> labeled;
  for (const auto& [v, c] : g.labels) {
    (void)c;
    labeled.push_back(v);
  }
  Rng rng(seed + 1000003);
  rng.shuffle(labeled);
  int64_t n = static_cast<int64_t>(labeled.size());
  int64_t n_train = std::max<int64_t>(1, llround(0.8 * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  int64_t n_val = (n - n_train) / 2;
  sp.train.assign(labeled.begin(), labeled.begin() + n_train);
  sp.val.assign(labeled.begin() + n_train, labeled.begin() + n_train + n_val);
  sp.test.assign(labeled.begin() + n_train + n_val, labeled.end());
  sp.present = true;
  return sp;
}

struct NodeTask {
  std::vector<int64_t> train_ids, test_ids;
  std::vector<int32_t> train_labels, test_labels;
};

NodeTask build_node_task(const HeteroGraph& g, uint64_t seed) {
  if (g.labels.empty()) throw std::runtime_error("train: graph has no labels");
  Splits sp = derive_splits(g, seed);
  NodeTask task;
  for (int64_t v : sp.train)
    if (auto it = g.labels.find(v); it != g.labels.end()) {
      task.train_ids.push_back(v);
      task.train_labels.push_back(it->second);
    }
  const std::vector<int64_t>& eval_ids = sp.test.empty() ? sp.train : sp.test;
  for (int64_t v : eval_ids)
    if (auto it = g.labels.find(v); it != g.labels.end()) {
      task.test_ids.push_back(v);
      task.test_labels.push_back(it->second);
    }
  if (task.train_ids.empty()) throw std::runtime_error("train: no labeled nodes in the train split");
  return task;
}

double accuracy(const std::vector<int32_t>& pred, const std::vector<int32_t>& gold) {
  int64_t hit = 0;
  for (size_t i = 0; i < pred.size(); ++i) hit += pred[i] == gold[i];
  return pred.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(pred.size());
}

// inner-product pair scores from embeddings
Tape::Id pair_scores(Tape& tape, Tape::Id emb, const std::vector<LinkPair>& pairs) {
  std::vector<int64_t> us, vs;
  for (const LinkPair& p : pairs) {
    us.push_back(p.u);
    vs.push_back(p.v);
  }
  Tape::Id su = tape.row_gather(emb, us);
  Tape::Id sv = tape.row_gather(emb, vs);
  Tape::Id prod = tape.mul(su, sv);
  Tensor ones = Tensor::full({tape.value(emb).cols(), 1}, 1.0);
  return tape.matmul(prod, tape.input(std::move(ones)));  // [pairs, 1]
}

Tape::Id pair_loss(Tape& tape, Tape::Id scores, const std::vector<LinkPair>& pairs) {
  // binary cross-entropy as 2-class softmax over logits [0, s]
  int64_t n = tape.value(scores).rows();
  Tape::Id zeros = tape.input(Tensor::zeros({n, 1}));
  Tape::Id logits = tape.concat_cols(zeros, scores);
  std::vector<int64_t> rows(static_cast<size_t>(n));
  std::vector<int32_t> labels(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    rows[static_cast<size_t>(i)] = i;
    labels[static_cast<size_t>(i)] = pairs[static_cast<size_t>(i)].label;
  }
  return nll_mean(tape, logits, rows, labels);
}

}  // namespace

int64_t num_classes(const HeteroGraph& g) {
  if (g.labels.empty()) throw std::runtime_error("num_classes: graph has no labels");
  int32_t mx = 0;
  for (const auto& [v, c] : g.labels) {
    (void)v;
    mx = std::max(mx, c);
  }
  return mx + 1;
}

RunReport train(const HeteroGraph& g, const TrainConfig& cfg) {
  if (cfg.epochs < 0) throw std::invalid_argument("train: negative epoch count");
  RunReport rep;
  rep.seed = cfg.seed;
  rep.model = cfg.model == ModelKind::kBgHgnn ? "bg-hgnn" : "rgcn-baseline";
  rep.task = cfg.task == TaskKind::kNodeClassification ? "node" : "link";
  rep.relations = g.num_relations();
  rep.edge_count = g.edge_count();

  ModelConfig mc = cfg.model_cfg;
  mc.param_seed = cfg.seed * 0x9e3779b97f4a7c15ull + 12345;
  SgdState sgd;

  if (cfg.task == TaskKind::kNodeClassification) {
    NodeTask task = build_node_task(g, cfg.seed);
    mc.classes = num_classes(g);
    std::unique_ptr<Model> model = build_model(cfg.model, g, mc);
    rep.param_count = model->params().total_scalars();

    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      auto t0 = Clock::now();
      try {
        Tape tape;
        ForwardOut out = model->forward(tape, true);
        Tape::Id loss = nll_mean(tape, out.logits, task.train_ids, task.train_labels);
        double loss_v = tape.value(loss).at(0);
        if (!std::isfinite(loss_v))
          throw std::runtime_error("loss is not finite");
        tape.backward(loss);
        apply_update(*model, tape, out.param_ids, cfg, sgd);
        EpochStat st;
        st.loss = loss_v;
        st.train_acc = accuracy(argmax_rows(tape.value(out.logits), task.train_ids), task.train_labels);
        st.millis = ms_since(t0);
        rep.history.push_back(st);
      } catch (const std::domain_error& e) {
        throw std::runtime_error("train: diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("train: diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }

    Tape tape;
    ForwardOut out = model->forward(tape, false);
    const Tensor& logits = tape.value(out.logits);
    rep.train_accuracy = accuracy(argmax_rows(logits, task.train_ids), task.train_labels);
    auto [micro, macro] = f1_scores(argmax_rows(logits, task.test_ids), task.test_labels);
    rep.micro_f1 = micro;
    rep.macro_f1 = macro;
  } else {
    int32_t rel = 0;
    if (!cfg.target_relation.empty()) {
      auto it = std::find(g.edge_type_names.begin(), g.edge_type_names.end(), cfg.target_relation);
      if (it == g.edge_type_names.end())
        throw std::runtime_error("train: unknown target relation '" + cfg.target_relation + "'");
      rel = static_cast<int32_t>(it - g.edge_type_names.begin());
    } else if (g.num_relations() == 0) {
      throw std::runtime_error("train: link task needs at least one relation");
    }
    LinkSample sample = sample_link_pairs(g, cfg.link_mode, rel, cfg.seed);

    HeteroGraph msg = g;
    msg.edges = sample.message_edges;
    msg.edge_type_of = sample.message_edge_types;
    msg.finalize();

    mc.classes = 2;
    std::unique_ptr<Model> model = build_model(cfg.model, msg, mc);
    rep.param_count = model->params().total_scalars();

    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      auto t0 = Clock::now();
      try {
        Tape tape;
        ForwardOut out = model->forward(tape, true);
        Tape::Id scores = pair_scores(tape, out.embeddings, sample.train);
        Tape::Id loss = pair_loss(tape, scores, sample.train);
        double loss_v = tape.value(loss).at(0);
        if (!std::isfinite(loss_v)) throw std::runtime_error("loss is not finite");
        tape.backward(loss);
        apply_update(*model, tape, out.param_ids, cfg, sgd);
        EpochStat st;
        st.loss = loss_v;
        const Tensor& sv = tape.value(scores);
        int64_t hit = 0;
        for (size_t i = 0; i < sample.train.size(); ++i)
          hit += (sv.at(static_cast<int64_t>(i)) > 0.0) == (sample.train[i].label == 1);
        st.train_acc = static_cast<double>(hit) / static_cast<double>(sample.train.size());
        st.millis = ms_since(t0);
        rep.history.push_back(st);
      } catch (const std::domain_error& e) {
        throw std::runtime_error("train: diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("train: diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }

    Tape tape;
    ForwardOut out = model->forward(tape, false);
    Tape::Id scores = pair_scores(tape, out.embeddings, sample.test);
    const Tensor& sv = tape.value(scores);
    std::vector<double> s;
    std::vector<int32_t> y;
    for (size_t i = 0; i < sample.test.size(); ++i) {
      s.push_back(sv.at(static_cast<int64_t>(i)));
      y.push_back(sample.test[i].label);
    }
    rep.roc_auc = roc_auc(s, y);
    // each test positive ranked against the shared pool of test negatives
    std::vector<std::vector<std::pair<double, bool>>> lists;
    std::vector<double> neg_scores;
    for (size_t i = 0; i < s.size(); ++i)
      if (y[i] == 0) neg_scores.push_back(s[i]);
    for (size_t i = 0; i < s.size(); ++i) {
      if (y[i] != 1) continue;
      std::vector<std::pair<double, bool>> list{{s[i], true}};
      for (double ns : neg_scores) list.emplace_back(ns, false);
      lists.push_back(std::move(list));
    }
    rep.mrr = mrr(lists);
    int64_t hit = 0;
    for (size_t i = 0; i < s.size(); ++i) hit += (s[i] > 0.0) == (y[i] == 1);
    rep.train_accuracy = s.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(s.size());
  }

  rep.epochs_run = static_cast<int64_t>(rep.history.size());
  double total_ms = 0.0;
  for (const EpochStat& st : rep.history) total_ms += st.millis;
  rep.mean_epoch_ms = rep.history.empty() ? 0.0 : total_ms / static_cast<double>(rep.history.size());
  return rep;
}

std::vector<RunReport> train_trials(const HeteroGraph& g, const TrainConfig& cfg, bool parallel) {
  if (cfg.trials < 1) throw std::invalid_argument("train_trials: trials must be >= 1");
  std::vector<RunReport> reports(static_cast<size_t>(cfg.trials));
  auto run_one = [&](int64_t i) {
    TrainConfig c = cfg;
    c.seed = cfg.seed + static_cast<uint64_t>(i);
    reports[static_cast<size_t>(i)] = train(g, c);
  };
  if (parallel) {
    std::vector<std::thread> threads;
    for (int64_t i = 0; i < cfg.trials; ++i) threads.emplace_back(run_one, i);
    for (std::thread& t : threads) t.join();
  } else {
    for (int64_t i = 0; i < cfg.trials; ++i) run_one(i);
  }
  return reports;
}

// ---------------- metrics ----------------

std::pair<double, double> f1_scores(const std::vector<int32_t>& pred,
                                    const std::vector<int32_t>& gold) {
  if (pred.size() != gold.size())
    throw std::invalid_argument("f1_scores: prediction/gold length mismatch");
  if (pred.empty()) throw std::invalid_argument("f1_scores: empty input");
  int32_t mx = 0;
  for (int32_t c : pred) mx = std::max(mx, c);
  for (int32_t c : gold) mx = std::max(mx, c);
  std::vector<int64_t> tp(static_cast<size_t>(mx) + 1, 0), fp(tp), fn(tp);
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || gold[i] < 0) throw std::invalid_argument("f1_scores: negative class id");
    if (pred[i] == gold[i]) ++tp[static_cast<size_t>(pred[i])];
    else {
      ++fp[static_cast<size_t>(pred[i])];
      ++fn[static_cast<size_t>(gold[i])];
    }
  }
  int64_t tps = 0, fps = 0, fns = 0;
  double macro = 0.0;
  int64_t observed = 0;
  for (size_t c = 0; c < tp.size(); ++c) {
    tps += tp[c];
    fps += fp[c];
    fns += fn[c];
    int64_t denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom == 0) continue;  // class never seen
    macro += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
    ++observed;
  }
  double micro = 2.0 * static_cast<double>(tps) / static_cast<double>(2 * tps + fps + fns);
  return {micro, observed ? macro / static_cast<double>(observed) : 0.0};
}

double roc_auc(const std::vector<double>& scores, const std::vector<int32_t>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw std::invalid_argument("roc_auc: bad input lengths");
  int64_t pos = 0, neg = 0;
  for (int32_t y : labels) {
    if (y == 1) ++pos;
    else if (y == 0) ++neg;
    else throw std::invalid_argument("roc_auc: labels must be 0/1");
  }
  if (pos == 0 || neg == 0) throw std::invalid_argument("roc_auc: both classes must be present");

  // rank-sum with average ranks for ties
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  double p = static_cast<double>(pos);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double mrr(const std::vector<std::vector<std::pair<double, bool>>>& candidate_lists) {
  if (candidate_lists.empty()) throw std::invalid_argument("mrr: no candidate lists");
  double acc = 0.0;
  for (const auto& list : candidate_lists) {
    int64_t positives = 0;
    double pos_score = 0.0;
    for (const auto& [s, is_pos] : list)
      if (is_pos) {
        ++positives;
        pos_score = s;
      }
    if (positives != 1)
      throw std::invalid_argument("mrr: each list must contain exactly one positive");
    int64_t higher = 0, ties = 0;
    for (const auto& [s, is_pos] : list) {
      if (is_pos) continue;
      if (s > pos_score) ++higher;
      else if (s == pos_score) ++ties;
    }
    double rank = static_cast<double>(higher) + 1.0 + 0.5 * static_cast<double>(ties);
    acc += 1.0 / rank;
  }
  return acc / static_cast<double>(candidate_lists.size());
}

// ---------------- link sampling ----------------

LinkSample sample_link_pairs(const HeteroGraph& g, LinkMode mode, int32_t target_rel,
                             uint64_t seed) {
  if (target_rel < 0 || target_rel >= g.num_relations())
    throw std::invalid_argument("sample_link_pairs: unknown target relation");
  Rng rng(seed);

  std::vector<size_t> pos_edges;
  for (size_t e = 0; e < g.edges.size(); ++e)
    if (g.edge_type_of[e] == target_rel) pos_edges.push_back(e);
  if (pos_edges.size() < 3)
    throw std::runtime_error("sample_link_pairs: target relation needs at least 3 edges");

  std::set<std::pair<int64_t, int64_t>> target_set;
  for (size_t e : pos_edges) target_set.insert(g.edges[e]);

  // endpoint-type restriction when the target relation is homogeneous in types
  int32_t src_type = g.node_type_of[static_cast<size_t>(g.edges[pos_edges[0]].first)];
  int32_t dst_type = g.node_type_of[static_cast<size_t>(g.edges[pos_edges[0]].second)];
  bool typed = true;
  for (size_t e : pos_edges)
    if (g.node_type_of[static_cast<size_t>(g.edges[e].first)] != src_type ||
        g.node_type_of[static_cast<size_t>(g.edges[e].second)] != dst_type)
      typed = false;

  // undirected adjacency for hop distances
  std::vector<std::vector<int64_t>> adj(static_cast<size_t>(g.node_count));
  for (const auto& [u, v] : g.edges) {
    adj[static_cast<size_t>(u)].push_back(v);
    adj[static_cast<size_t>(v)].push_back(u);
  }
  for (auto& nb : adj) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }

  std::vector<int64_t> dst_pool;
  if (typed) dst_pool = g.nodes_by_type[static_cast<size_t>(dst_type)];
  else {
    dst_pool.resize(static_cast<size_t>(g.node_count));
    for (int64_t v = 0; v < g.node_count; ++v) dst_pool[static_cast<size_t>(v)] = v;
  }

  auto is_neighbor = [&](int64_t u, int64_t v) {
    const auto& nb = adj[static_cast<size_t>(u)];
    return std::binary_search(nb.begin(), nb.end(), v);
  };

  auto draw_negative = [&](int64_t u) -> LinkPair {
    const int64_t attempts = 2000;
    for (int64_t a = 0; a < attempts; ++a) {
      int64_t z = -1;
      if (mode == LinkMode::kTwoHop) {
        const auto& nb1 = adj[static_cast<size_t>(u)];
        if (nb1.empty()) break;
        int64_t mid = nb1[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(nb1.size())))];
        const auto& nb2 = adj[static_cast<size_t>(mid)];
        if (nb2.empty()) continue;
        z = nb2[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(nb2.size())))];
        if (z == u || is_neighbor(u, z)) continue;  // exactly two hops
      } else {
        z = dst_pool[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(dst_pool.size())))];
        if (z == u) continue;
      }
      if (typed && g.node_type_of[static_cast<size_t>(z)] != dst_type) continue;
      if (target_set.count({u, z})) continue;
      return LinkPair{u, z, 0};
    }
    throw std::runtime_error("sample_link_pairs: insufficient negatives for node " + std::to_string(u));
  };

  rng.shuffle(pos_edges);
  int64_t n = static_cast<int64_t>(pos_edges.size());
  int64_t n_train = std::max<int64_t>(1, llround(0.8 * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  int64_t n_val = (n - n_train) / 2;

  LinkSample out;
  std::set<size_t> held_out;
  auto fill = [&](std::vector<LinkPair>& part, int64_t lo, int64_t hi, bool hold_out) {
    for (int64_t i = lo; i < hi; ++i) {
      size_t e = pos_edges[static_cast<size_t>(i)];
      if (hold_out) held_out.insert(e);
      auto [u, v] = g.edges[e];
      part.push_back(LinkPair{u, v, 1});
      part.push_back(draw_negative(u));
    }
  };
  fill(out.train, 0, n_train, false);
  fill(out.val, n_train, n_train + n_val, true);
  fill(out.test, n_train + n_val, n, true);

  for (size_t e = 0; e < g.edges.size(); ++e) {
    if (held_out.count(e)) continue;
    out.message_edges.push_back(g.edges[e]);
    out.message_edge_types.push_back(g.edge_type_of[e]);
  }
  return out;
}

// ---------------- report serialization ----------------

std::string RunReport::to_json_text() const {
  json j;
  j["seed"] = seed;
  j["model"] = model;
  j["task"] = task;
  j["dataset_tag"] = dataset_tag;
  j["epochs_run"] = epochs_run;
  j["param_count"] = param_count;
  j["mean_epoch_ms"] = mean_epoch_ms;
  j["relations"] = relations;
  j["edge_count"] = edge_count;
  j["train_accuracy"] = train_accuracy;
  j["micro_f1"] = micro_f1;
  j["macro_f1"] = macro_f1;
  j["roc_auc"] = roc_auc;
  j["mrr"] = mrr;
  j["history"] = json::array();
  for (const EpochStat& st : history)
    j["history"].push_back({{"loss", st.loss}, {"train_acc", st.train_acc}, {"ms", st.millis}});
  return j.dump(2);
}

RunReport RunReport::from_json_text(const std::string& text) {
  json j = json::parse(text);
  RunReport r;
  r.seed = j.value("seed", 0ULL);
  r.model = j.value("model", "");
  r.task = j.value("task", "");
  r.dataset_tag = j.value("dataset_tag", "");
  r.epochs_run = j.value("epochs_run", 0);
  r.param_count = j.value("param_count", 0);
  r.mean_epoch_ms = j.value("mean_epoch_ms", 0.0);
  r.relations = j.value("relations", 0);
  r.edge_count = j.value("edge_count", 0);
  r.train_accuracy = j.value("train_accuracy", 0.0);
  r.micro_f1 = j.value("micro_f1", 0.0);
  r.macro_f1 = j.value("macro_f1", 0.0);
  r.roc_auc = j.value("roc_auc", 0.0);
  r.mrr = j.value("mrr", 0.0);
  if (j.contains("history"))
    for (const auto& h : j["history"]) {
      EpochStat st;
      st.loss = h.value("loss", 0.0);
      st.train_acc = h.value("train_acc", 0.0);
      st.millis = h.value("ms", 0.0);
      r.history.push_back(st);
    }
  return r;
}

}  // namespace bghgnn
