#include "bghgnn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "bghgnn/attr_fusion.hpp"
#include "bghgnn/rng.hpp"
#include "bghgnn/type_encoding.hpp"

namespace bghgnn {

ParamBreakdown count_params(const Model& model) { return model.param_breakdown(); }

GradCheckReport model_grad_check(Model& model, const std::vector<int64_t>& rows,
                                 const std::vector<int32_t>& labels, double eps) {
  ParamSet& ps = model.params();
  std::vector<Tensor> initial;
  for (size_t i = 0; i < ps.size(); ++i) initial.push_back(ps.value(i));
  auto program = [&](Tape& tape, const std::vector<Tensor>& p) {
    for (size_t i = 0; i < ps.size(); ++i) ps.value(i) = p[i];
    ForwardOut out = model.forward(tape, false);
    return nll_mean(tape, out.logits, rows, labels);
  };
  GradCheckReport rep = grad_check(program, initial, eps);
  for (size_t i = 0; i < ps.size(); ++i) ps.value(i) = initial[i];  // restore
  return rep;
}

// ---------------- relation collapse ----------------

namespace {

// plain logistic probe trained by gradient descent; returns test accuracy
double logistic_probe_accuracy(const Tensor& x, const std::vector<int32_t>& y, uint64_t seed) {
  const int64_t n = x.rows(), d = x.cols();
  Rng rng(seed);
  std::vector<int64_t> order = rng.permutation(n);
  int64_t n_train = (n * 7) / 10;
  std::vector<int64_t> train_rows(order.begin(), order.begin() + n_train);
  std::vector<int64_t> test_rows(order.begin() + n_train, order.end());
  std::vector<int32_t> train_y, test_y;
  for (int64_t i : train_rows) train_y.push_back(y[static_cast<size_t>(i)]);
  for (int64_t i : test_rows) test_y.push_back(y[static_cast<size_t>(i)]);

  Tensor w({1, d});
  Tensor b({1, 1});
  for (int64_t j = 0; j < d; ++j) w.at(j) = rng.uniform(-0.1, 0.1);

  Tensor ones = Tensor::full({n, 1}, 1.0);
  std::vector<int64_t> all_rows(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) all_rows[static_cast<size_t>(i)] = i;

  const int64_t epochs = 400;
  const double lr = 0.5;
  for (int64_t e = 0; e < epochs; ++e) {
    Tape tape;
    Tape::Id wid = tape.parameter(w, "w");
    Tape::Id bid = tape.parameter(b, "b");
    Tape::Id xid = tape.input(x);
    Tape::Id s = tape.add(tape.matmul(xid, wid, false, true),
                          tape.matmul(tape.input(ones), bid, false, false));
    Tape::Id logits = tape.concat_cols(tape.input(Tensor::zeros({n, 1})), s);
    Tape::Id loss = nll_mean(tape, logits, train_rows, train_y);
    tape.backward(loss);
    const Tensor& gw = tape.grad(wid);
    const Tensor& gb = tape.grad(bid);
    for (int64_t j = 0; j < d; ++j) w.at(j) -= lr * gw.at(j);
    b.at(0) -= lr * gb.at(0);
  }

  int64_t hit = 0;
  for (size_t i = 0; i < test_rows.size(); ++i) {
    int64_t r = test_rows[i];
    double s = b.at(0);
    for (int64_t j = 0; j < d; ++j) s += w.at(j) * x(r, j);
    hit += (s > 0.0) == (test_y[i] == 1);
  }
  return test_rows.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(test_rows.size());
}

}  // namespace

CollapseReport collapse_experiment(int64_t n_nodes, uint64_t seed) {
  if (n_nodes < 100) throw std::invalid_argument("collapse_experiment: need at least 100 nodes");
  const double mu[3] = {0.0, -1.0, 1.0};
  Rng rng(seed);

  // random relation-type vectors, same role as the edge-type codebook
  double type_vec[3][3];
  for (auto& row : type_vec)
    for (double& v : row) v = rng.uniform(-1.0, 1.0);

  CollapseReport rep;
  rep.n_nodes = n_nodes;
  rep.seed = seed;

  Tensor mean_combined({n_nodes, 1});
  Tensor channelized({n_nodes, 6});  // per-relation means + relation mix
  std::vector<int32_t> has_r1(static_cast<size_t>(n_nodes), 0);
  std::vector<double> pool_sum(3, 0.0), pool_sq(3, 0.0);
  std::vector<int64_t> pool_n(3, 0);
  double confusion_sum = 0.0;
  int64_t confusion_n = 0;

  for (int64_t v = 0; v < n_nodes; ++v) {
    int64_t mask = 1 + rng.uniform_int(7);  // nonempty subset of {r1,r2,r3}
    double rel_mean[3] = {0, 0, 0};
    int64_t rel_count[3] = {0, 0, 0};
    double stat = 0.0;
    int64_t present = 0;
    for (int64_t r = 0; r < 3; ++r) {
      if (!(mask & (1 << r))) continue;
      int64_t k = 3 + rng.uniform_int(4);
      double s = 0.0;
      for (int64_t i = 0; i < k; ++i) {
        double x = rng.normal(mu[r], 1.0);
        s += x;
        pool_sum[static_cast<size_t>(r)] += x;
        pool_sq[static_cast<size_t>(r)] += x * x;
        ++pool_n[static_cast<size_t>(r)];
      }
      rel_mean[r] = s / static_cast<double>(k);
      rel_count[r] = k;
      stat += rel_mean[r];
      ++present;
    }
    stat /= static_cast<double>(present);
    mean_combined(v, 0) = stat;
    if (mask == 6) {  // {r2, r3} only: the predicted confusion with r1
      confusion_sum += stat;
      ++confusion_n;
    }
    has_r1[static_cast<size_t>(v)] = (mask & 1) ? 1 : 0;

    int64_t total = rel_count[0] + rel_count[1] + rel_count[2];
    for (int64_t r = 0; r < 3; ++r) {
      channelized(v, r) = rel_mean[r];
      for (int64_t j = 0; j < 3; ++j)
        channelized(v, 3 + j) += static_cast<double>(rel_count[r]) / static_cast<double>(total) * type_vec[r][j];
    }
  }

  for (int64_t r = 0; r < 3; ++r) {
    double m = pool_sum[static_cast<size_t>(r)] / static_cast<double>(pool_n[static_cast<size_t>(r)]);
    rep.relation_mean[r] = m;
    rep.relation_std[r] =
        std::sqrt(pool_sq[static_cast<size_t>(r)] / static_cast<double>(pool_n[static_cast<size_t>(r)]) - m * m);
  }
  rep.confusion_stat_mean = confusion_n ? confusion_sum / static_cast<double>(confusion_n) : 0.0;
  rep.confusion_nodes = confusion_n;
  rep.acc_mean_combine = logistic_probe_accuracy(mean_combined, has_r1, seed + 101);
  rep.acc_channelized = logistic_probe_accuracy(channelized, has_r1, seed + 101);
  return rep;
}

std::string CollapseReport::to_json_text() const {
  nlohmann::json j;
  j["n_nodes"] = n_nodes;
  j["seed"] = seed;
  j["relation_means"] = {relation_mean[0], relation_mean[1], relation_mean[2]};
  j["relation_stds"] = {relation_std[0], relation_std[1], relation_std[2]};
  j["confusion_stat_mean"] = confusion_stat_mean;
  j["confusion_nodes"] = confusion_nodes;
  j["acc_mean_combine"] = acc_mean_combine;
  j["acc_channelized"] = acc_channelized;
  return j.dump(2);
}

// ---------------- expressiveness ----------------

namespace {

// fixed universe so the two graphs of a pair share parameter shapes
constexpr int64_t kExNodeTypes = 2;
constexpr int64_t kExRelations = 3;
const std::vector<std::vector<std::string>> kExChannels = {{"a0", "a1"}, {"b0"}};

HeteroGraph random_small_graph(Rng& rng) {
  HeteroGraph g;
  g.node_type_names = {"t0", "t1"};
  g.edge_type_names = {"r0", "r1", "r2"};
  int64_t n = 2 + rng.uniform_int(5);  // 2..6 nodes
  g.node_count = n;
  for (int64_t v = 0; v < n; ++v)
    g.node_type_of.push_back(static_cast<int32_t>(rng.uniform_int(kExNodeTypes)));
  for (int64_t u = 0; u < n; ++u)
    for (int64_t v = 0; v < n; ++v) {
      if (u == v) continue;
      if (rng.uniform() < 0.3)
        g.edges.emplace_back(u, v), g.edge_type_of.push_back(static_cast<int32_t>(rng.uniform_int(kExRelations)));
    }
  for (int64_t t = 0; t < kExNodeTypes; ++t) {
    FeatureTable ft;
    ft.channels = kExChannels[static_cast<size_t>(t)];
    int64_t rows = 0;
    for (int32_t tv : g.node_type_of) rows += tv == t;
    ft.values = Tensor({rows, static_cast<int64_t>(ft.channels.size())});
    for (int64_t i = 0; i < ft.values.numel(); ++i) ft.values.at(i) = rng.uniform(-1.0, 1.0);
    g.features.push_back(std::move(ft));
  }
  g.finalize();
  return g;
}

// rows [x' | o | omega], the model-facing input encoding of each node
Tensor encode_inputs(const HeteroGraph& g, uint64_t enc_seed) {
  UnifiedSchema schema = build_unified_schema(g);
  UnifiedFeatures uf = project_features(g, schema);
  TypeCodebook cb = build_codebook(g, 0, 0, -1.0, 1.0, enc_seed);
  NeighborRelationSummary nrs = neighbor_relation_summary(g, cb);
  Tensor o = node_type_matrix(g, cb);
  int64_t w = uf.values.cols() + o.cols() + nrs.omega.cols();
  Tensor out({g.node_count, w});
  for (int64_t v = 0; v < g.node_count; ++v) {
    int64_t c = 0;
    for (int64_t j = 0; j < uf.values.cols(); ++j) out(v, c++) = uf.values(v, j);
    for (int64_t j = 0; j < o.cols(); ++j) out(v, c++) = o(v, j);
    for (int64_t j = 0; j < nrs.omega.cols(); ++j) out(v, c++) = nrs.omega(v, j);
  }
  return out;
}

bool encodings_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  // compare as row multisets: node identity is not part of the encoding
  auto rows_of = [](const Tensor& t) {
    std::vector<std::vector<double>> rows;
    for (int64_t i = 0; i < t.rows(); ++i)
      rows.emplace_back(t.data() + i * t.cols(), t.data() + (i + 1) * t.cols());
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  auto ra = rows_of(a), rb = rows_of(b);
  for (size_t i = 0; i < ra.size(); ++i)
    for (size_t j = 0; j < ra[i].size(); ++j)
      if (std::fabs(ra[i][j] - rb[i][j]) > 1e-9) return false;
  return true;
}

Tensor pooled_baseline_output(const HeteroGraph& g, uint64_t param_seed) {
  ModelConfig mc;
  mc.layers = 2;
  mc.hidden = 4;
  mc.classes = 2;
  mc.param_seed = param_seed;
  mc.feat_seed = 7;
  std::unique_ptr<Model> model = build_model(ModelKind::kRgcnBaseline, g, mc);
  Tape tape;
  ForwardOut out = model->forward(tape, false);
  const Tensor& emb = tape.value(out.embeddings);
  Tensor pooled({emb.cols()});
  for (int64_t v = 0; v < emb.rows(); ++v)
    for (int64_t j = 0; j < emb.cols(); ++j) pooled.at(j) += emb(v, j);
  return pooled;
}

}  // namespace

ExpressivenessResult expressiveness_check(int64_t n_pairs, uint64_t seed) {
  Rng rng(seed);
  ExpressivenessResult res;
  const uint64_t enc_seed = seed ^ 0xabcdefULL;
  const uint64_t param_seed = seed ^ 0x123456ULL;
  for (int64_t p = 0; p < n_pairs; ++p) {
    HeteroGraph g1 = random_small_graph(rng);
    HeteroGraph g2 = g1;
    int64_t kind = rng.uniform_int(4);
    if (kind == 1 && !g2.edges.empty()) {
      // flip one edge's type
      size_t e = static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(g2.edges.size())));
      int32_t old_t = g2.edge_type_of[e];
      int32_t new_t = static_cast<int32_t>((old_t + 1 + rng.uniform_int(kExRelations - 1)) % kExRelations);
      g2.edge_type_of[e] = new_t;
      // flipping may collide with an existing duplicate edge; skip if so
      bool dup = false;
      for (size_t e2 = 0; e2 < g2.edges.size(); ++e2)
        if (e2 != e && g2.edges[e2] == g2.edges[e] && g2.edge_type_of[e2] == new_t) dup = true;
      if (dup) g2.edge_type_of[e] = old_t;
      g2.finalize();
    } else if (kind == 2) {
      // nudge one feature value
      int64_t v = rng.uniform_int(g2.node_count);
      size_t t = static_cast<size_t>(g2.node_type_of[static_cast<size_t>(v)]);
      FeatureTable& ft = g2.features[t];
      if (ft.values.numel() > 0) {
        int64_t row = g2.type_local_index[static_cast<size_t>(v)];
        int64_t ch = rng.uniform_int(static_cast<int64_t>(ft.channels.size()));
        ft.values(row, ch) += rng.uniform(0.5, 1.5);
      }
      g2.finalize();
    } else if (kind == 3) {
      g2 = random_small_graph(rng);
    }
    ++res.pairs_checked;

    Tensor pool1 = pooled_baseline_output(g1, param_seed);
    Tensor pool2 = pooled_baseline_output(g2, param_seed);
    double diff = 0.0;
    if (pool1.same_shape(pool2))
      for (int64_t j = 0; j < pool1.numel(); ++j)
        diff = std::max(diff, std::fabs(pool1.at(j) - pool2.at(j)));
    else
      diff = 1.0;
    if (diff <= 1e-6) continue;  // baseline cannot tell them apart: vacuous

    if (encodings_equal(encode_inputs(g1, enc_seed), encode_inputs(g2, enc_seed))) ++res.violations;
  }
  return res;
}

// ---------------- attention / meta-paths ----------------

AttentionMatrix extract_attention_matrix(const Model& model, const HeteroGraph& g,
                                         double threshold) {
  if (model.kind() != ModelKind::kBgHgnn)
    throw std::invalid_argument("extract_attention_matrix: model has no attention weights");
  Tape tape;
  ForwardOut out = model.forward(tape, false);
  if (out.attentions.empty())
    throw std::runtime_error("extract_attention_matrix: no attention recorded");
  const Tensor& att = tape.value(out.attentions[0]);  // [E + N, heads]
  const HeteroGraph& mg = model.graph();
  const int64_t m = g.num_node_types();
  const int64_t heads = att.cols();

  AttentionMatrix am;
  am.threshold = threshold;
  am.type_names = g.node_type_names;
  am.real = Tensor::zeros({m, m});
  am.binary = Tensor::zeros({m, m});
  Tensor cnt = Tensor::zeros({m, m});
  for (size_t e = 0; e < mg.edges.size(); ++e) {
    double a = 0.0;
    for (int64_t h = 0; h < heads; ++h) a += att(static_cast<int64_t>(e), h);
    a /= static_cast<double>(heads);
    int32_t st = g.node_type_of[static_cast<size_t>(mg.edges[e].first)];
    int32_t dt = g.node_type_of[static_cast<size_t>(mg.edges[e].second)];
    am.real(st, dt) += a;
    cnt(st, dt) += 1.0;
  }
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < m; ++j) {
      if (cnt(i, j) > 0.0) am.real(i, j) /= cnt(i, j);
      am.binary(i, j) = am.real(i, j) >= threshold ? 1.0 : 0.0;
    }
  return am;
}

std::vector<MetaPath> top_metapaths(const AttentionMatrix& am, int64_t max_hops,
                                    std::optional<int32_t> anchor_type) {
  if (max_hops < 1) throw std::invalid_argument("top_metapaths: max_hops must be >= 1");
  const int64_t m = am.real.rows();
  std::vector<MetaPath> out;
  std::vector<int32_t> seq;
  auto extend = [&](auto&& self, double score, int64_t hops_left) -> void {
    if (static_cast<int64_t>(seq.size()) >= 2) {
      if (!anchor_type || seq.back() == *anchor_type) out.push_back({seq, score});
    }
    if (hops_left == 0) return;
    for (int32_t t = 0; t < m; ++t) {
      seq.push_back(t);
      self(self, score * am.real(seq[seq.size() - 2], t), hops_left - 1);
      seq.pop_back();
    }
  };
  for (int32_t t0 = 0; t0 < m; ++t0) {
    if (anchor_type && t0 != *anchor_type) continue;
    seq = {t0};
    extend(extend, 1.0, max_hops);
  }
  std::stable_sort(out.begin(), out.end(), [](const MetaPath& a, const MetaPath& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.types.size() != b.types.size()) return a.types.size() < b.types.size();
    return a.types < b.types;
  });
  return out;
}

std::vector<MetaPath> top_metapaths(const Model& model, const HeteroGraph& g, int64_t max_hops,
                                    std::optional<int32_t> anchor_type) {
  return top_metapaths(extract_attention_matrix(model, g), max_hops, anchor_type);
}

// ---------------- trend data ----------------

std::vector<TrendRow> trend_rows(const std::vector<RunReport>& reports) {
  std::map<std::string, std::vector<const RunReport*>> by_tag;
  for (const RunReport& r : reports) by_tag[r.dataset_tag].push_back(&r);
  if (by_tag.size() < 2)
    throw std::invalid_argument("trend_rows: need reports for at least two datasets");

  std::vector<TrendRow> rows;
  for (const auto& [tag, rs] : by_tag) {
    const RunReport* base = nullptr;
    const RunReport* bg = nullptr;
    for (const RunReport* r : rs) {
      if (r->model == "rgcn-baseline" && !base) base = r;
      else if (r->model == "bg-hgnn" && !bg) bg = r;
    }
    if (!base || !bg || rs.size() != 2)
      throw std::invalid_argument("trend_rows: dataset '" + tag +
                                  "' needs exactly one baseline and one bg-hgnn report");
    TrendRow row;
    row.tag = tag;
    row.relations = bg->relations;
    row.param_ratio = static_cast<double>(base->param_count) / static_cast<double>(bg->param_count);
    row.f1_gap = bg->micro_f1 - base->micro_f1;
    row.relation_density = bg->edge_count > 0
                               ? static_cast<double>(bg->relations) / static_cast<double>(bg->edge_count)
                               : 0.0;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const TrendRow& a, const TrendRow& b) {
    return a.relations < b.relations;
  });
  return rows;
}

std::string emit_trend_csv(const std::vector<RunReport>& reports) {
  std::ostringstream os;
  os.precision(17);
  os << "tag,relations,param_ratio,f1_gap,relation_density\n";
  for (const TrendRow& r : trend_rows(reports))
    os << r.tag << ',' << r.relations << ',' << r.param_ratio << ',' << r.f1_gap << ','
       << r.relation_density << '\n';
  return os.str();
}

std::vector<TrendRow> parse_trend_csv(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line) || line != "tag,relations,param_ratio,f1_gap,relation_density")
    throw std::invalid_argument("parse_trend_csv: bad header");
  std::vector<TrendRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    TrendRow r;
    std::string field;
    std::getline(ls, r.tag, ',');
    std::getline(ls, field, ',');
    r.relations = std::stoll(field);
    std::getline(ls, field, ',');
    r.param_ratio = std::stod(field);
    std::getline(ls, field, ',');
    r.f1_gap = std::stod(field);
    std::getline(ls, field, ',');
    r.relation_density = std::stod(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace bghgnn
