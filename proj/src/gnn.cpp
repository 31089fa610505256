#include "bghgnn/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bghgnn/attr_fusion.hpp"
#include "bghgnn/rng.hpp"
#include "bghgnn/type_encoding.hpp"

namespace bghgnn {

// ---------------- ParamSet ----------------

size_t ParamSet::add(std::string name, Tensor init) {
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return values_.size() - 1;
}

int64_t ParamSet::total_scalars() const {
  int64_t n = 0;
  for (const Tensor& t : values_) n += t.numel();
  return n;
}

int64_t ParamSet::scalars_with_prefix(const std::string& prefix) const {
  int64_t n = 0;
  for (size_t i = 0; i < values_.size(); ++i)
    if (names_[i].rfind(prefix, 0) == 0) n += values_[i].numel();
  return n;
}

std::vector<Tape::Id> ParamSet::register_all(Tape& tape) const {
  std::vector<Tape::Id> ids;
  ids.reserve(values_.size());
  for (size_t i = 0; i < values_.size(); ++i) ids.push_back(tape.parameter(values_[i], names_[i]));
  return ids;
}

// ---------------- layers ----------------

GatOut gat_forward(Tape& tape, const std::vector<std::pair<int64_t, int64_t>>& edges,
                   int64_t n_nodes, Tape::Id h, const std::vector<Tape::Id>& head_w,
                   const std::vector<Tape::Id>& head_a, double slope, bool concat_heads,
                   bool self_loops) {
  if (head_w.empty() || head_w.size() != head_a.size())
    throw std::invalid_argument("gat_forward: need matching W and a per head");
  if (tape.value(h).rows() != n_nodes)
    throw std::invalid_argument("gat_forward: feature rows must equal node count");

  std::vector<int64_t> src, dst;
  src.reserve(edges.size() + (self_loops ? n_nodes : 0));
  dst.reserve(src.capacity());
  for (const auto& [u, v] : edges) {
    src.push_back(u);
    dst.push_back(v);
  }
  if (self_loops) {
    for (int64_t v = 0; v < n_nodes; ++v) {
      src.push_back(v);
      dst.push_back(v);
    }
  } else {
    std::vector<char> has_in(static_cast<size_t>(n_nodes), 0);
    for (int64_t v : dst) has_in[static_cast<size_t>(v)] = 1;
    for (int64_t v = 0; v < n_nodes; ++v)
      if (!has_in[static_cast<size_t>(v)])
        throw std::runtime_error("gat_forward: node " + std::to_string(v) +
                                 " has no in-edges and self loops are disabled");
  }

  GatOut out;
  Tape::Id merged = -1;
  for (size_t head = 0; head < head_w.size(); ++head) {
    Tape::Id z = tape.matmul(h, head_w[head], false, true);       // [n, d]
    int64_t d = tape.value(z).cols();
    Tape::Id zs = tape.row_gather(z, src);                        // [ea, d]
    Tape::Id zd = tape.row_gather(z, dst);
    Tape::Id cat = tape.concat_cols(zs, zd);                      // [ea, 2d]
    Tape::Id logit = tape.leaky_relu(tape.matmul(cat, head_a[head]), slope);
    Tape::Id alpha = tape.segment_softmax(logit, dst, n_nodes);   // [ea, 1]
    Tape::Id weighted = tape.mul(zs, tape.expand_cols(alpha, d));
    Tape::Id agg = tape.segment_sum(weighted, dst, n_nodes);      // [n, d]
    merged = head == 0 ? agg : (concat_heads ? tape.concat_cols(merged, agg) : tape.add(merged, agg));
    out.attention = head == 0 ? alpha : tape.concat_cols(out.attention, alpha);
  }
  if (!concat_heads && head_w.size() > 1)
    merged = tape.scalar_mul(merged, 1.0 / static_cast<double>(head_w.size()));
  out.output = merged;
  return out;
}

Tape::Id rgcn_forward(Tape& tape, const HeteroGraph& g, Tape::Id h,
                      const std::vector<Tape::Id>& w_rel, Tape::Id w_self, double slope) {
  if (static_cast<int64_t>(w_rel.size()) != g.num_relations())
    throw std::invalid_argument("rgcn_forward: need exactly one weight matrix per relation");
  const int64_t n = g.node_count;
  if (tape.value(h).rows() != n)
    throw std::invalid_argument("rgcn_forward: feature rows must equal node count");

  Tape::Id acc = tape.matmul(h, w_self, false, true);  // self term
  const int64_t hidden = tape.value(acc).cols();
  for (int64_t r = 0; r < g.num_relations(); ++r) {
    std::vector<int64_t> srcs, dsts;
    std::vector<double> deg(static_cast<size_t>(n), 0.0);
    for (size_t e = 0; e < g.edges.size(); ++e) {
      if (g.edge_type_of[e] != static_cast<int32_t>(r)) continue;
      srcs.push_back(g.edges[e].first);
      dsts.push_back(g.edges[e].second);
      deg[static_cast<size_t>(g.edges[e].second)] += 1.0;
    }
    if (srcs.empty()) continue;  // relation weights stay unreachable
    Tape::Id gathered = tape.row_gather(h, srcs);
    Tape::Id transformed = tape.matmul(gathered, w_rel[static_cast<size_t>(r)], false, true);
    Tape::Id summed = tape.segment_sum(transformed, dsts, n);
    Tensor recip({n, 1});
    for (int64_t v = 0; v < n; ++v)
      recip.at(v) = deg[static_cast<size_t>(v)] > 0.0 ? 1.0 / deg[static_cast<size_t>(v)] : 0.0;
    Tape::Id mean_r = tape.mul(summed, tape.expand_cols(tape.input(std::move(recip)), hidden));
    acc = tape.add(acc, mean_r);
  }
  return tape.leaky_relu(acc, slope);
}

Tape::Id nll_mean(Tape& tape, Tape::Id logits, const std::vector<int64_t>& rows,
                  const std::vector<int32_t>& labels) {
  if (rows.size() != labels.size() || rows.empty())
    throw std::invalid_argument("nll_mean: rows and labels must match and be nonempty");
  const int64_t c = tape.value(logits).cols();
  const int64_t t = static_cast<int64_t>(rows.size());
  for (int32_t l : labels)
    if (l < 0 || l >= c) throw std::invalid_argument("nll_mean: label out of range");

  Tape::Id picked_rows = tape.row_gather(logits, rows);  // [t, c]
  Tape::Id flat = tape.reshape(picked_rows, {t * c, 1});

  // constant per-row max keeps exp() in range without touching gradients
  const Tensor& lv = tape.value(picked_rows);
  Tensor shift({t * c, 1});
  for (int64_t i = 0; i < t; ++i) {
    double mx = lv(i, 0);
    for (int64_t j = 1; j < c; ++j) mx = std::max(mx, lv(i, j));
    for (int64_t j = 0; j < c; ++j) shift.at(i * c + j) = mx;
  }
  Tape::Id shifted = tape.sub(flat, tape.input(std::move(shift)));

  std::vector<int64_t> row_of(static_cast<size_t>(t * c));
  for (int64_t i = 0; i < t; ++i)
    for (int64_t j = 0; j < c; ++j) row_of[static_cast<size_t>(i * c + j)] = i;
  Tape::Id lse = tape.log(tape.segment_sum(tape.exp(shifted), row_of, t));  // [t, 1]
  Tape::Id logp = tape.sub(shifted, tape.row_gather(lse, row_of));          // [t*c, 1]

  std::vector<int64_t> picks(static_cast<size_t>(t));
  for (int64_t i = 0; i < t; ++i) picks[static_cast<size_t>(i)] = i * c + labels[static_cast<size_t>(i)];
  return tape.scalar_mul(tape.reduce_mean(tape.row_gather(logp, picks)), -1.0);
}

// ---------------- models ----------------

namespace {

Tensor glorot_uniform(int64_t rows, int64_t cols, Rng& rng) {
  double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t({rows, cols});
  for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = rng.uniform(-s, s);
  return t;
}

struct GatStackLayout {
  // parameter indices per layer
  std::vector<std::vector<size_t>> w_idx, a_idx;
  std::vector<int64_t> heads;  // per layer
};

// dropout as a constant inverted mask; gradients flow through the mul
Tape::Id apply_dropout(Tape& tape, Tape::Id h, double rate, uint64_t seed) {
  const Tensor& v = tape.value(h);
  Tensor mask(v.shape());
  Rng rng(seed);
  double keep = 1.0 - rate;
  for (int64_t i = 0; i < mask.numel(); ++i)
    mask.at(i) = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return tape.mul(h, tape.input(std::move(mask)));
}

class BgHgnnModel final : public Model {
 public:
  BgHgnnModel(const HeteroGraph& g, const ModelConfig& cfg)
      : Model(ModelKind::kBgHgnn, init_featureless(g, cfg.feat_dim, cfg.feat_seed), cfg) {
    UnifiedSchema schema = build_unified_schema(graph_, cfg_.sentinel);
    UnifiedFeatures uf = project_features(graph_, schema);
    TypeCodebook cb = build_codebook(graph_, cfg_.type_dim, cfg_.edge_type_dim, cfg_.enc_low,
                                     cfg_.enc_high, cfg_.enc_seed);
    NeighborRelationSummary nrs = neighbor_relation_summary(graph_, cb);

    Tensor x = uf.values;
    if (cfg_.use_mask) {
      Tensor both({x.rows(), x.cols() * 2});
      for (int64_t i = 0; i < x.rows(); ++i) {
        for (int64_t j = 0; j < x.cols(); ++j) {
          both(i, j) = x(i, j);
          both(i, x.cols() + j) = uf.mask(i, j);
        }
      }
      x = std::move(both);
    }
    x1_ = append_ones_col(x);
    o1_ = append_ones_col(node_type_matrix(graph_, cb));
    w1_ = append_ones_col(nrs.omega);

    Rng rng(cfg_.param_seed);
    FusionParams fp = FusionParams::init(cfg_.rank, cfg_.fuse_dim, x1_.cols() - 1, o1_.cols() - 1,
                                         w1_.cols() - 1, rng.next_u64());
    for (int64_t r = 0; r < cfg_.rank; ++r) {
      fusion_x_.push_back(params_.add("fusion/x" + std::to_string(r), fp.x_factors[static_cast<size_t>(r)]));
      fusion_o_.push_back(params_.add("fusion/o" + std::to_string(r), fp.o_factors[static_cast<size_t>(r)]));
      fusion_w_.push_back(params_.add("fusion/w" + std::to_string(r), fp.w_factors[static_cast<size_t>(r)]));
    }

    int64_t in_dim = fp.output_dim(cfg_.fusion_variant);
    stack_.w_idx.resize(static_cast<size_t>(cfg_.layers));
    stack_.a_idx.resize(static_cast<size_t>(cfg_.layers));
    for (int64_t l = 0; l < cfg_.layers; ++l) {
      bool last = l == cfg_.layers - 1;
      int64_t heads = last ? 1 : cfg_.heads;
      stack_.heads.push_back(heads);
      for (int64_t hd = 0; hd < heads; ++hd) {
        std::string base = "gnn/gat" + std::to_string(l) + "/h" + std::to_string(hd);
        stack_.w_idx[static_cast<size_t>(l)].push_back(
            params_.add(base + "/W", glorot_uniform(cfg_.hidden, in_dim, rng)));
        stack_.a_idx[static_cast<size_t>(l)].push_back(
            params_.add(base + "/a", glorot_uniform(2 * cfg_.hidden, 1, rng)));
      }
      in_dim = last ? cfg_.hidden : cfg_.hidden * heads;
    }
    head_idx_ = params_.add("head/W", glorot_uniform(cfg_.classes, cfg_.hidden, rng));
  }

  ForwardOut forward(Tape& tape, bool training) const override {
    ForwardOut out;
    out.param_ids = params_.register_all(tape);
    Tape::Id x1 = tape.input(x1_);
    Tape::Id o1 = tape.input(o1_);
    Tape::Id w1 = tape.input(w1_);
    auto ids_of = [&](const std::vector<size_t>& idx) {
      std::vector<Tape::Id> ids;
      for (size_t i : idx) ids.push_back(out.param_ids[i]);
      return ids;
    };
    Tape::Id h = fuse_on_tape(tape, x1, o1, w1, ids_of(fusion_x_), ids_of(fusion_o_),
                              ids_of(fusion_w_), cfg_.fusion_variant);
    for (int64_t l = 0; l < cfg_.layers; ++l) {
      bool last = l == cfg_.layers - 1;
      if (training && cfg_.dropout > 0.0)
        h = apply_dropout(tape, h, cfg_.dropout, cfg_.param_seed + 0x9e3779b9ull * ++dropout_tick_);
      GatOut go = gat_forward(tape, graph_.edges, graph_.node_count, h,
                              ids_of(stack_.w_idx[static_cast<size_t>(l)]),
                              ids_of(stack_.a_idx[static_cast<size_t>(l)]), cfg_.slope, !last,
                              cfg_.self_loops);
      out.attentions.push_back(go.attention);
      h = last ? go.output : tape.leaky_relu(go.output, cfg_.slope);
    }
    out.embeddings = h;
    out.logits = tape.matmul(h, out.param_ids[head_idx_], false, true);
    return out;
  }

  ParamBreakdown param_breakdown() const override {
    ParamBreakdown b;
    b.model = "bg-hgnn";
    b.relations = graph_.num_relations();
    b.layers = cfg_.layers;
    b.rank = cfg_.rank;
    b.hidden = cfg_.hidden;
    b.components = {{"fusion", params_.scalars_with_prefix("fusion/")},
                    {"gnn-stack", params_.scalars_with_prefix("gnn/")},
                    {"head", params_.scalars_with_prefix("head/")}};
    b.total = params_.total_scalars();
    return b;
  }

 private:
  Tensor x1_, o1_, w1_;
  std::vector<size_t> fusion_x_, fusion_o_, fusion_w_;
  GatStackLayout stack_;
  size_t head_idx_ = 0;
};

class RgcnModel final : public Model {
 public:
  RgcnModel(const HeteroGraph& g, const ModelConfig& cfg)
      : Model(ModelKind::kRgcnBaseline, init_featureless(g, cfg.feat_dim, cfg.feat_seed), cfg) {
    Rng rng(cfg_.param_seed);
    const int64_t m = graph_.num_node_types();
    for (int64_t t = 0; t < m; ++t) {
      int64_t d = static_cast<int64_t>(graph_.features[static_cast<size_t>(t)].channels.size());
      inproj_idx_.push_back(params_.add(
          "inproj/" + graph_.node_type_names[static_cast<size_t>(t)],
          glorot_uniform(cfg_.hidden, d, rng)));
    }
    const int64_t n_rel = graph_.num_relations();
    rel_idx_.resize(static_cast<size_t>(cfg_.layers));
    for (int64_t l = 0; l < cfg_.layers; ++l) {
      for (int64_t r = 0; r < n_rel; ++r)
        rel_idx_[static_cast<size_t>(l)].push_back(
            params_.add("gnn/rgcn" + std::to_string(l) + "/rel" + std::to_string(r),
                        glorot_uniform(cfg_.hidden, cfg_.hidden, rng)));
      self_idx_.push_back(params_.add("gnn/rgcn" + std::to_string(l) + "/self",
                                      glorot_uniform(cfg_.hidden, cfg_.hidden, rng)));
    }
    head_idx_ = params_.add("head/W", glorot_uniform(cfg_.classes, cfg_.hidden, rng));

    // row order of the stacked per-type projections -> node id
    for (int64_t t = 0; t < m; ++t)
      for (int64_t v : graph_.nodes_by_type[static_cast<size_t>(t)]) stacked_order_.push_back(v);
    node_to_pos_.resize(static_cast<size_t>(graph_.node_count));
    for (size_t p = 0; p < stacked_order_.size(); ++p)
      node_to_pos_[static_cast<size_t>(stacked_order_[p])] = static_cast<int64_t>(p);
  }

  ForwardOut forward(Tape& tape, bool training) const override {
    ForwardOut out;
    out.param_ids = params_.register_all(tape);
    Tape::Id stacked = -1;
    for (int64_t t = 0; t < graph_.num_node_types(); ++t) {
      const FeatureTable& ft = graph_.features[static_cast<size_t>(t)];
      Tape::Id xt = tape.input(ft.values);
      Tape::Id ht = tape.matmul(xt, out.param_ids[inproj_idx_[static_cast<size_t>(t)]], false, true);
      stacked = t == 0 ? ht : tape.concat_rows(stacked, ht);
    }
    Tape::Id h = tape.row_gather(stacked, node_to_pos_);
    for (int64_t l = 0; l < cfg_.layers; ++l) {
      if (training && cfg_.dropout > 0.0)
        h = apply_dropout(tape, h, cfg_.dropout, cfg_.param_seed + 0x9e3779b9ull * ++dropout_tick_);
      std::vector<Tape::Id> w_rel;
      for (size_t i : rel_idx_[static_cast<size_t>(l)]) w_rel.push_back(out.param_ids[i]);
      h = rgcn_forward(tape, graph_, h, w_rel, out.param_ids[self_idx_[static_cast<size_t>(l)]],
                       cfg_.slope);
    }
    out.embeddings = h;
    out.logits = tape.matmul(h, out.param_ids[head_idx_], false, true);
    return out;
  }

  ParamBreakdown param_breakdown() const override {
    ParamBreakdown b;
    b.model = "rgcn-baseline";
    b.relations = graph_.num_relations();
    b.layers = cfg_.layers;
    b.hidden = cfg_.hidden;
    b.components = {{"input-proj", params_.scalars_with_prefix("inproj/")},
                    {"gnn-stack", params_.scalars_with_prefix("gnn/")},
                    {"head", params_.scalars_with_prefix("head/")}};
    b.total = params_.total_scalars();
    return b;
  }

 private:
  std::vector<size_t> inproj_idx_;
  std::vector<std::vector<size_t>> rel_idx_;
  std::vector<size_t> self_idx_;
  size_t head_idx_ = 0;
  std::vector<int64_t> stacked_order_, node_to_pos_;
};

}  // namespace

std::unique_ptr<Model> build_model(ModelKind kind, const HeteroGraph& g, const ModelConfig& cfg) {
  if (cfg.layers < 1) throw std::invalid_argument("build_model: need at least one layer");
  if (cfg.classes < 1) throw std::invalid_argument("build_model: need at least one class");
  switch (kind) {
    case ModelKind::kBgHgnn: return std::make_unique<BgHgnnModel>(g, cfg);
    case ModelKind::kRgcnBaseline: return std::make_unique<RgcnModel>(g, cfg);
  }
  throw std::invalid_argument("build_model: unknown model kind");
}

}  // namespace bghgnn
