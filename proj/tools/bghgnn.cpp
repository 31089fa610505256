// Command-line entry point wiring the library into reproducible runs.
// Exit codes: 0 success, 1 usage error, 2 runtime/validation error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bghgnn/analysis.hpp"
#include "bghgnn/attr_fusion.hpp"
#include "bghgnn/graph.hpp"
#include "bghgnn/lowrank_fusion.hpp"
#include "bghgnn/rng.hpp"
#include "bghgnn/train.hpp"
#include "bghgnn/type_encoding.hpp"

using nlohmann::json;
using namespace bghgnn;

namespace {

struct ModelFlags {
  std::string model = "bg-hgnn";
  int64_t layers = 3, hidden = 32, heads = 4;
  int64_t rank = 4, fuse_dim = 32;
  std::string fusion_variant = "lmf";
  bool use_mask = false;
  double sentinel = 0.0;
  int64_t type_dim = 0, edge_type_dim = 0;
  double enc_low = -1.0, enc_high = 1.0;
  uint64_t enc_seed = 1;
  int64_t feat_dim = 256;
  double dropout = 0.0;
  double slope = 0.2;
};

void add_model_flags(CLI::App* cmd, ModelFlags& mf) {
  cmd->add_option("--model", mf.model, "model kind")->check(CLI::IsMember({"bg-hgnn", "rgcn"}));
  cmd->add_option("--layers", mf.layers, "GNN layer count (default 3)");
  cmd->add_option("--hidden", mf.hidden, "hidden width");
  cmd->add_option("--heads", mf.heads, "attention heads in hidden layers");
  cmd->add_option("--rank", mf.rank, "fusion rank r");
  cmd->add_option("--fuse-dim", mf.fuse_dim, "fusion output width");
  cmd->add_option("--fusion-variant", mf.fusion_variant, "fusion form")
      ->check(CLI::IsMember({"lmf", "per-rank-kron"}));
  cmd->add_flag("--use-mask", mf.use_mask, "append the presence mask to the unified features");
  cmd->add_option("--sentinel", mf.sentinel, "fill value for absent channels");
  cmd->add_option("--type-dim", mf.type_dim, "node type encoding length (0 = type count)");
  cmd->add_option("--edge-type-dim", mf.edge_type_dim, "edge type encoding length (0 = relation count)");
  cmd->add_option("--enc-low", mf.enc_low, "encoding lower bound");
  cmd->add_option("--enc-high", mf.enc_high, "encoding upper bound");
  cmd->add_option("--enc-seed", mf.enc_seed, "encoding seed");
  cmd->add_option("--feat-dim", mf.feat_dim, "synthetic channels for featureless types");
  cmd->add_option("--dropout", mf.dropout, "dropout rate (default off)");
  cmd->add_option("--slope", mf.slope, "leaky-relu slope");
}

ModelConfig to_model_config(const ModelFlags& mf) {
  ModelConfig mc;
  mc.layers = mf.layers;
  mc.hidden = mf.hidden;
  mc.heads = mf.heads;
  mc.rank = mf.rank;
  mc.fuse_dim = mf.fuse_dim;
  mc.fusion_variant =
      mf.fusion_variant == "per-rank-kron" ? FusionVariant::kPerRankKron : FusionVariant::kLowRank;
  mc.use_mask = mf.use_mask;
  mc.sentinel = mf.sentinel;
  mc.type_dim = mf.type_dim;
  mc.edge_type_dim = mf.edge_type_dim;
  mc.enc_low = mf.enc_low;
  mc.enc_high = mf.enc_high;
  mc.enc_seed = mf.enc_seed;
  mc.feat_dim = mf.feat_dim;
  mc.dropout = mf.dropout;
  mc.slope = mf.slope;
  return mc;
}

json model_flags_json(const ModelFlags& mf) {
  return json{{"model", mf.model},       {"layers", mf.layers},
              {"hidden", mf.hidden},     {"heads", mf.heads},
              {"rank", mf.rank},         {"fuse_dim", mf.fuse_dim},
              {"fusion_variant", mf.fusion_variant},
              {"use_mask", mf.use_mask}, {"sentinel", mf.sentinel},
              {"type_dim", mf.type_dim}, {"edge_type_dim", mf.edge_type_dim},
              {"enc_low", mf.enc_low},   {"enc_high", mf.enc_high},
              {"enc_seed", mf.enc_seed}, {"feat_dim", mf.feat_dim},
              {"dropout", mf.dropout},   {"slope", mf.slope}};
}

void print_resolved(const std::string& cmd, const json& cfg) {
  json j = cfg;
  j["subcommand"] = cmd;
  std::cerr << "resolved config: " << j.dump() << "\n";
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// ---- subcommand handlers ----

struct SynthArgs {
  std::string spec_path, out_dir;
  int64_t seed = -1;  // -1: keep the spec's seed
};

int run_synth(const SynthArgs& a) {
  SchemaSpec spec = SchemaSpec::from_json_file(a.spec_path);
  if (a.seed >= 0) spec.seed = static_cast<uint64_t>(a.seed);
  print_resolved("synth", {{"spec", a.spec_path}, {"seed", spec.seed}, {"out", a.out_dir}});
  HeteroGraph g = synth_graph(spec);
  write_graph(g, a.out_dir);
  std::cout << "wrote " << a.out_dir << ": " << g.node_count << " nodes, " << g.edge_count()
            << " edges, " << g.num_node_types() << " node types, " << g.num_relations()
            << " relations, " << g.labels.size() << " labels\n";
  return 0;
}

struct PreprocessArgs {
  std::string graph_dir, out_dir;
  ModelFlags mf;
  uint64_t feat_seed = 2;
  bool add_inverse = false;
};

int run_preprocess(const PreprocessArgs& a) {
  json cfg = model_flags_json(a.mf);
  cfg["graph"] = a.graph_dir;
  cfg["out"] = a.out_dir;
  cfg["feat_seed"] = a.feat_seed;
  cfg["add_inverse"] = a.add_inverse;
  print_resolved("preprocess", cfg);

  json timing;
  double t0 = now_ms();
  HeteroGraph g = load_graph(a.graph_dir);
  if (a.add_inverse) g = add_inverse_edges(g);
  timing["load_ms"] = now_ms() - t0;

  t0 = now_ms();
  g = init_featureless(g, a.mf.feat_dim, a.feat_seed);
  timing["featureless_init_ms"] = now_ms() - t0;

  t0 = now_ms();
  UnifiedSchema schema = build_unified_schema(g, a.mf.sentinel);
  UnifiedFeatures uf = project_features(g, schema);
  timing["attr_fusion_ms"] = now_ms() - t0;

  t0 = now_ms();
  TypeCodebook cb = build_codebook(g, a.mf.type_dim, a.mf.edge_type_dim, a.mf.enc_low,
                                   a.mf.enc_high, a.mf.enc_seed);
  NeighborRelationSummary nrs = neighbor_relation_summary(g, cb);
  timing["type_encoding_ms"] = now_ms() - t0;

  std::filesystem::create_directories(a.out_dir);
  auto dump_matrix = [](const Tensor& m, const std::vector<std::string>& cols,
                        const std::filesystem::path& p) {
    std::ostringstream os;
    os.precision(17);
    for (size_t j = 0; j < cols.size(); ++j) os << (j ? "\t" : "") << cols[j];
    os << '\n';
    for (int64_t i = 0; i < m.rows(); ++i) {
      for (int64_t j = 0; j < m.cols(); ++j) os << (j ? "\t" : "") << m(i, j);
      os << '\n';
    }
    write_text(p, os.str());
  };
  std::filesystem::path out(a.out_dir);
  dump_matrix(uf.values, schema.channels, out / "unified.tsv");
  dump_matrix(uf.mask, schema.channels, out / "mask.tsv");
  std::vector<std::string> omega_cols;
  for (int64_t j = 0; j < nrs.omega.cols(); ++j) omega_cols.push_back("w" + std::to_string(j));
  dump_matrix(nrs.omega, omega_cols, out / "omega.tsv");
  write_text(out / "codebook.json", cb.to_json_text(g));
  write_text(out / "preprocess_timing.json", timing.dump(2) + "\n");
  std::cerr << "timing: " << timing.dump() << "\n";
  std::cout << "wrote " << a.out_dir << ": unified " << uf.values.rows() << "x" << uf.values.cols()
            << ", omega width " << nrs.omega.cols() << "\n";
  return 0;
}

struct TrainArgs {
  std::string graph_dir, report_path;
  ModelFlags mf;
  std::string task = "node";
  int64_t epochs = 100;
  double lr = 0.05;
  uint64_t seed = 0;
  int64_t trials = 5;
  bool parallel = false;
  std::string optimizer = "gd";
  double momentum = 0.9;
  uint64_t feat_seed = 2;
  bool add_inverse = false;
  std::string target_rel;
  std::string link_mode = "two-hop";
  std::string dataset_tag;
};

TrainConfig to_train_config(const TrainArgs& a) {
  TrainConfig tc;
  tc.epochs = a.epochs;
  tc.lr = a.lr;
  tc.seed = a.seed;
  tc.trials = a.trials;
  tc.optimizer = a.optimizer == "momentum" ? OptimizerKind::kMomentum : OptimizerKind::kGradientDescent;
  tc.momentum = a.momentum;
  tc.model = a.mf.model == "rgcn" ? ModelKind::kRgcnBaseline : ModelKind::kBgHgnn;
  tc.task = a.task == "link" ? TaskKind::kLinkPrediction : TaskKind::kNodeClassification;
  tc.model_cfg = to_model_config(a.mf);
  tc.model_cfg.feat_seed = a.feat_seed;
  tc.target_relation = a.target_rel;
  tc.link_mode = a.link_mode == "random-hop" ? LinkMode::kRandomHop : LinkMode::kTwoHop;
  return tc;
}

json reports_json(const std::vector<RunReport>& reports) {
  json arr = json::array();
  for (const RunReport& r : reports) arr.push_back(json::parse(r.to_json_text()));
  return arr;
}

int run_train(const TrainArgs& a) {
  json cfg = model_flags_json(a.mf);
  cfg["graph"] = a.graph_dir;
  cfg["task"] = a.task;
  cfg["epochs"] = a.epochs;
  cfg["lr"] = a.lr;
  cfg["seed"] = a.seed;
  cfg["trials"] = a.trials;
  cfg["parallel"] = a.parallel;
  cfg["optimizer"] = a.optimizer;
  cfg["target_rel"] = a.target_rel;
  cfg["link_mode"] = a.link_mode;
  print_resolved("train", cfg);

  HeteroGraph g = load_graph(a.graph_dir);
  if (a.add_inverse) g = add_inverse_edges(g);
  TrainConfig tc = to_train_config(a);
  std::vector<RunReport> reports = train_trials(g, tc, a.parallel);
  for (RunReport& r : reports) r.dataset_tag = a.dataset_tag.empty() ? a.graph_dir : a.dataset_tag;

  double mean_acc = 0.0, mean_micro = 0.0, mean_auc = 0.0;
  for (const RunReport& r : reports) {
    mean_acc += r.train_accuracy;
    mean_micro += r.micro_f1;
    mean_auc += r.roc_auc;
    std::cout << "trial seed=" << r.seed << " epochs=" << r.epochs_run
              << " train_acc=" << r.train_accuracy;
    if (tc.task == TaskKind::kNodeClassification)
      std::cout << " micro_f1=" << r.micro_f1 << " macro_f1=" << r.macro_f1;
    else
      std::cout << " roc_auc=" << r.roc_auc << " mrr=" << r.mrr;
    std::cout << " params=" << r.param_count << " mean_epoch_ms=" << r.mean_epoch_ms << "\n";
  }
  double n = static_cast<double>(reports.size());
  std::cout << "mean over " << reports.size() << " trials: train_acc=" << mean_acc / n;
  if (tc.task == TaskKind::kNodeClassification) std::cout << " micro_f1=" << mean_micro / n;
  else std::cout << " roc_auc=" << mean_auc / n;
  std::cout << "\n";

  if (!a.report_path.empty()) write_text(a.report_path, reports_json(reports).dump(2) + "\n");
  return 0;
}

struct EvalArgs {
  std::vector<std::string> report_paths;
};

int run_eval(const EvalArgs& a) {
  print_resolved("eval", {{"reports", a.report_paths}});
  printf("%-14s %-6s %10s %10s %10s %10s %10s %12s\n", "model", "task", "train_acc", "micro_f1",
         "macro_f1", "roc_auc", "mrr", "epoch_ms");
  for (const std::string& path : a.report_paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    json arr = json::parse(ss.str());
    if (!arr.is_array()) arr = json::array({arr});
    for (const json& jr : arr) {
      RunReport r = RunReport::from_json_text(jr.dump());
      printf("%-14s %-6s %10.4f %10.4f %10.4f %10.4f %10.4f %12.3f\n", r.model.c_str(),
             r.task.c_str(), r.train_accuracy, r.micro_f1, r.macro_f1, r.roc_auc, r.mrr,
             r.mean_epoch_ms);
    }
  }
  return 0;
}

struct AnalyzeArgs {
  std::string what = "params";
  std::string graph_dir;
  ModelFlags mf;
  int64_t nodes = 2000;
  int64_t seeds = 5;
  uint64_t seed = 0;
  int64_t pairs = 200;
  double threshold = 0.1;
  int64_t max_hops = 2;
  int64_t epochs = 200;
  double lr = 0.05;
  std::string optimizer = "momentum";
  std::string out_path, out_format = "json";
  std::vector<std::string> report_paths;
};

int run_analyze(const AnalyzeArgs& a) {
  json cfg{{"what", a.what},   {"graph", a.graph_dir},   {"nodes", a.nodes},
           {"seeds", a.seeds}, {"seed", a.seed},         {"pairs", a.pairs},
           {"threshold", a.threshold}, {"max_hops", a.max_hops}, {"epochs", a.epochs},
           {"lr", a.lr},       {"out", a.out_path},      {"format", a.out_format}};
  cfg.update(model_flags_json(a.mf));
  print_resolved("analyze", cfg);

  json result;
  if (a.what == "params") {
    HeteroGraph g = load_graph(a.graph_dir);
    ModelConfig mc = to_model_config(a.mf);
    mc.classes = g.labels.empty() ? 2 : num_classes(g);
    std::unique_ptr<Model> model = build_model(
        a.mf.model == "rgcn" ? ModelKind::kRgcnBaseline : ModelKind::kBgHgnn, g, mc);
    ParamBreakdown b = count_params(*model);
    result = {{"model", b.model}, {"total", b.total}, {"relations", b.relations},
              {"layers", b.layers}, {"hidden", b.hidden}};
    for (const auto& [name, n] : b.components) result["components"][name] = n;
  } else if (a.what == "collapse") {
    result = json::array();
    for (int64_t s = 0; s < a.seeds; ++s) {
      CollapseReport rep = collapse_experiment(a.nodes, a.seed + static_cast<uint64_t>(s));
      result.push_back(json::parse(rep.to_json_text()));
    }
  } else if (a.what == "expressiveness") {
    result = json::array();
    for (int64_t s = 0; s < a.seeds; ++s) {
      ExpressivenessResult r = expressiveness_check(a.pairs, a.seed + static_cast<uint64_t>(s));
      result.push_back({{"seed", a.seed + static_cast<uint64_t>(s)},
                        {"pairs", r.pairs_checked},
                        {"violations", r.violations}});
    }
  } else if (a.what == "attention") {
    HeteroGraph g = load_graph(a.graph_dir);
    TrainArgs ta;
    ta.mf = a.mf;
    ta.mf.model = "bg-hgnn";
    ta.epochs = a.epochs;
    ta.lr = a.lr;
    ta.seed = a.seed;
    ta.optimizer = a.optimizer;
    TrainConfig tc = to_train_config(ta);
    tc.trials = 1;
    // train once, then read the first layer's attention
    ModelConfig mc = tc.model_cfg;
    mc.classes = num_classes(g);
    mc.param_seed = a.seed * 0x9e3779b97f4a7c15ull + 12345;
    RunReport rep = train(g, tc);
    (void)rep;
    // rebuild the trained model state by retraining in-process
    std::unique_ptr<Model> model = build_model(ModelKind::kBgHgnn, g, mc);
    {
      TrainConfig tc1 = tc;
      tc1.trials = 1;
      // replay the same schedule on the fresh model
      Splits sp = g.splits;
      std::vector<int64_t> rows;
      std::vector<int32_t> labels;
      for (int64_t v : sp.train)
        if (auto it = g.labels.find(v); it != g.labels.end()) {
          rows.push_back(v);
          labels.push_back(it->second);
        }
      std::vector<Tensor> velocity;
      for (int64_t e = 0; e < tc1.epochs; ++e) {
        Tape tape;
        ForwardOut out = model->forward(tape, true);
        Tape::Id loss = nll_mean(tape, out.logits, rows, labels);
        tape.backward(loss);
        ParamSet& ps = model->params();
        if (tc1.optimizer == OptimizerKind::kMomentum && velocity.empty())
          for (size_t i = 0; i < ps.size(); ++i) velocity.push_back(Tensor::zeros(ps.value(i).shape()));
        for (size_t i = 0; i < ps.size(); ++i) {
          const Tensor& gr = tape.grad(out.param_ids[i]);
          Tensor& v = ps.value(i);
          if (tc1.optimizer == OptimizerKind::kMomentum) {
            for (int64_t j = 0; j < v.numel(); ++j) {
              velocity[i].at(j) = tc1.momentum * velocity[i].at(j) + gr.at(j);
              v.at(j) -= tc1.lr * velocity[i].at(j);
            }
          } else {
            for (int64_t j = 0; j < v.numel(); ++j) v.at(j) -= tc1.lr * gr.at(j);
          }
        }
      }
    }
    AttentionMatrix am = extract_attention_matrix(*model, g, a.threshold);
    result["type_names"] = am.type_names;
    result["threshold"] = am.threshold;
    for (int64_t i = 0; i < am.real.rows(); ++i) {
      json row_r = json::array(), row_b = json::array();
      for (int64_t j = 0; j < am.real.cols(); ++j) {
        row_r.push_back(am.real(i, j));
        row_b.push_back(am.binary(i, j));
      }
      result["real"].push_back(row_r);
      result["binary"].push_back(row_b);
    }
    json paths = json::array();
    for (const MetaPath& mp : top_metapaths(am, a.max_hops)) {
      json names = json::array();
      for (int32_t t : mp.types) names.push_back(am.type_names[static_cast<size_t>(t)]);
      paths.push_back({{"path", names}, {"score", mp.score}});
      if (paths.size() >= 20) break;
    }
    result["metapaths"] = paths;
  } else if (a.what == "trend") {
    std::vector<RunReport> reports;
    for (const std::string& path : a.report_paths) {
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot open report " + path);
      std::stringstream ss;
      ss << in.rdbuf();
      json arr = json::parse(ss.str());
      if (!arr.is_array()) arr = json::array({arr});
      for (const json& jr : arr) reports.push_back(RunReport::from_json_text(jr.dump()));
    }
    std::string csv = emit_trend_csv(reports);
    if (!a.out_path.empty()) write_text(a.out_path, csv);
    else std::cout << csv;
    return 0;
  } else {
    throw CLI::ValidationError("--what", "unknown analysis '" + a.what + "'");
  }

  std::string text = result.dump(2) + "\n";
  if (!a.out_path.empty()) write_text(a.out_path, text);
  else std::cout << text;
  return 0;
}

int run_grad_check(uint64_t seed) {
  print_resolved("grad-check", {{"seed", seed}});
  bool ok = true;
  Rng rng(seed);

  {  // linear regression
    int64_t n = 16, d = 3;
    Tensor x({n, d}), y({n, 1});
    for (int64_t i = 0; i < x.numel(); ++i) x.at(i) = rng.uniform(-1, 1);
    for (int64_t i = 0; i < n; ++i) y.at(i) = rng.uniform(-1, 1);
    Tensor w0({1, d}), b0({1, 1});
    for (int64_t i = 0; i < d; ++i) w0.at(i) = rng.uniform(-1, 1);
    b0.at(0) = rng.uniform(-1, 1);
    auto program = [&](Tape& t, const std::vector<Tensor>& p) {
      Tape::Id w = t.parameter(p[0], "w");
      Tape::Id b = t.parameter(p[1], "b");
      Tape::Id pred = t.add(t.matmul(t.input(x), w, false, true),
                            t.matmul(t.input(Tensor::full({n, 1}, 1.0)), b));
      Tape::Id err = t.sub(pred, t.input(y));
      return t.reduce_mean(t.mul(err, err));
    };
    GradCheckReport rep = grad_check(program, {w0, b0}, 1e-5);
    printf("linear regression: max relative error %.3e (<= 1e-8 required)\n", rep.max_rel_err);
    ok = ok && rep.max_rel_err <= 1e-8;
  }

  {  // small end-to-end bg-hgnn with cross-entropy
    SchemaSpec spec = SchemaSpec::from_json_text(R"({
      "seed": 11,
      "node_types": [
        {"name": "a", "count": 12, "channels": ["x0", "x1"], "feature_signal": 1.0},
        {"name": "b", "count": 8, "channels": ["y0"]}
      ],
      "edge_types": [
        {"name": "ab", "src": "a", "dst": "b", "expected_degree": 1.5},
        {"name": "ba", "src": "b", "dst": "a", "expected_degree": 1.5}
      ],
      "labels": {"node_type": "a", "classes": 2}
    })");
    HeteroGraph g = synth_graph(spec);
    ModelConfig mc;
    mc.layers = 3;
    mc.hidden = 4;
    mc.heads = 2;
    mc.rank = 2;
    mc.fuse_dim = 4;
    mc.classes = 2;
    mc.param_seed = seed + 1;
    std::unique_ptr<Model> model = build_model(ModelKind::kBgHgnn, g, mc);
    std::vector<int64_t> rows;
    std::vector<int32_t> labels;
    for (const auto& [v, c] : g.labels) {
      rows.push_back(v);
      labels.push_back(c);
    }
    GradCheckReport rep = model_grad_check(*model, rows, labels);
    printf("bg-hgnn end-to-end: %zu parameters, max relative error %.3e (<= 1e-4 required)\n",
           model->params().size(), rep.max_rel_err);
    ok = ok && rep.max_rel_err <= 1e-4;
  }

  {  // rgcn baseline end-to-end
    SchemaSpec spec = SchemaSpec::from_json_text(R"({
      "seed": 13,
      "node_types": [
        {"name": "a", "count": 10, "channels": ["x0"], "feature_signal": 1.0},
        {"name": "b", "count": 6, "channels": ["y0", "y1"]}
      ],
      "edge_types": [
        {"name": "ab", "src": "a", "dst": "b", "expected_degree": 1.0},
        {"name": "ba", "src": "b", "dst": "a", "expected_degree": 1.0},
        {"name": "aa", "src": "a", "dst": "a", "expected_degree": 1.0}
      ],
      "labels": {"node_type": "a", "classes": 2}
    })");
    HeteroGraph g = synth_graph(spec);
    ModelConfig mc;
    mc.layers = 2;
    mc.hidden = 3;
    mc.classes = 2;
    mc.param_seed = seed + 2;
    std::unique_ptr<Model> model = build_model(ModelKind::kRgcnBaseline, g, mc);
    std::vector<int64_t> rows;
    std::vector<int32_t> labels;
    for (const auto& [v, c] : g.labels) {
      rows.push_back(v);
      labels.push_back(c);
    }
    GradCheckReport rep = model_grad_check(*model, rows, labels);
    printf("rgcn end-to-end: %zu parameters, max relative error %.3e (<= 1e-4 required)\n",
           model->params().size(), rep.max_rel_err);
    ok = ok && rep.max_rel_err <= 1e-4;
  }

  if (!ok) throw std::runtime_error("gradient checks failed");
  printf("all gradient suites passed\n");
  return 0;
}

struct PlotDataArgs {
  std::vector<int64_t> relation_counts{2, 6, 12, 24, 40};
  int64_t epochs = 30;
  double lr = 0.05;
  uint64_t seed = 0;
  std::string out_path;
};

// relation-count sweep on synthetic graphs; emits the trend CSV
int run_plot_data(const PlotDataArgs& a) {
  print_resolved("plot-data", {{"relations", a.relation_counts}, {"epochs", a.epochs},
                               {"lr", a.lr}, {"seed", a.seed}, {"out", a.out_path}});
  std::vector<RunReport> reports;
  for (int64_t n_rel : a.relation_counts) {
    SchemaSpec spec;
    spec.seed = a.seed + static_cast<uint64_t>(n_rel);
    spec.node_types = {{"u", 120, {"u0", "u1", "u2", "u3"}, 2.0},
                       {"v", 80, {"v0", "v1", "v2"}, 0.0}};
    for (int64_t r = 0; r < n_rel; ++r) {
      EdgeTypeSpec et;
      et.name = "r" + std::to_string(r);
      et.src = r % 2 == 0 ? "u" : "v";
      et.dst = r % 2 == 0 ? "v" : "u";
      et.expected_degree = 2.0;
      spec.edge_types.push_back(et);
    }
    spec.labels = LabelSpec{"u", 3, -1};
    HeteroGraph g = synth_graph(spec);

    for (const char* model : {"rgcn", "bg-hgnn"}) {
      TrainArgs ta;
      ta.mf.model = model;
      ta.mf.hidden = 16;
      ta.mf.heads = 2;
      ta.mf.fuse_dim = 16;
      ta.mf.feat_dim = 8;
      ta.mf.type_dim = 4;
      ta.mf.edge_type_dim = 4;
      ta.epochs = a.epochs;
      ta.lr = a.lr;
      ta.seed = a.seed;
      ta.trials = 1;
      TrainConfig tc = to_train_config(ta);
      RunReport rep = train(g, tc);
      rep.dataset_tag = "synthetic_r" + std::to_string(n_rel);
      reports.push_back(std::move(rep));
      std::cout << rep.model << " |R|=" << n_rel << " params=" << reports.back().param_count
                << " micro_f1=" << reports.back().micro_f1
                << " mean_epoch_ms=" << reports.back().mean_epoch_ms << "\n";
    }
  }
  std::string csv = emit_trend_csv(reports);
  if (!a.out_path.empty()) write_text(a.out_path, csv);
  else std::cout << csv;
  return 0;
}

struct CollapseLabArgs {
  int64_t nodes = 2000;
  int64_t seeds = 5;
  uint64_t seed = 0;
  std::string out_path;
};

int run_collapse_lab(const CollapseLabArgs& a) {
  print_resolved("collapse-lab", {{"nodes", a.nodes}, {"seeds", a.seeds}, {"seed", a.seed}});
  json arr = json::array();
  int64_t wins = 0;
  for (int64_t s = 0; s < a.seeds; ++s) {
    CollapseReport rep = collapse_experiment(a.nodes, a.seed + static_cast<uint64_t>(s));
    arr.push_back(json::parse(rep.to_json_text()));
    wins += rep.acc_channelized > rep.acc_mean_combine;
    std::cout << "seed " << rep.seed << ": mean-combine acc " << rep.acc_mean_combine
              << ", channelized acc " << rep.acc_channelized << ", {r2,r3} statistic mean "
              << rep.confusion_stat_mean << "\n";
  }
  std::cout << "channelized wins on " << wins << "/" << a.seeds << " seeds\n";
  if (!a.out_path.empty()) write_text(a.out_path, arr.dump(2) + "\n");
  return 0;
}

// JSON config file: top-level object of long-flag-name -> value, injected
// as defaults before the command line so explicit flags win
std::vector<std::string> config_file_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str());
  if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : j.items()) {
    std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& item : value) {
        tokens.push_back(flag);
        tokens.push_back(item.is_string() ? item.get<std::string>() : item.dump());
      }
    } else {
      tokens.push_back(flag);
      tokens.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  return tokens;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heterogeneous graph learning workbench: fused-feature GNN and its"
               " relation-specific baseline"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic heterogeneous graph");
  synth_cmd->add_option("--spec", synth_args.spec_path, "schema spec JSON")->required();
  synth_cmd->add_option("--seed", synth_args.seed, "override the spec's seed");
  synth_cmd->add_option("--out", synth_args.out_dir, "output directory")->required();

  PreprocessArgs pre_args;
  CLI::App* pre_cmd = app.add_subcommand("preprocess", "project features and build type encodings");
  pre_cmd->add_option("--graph", pre_args.graph_dir, "graph directory")->required();
  pre_cmd->add_option("--out", pre_args.out_dir, "output directory")->required();
  pre_cmd->add_option("--feat-seed", pre_args.feat_seed, "seed for featureless initialization");
  pre_cmd->add_flag("--add-inverse", pre_args.add_inverse, "add reversed edges as __inv relations");
  add_model_flags(pre_cmd, pre_args.mf);

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--graph", train_args.graph_dir, "graph directory")->required();
  train_cmd->add_option("--task", train_args.task, "task kind")
      ->check(CLI::IsMember({"node", "link"}));
  train_cmd->add_option("--epochs", train_args.epochs, "epochs per trial");
  train_cmd->add_option("--lr", train_args.lr, "learning rate");
  train_cmd->add_option("--seed", train_args.seed, "base seed");
  train_cmd->add_option("--trials", train_args.trials, "independent trials");
  train_cmd->add_flag("--parallel", train_args.parallel, "run trials concurrently");
  train_cmd->add_option("--optimizer", train_args.optimizer, "optimizer")
      ->check(CLI::IsMember({"gd", "momentum"}));
  train_cmd->add_option("--momentum", train_args.momentum, "momentum coefficient");
  train_cmd->add_option("--feat-seed", train_args.feat_seed, "seed for featureless initialization");
  train_cmd->add_flag("--add-inverse", train_args.add_inverse, "add reversed edges");
  train_cmd->add_option("--target-rel", train_args.target_rel, "link task target relation");
  train_cmd->add_option("--link-mode", train_args.link_mode, "negative sampling mode")
      ->check(CLI::IsMember({"two-hop", "random-hop"}));
  train_cmd->add_option("--report", train_args.report_path, "write per-trial reports JSON");
  train_cmd->add_option("--dataset-tag", train_args.dataset_tag, "tag used by trend analysis");
  add_model_flags(train_cmd, train_args.mf);

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "summarize run reports");
  eval_cmd->add_option("--report", eval_args.report_paths, "report JSON files")->required();

  AnalyzeArgs an_args;
  CLI::App* an_cmd = app.add_subcommand("analyze", "analytical harnesses");
  an_cmd->add_option("--what", an_args.what, "analysis to run")
      ->check(CLI::IsMember({"params", "collapse", "expressiveness", "attention", "trend"}))
      ->required();
  an_cmd->add_option("--graph", an_args.graph_dir, "graph directory");
  an_cmd->add_option("--nodes", an_args.nodes, "collapse: node count");
  an_cmd->add_option("--seeds", an_args.seeds, "seed count");
  an_cmd->add_option("--seed", an_args.seed, "base seed");
  an_cmd->add_option("--pairs", an_args.pairs, "expressiveness: graph pairs per seed");
  an_cmd->add_option("--threshold", an_args.threshold, "attention binarization threshold");
  an_cmd->add_option("--max-hops", an_args.max_hops, "meta-path hop limit");
  an_cmd->add_option("--epochs", an_args.epochs, "attention: training epochs");
  an_cmd->add_option("--lr", an_args.lr, "attention: learning rate");
  an_cmd->add_option("--optimizer", an_args.optimizer, "attention: optimizer")
      ->check(CLI::IsMember({"gd", "momentum"}));
  an_cmd->add_option("--reports", an_args.report_paths, "trend: report JSON files");
  an_cmd->add_option("--out", an_args.out_path, "output file (default stdout)");
  an_cmd->add_option("--format", an_args.out_format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));
  add_model_flags(an_cmd, an_args.mf);

  CollapseLabArgs cl_args;
  CLI::App* cl_cmd = app.add_subcommand("collapse-lab", "relation-collapse experiment");
  cl_cmd->add_option("--nodes", cl_args.nodes, "node count");
  cl_cmd->add_option("--seeds", cl_args.seeds, "seed count");
  cl_cmd->add_option("--seed", cl_args.seed, "base seed");
  cl_cmd->add_option("--out", cl_args.out_path, "write JSON report");

  uint64_t gc_seed = 0;
  CLI::App* gc_cmd = app.add_subcommand("grad-check", "run the gradient verification suites");
  gc_cmd->add_option("--seed", gc_seed, "seed");

  PlotDataArgs pd_args;
  CLI::App* pd_cmd = app.add_subcommand("plot-data", "relation-count sweep CSV for plotting");
  pd_cmd->add_option("--relations", pd_args.relation_counts, "relation counts to sweep");
  pd_cmd->add_option("--epochs", pd_args.epochs, "epochs per run");
  pd_cmd->add_option("--lr", pd_args.lr, "learning rate");
  pd_cmd->add_option("--seed", pd_args.seed, "seed");
  pd_cmd->add_option("--out", pd_args.out_path, "output CSV path");

  // --config FILE on any subcommand injects defaults; explicit flags win
  std::vector<std::string> raw(argv + 1, argv + argc);
  std::vector<std::string> full;
  std::string config_path;
  for (size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == "--config") {
      if (i + 1 >= raw.size()) {
        std::cerr << "error: --config needs a file argument\n";
        return 1;
      }
      config_path = raw[++i];
      continue;
    }
    full.push_back(raw[i]);
  }
  try {
    if (!config_path.empty()) {
      if (full.empty()) throw std::runtime_error("--config requires a subcommand");
      std::vector<std::string> injected = config_file_tokens(config_path);
      full.insert(full.begin() + 1, injected.begin(), injected.end());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  // later occurrences (explicit flags) override injected config values
  for (CLI::App* sub : app.get_subcommands({}))
    for (CLI::Option* opt : sub->get_options())
      if (opt->get_expected_min() > 0 && opt->get_items_expected_max() == 1)
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::vector<const char*> cargv;
  std::string prog = "bghgnn";
  cargv.push_back(prog.c_str());
  for (const std::string& s : full) cargv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message and usage hint to stderr
    return 1;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth_args);
    if (pre_cmd->parsed()) return run_preprocess(pre_args);
    if (train_cmd->parsed()) return run_train(train_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (an_cmd->parsed()) return run_analyze(an_args);
    if (cl_cmd->parsed()) return run_collapse_lab(cl_args);
    if (gc_cmd->parsed()) return run_grad_check(gc_seed);
    if (pd_cmd->parsed()) return run_plot_data(pd_args);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
