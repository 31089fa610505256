#include "bghgnn/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "bghgnn/rng.hpp"

namespace bghgnn {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  if (!in) fail(p.filename().string() + ": cannot open file in " + p.parent_path().string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

int64_t parse_id(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) fail(where + ": trailing characters in integer '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail(where + ": not an integer: '" + s + "'");
  } catch (const std::out_of_range&) {
    fail(where + ": integer out of range: '" + s + "'");
  }
}

}  // namespace

void HeteroGraph::finalize() {
  const int64_t m = num_node_types();
  if (node_count != static_cast<int64_t>(node_type_of.size()))
    fail("graph: node_type_of size != node_count");
  if (edges.size() != edge_type_of.size())
    fail("graph: every edge needs exactly one edge type");
  if (static_cast<int64_t>(features.size()) != m)
    fail("graph: one feature table per node type required");

  nodes_by_type.assign(static_cast<size_t>(m), {});
  type_local_index.assign(static_cast<size_t>(node_count), 0);
  for (int64_t v = 0; v < node_count; ++v) {
    int32_t t = node_type_of[static_cast<size_t>(v)];
    if (t < 0 || t >= m) fail("graph: node " + std::to_string(v) + " has invalid type id");
    type_local_index[static_cast<size_t>(v)] = static_cast<int64_t>(nodes_by_type[static_cast<size_t>(t)].size());
    nodes_by_type[static_cast<size_t>(t)].push_back(v);
  }
  for (int64_t t = 0; t < m; ++t) {
    const FeatureTable& ft = features[static_cast<size_t>(t)];
    int64_t want_rows = static_cast<int64_t>(nodes_by_type[static_cast<size_t>(t)].size());
    int64_t want_cols = static_cast<int64_t>(ft.channels.size());
    if (ft.values.ndim() != 2 || ft.values.rows() != want_rows || ft.values.cols() != want_cols)
      fail("graph: feature table for type '" + node_type_names[static_cast<size_t>(t)] +
           "' must be " + std::to_string(want_rows) + " x " + std::to_string(want_cols));
    if (!std::is_sorted(ft.channels.begin(), ft.channels.end()))
      fail("graph: channels of type '" + node_type_names[static_cast<size_t>(t)] + "' must be sorted");
    if (std::adjacent_find(ft.channels.begin(), ft.channels.end()) != ft.channels.end())
      fail("graph: duplicate channel in type '" + node_type_names[static_cast<size_t>(t)] + "'");
  }

  const int64_t n_rel = num_relations();
  std::set<std::tuple<int32_t, int64_t, int64_t>> seen;
  for (size_t e = 0; e < edges.size(); ++e) {
    auto [u, v] = edges[e];
    if (u < 0 || u >= node_count || v < 0 || v >= node_count)
      fail("graph: edge " + std::to_string(e) + " has endpoint out of range");
    int32_t t = edge_type_of[e];
    if (t < 0 || t >= n_rel) fail("graph: edge " + std::to_string(e) + " has invalid type id");
    if (!seen.insert({t, u, v}).second)
      fail("graph: exact duplicate edge (" + std::to_string(u) + " -> " + std::to_string(v) +
           ", type " + edge_type_names[static_cast<size_t>(t)] + ")");
  }

  in_offsets.assign(static_cast<size_t>(node_count) + 1, 0);
  for (const auto& [u, v] : edges) {
    (void)u;
    ++in_offsets[static_cast<size_t>(v) + 1];
  }
  for (int64_t v = 0; v < node_count; ++v)
    in_offsets[static_cast<size_t>(v) + 1] += in_offsets[static_cast<size_t>(v)];
  in_src.assign(edges.size(), 0);
  in_etype.assign(edges.size(), 0);
  {
    std::vector<int64_t> cur(in_offsets.begin(), in_offsets.end() - 1);
    for (size_t e = 0; e < edges.size(); ++e) {
      int64_t slot = cur[static_cast<size_t>(edges[e].second)]++;
      in_src[static_cast<size_t>(slot)] = edges[e].first;
      in_etype[static_cast<size_t>(slot)] = edge_type_of[e];
    }
  }

  for (const auto& [v, c] : labels) {
    if (v < 0 || v >= node_count) fail("graph: label for invalid node id " + std::to_string(v));
    if (c < 0) fail("graph: negative class id");
  }
  for (const std::vector<int64_t>* part : {&splits.train, &splits.val, &splits.test})
    for (int64_t v : *part)
      if (v < 0 || v >= node_count) fail("graph: split contains invalid node id " + std::to_string(v));
}

// ---------------- load / write ----------------

HeteroGraph load_graph(const fs::path& dir) {
  HeteroGraph g;
  fs::path nodes_path = dir / "nodes.tsv";
  fs::path edges_path = dir / "edges.tsv";
  if (!fs::exists(nodes_path)) fail("nodes.tsv: missing from " + dir.string());
  if (!fs::exists(edges_path)) fail("edges.tsv: missing from " + dir.string());

  std::map<std::string, int32_t> node_type_id;
  std::map<std::string, int32_t> edge_type_id;
  std::vector<std::vector<std::pair<std::string, double>>> raw_feats;  // per node

  {
    std::vector<std::string> lines = read_lines(nodes_path);
    if (lines.empty() || split_tabs(lines[0]) != std::vector<std::string>{"node_id", "type_name", "feat_json"})
      fail("nodes.tsv: expected header 'node_id\ttype_name\tfeat_json'");
    std::set<int64_t> seen_ids;
    for (size_t ln = 1; ln < lines.size(); ++ln) {
      if (lines[ln].empty() && ln + 1 == lines.size()) break;  // trailing newline
      const std::string where = "nodes.tsv line " + std::to_string(ln + 1);
      std::vector<std::string> f = split_tabs(lines[ln]);
      if (f.size() != 3) fail(where + ": expected 3 tab-separated fields");
      int64_t id = parse_id(f[0], where);
      if (!seen_ids.insert(id).second) fail(where + ": duplicate node id " + std::to_string(id));
      if (id != static_cast<int64_t>(ln) - 1)
        fail(where + ": node ids must be dense 0..N-1 in file order, got " + std::to_string(id));
      auto [it, inserted] = node_type_id.try_emplace(f[1], static_cast<int32_t>(g.node_type_names.size()));
      if (inserted) g.node_type_names.push_back(f[1]);
      g.node_type_of.push_back(it->second);
      json feat = json::parse(f[2], nullptr, false);
      if (feat.is_discarded() || !feat.is_object()) fail(where + ": feat_json must be a JSON object");
      std::vector<std::pair<std::string, double>> kv;
      for (auto& [k, v] : feat.items()) {
        if (!v.is_number()) fail(where + ": feature '" + k + "' is not a number");
        kv.emplace_back(k, v.get<double>());
      }
      std::sort(kv.begin(), kv.end());
      raw_feats.push_back(std::move(kv));
      ++g.node_count;
    }
  }

  // per-type channel sets come from the first node of each type
  g.features.resize(g.node_type_names.size());
  std::vector<int64_t> rows_seen(g.node_type_names.size(), 0);
  for (int64_t v = 0; v < g.node_count; ++v)
    ++rows_seen[static_cast<size_t>(g.node_type_of[static_cast<size_t>(v)])];
  std::vector<int64_t> row_cursor(g.node_type_names.size(), 0);
  std::vector<bool> channel_known(g.node_type_names.size(), false);
  for (int64_t v = 0; v < g.node_count; ++v) {
    size_t t = static_cast<size_t>(g.node_type_of[static_cast<size_t>(v)]);
    FeatureTable& ft = g.features[t];
    const auto& kv = raw_feats[static_cast<size_t>(v)];
    if (!channel_known[t]) {
      for (const auto& [k, _] : kv) ft.channels.push_back(k);
      ft.values = Tensor({rows_seen[t], static_cast<int64_t>(ft.channels.size())});
      channel_known[t] = true;
    }
    if (kv.size() != ft.channels.size())
      fail("nodes.tsv: node " + std::to_string(v) + " has a different channel set than its type");
    for (size_t j = 0; j < kv.size(); ++j) {
      if (kv[j].first != ft.channels[j])
        fail("nodes.tsv: node " + std::to_string(v) + " has a different channel set than its type");
      ft.values(row_cursor[t], static_cast<int64_t>(j)) = kv[j].second;
    }
    ++row_cursor[t];
  }

  {
    std::vector<std::string> lines = read_lines(edges_path);
    if (lines.empty() || split_tabs(lines[0]) != std::vector<std::string>{"src_id", "dst_id", "edge_type_name"})
      fail("edges.tsv: expected header 'src_id\tdst_id\tedge_type_name'");
    for (size_t ln = 1; ln < lines.size(); ++ln) {
      if (lines[ln].empty() && ln + 1 == lines.size()) break;
      const std::string where = "edges.tsv line " + std::to_string(ln + 1);
      std::vector<std::string> f = split_tabs(lines[ln]);
      if (f.size() != 3) fail(where + ": expected 3 tab-separated fields");
      int64_t u = parse_id(f[0], where);
      int64_t v = parse_id(f[1], where);
      if (u < 0 || u >= g.node_count) fail(where + ": dangling src id " + std::to_string(u));
      if (v < 0 || v >= g.node_count) fail(where + ": dangling dst id " + std::to_string(v));
      auto [it, inserted] = edge_type_id.try_emplace(f[2], static_cast<int32_t>(g.edge_type_names.size()));
      if (inserted) g.edge_type_names.push_back(f[2]);
      g.edges.emplace_back(u, v);
      g.edge_type_of.push_back(it->second);
    }
  }

  if (fs::exists(dir / "labels.tsv")) {
    std::vector<std::string> lines = read_lines(dir / "labels.tsv");
    if (lines.empty() || split_tabs(lines[0]) != std::vector<std::string>{"node_id", "class_id"})
      fail("labels.tsv: expected header 'node_id\tclass_id'");
    for (size_t ln = 1; ln < lines.size(); ++ln) {
      if (lines[ln].empty() && ln + 1 == lines.size()) break;
      const std::string where = "labels.tsv line " + std::to_string(ln + 1);
      std::vector<std::string> f = split_tabs(lines[ln]);
      if (f.size() != 2) fail(where + ": expected 2 tab-separated fields");
      int64_t v = parse_id(f[0], where);
      if (v < 0 || v >= g.node_count) fail(where + ": label for unknown node " + std::to_string(v));
      if (g.labels.count(v)) fail(where + ": duplicate label for node " + std::to_string(v));
      g.labels[v] = static_cast<int32_t>(parse_id(f[1], where));
    }
  }

  if (fs::exists(dir / "splits.json")) {
    std::ifstream in(dir / "splits.json");
    json sp = json::parse(in, nullptr, false);
    if (sp.is_discarded() || !sp.is_object()) fail("splits.json: not a JSON object");
    auto get_part = [&](const char* key) {
      std::vector<int64_t> ids;
      if (sp.contains(key))
        for (const auto& x : sp[key]) ids.push_back(x.get<int64_t>());
      return ids;
    };
    g.splits.train = get_part("train");
    g.splits.val = get_part("val");
    g.splits.test = get_part("test");
    g.splits.present = true;
  }

  g.finalize();
  return g;
}

void write_graph(const HeteroGraph& g, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "nodes.tsv", std::ios::binary);
    if (!out) fail("nodes.tsv: cannot write in " + dir.string());
    out << "node_id\ttype_name\tfeat_json\n";
    for (int64_t v = 0; v < g.node_count; ++v) {
      size_t t = static_cast<size_t>(g.node_type_of[static_cast<size_t>(v)]);
      const FeatureTable& ft = g.features[t];
      json feat = json::object();
      int64_t row = g.type_local_index[static_cast<size_t>(v)];
      for (size_t j = 0; j < ft.channels.size(); ++j)
        feat[ft.channels[j]] = ft.values(row, static_cast<int64_t>(j));
      out << v << '\t' << g.node_type_names[t] << '\t' << feat.dump() << '\n';
    }
    if (!out) fail("nodes.tsv: write failure in " + dir.string());
  }
  {
    std::ofstream out(dir / "edges.tsv", std::ios::binary);
    if (!out) fail("edges.tsv: cannot write in " + dir.string());
    out << "src_id\tdst_id\tedge_type_name\n";
    for (size_t e = 0; e < g.edges.size(); ++e)
      out << g.edges[e].first << '\t' << g.edges[e].second << '\t'
          << g.edge_type_names[static_cast<size_t>(g.edge_type_of[e])] << '\n';
    if (!out) fail("edges.tsv: write failure in " + dir.string());
  }
  if (!g.labels.empty()) {
    std::ofstream out(dir / "labels.tsv", std::ios::binary);
    out << "node_id\tclass_id\n";
    for (const auto& [v, c] : g.labels) out << v << '\t' << c << '\n';
    if (!out) fail("labels.tsv: write failure in " + dir.string());
  }
  if (g.splits.present) {
    json sp;
    sp["train"] = g.splits.train;
    sp["val"] = g.splits.val;
    sp["test"] = g.splits.test;
    std::ofstream out(dir / "splits.json", std::ios::binary);
    out << sp.dump(2) << '\n';
    if (!out) fail("splits.json: write failure in " + dir.string());
  }
}

// ---------------- schema spec ----------------

SchemaSpec SchemaSpec::from_json_text(const std::string& text) {
  json j = json::parse(text);
  SchemaSpec s;
  s.seed = j.value("seed", 0ULL);
  for (const auto& nt : j.at("node_types")) {
    NodeTypeSpec n;
    n.name = nt.at("name").get<std::string>();
    n.count = nt.at("count").get<int64_t>();
    if (nt.contains("channels"))
      for (const auto& c : nt["channels"]) n.channels.push_back(c.get<std::string>());
    n.feature_signal = nt.value("feature_signal", 0.0);
    s.node_types.push_back(std::move(n));
  }
  if (j.contains("edge_types"))
    for (const auto& et : j["edge_types"]) {
      EdgeTypeSpec e;
      e.name = et.at("name").get<std::string>();
      e.src = et.at("src").get<std::string>();
      e.dst = et.at("dst").get<std::string>();
      e.expected_degree = et.value("expected_degree", 0.0);
      e.count = et.value("count", static_cast<int64_t>(-1));
      e.planted = et.value("planted", false);
      s.edge_types.push_back(std::move(e));
    }
  if (j.contains("labels") && !j["labels"].is_null()) {
    LabelSpec l;
    l.node_type = j["labels"].at("node_type").get<std::string>();
    l.classes = j["labels"].at("classes").get<int64_t>();
    l.labeled_count = j["labels"].value("labeled_count", static_cast<int64_t>(-1));
    s.labels = std::move(l);
  }
  return s;
}

SchemaSpec SchemaSpec::from_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) fail("schema spec: cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string SchemaSpec::to_json_text() const {
  json j;
  j["seed"] = seed;
  j["node_types"] = json::array();
  for (const auto& n : node_types) {
    json nt{{"name", n.name}, {"count", n.count}, {"channels", n.channels}};
    if (n.feature_signal != 0.0) nt["feature_signal"] = n.feature_signal;
    j["node_types"].push_back(nt);
  }
  j["edge_types"] = json::array();
  for (const auto& e : edge_types) {
    json et{{"name", e.name}, {"src", e.src}, {"dst", e.dst}};
    if (e.count >= 0) et["count"] = e.count;
    else et["expected_degree"] = e.expected_degree;
    if (e.planted) et["planted"] = true;
    j["edge_types"].push_back(et);
  }
  if (labels) {
    j["labels"] = {{"node_type", labels->node_type}, {"classes", labels->classes}};
    if (labels->labeled_count >= 0) j["labels"]["labeled_count"] = labels->labeled_count;
  }
  return j.dump(2);
}

// ---------------- synth ----------------

HeteroGraph synth_graph(const SchemaSpec& spec) {
  std::map<std::string, int32_t> type_id;
  for (size_t t = 0; t < spec.node_types.size(); ++t) {
    const NodeTypeSpec& nt = spec.node_types[t];
    if (nt.count <= 0) fail("synth: node type '" + nt.name + "' needs a positive count");
    if (!type_id.try_emplace(nt.name, static_cast<int32_t>(t)).second)
      fail("synth: duplicate node type '" + nt.name + "'");
  }
  for (const EdgeTypeSpec& et : spec.edge_types) {
    if (!type_id.count(et.src) || !type_id.count(et.dst))
      fail("synth: edge type '" + et.name + "' references an absent node type");
    if (et.count < 0 && et.expected_degree <= 0.0)
      fail("synth: edge type '" + et.name + "' needs count or expected_degree");
    if (et.planted && !spec.labels)
      fail("synth: planted edge type '" + et.name + "' requires labels");
  }
  if (spec.labels) {
    if (!type_id.count(spec.labels->node_type))
      fail("synth: labels reference absent node type '" + spec.labels->node_type + "'");
    if (spec.labels->classes < 1) fail("synth: classes must be >= 1");
  }

  Rng rng(spec.seed);
  HeteroGraph g;
  const int64_t classes = spec.labels ? spec.labels->classes : 0;

  for (const NodeTypeSpec& nt : spec.node_types) {
    g.node_type_names.push_back(nt.name);
    for (int64_t i = 0; i < nt.count; ++i)
      g.node_type_of.push_back(static_cast<int32_t>(g.node_type_names.size() - 1));
    g.node_count += nt.count;
  }

  // balanced latent groups drive both planted wiring and feature shifts
  std::vector<int32_t> group(static_cast<size_t>(g.node_count), 0);
  std::vector<std::vector<std::vector<int64_t>>> by_type_group;  // [type][group] -> node ids
  if (spec.labels) {
    int64_t base = 0;
    by_type_group.resize(spec.node_types.size());
    for (size_t t = 0; t < spec.node_types.size(); ++t) {
      const int64_t cnt = spec.node_types[t].count;
      std::vector<int64_t> perm = rng.permutation(cnt);
      by_type_group[t].resize(static_cast<size_t>(classes));
      for (int64_t i = 0; i < cnt; ++i) {
        int32_t gcls = static_cast<int32_t>(i % classes);
        int64_t node = base + perm[static_cast<size_t>(i)];
        group[static_cast<size_t>(node)] = gcls;
        by_type_group[t][static_cast<size_t>(gcls)].push_back(node);
      }
      for (auto& ids : by_type_group[t]) std::sort(ids.begin(), ids.end());
      base += cnt;
    }
  }

  {
    int64_t base = 0;
    for (const NodeTypeSpec& nt : spec.node_types) {
      FeatureTable ft;
      ft.channels = nt.channels;
      std::sort(ft.channels.begin(), ft.channels.end());
      if (std::adjacent_find(ft.channels.begin(), ft.channels.end()) != ft.channels.end())
        fail("synth: duplicate channel in node type '" + nt.name + "'");
      ft.values = Tensor({nt.count, static_cast<int64_t>(ft.channels.size())});
      for (int64_t i = 0; i < nt.count; ++i)
        for (int64_t j = 0; j < static_cast<int64_t>(ft.channels.size()); ++j)
          ft.values(i, j) = rng.uniform(-1.0, 1.0);
      if (nt.feature_signal != 0.0 && spec.labels && !ft.channels.empty())
        for (int64_t i = 0; i < nt.count; ++i) {
          int64_t ch = group[static_cast<size_t>(base + i)] % static_cast<int64_t>(ft.channels.size());
          ft.values(i, ch) += nt.feature_signal;
        }
      g.features.push_back(std::move(ft));
      base += nt.count;
    }
  }

  {
    int64_t base = 0;
    std::vector<int64_t> type_base(spec.node_types.size());
    for (size_t t = 0; t < spec.node_types.size(); ++t) {
      type_base[t] = base;
      base += spec.node_types[t].count;
    }
    for (const EdgeTypeSpec& et : spec.edge_types) {
      int32_t et_id = static_cast<int32_t>(g.edge_type_names.size());
      g.edge_type_names.push_back(et.name);
      size_t src_t = static_cast<size_t>(type_id[et.src]);
      size_t dst_t = static_cast<size_t>(type_id[et.dst]);
      int64_t src_cnt = spec.node_types[src_t].count;
      int64_t dst_cnt = spec.node_types[dst_t].count;
      int64_t want = et.count >= 0 ? et.count
                                   : std::max<int64_t>(1, llround(et.expected_degree * static_cast<double>(src_cnt)));
      std::set<std::pair<int64_t, int64_t>> used;
      for (int64_t i = 0; i < want; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
          int64_t u = type_base[src_t] + rng.uniform_int(src_cnt);
          int64_t v;
          if (et.planted) {
            const auto& pool = by_type_group[dst_t][static_cast<size_t>(group[static_cast<size_t>(u)])];
            if (pool.empty()) fail("synth: infeasible planted edge type '" + et.name + "' (empty group)");
            v = pool[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(pool.size())))];
          } else {
            v = type_base[dst_t] + rng.uniform_int(dst_cnt);
          }
          if (u == v) continue;
          if (!used.emplace(u, v).second) continue;
          g.edges.emplace_back(u, v);
          g.edge_type_of.push_back(et_id);
          placed = true;
        }
        if (!placed)
          fail("synth: infeasible edge type '" + et.name + "' (cannot place " + std::to_string(want) +
               " distinct edges)");
      }
    }
  }

  if (spec.labels) {
    size_t lt = static_cast<size_t>(type_id[spec.labels->node_type]);
    int64_t base = 0;
    for (size_t t = 0; t < lt; ++t) base += spec.node_types[t].count;
    int64_t cnt = spec.node_types[lt].count;
    int64_t want = spec.labels->labeled_count >= 0 ? spec.labels->labeled_count : cnt;
    if (want > cnt) fail("synth: labeled_count exceeds node count of the labeled type");
    std::vector<int64_t> perm = rng.permutation(cnt);
    std::vector<int64_t> labeled;
    for (int64_t i = 0; i < want; ++i) labeled.push_back(base + perm[static_cast<size_t>(i)]);
    std::sort(labeled.begin(), labeled.end());
    for (int64_t v : labeled) g.labels[v] = group[static_cast<size_t>(v)];

    // 80/10/10 split over the labeled nodes
    std::vector<int64_t> order = labeled;
    rng.shuffle(order);
    int64_t n = static_cast<int64_t>(order.size());
    int64_t n_train = std::max<int64_t>(1, llround(0.8 * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    int64_t n_val = (n - n_train) / 2;
    g.splits.train.assign(order.begin(), order.begin() + n_train);
    g.splits.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    g.splits.test.assign(order.begin() + n_train + n_val, order.end());
    std::sort(g.splits.train.begin(), g.splits.train.end());
    std::sort(g.splits.val.begin(), g.splits.val.end());
    std::sort(g.splits.test.begin(), g.splits.test.end());
    g.splits.present = true;
  }

  g.finalize();
  return g;
}

// ---------------- queries / transforms ----------------

std::vector<int64_t> neighbors(const HeteroGraph& g, int64_t v, std::optional<int32_t> rel) {
  if (v < 0 || v >= g.node_count) fail("neighbors: invalid node id " + std::to_string(v));
  if (rel && (*rel < 0 || *rel >= g.num_relations()))
    fail("neighbors: invalid edge type id " + std::to_string(*rel));
  std::vector<int64_t> out;
  for (int64_t p = g.in_offsets[static_cast<size_t>(v)]; p < g.in_offsets[static_cast<size_t>(v) + 1]; ++p) {
    if (rel && g.in_etype[static_cast<size_t>(p)] != *rel) continue;
    out.push_back(g.in_src[static_cast<size_t>(p)]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

HeteroGraph init_featureless(const HeteroGraph& g, int64_t dim, uint64_t seed) {
  if (dim <= 0) fail("init_featureless: dim must be positive");
  HeteroGraph out = g;
  Rng rng(seed);
  int64_t width = static_cast<int64_t>(std::to_string(dim - 1).size());
  for (size_t t = 0; t < out.features.size(); ++t) {
    FeatureTable& ft = out.features[t];
    if (!ft.channels.empty()) continue;
    for (int64_t j = 0; j < dim; ++j) {
      std::string name = std::to_string(j);
      while (static_cast<int64_t>(name.size()) < width) name.insert(name.begin(), '0');
      ft.channels.push_back("rand" + name);
    }
    int64_t rows = static_cast<int64_t>(out.nodes_by_type[t].size());
    ft.values = Tensor({rows, dim});
    for (int64_t i = 0; i < rows; ++i)
      for (int64_t j = 0; j < dim; ++j) ft.values(i, j) = rng.uniform(-1.0, 1.0);
  }
  out.finalize();
  return out;
}

HeteroGraph add_inverse_edges(const HeteroGraph& g) {
  HeteroGraph out = g;
  int32_t n_rel = static_cast<int32_t>(g.num_relations());
  for (int32_t t = 0; t < n_rel; ++t)
    out.edge_type_names.push_back(g.edge_type_names[static_cast<size_t>(t)] + "__inv");
  size_t n_edges = g.edges.size();
  for (size_t e = 0; e < n_edges; ++e) {
    out.edges.emplace_back(g.edges[e].second, g.edges[e].first);
    out.edge_type_of.push_back(g.edge_type_of[e] + n_rel);
  }
  out.finalize();
  return out;
}

bool graphs_equal(const HeteroGraph& a, const HeteroGraph& b) {
  if (a.node_count != b.node_count || a.node_type_of != b.node_type_of || a.edges != b.edges ||
      a.edge_type_of != b.edge_type_of || a.node_type_names != b.node_type_names ||
      a.edge_type_names != b.edge_type_names || a.labels != b.labels)
    return false;
  if (a.splits.present != b.splits.present || a.splits.train != b.splits.train ||
      a.splits.val != b.splits.val || a.splits.test != b.splits.test)
    return false;
  if (a.features.size() != b.features.size()) return false;
  for (size_t t = 0; t < a.features.size(); ++t) {
    if (a.features[t].channels != b.features[t].channels) return false;
    if (!a.features[t].values.same_shape(b.features[t].values)) return false;
    if (a.features[t].values.vec() != b.features[t].values.vec()) return false;
  }
  return true;
}

}  // namespace bghgnn
