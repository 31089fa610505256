#include "bghgnn/attr_fusion.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace bghgnn {

int64_t UnifiedSchema::channel_index(const std::string& name) const {
  auto it = std::lower_bound(channels.begin(), channels.end(), name);
  if (it == channels.end() || *it != name) return -1;
  return static_cast<int64_t>(it - channels.begin());
}

UnifiedSchema build_unified_schema(const HeteroGraph& g, double sentinel) {
  UnifiedSchema s;
  s.sentinel = sentinel;
  std::set<std::string> all;
  for (const FeatureTable& ft : g.features) all.insert(ft.channels.begin(), ft.channels.end());
  s.channels.assign(all.begin(), all.end());  // std::set iterates sorted
  s.type_col_to_unified.resize(g.features.size());
  for (size_t t = 0; t < g.features.size(); ++t) {
    const FeatureTable& ft = g.features[t];
    s.type_col_to_unified[t].resize(ft.channels.size());
    for (size_t j = 0; j < ft.channels.size(); ++j) {
      int64_t u = s.channel_index(ft.channels[j]);
      if (u < 0) throw std::logic_error("unified schema: lost channel " + ft.channels[j]);
      s.type_col_to_unified[t][j] = u;
    }
  }
  return s;
}

UnifiedFeatures project_features(const HeteroGraph& g, const UnifiedSchema& s) {
  if (s.type_col_to_unified.size() != g.features.size())
    throw std::invalid_argument("project_features: schema was built from a different graph");
  for (size_t t = 0; t < g.features.size(); ++t) {
    if (s.type_col_to_unified[t].size() != g.features[t].channels.size())
      throw std::invalid_argument("project_features: unknown channel layout for type " +
                                  g.node_type_names[t]);
    for (size_t j = 0; j < g.features[t].channels.size(); ++j)
      if (s.channel_index(g.features[t].channels[j]) != s.type_col_to_unified[t][j])
        throw std::invalid_argument("project_features: channel '" + g.features[t].channels[j] +
                                    "' not found in schema");
  }

  UnifiedFeatures uf;
  const int64_t w = s.width();
  uf.values = Tensor::full({g.node_count, w}, s.sentinel);
  uf.mask = Tensor::zeros({g.node_count, w});
  for (int64_t v = 0; v < g.node_count; ++v) {
    size_t t = static_cast<size_t>(g.node_type_of[static_cast<size_t>(v)]);
    const FeatureTable& ft = g.features[t];
    int64_t row = g.type_local_index[static_cast<size_t>(v)];
    for (size_t j = 0; j < ft.channels.size(); ++j) {
      int64_t u = s.type_col_to_unified[t][j];
      uf.values(v, u) = ft.values(row, static_cast<int64_t>(j));
      uf.mask(v, u) = 1.0;
    }
  }
  return uf;
}

}  // namespace bghgnn
