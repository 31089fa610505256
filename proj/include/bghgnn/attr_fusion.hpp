#pragma once

#include <string>
#include <vector>

#include "bghgnn/graph.hpp"
#include "bghgnn/tensor.hpp"

namespace bghgnn {

// Merged attribute space across node types: the lexicographically sorted
// union of every per-type channel set, plus per-type maps from a type's
// column into the unified column.
struct UnifiedSchema {
  std::vector<std::string> channels;
  std::vector<std::vector<int64_t>> type_col_to_unified;  // [type][type column]
  double sentinel = 0.0;

  int64_t width() const { return static_cast<int64_t>(channels.size()); }
  // -1 when the channel is not in the schema
  int64_t channel_index(const std::string& name) const;
};

// Row v holds node v projected into the unified space; mask is 1 where the
// node's type owns the channel. Where mask is 0 the value equals the
// schema's sentinel, so absence stays visible to the model.
struct UnifiedFeatures {
  Tensor values;  // [node_count, width]
  Tensor mask;    // same shape, entries 0/1
};

UnifiedSchema build_unified_schema(const HeteroGraph& g, double sentinel = 0.0);
UnifiedFeatures project_features(const HeteroGraph& g, const UnifiedSchema& s);

}  // namespace bghgnn
