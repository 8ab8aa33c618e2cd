// Copyright 2026 the plaf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "plaf/core.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plaf {

struct TextQuery {
  std::string label;
  FeatureVector embedding;  // any positive scale; normalized before scoring
  double scoreThreshold = 0.5;
  std::optional<std::size_t> topK;

  void check() const;
};

// Scores per target (pixel or point). Targets without semantics (background
// pixels) score -infinity and are never selected.
struct QueryResult {
  std::vector<float> scores;
  // Targets scoring >= threshold, by descending score then ascending index,
  // truncated to topK when set.
  std::vector<std::size_t> selected;
};

// Cosine similarity of every pool descriptor with the query embedding.
std::vector<double> scorePool(const FeaturePool& pool, const TextQuery& q);

QueryResult query3D(const FeaturePool& pool, const SemanticPointCloud& cloud,
                    const TextQuery& q);

// Scores the K mask features once and broadcasts them through the index map.
QueryResult query2D(const MaskIndexedFrame& frame, const TextQuery& q);

// Argmax labelling across several queries: index of the best scoring query
// per target (ties to the lower query index), -1 for background targets.
std::vector<int> argmaxLabels3D(const FeaturePool& pool,
                                const SemanticPointCloud& cloud,
                                std::span<const TextQuery> queries);
std::vector<int> argmaxLabels2D(const MaskIndexedFrame& frame,
                                std::span<const TextQuery> queries);

// Binary PGM of scores mapped from [-1, 1] to [0, 255] (background 0), plus
// the raw scores as <path>.f32 with a JSON sidecar.
void exportHeatmap(const QueryResult& result, const MaskIndexedFrame& frame,
                   const std::filesystem::path& path);
// ASCII PLY with x y z score selected per point.
void exportHeatmap(const QueryResult& result, const SemanticPointCloud& cloud,
                   const std::filesystem::path& path);

}  // namespace plaf
