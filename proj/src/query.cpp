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

#include "plaf/query.hpp"

#include "byteio.hpp"
#include "plaf/parallel.hpp"
#include "plaf/storage.hpp"

#include <fmt/core.h>
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace plaf {

namespace {

constexpr float kNoScore = -std::numeric_limits<float>::infinity();

std::vector<std::size_t> selectTargets(std::span<const float> scores,
                                       const TextQuery& q) {
  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] != kNoScore && scores[i] >= q.scoreThreshold) {
      selected.push_back(i);
    }
  }
  std::stable_sort(selected.begin(), selected.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  if (q.topK && selected.size() > *q.topK) selected.resize(*q.topK);
  return selected;
}

std::vector<double> scoreRows(std::span<const float> rows, std::size_t dim,
                              const TextQuery& q, bool normalizeRows) {
  q.check();
  if (q.embedding.size() != dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("query '{}' has dim {}, target has dim {}", q.label,
                            q.embedding.size(), dim));
  }
  const FeatureVector unitQuery = normalized(q.embedding);
  const std::size_t count = dim == 0 ? 0 : rows.size() / dim;
  std::vector<double> scores(count);
  for (std::size_t m = 0; m < count; ++m) {
    const auto row = rows.subspan(m * dim, dim);
    scores[m] = normalizeRows ? unitCosine(normalized(row), unitQuery)
                              : unitCosine(row, unitQuery);
  }
  return scores;
}

std::vector<double> scoreFrameMasks(const MaskIndexedFrame& frame,
                                    const TextQuery& q) {
  return scoreRows(frame.featureTable, frame.dim, q, true);
}

}  // namespace

void TextQuery::check() const {
  if (embedding.empty() || !allFinite(embedding) || l2Norm(embedding) == 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("query '{}' needs a finite non-zero embedding",
                            label));
  }
  if (!std::isfinite(scoreThreshold)) {
    throw Error(ErrorCode::kInvalidArgument, "score threshold must be finite");
  }
  if (topK && *topK == 0) {
    throw Error(ErrorCode::kInvalidArgument, "topK must be positive");
  }
}

std::vector<double> scorePool(const FeaturePool& pool, const TextQuery& q) {
  return scoreRows(pool.descriptors(), pool.dim(), q, false);
}

QueryResult query3D(const FeaturePool& pool, const SemanticPointCloud& cloud,
                    const TextQuery& q) {
  const auto poolScores = scorePool(pool, q);
  QueryResult result;
  result.scores.resize(cloud.size());
  parallelFor(cloud.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      result.scores[i] = static_cast<float>(poolScores.at(cloud.refs[i]));
    }
  });
  result.selected = selectTargets(result.scores, q);
  return result;
}

QueryResult query2D(const MaskIndexedFrame& frame, const TextQuery& q) {
  const auto maskScores = scoreFrameMasks(frame, q);
  QueryResult result;
  result.scores.resize(frame.indexMap.size());
  for (std::size_t p = 0; p < frame.indexMap.size(); ++p) {
    const auto id = frame.indexMap[p];
    result.scores[p] =
        id == 0 ? kNoScore : static_cast<float>(maskScores.at(id - 1));
  }
  result.selected = selectTargets(result.scores, q);
  return result;
}

namespace {

int argmaxOf(std::span<const std::vector<double>> perQuery, std::size_t row) {
  int best = 0;
  for (std::size_t j = 1; j < perQuery.size(); ++j) {
    if (perQuery[j][row] > perQuery[static_cast<std::size_t>(best)][row]) {
      best = static_cast<int>(j);
    }
  }
  return best;
}

}  // namespace

std::vector<int> argmaxLabels3D(const FeaturePool& pool,
                                const SemanticPointCloud& cloud,
                                std::span<const TextQuery> queries) {
  if (queries.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "argmax needs at least one query");
  }
  std::vector<std::vector<double>> perQuery;
  for (const auto& q : queries) perQuery.push_back(scorePool(pool, q));
  std::vector<int> entryLabel(pool.size());
  for (std::size_t m = 0; m < pool.size(); ++m) {
    entryLabel[m] = argmaxOf(perQuery, m);
  }
  std::vector<int> labels(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    labels[i] = entryLabel.at(cloud.refs[i]);
  }
  return labels;
}

std::vector<int> argmaxLabels2D(const MaskIndexedFrame& frame,
                                std::span<const TextQuery> queries) {
  if (queries.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "argmax needs at least one query");
  }
  std::vector<std::vector<double>> perQuery;
  for (const auto& q : queries) perQuery.push_back(scoreFrameMasks(frame, q));
  std::vector<int> maskLabel(frame.maskCount);
  for (std::size_t k = 0; k < frame.maskCount; ++k) {
    maskLabel[k] = argmaxOf(perQuery, k);
  }
  std::vector<int> labels(frame.indexMap.size(), -1);
  for (std::size_t p = 0; p < frame.indexMap.size(); ++p) {
    const auto id = frame.indexMap[p];
    if (id != 0) labels[p] = maskLabel.at(id - 1);
  }
  return labels;
}

void exportHeatmap(const QueryResult& result, const MaskIndexedFrame& frame,
                   const std::filesystem::path& path) {
  const std::size_t pixels = frame.height * frame.width;
  if (result.scores.size() != pixels) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("result has {} scores for a {}x{} frame",
                            result.scores.size(), frame.height, frame.width));
  }
  std::string pgm = fmt::format("P5\n{} {}\n255\n", frame.width, frame.height);
  const std::size_t headerSize = pgm.size();
  pgm.resize(headerSize + pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    const float s = result.scores[p];
    std::uint8_t level = 0;
    if (s != kNoScore) {
      const double scaled = std::round((std::clamp<double>(s, -1.0, 1.0) + 1.0) *
                                       0.5 * 255.0);
      level = static_cast<std::uint8_t>(scaled);
    }
    pgm[headerSize + p] = static_cast<char>(level);
  }
  writeFileBytes(path, std::as_bytes(std::span(pgm.data(), pgm.size())));

  auto rawPath = path;
  rawPath += ".f32";
  std::vector<std::byte> raw(pixels * 4);
  for (std::size_t p = 0; p < pixels; ++p) {
    detail::storeLE(raw.data() + p * 4, result.scores[p]);
  }
  writeFileBytes(rawPath, raw);
  const std::string side =
      nlohmann::json{{"height", frame.height}, {"width", frame.width},
                     {"channels", 1}}
          .dump(2) +
      "\n";
  auto sidePath = rawPath;
  sidePath += ".json";
  writeFileBytes(sidePath, std::as_bytes(std::span(side.data(), side.size())));
}

void exportHeatmap(const QueryResult& result, const SemanticPointCloud& cloud,
                   const std::filesystem::path& path) {
  if (result.scores.size() != cloud.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("result has {} scores for {} points",
                            result.scores.size(), cloud.size()));
  }
  std::vector<std::uint8_t> flag(cloud.size(), 0);
  for (auto i : result.selected) flag.at(i) = 1;

  std::string ply = fmt::format(
      "ply\nformat ascii 1.0\nelement vertex {}\n"
      "property float x\nproperty float y\nproperty float z\n"
      "property float score\nproperty uchar selected\nend_header\n",
      cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.positions[i];
    ply += fmt::format("{:.6f} {:.6f} {:.6f} {:.6f} {}\n", p.x, p.y, p.z,
                       result.scores[i], flag[i]);
  }
  writeFileBytes(path, std::as_bytes(std::span(ply.data(), ply.size())));
}

}  // namespace plaf
