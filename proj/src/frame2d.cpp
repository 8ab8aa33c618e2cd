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

#include "plaf/frame2d.hpp"

#include "plaf/parallel.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace plaf {

namespace {

struct AxisSample {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double weight = 0.0;  // weight of hi
};

std::vector<AxisSample> axisSamples(std::size_t in, std::size_t out) {
  std::vector<AxisSample> samples(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    auto lo = static_cast<std::size_t>(std::floor(src));
    if (lo > in - 1) lo = in - 1;
    const std::size_t hi = std::min(lo + 1, in - 1);
    samples[i] = {lo, hi, hi == lo ? 0.0 : src - static_cast<double>(lo)};
  }
  return samples;
}

void sampleBilinear(const DenseFeatureMap& feat, const AxisSample& row,
                    const AxisSample& col, std::span<float> out) {
  const auto a = feat.at(row.lo, col.lo);
  const auto b = feat.at(row.lo, col.hi);
  const auto c = feat.at(row.hi, col.lo);
  const auto d = feat.at(row.hi, col.hi);
  const double wy = row.weight;
  const double wx = col.weight;
  for (std::size_t ch = 0; ch < out.size(); ++ch) {
    const double top = (1.0 - wx) * a[ch] + wx * b[ch];
    const double bottom = (1.0 - wx) * c[ch] + wx * d[ch];
    out[ch] = static_cast<float>((1.0 - wy) * top + wy * bottom);
  }
}

// Accumulates per-mask means. pixelFeature(pixel, scratch) returns the feature
// of a pixel, either a view into stored data or a freshly sampled value.
// Pixels are visited row-major, so every mask sums in the same order
// regardless of how features are produced.
template <typename PixelFeature>
std::vector<FeatureVector> accumulateMeans(const MaskSet& masks,
                                           std::size_t dim,
                                           PixelFeature&& pixelFeature) {
  const std::size_t numMasks = masks.size();
  std::vector<double> sums(numMasks * dim, 0.0);
  std::vector<std::size_t> covering;
  covering.reserve(numMasks);
  FeatureVector scratch(dim);
  for (std::size_t p = 0; p < masks.pixelCount(); ++p) {
    covering.clear();
    for (std::size_t k = 0; k < numMasks; ++k) {
      if (masks.covers(k, p)) covering.push_back(k);
    }
    if (covering.empty()) continue;
    const std::span<const float> f = pixelFeature(p, std::span<float>(scratch));
    for (std::size_t k : covering) {
      double* acc = sums.data() + k * dim;
      for (std::size_t ch = 0; ch < dim; ++ch) acc[ch] += f[ch];
    }
  }
  std::vector<FeatureVector> means(numMasks, FeatureVector(dim));
  for (std::size_t k = 0; k < numMasks; ++k) {
    const double area = static_cast<double>(masks.area(k));
    for (std::size_t ch = 0; ch < dim; ++ch) {
      means[k][ch] = static_cast<float>(sums[k * dim + ch] / area);
    }
  }
  return means;
}

std::vector<FeatureVector> aggregateResampled(const DenseFeatureMap& feat,
                                              const MaskSet& masks) {
  const auto rows = axisSamples(feat.height, masks.height());
  const auto cols = axisSamples(feat.width, masks.width());
  const std::size_t width = masks.width();
  return accumulateMeans(
      masks, feat.dim,
      [&](std::size_t p, std::span<float> scratch) -> std::span<const float> {
        sampleBilinear(feat, rows[p / width], cols[p % width], scratch);
        return scratch;
      });
}

}  // namespace

AssignmentPolicy parseAssignmentPolicy(std::string_view name) {
  if (name == "smallest" || name == "smallest-mask") {
    return {AssignmentStrategy::kSmallestMask};
  }
  throw Error(ErrorCode::kInvalidArgument,
              fmt::format("unknown assignment policy '{}'", name));
}

std::string_view policyName(AssignmentPolicy policy) {
  switch (policy.strategy) {
    case AssignmentStrategy::kSmallestMask: return "smallest";
  }
  return "unknown";
}

DenseFeatureMap upsampleBilinear(const DenseFeatureMap& feat,
                                 std::size_t targetHeight,
                                 std::size_t targetWidth) {
  if (targetHeight == 0 || targetWidth == 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "upsample target size must be positive");
  }
  feat.check();
  DenseFeatureMap out(targetHeight, targetWidth, feat.dim);
  const auto rows = axisSamples(feat.height, targetHeight);
  const auto cols = axisSamples(feat.width, targetWidth);
  parallelFor(targetHeight, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t c = 0; c < targetWidth; ++c) {
        sampleBilinear(feat, rows[r], cols[c], out.at(r, c));
      }
    }
  });
  return out;
}

std::vector<FeatureVector> aggregateMaskFeatures(const DenseFeatureMap& feat,
                                                 const MaskSet& masks) {
  if (masks.size() > 0 &&
      (feat.height != masks.height() || feat.width != masks.width())) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("features are {}x{} but masks are {}x{}",
                            feat.height, feat.width, masks.height(),
                            masks.width()));
  }
  for (std::size_t k = 0; k < masks.size(); ++k) {
    if (masks.area(k) == 0) {
      throw Error(ErrorCode::kEmptyMask, fmt::format("mask {} is empty", k));
    }
  }
  return accumulateMeans(
      masks, feat.dim,
      [&](std::size_t p, std::span<float>) -> std::span<const float> {
        return {feat.data.data() + p * feat.dim, feat.dim};
      });
}

std::vector<std::uint16_t> assignPixels(const MaskSet& masks,
                                        AssignmentPolicy policy) {
  if (masks.size() > kMaxMasks) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{} masks exceed the 16-bit index range",
                            masks.size()));
  }
  std::vector<std::uint16_t> index(masks.pixelCount(), 0);
  switch (policy.strategy) {
    case AssignmentStrategy::kSmallestMask:
      for (std::size_t p = 0; p < index.size(); ++p) {
        std::size_t best = 0;
        for (std::size_t k = 0; k < masks.size(); ++k) {
          if (!masks.covers(k, p)) continue;
          if (best == 0 || masks.area(k) < masks.area(best - 1)) best = k + 1;
        }
        index[p] = static_cast<std::uint16_t>(best);
      }
      break;
  }
  return index;
}

MaskIndexedFrame buildFrame(const DenseFeatureMap& feat, const MaskSet& masks,
                            AssignmentPolicy policy) {
  feat.check();
  MaskIndexedFrame frame;
  frame.dim = feat.dim;
  if (masks.pixelCount() == 0) {
    // No mask raster at all: the frame lives at feature resolution.
    frame.height = feat.height;
    frame.width = feat.width;
    frame.indexMap.assign(feat.pixelCount(), 0);
    return frame;
  }
  frame.height = masks.height();
  frame.width = masks.width();

  auto index = assignPixels(masks, policy);
  std::vector<std::size_t> owned(masks.size() + 1, 0);
  for (auto id : index) ++owned[id];

  std::vector<std::uint16_t> remap(masks.size() + 1, 0);
  std::size_t next = 0;
  for (std::size_t k = 1; k <= masks.size(); ++k) {
    if (owned[k] > 0) remap[k] = static_cast<std::uint16_t>(++next);
  }
  for (auto& id : index) id = remap[id];

  const bool sameSize =
      feat.height == masks.height() && feat.width == masks.width();
  const auto means = sameSize ? aggregateMaskFeatures(feat, masks)
                              : aggregateResampled(feat, masks);

  frame.maskCount = next;
  frame.indexMap = std::move(index);
  frame.featureTable.reserve(next * feat.dim);
  for (std::size_t k = 1; k <= masks.size(); ++k) {
    if (remap[k] == 0) continue;
    const auto& row = means[k - 1];
    frame.featureTable.insert(frame.featureTable.end(), row.begin(), row.end());
  }
  return frame;
}

DenseReconstruction reconstructDense(const MaskIndexedFrame& frame) {
  DenseReconstruction out;
  out.height = frame.height;
  out.width = frame.width;
  out.dim = frame.dim;
  out.data.assign(frame.height * frame.width * frame.dim, 0.f);
  out.valid.assign(frame.height * frame.width, 0);
  for (std::size_t p = 0; p < frame.indexMap.size(); ++p) {
    const auto id = frame.indexMap[p];
    if (id == 0 || id > frame.maskCount) continue;
    const auto row = frame.feature(id);
    std::copy(row.begin(), row.end(), out.data.begin() + static_cast<std::ptrdiff_t>(p * frame.dim));
    out.valid[p] = 1;
  }
  return out;
}

}  // namespace plaf
