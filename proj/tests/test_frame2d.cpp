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

#include "doctest.h"

#include "oracles.hpp"
#include "plaf/frame2d.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numeric>

namespace {

using namespace plaf;

template <typename B>
double maxAbsDiff(std::span<const float> a, const B& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  }
  return m;
}

}  // namespace

TEST_CASE("upsample at the same size is the identity") {
  std::mt19937_64 rng(1);
  const auto feat = test::randomFeatures(7, 5, 3, rng);
  const auto out = upsampleBilinear(feat, 7, 5);
  CHECK(test::sameBytes(out.data, feat.data));
}

TEST_CASE("upsample of a constant map is constant") {
  DenseFeatureMap feat(3, 4, 2);
  for (std::size_t p = 0; p < 12; ++p) {
    feat.data[2 * p] = 0.3f;
    feat.data[2 * p + 1] = -1.7f;
  }
  for (auto [h, w] : {std::pair{9, 13}, std::pair{1, 1}, std::pair{3, 40}}) {
    const auto out = upsampleBilinear(feat, h, w);
    for (std::size_t p = 0; p < out.pixelCount(); ++p) {
      CHECK(out.data[2 * p] == 0.3f);
      CHECK(out.data[2 * p + 1] == -1.7f);
    }
  }
}

TEST_CASE("upsample 2x2 to 4x4 matches hand values and the scalar oracle") {
  const DenseFeatureMap feat(2, 2, 1, {0.f, 1.f, 2.f, 3.f});
  const auto out = upsampleBilinear(feat, 4, 4);
  // Sample coordinates per axis are 0, 0.25, 0.75, 1 after clamping, and the
  // grid is the plane f(y, x) = 2y + x.
  const float expected[16] = {0.0f, 0.25f, 0.75f, 1.0f,   //
                              0.5f, 0.75f, 1.25f, 1.5f,   //
                              1.5f, 1.75f, 2.25f, 2.5f,   //
                              2.0f, 2.25f, 2.75f, 3.0f};
  const std::vector<double> grid{0, 1, 2, 3};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(out.at(i, j)[0] == expected[i * 4 + j]);
      CHECK(out.at(i, j)[0] ==
            doctest::Approx(oracle::bilinearAt(grid, 2, 2, 4, 4, i, j)));
    }
  }
}

TEST_CASE("upsample matches the scalar oracle on random grids") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t h = 1 + rng() % 6, w = 1 + rng() % 6, c = 3;
    const std::size_t H = 1 + rng() % 17, W = 1 + rng() % 17;
    const auto feat = test::randomFeatures(h, w, c, rng);
    const auto out = upsampleBilinear(feat, H, W);
    for (std::size_t ch = 0; ch < c; ++ch) {
      std::vector<double> grid(h * w);
      for (std::size_t p = 0; p < h * w; ++p) grid[p] = feat.data[p * c + ch];
      for (std::size_t i = 0; i < H; ++i) {
        for (std::size_t j = 0; j < W; ++j) {
          CHECK(std::abs(out.at(i, j)[ch] -
                         oracle::bilinearAt(grid, h, w, H, W, i, j)) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("upsample never overshoots the per-channel range") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto feat = test::randomFeatures(4, 6, 5, rng);
    const auto out = upsampleBilinear(feat, 23, 17);
    for (std::size_t ch = 0; ch < 5; ++ch) {
      float lo = 1e9f, hi = -1e9f;
      for (std::size_t p = 0; p < feat.pixelCount(); ++p) {
        lo = std::min(lo, feat.data[p * 5 + ch]);
        hi = std::max(hi, feat.data[p * 5 + ch]);
      }
      for (std::size_t p = 0; p < out.pixelCount(); ++p) {
        CHECK(out.data[p * 5 + ch] >= lo);
        CHECK(out.data[p * 5 + ch] <= hi);
      }
    }
  }
}

TEST_CASE("upsample rejects a zero target") {
  DenseFeatureMap feat(2, 2, 1);
  try {
    upsampleBilinear(feat, 0, 4);
    FAIL("zero target accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }
}

TEST_CASE("aggregate: single pixel, uniform map and two-pixel mean") {
  std::mt19937_64 rng(2);
  const auto feat = test::randomFeatures(4, 4, 3, rng);
  const MaskSet single(4, 4, {test::rectMask(4, 4, 2, 1, 3, 2)});
  const auto means = aggregateMaskFeatures(feat, single);
  CHECK(test::sameBytes(means[0], FeatureVector(feat.at(2, 1).begin(),
                                                feat.at(2, 1).end())));

  DenseFeatureMap uniform(3, 3, 2);
  for (std::size_t p = 0; p < 9; ++p) {
    uniform.data[2 * p] = 0.25f;
    uniform.data[2 * p + 1] = -4.f;
  }
  const MaskSet masks(3, 3, test::randomMasks(3, 3, 4, false, rng));
  for (const auto& m : aggregateMaskFeatures(uniform, masks)) {
    CHECK(m[0] == 0.25f);
    CHECK(m[1] == -4.f);
  }

  const DenseFeatureMap two(1, 2, 2, {1.f, 0.f, 0.f, 1.f});
  const auto pair = aggregateMaskFeatures(two, MaskSet(1, 2, {{1, 1}}));
  CHECK(pair[0][0] == 0.5f);
  CHECK(pair[0][1] == 0.5f);
}

TEST_CASE("aggregate rejects mismatched sizes") {
  DenseFeatureMap feat(4, 4, 1);
  const MaskSet masks(3, 4, {test::rectMask(3, 4, 0, 0, 1, 1)});
  try {
    aggregateMaskFeatures(feat, masks);
    FAIL("size mismatch accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }
}

TEST_CASE("aggregate is linear") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto F = test::randomFeatures(12, 9, 4, rng);
    const auto G = test::randomFeatures(12, 9, 4, rng);
    const float a = 0.7f, b = -1.3f;
    DenseFeatureMap combo(12, 9, 4);
    for (std::size_t i = 0; i < combo.data.size(); ++i) {
      combo.data[i] = a * F.data[i] + b * G.data[i];
    }
    const MaskSet masks(12, 9, test::randomMasks(12, 9, 5, false, rng));
    const auto mf = aggregateMaskFeatures(F, masks);
    const auto mg = aggregateMaskFeatures(G, masks);
    const auto mc = aggregateMaskFeatures(combo, masks);
    for (std::size_t k = 0; k < masks.size(); ++k) {
      for (std::size_t c = 0; c < 4; ++c) {
        CHECK(std::abs(mc[k][c] - (a * mf[k][c] + b * mg[k][c])) < 1e-5);
      }
    }
  }
}

TEST_CASE("assignPixels: disjoint masks and the empty set") {
  std::mt19937_64 rng(4);
  const auto rasters = test::randomMasks(10, 8, 4, true, rng);
  const MaskSet masks(10, 8, rasters);
  const auto index = assignPixels(masks);
  for (std::size_t p = 0; p < 80; ++p) {
    std::size_t expect = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      if (rasters[k][p]) expect = k + 1;
    }
    CHECK(index[p] == expect);
  }

  const MaskSet none(3, 5, {});
  const auto zeros = assignPixels(none);
  CHECK(zeros.size() == 15);
  CHECK(std::all_of(zeros.begin(), zeros.end(), [](auto v) { return v == 0; }));
}

TEST_CASE("assignPixels: the smaller of two overlapping masks wins") {
  // A is a 10x10 square (area 100), B a 3x3 square (area 9) inside it.
  const auto A = test::rectMask(12, 12, 1, 1, 11, 11);
  const auto B = test::rectMask(12, 12, 4, 5, 7, 8);
  const MaskSet masks(12, 12, {A, B});
  REQUIRE(masks.area(0) == 100);
  REQUIRE(masks.area(1) == 9);
  const auto index = assignPixels(masks);
  std::size_t toA = 0, toB = 0;
  for (std::size_t p = 0; p < 144; ++p) {
    CHECK(index[p] == oracle::smallestCoveringMask({A, B}, p));
    toA += index[p] == 1;
    toB += index[p] == 2;
  }
  CHECK(toB == 9);
  CHECK(toA == 91);
  CHECK(index[5 * 12 + 6] == 2);
}

TEST_CASE("assignPixels: equal areas go to the lower mask ID") {
  const auto A = test::rectMask(4, 4, 0, 0, 2, 2);
  const auto B = test::rectMask(4, 4, 1, 1, 3, 3);
  const auto index = assignPixels(MaskSet(4, 4, {A, B}));
  CHECK(index[1 * 4 + 1] == 1);
  const auto swapped = assignPixels(MaskSet(4, 4, {B, A}));
  CHECK(swapped[1 * 4 + 1] == 1);
}

TEST_CASE("assignPixels matches the brute-force policy on random overlaps") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto rasters = test::randomMasks(9, 11, 1 + rng() % 6, false, rng);
    const auto index = assignPixels(MaskSet(9, 11, rasters));
    for (std::size_t p = 0; p < 99; ++p) {
      CHECK(index[p] == oracle::smallestCoveringMask(rasters, p));
    }
  }
}

TEST_CASE("policy names") {
  CHECK(parseAssignmentPolicy("smallest").strategy ==
        AssignmentStrategy::kSmallestMask);
  CHECK(policyName({}) == "smallest");
  CHECK_THROWS_AS(parseAssignmentPolicy("largest"), Error);
}

TEST_CASE("buildFrame with no masks") {
  std::mt19937_64 rng(6);
  const auto feat = test::randomFeatures(5, 6, 3, rng);
  const auto frame = buildFrame(feat, MaskSet(5, 6, {}));
  CHECK(frame.maskCount == 0);
  CHECK(frame.featureTable.empty());
  CHECK(frame.indexMap == std::vector<std::uint16_t>(30, 0));
  CHECK(validate(frame).empty());
}

TEST_CASE("buildFrame reconstructs the mask-mean image for disjoint masks") {
  std::mt19937_64 rng(7);
  const auto feat = test::randomFeatures(16, 16, 5, rng);
  const auto rasters = test::randomMasks(16, 16, 3, true, rng);
  const auto frame = buildFrame(feat, MaskSet(16, 16, rasters));
  REQUIRE(validate(frame).empty());
  CHECK(frame.maskCount == 3);
  const auto dense = reconstructDense(frame);
  for (std::size_t p = 0; p < 256; ++p) {
    std::size_t owner = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      if (rasters[k][p]) owner = k + 1;
    }
    CHECK(dense.valid[p] == (owner != 0));
    if (owner == 0) continue;
    const auto mean = oracle::maskMean(feat.data, 5, rasters[owner - 1]);
    CHECK(maxAbsDiff(dense.at(p / 16, p % 16), mean) < 1e-6);
  }
}

TEST_CASE("buildFrame drops a mask fully covered by smaller masks") {
  // Big mask (area 16) completely tiled by four 2x2 masks (area 4).
  std::vector<std::vector<std::uint8_t>> rasters{
      test::rectMask(6, 6, 1, 1, 3, 3), test::rectMask(6, 6, 0, 0, 4, 4),
      test::rectMask(6, 6, 0, 0, 2, 2), test::rectMask(6, 6, 0, 2, 2, 4),
      test::rectMask(6, 6, 2, 0, 4, 2), test::rectMask(6, 6, 2, 2, 4, 4)};
  // The 2x2 at (1,1) overlaps the four quadrants; with equal areas it wins
  // its pixels (lowest ID), the others keep the rest.
  std::mt19937_64 rng(8);
  const auto feat = test::randomFeatures(6, 6, 2, rng);
  const MaskSet masks(6, 6, rasters);
  const auto frame = buildFrame(feat, masks);
  CHECK(validate(frame).empty());
  CHECK(frame.maskCount == 5);  // the 4x4 mask owns nothing
  const auto index = assignPixels(masks);
  for (std::size_t p = 0; p < 36; ++p) {
    const std::size_t raw = index[p];
    CHECK(raw != 2);
    const std::size_t compact = raw == 0 ? 0 : (raw > 2 ? raw - 1 : raw);
    CHECK(frame.indexMap[p] == compact);
  }
  // Compacted ID 2 is the old mask 3; its mean still uses all its pixels.
  const auto mean = oracle::maskMean(feat.data, 2, rasters[2]);
  CHECK(maxAbsDiff(frame.feature(2), mean) < 1e-6);
}

TEST_CASE("buildFrame resamples low-resolution features exactly like the "
          "explicit two-step path") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto feat = test::randomFeatures(4, 5, 6, rng);
    const MaskSet masks(17, 23, test::randomMasks(17, 23, 6, trial % 2 == 0, rng));
    const auto fused = buildFrame(feat, masks);
    const auto up = upsampleBilinear(feat, 17, 23);
    const auto twoStep = buildFrame(up, masks);
    CHECK(fused.indexMap == twoStep.indexMap);
    CHECK(test::sameBytes(fused.featureTable, twoStep.featureTable));
  }
}

TEST_CASE("buildFrame is idempotent on its own reconstruction") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const auto feat = test::randomFeatures(14, 10, 3, rng);
    const MaskSet masks(14, 10, test::randomMasks(14, 10, 4, true, rng));
    const auto frame = buildFrame(feat, masks);
    const auto dense = reconstructDense(frame);
    const DenseFeatureMap again(14, 10, 3, dense.data);
    const auto second = buildFrame(again, masks);
    REQUIRE(second.featureTable.size() == frame.featureTable.size());
    CHECK(maxAbsDiff(second.featureTable, frame.featureTable) < 1e-6);
  }
}

TEST_CASE("permuting masks relabels but does not change the reconstruction") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto feat = test::randomFeatures(12, 12, 4, rng);
    // Nested squares with distinct areas so the policy has no ties.
    std::vector<std::vector<std::uint8_t>> rasters;
    for (std::size_t k = 0; k < 4; ++k) {
      const std::size_t r = rng() % 4, c = rng() % 4;
      rasters.push_back(test::rectMask(12, 12, r, c, r + 2 + 2 * k, c + 2 + 2 * k));
    }
    auto shuffled = rasters;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto a = reconstructDense(buildFrame(feat, MaskSet(12, 12, rasters)));
    const auto b = reconstructDense(buildFrame(feat, MaskSet(12, 12, shuffled)));
    CHECK(a.valid == b.valid);
    CHECK(test::sameBytes(a.data, b.data));
  }
}

TEST_CASE("reconstructDense is a bitwise table lookup") {
  MaskIndexedFrame frame;
  frame.height = 2;
  frame.width = 2;
  frame.dim = 2;
  frame.maskCount = 2;
  frame.indexMap = {1, 0, 2, 1};
  frame.featureTable = {0.1f, -0.2f, 3.5f, 1e-30f};
  const auto dense = reconstructDense(frame);
  CHECK(dense.valid == std::vector<std::uint8_t>{1, 0, 1, 1});
  CHECK(test::sameBytes({dense.data.begin(), dense.data.begin() + 2},
                        {0.1f, -0.2f}));
  CHECK(test::sameBytes({dense.data.begin() + 4, dense.data.begin() + 6},
                        {3.5f, 1e-30f}));
  CHECK(dense.data[2] == 0.f);
}
