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

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plaf {

// Every failure the library can raise. The CLI maps each code to a distinct
// process exit status.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDimensionMismatch,
  kEmptyMask,
  kOverflow,
  kBadMagic,
  kBadVersion,
  kTruncated,
  kInvariantViolation,
  kInputMissing,
  kFormat,
  kIo,
};

const char* errorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Largest mask count representable by the 16-bit index map (0 is background).
inline constexpr std::size_t kMaxMasks = 65535;
// Pools larger than this switch point references to 32 bits.
inline constexpr std::size_t kMaxShortRefs = 65535;
// Vectors whose norm is within this distance of 1 are treated as already unit.
inline constexpr double kUnitSlack = 0x1p-22;
// Tolerance on stored unit descriptors.
inline constexpr double kUnitTolerance = 1e-5;

using FeatureVector = std::vector<float>;

bool allFinite(std::span<const float> values);
double dot(std::span<const float> a, std::span<const float> b);
double l2Norm(std::span<const float> values);
// Cosine of two unit vectors: their dot product clamped to [-1, 1], and
// exactly 1 when the vectors are identical.
double unitCosine(std::span<const float> a, std::span<const float> b);

// Scales to unit L2 norm. Throws kInvalidArgument on a zero or non-finite
// vector. Inputs already unit within kUnitSlack are returned unchanged.
FeatureVector normalized(std::span<const float> values);
FeatureVector normalized(std::span<const double> values);

// h×w grid of C-dim features, row-major, channels innermost.
struct DenseFeatureMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t dim = 0;
  std::vector<float> data;

  DenseFeatureMap() = default;
  DenseFeatureMap(std::size_t h, std::size_t w, std::size_t c);
  DenseFeatureMap(std::size_t h, std::size_t w, std::size_t c,
                  std::vector<float> values);

  std::span<float> at(std::size_t row, std::size_t col) {
    return {data.data() + (row * width + col) * dim, dim};
  }
  std::span<const float> at(std::size_t row, std::size_t col) const {
    return {data.data() + (row * width + col) * dim, dim};
  }
  std::size_t pixelCount() const { return height * width; }

  // Throws kInvalidArgument / kDimensionMismatch when an invariant fails.
  void check() const;
};

// K binary H×W rasters. Empty masks are rejected on construction.
class MaskSet {
 public:
  MaskSet() = default;
  MaskSet(std::size_t height, std::size_t width,
          std::vector<std::vector<std::uint8_t>> masks);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return masks_.size(); }
  std::size_t pixelCount() const { return height_ * width_; }

  std::span<const std::uint8_t> mask(std::size_t k) const { return masks_[k]; }
  std::size_t area(std::size_t k) const { return areas_[k]; }
  bool covers(std::size_t k, std::size_t pixel) const {
    return masks_[k][pixel] != 0;
  }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::vector<std::uint8_t>> masks_;
  std::vector<std::size_t> areas_;
};

// Indexed mask map plus one feature row per mask. Index 0 is background,
// mask ID k refers to featureTable row k-1.
struct MaskIndexedFrame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t dim = 0;
  std::size_t maskCount = 0;
  std::vector<std::uint16_t> indexMap;
  std::vector<float> featureTable;

  std::span<const float> feature(std::size_t maskId) const {
    return {featureTable.data() + (maskId - 1) * dim, dim};
  }

  friend bool operator==(const MaskIndexedFrame&,
                         const MaskIndexedFrame&) = default;
};

// Lists every violated invariant; empty when the frame is valid.
std::vector<std::string> validate(const MaskIndexedFrame& frame);

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

struct CameraFrame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> depth;  // meters; <= 0 or non-finite is invalid
  Intrinsics intrinsics;
  Eigen::Matrix4d poseWorldFromCamera = Eigen::Matrix4d::Identity();

  float depthAt(std::size_t row, std::size_t col) const {
    return depth[row * width + col];
  }
};

std::vector<std::string> validate(const CameraFrame& cam);

// M unit descriptors with observation counts, stored contiguously.
class FeaturePool {
 public:
  FeaturePool() = default;
  explicit FeaturePool(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return counts_.size(); }
  bool empty() const { return counts_.empty(); }

  std::span<const float> descriptor(std::size_t m) const {
    return {descriptors_.data() + m * dim_, dim_};
  }
  std::uint32_t count(std::size_t m) const { return counts_[m]; }
  const std::vector<float>& descriptors() const { return descriptors_; }
  const std::vector<std::uint32_t>& counts() const { return counts_; }

  // Appends a descriptor as given; callers are responsible for unit norm.
  std::size_t append(std::span<const float> descriptor, std::uint32_t count);
  void replace(std::size_t m, std::span<const float> descriptor,
               std::uint32_t count);

  friend bool operator==(const FeaturePool&, const FeaturePool&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<float> descriptors_;
  std::vector<std::uint32_t> counts_;
};

std::vector<std::string> validate(const FeaturePool& pool);

struct Point3f {
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;
  friend bool operator==(const Point3f&, const Point3f&) = default;
};

struct SemanticPointCloud {
  std::vector<Point3f> positions;
  std::vector<std::uint32_t> refs;

  std::size_t size() const { return refs.size(); }
  friend bool operator==(const SemanticPointCloud&,
                         const SemanticPointCloud&) = default;
};

// Bytes per point reference needed to address a pool of poolSize entries.
inline std::size_t referenceBytes(std::size_t poolSize) {
  return poolSize > kMaxShortRefs ? 4 : 2;
}

std::vector<std::string> validate(const FeaturePool& pool,
                                  const SemanticPointCloud& cloud);

}  // namespace plaf
