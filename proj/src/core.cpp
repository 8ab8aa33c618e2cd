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

#include "plaf/core.hpp"

#include <fmt/core.h>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace plaf {

const char* errorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kEmptyMask: return "empty mask";
    case ErrorCode::kOverflow: return "arithmetic overflow";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kBadVersion: return "unsupported version";
    case ErrorCode::kTruncated: return "truncated payload";
    case ErrorCode::kInvariantViolation: return "invariant violation";
    case ErrorCode::kInputMissing: return "input missing";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown error";
}

bool allFinite(std::span<const float> values) {
  return std::all_of(values.begin(), values.end(),
                     [](float v) { return std::isfinite(v); });
}

double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double l2Norm(std::span<const float> values) {
  return std::sqrt(dot(values, values));
}

double unitCosine(std::span<const float> a, std::span<const float> b) {
  if (std::equal(a.begin(), a.end(), b.begin(), b.end())) return 1.0;
  return std::clamp(dot(a, b), -1.0, 1.0);
}

namespace {

template <typename T>
FeatureVector normalizedImpl(std::span<const T> values) {
  double sumsq = 0.0;
  for (T v : values) sumsq += static_cast<double>(v) * static_cast<double>(v);
  const double norm = std::sqrt(sumsq);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot normalize a zero or non-finite vector");
  }
  FeatureVector out(values.size());
  if (std::abs(norm - 1.0) <= kUnitSlack) {
    std::transform(values.begin(), values.end(), out.begin(),
                   [](T v) { return static_cast<float>(v); });
  } else {
    std::transform(values.begin(), values.end(), out.begin(), [norm](T v) {
      return static_cast<float>(static_cast<double>(v) / norm);
    });
  }
  return out;
}

}  // namespace

FeatureVector normalized(std::span<const float> values) {
  return normalizedImpl(values);
}

FeatureVector normalized(std::span<const double> values) {
  return normalizedImpl(values);
}

DenseFeatureMap::DenseFeatureMap(std::size_t h, std::size_t w, std::size_t c)
    : height(h), width(w), dim(c), data(h * w * c, 0.f) {
  check();
}

DenseFeatureMap::DenseFeatureMap(std::size_t h, std::size_t w, std::size_t c,
                                 std::vector<float> values)
    : height(h), width(w), dim(c), data(std::move(values)) {
  check();
}

void DenseFeatureMap::check() const {
  if (height == 0 || width == 0 || dim == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("feature map dimensions must be positive, got "
                            "{}x{}x{}",
                            height, width, dim));
  }
  if (data.size() != height * width * dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("feature map holds {} values, expected {}",
                            data.size(), height * width * dim));
  }
  if (!allFinite(data)) {
    throw Error(ErrorCode::kInvalidArgument,
                "feature map contains non-finite values");
  }
}

MaskSet::MaskSet(std::size_t height, std::size_t width,
                 std::vector<std::vector<std::uint8_t>> masks)
    : height_(height), width_(width), masks_(std::move(masks)) {
  if (height_ == 0 || width_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "mask size must be positive");
  }
  areas_.reserve(masks_.size());
  for (std::size_t k = 0; k < masks_.size(); ++k) {
    auto& m = masks_[k];
    if (m.size() != height_ * width_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("mask {} has {} pixels, expected {}", k,
                              m.size(), height_ * width_));
    }
    std::size_t area = 0;
    for (auto& v : m) {
      v = v != 0 ? 1 : 0;
      area += v;
    }
    if (area == 0) {
      throw Error(ErrorCode::kEmptyMask,
                  fmt::format("mask {} has no foreground pixels", k));
    }
    areas_.push_back(area);
  }
}

std::vector<std::string> validate(const MaskIndexedFrame& frame) {
  std::vector<std::string> report;
  if (frame.height == 0 || frame.width == 0) {
    report.emplace_back("frame size must be positive");
  }
  if (frame.dim == 0) report.emplace_back("feature dim must be >= 1");
  if (frame.maskCount > kMaxMasks) {
    report.push_back(fmt::format("mask count {} exceeds 16-bit index range",
                                 frame.maskCount));
  }
  if (frame.indexMap.size() != frame.height * frame.width) {
    report.push_back(fmt::format("index map has {} entries, expected {}",
                                 frame.indexMap.size(),
                                 frame.height * frame.width));
  }
  if (frame.featureTable.size() != frame.maskCount * frame.dim) {
    report.push_back(fmt::format("feature table has {} values, expected {}",
                                 frame.featureTable.size(),
                                 frame.maskCount * frame.dim));
  }

  std::vector<bool> seen(frame.maskCount + 1, false);
  std::size_t outOfRange = 0;
  for (auto id : frame.indexMap) {
    if (id > frame.maskCount) {
      ++outOfRange;
    } else {
      seen[id] = true;
    }
  }
  if (outOfRange > 0) {
    report.push_back(
        fmt::format("index out of range: {} pixels exceed K={}", outOfRange,
                    frame.maskCount));
  }
  for (std::size_t id = 1; id <= frame.maskCount; ++id) {
    if (!seen[id]) {
      report.push_back(fmt::format("unreferenced mask ID {}", id));
    }
  }
  if (!allFinite(frame.featureTable)) {
    report.emplace_back("feature table contains non-finite values");
  }
  return report;
}

std::vector<std::string> validate(const CameraFrame& cam) {
  std::vector<std::string> report;
  if (cam.depth.size() != cam.height * cam.width) {
    report.push_back(fmt::format("depth has {} values, expected {}",
                                 cam.depth.size(), cam.height * cam.width));
  }
  const auto& k = cam.intrinsics;
  if (!(k.fx > 0.0) || !(k.fy > 0.0)) {
    report.emplace_back("focal lengths must be positive");
  }
  if (!std::isfinite(k.cx) || !std::isfinite(k.cy)) {
    report.emplace_back("principal point must be finite");
  }
  const Eigen::Matrix4d& pose = cam.poseWorldFromCamera;
  if (!pose.allFinite()) {
    report.emplace_back("pose contains non-finite values");
    return report;
  }
  const Eigen::Matrix3d rot = pose.topLeftCorner<3, 3>();
  const double orthoErr =
      (rot.transpose() * rot - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (orthoErr > 1e-6) {
    report.push_back(
        fmt::format("rotation not orthonormal (error {:.3g})", orthoErr));
  } else if (rot.determinant() < 0.0) {
    report.emplace_back("rotation is a reflection (det < 0)");
  }
  if (pose(3, 0) != 0.0 || pose(3, 1) != 0.0 || pose(3, 2) != 0.0 ||
      pose(3, 3) != 1.0) {
    report.emplace_back("pose bottom row must be [0 0 0 1]");
  }
  return report;
}

std::size_t FeaturePool::append(std::span<const float> descriptor,
                                std::uint32_t count) {
  if (descriptor.size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("descriptor dim {} does not match pool dim {}",
                            descriptor.size(), dim_));
  }
  descriptors_.insert(descriptors_.end(), descriptor.begin(), descriptor.end());
  counts_.push_back(count);
  return counts_.size() - 1;
}

void FeaturePool::replace(std::size_t m, std::span<const float> descriptor,
                          std::uint32_t count) {
  std::copy(descriptor.begin(), descriptor.end(),
            descriptors_.begin() + static_cast<std::ptrdiff_t>(m * dim_));
  counts_[m] = count;
}

std::vector<std::string> validate(const FeaturePool& pool) {
  std::vector<std::string> report;
  if (pool.dim() == 0) report.emplace_back("pool dim must be >= 1");
  for (std::size_t m = 0; m < pool.size(); ++m) {
    const auto d = pool.descriptor(m);
    if (!allFinite(d)) {
      report.push_back(fmt::format("pool entry {} is non-finite", m));
      continue;
    }
    const double norm = l2Norm(d);
    if (std::abs(norm - 1.0) > kUnitTolerance) {
      report.push_back(
          fmt::format("pool entry {} is not unit norm ({:.8f})", m, norm));
    }
    if (pool.count(m) == 0) {
      report.push_back(fmt::format("pool entry {} has zero observations", m));
    }
  }
  return report;
}

std::vector<std::string> validate(const FeaturePool& pool,
                                  const SemanticPointCloud& cloud) {
  auto report = validate(pool);
  if (cloud.positions.size() != cloud.refs.size()) {
    report.push_back(fmt::format("cloud has {} positions but {} references",
                                 cloud.positions.size(), cloud.refs.size()));
  }
  std::size_t bad = 0;
  for (auto r : cloud.refs) bad += r >= pool.size() ? 1 : 0;
  if (bad > 0) {
    report.push_back(fmt::format(
        "{} point references exceed pool size {}", bad, pool.size()));
  }
  for (const auto& p : cloud.positions) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      report.emplace_back("cloud contains non-finite positions");
      break;
    }
  }
  return report;
}

}  // namespace plaf
