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

#include "plaf/lift3d.hpp"

#include "plaf/parallel.hpp"
#include "plaf/storage.hpp"

#include <fmt/core.h>

#include <Eigen/Geometry>

#include <cmath>
#include <limits>

namespace plaf {

namespace {

void requireValid(const std::vector<std::string>& report, const char* what) {
  if (!report.empty()) {
    throw Error(ErrorCode::kInvariantViolation,
                fmt::format("invalid {}: {}", what, report.front()));
  }
}

}  // namespace

void FusionConfig::check() const {
  if (!(similarityThreshold >= 0.0 && similarityThreshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("similarity threshold {} outside [0, 1]",
                            similarityThreshold));
  }
  if (!(voxelSize > 0.0) || !std::isfinite(voxelSize)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("voxel size {} must be positive", voxelSize));
  }
  if (pixelStride == 0) {
    throw Error(ErrorCode::kInvalidArgument, "pixel stride must be positive");
  }
}

BackProjection backProject(const CameraFrame& cam,
                           std::span<const std::uint16_t> indexMap,
                           std::size_t stride) {
  if (indexMap.size() != cam.height * cam.width) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("index map has {} pixels, depth has {}x{}",
                            indexMap.size(), cam.height, cam.width));
  }
  if (stride == 0) {
    throw Error(ErrorCode::kInvalidArgument, "pixel stride must be positive");
  }
  const auto& k = cam.intrinsics;
  const Eigen::Matrix3d rot = cam.poseWorldFromCamera.topLeftCorner<3, 3>();
  const Eigen::Vector3d trans = cam.poseWorldFromCamera.topRightCorner<3, 1>();

  BackProjection out;
  for (std::size_t v = 0; v < cam.height; v += stride) {
    for (std::size_t u = 0; u < cam.width; u += stride) {
      const std::size_t p = v * cam.width + u;
      const auto id = indexMap[p];
      if (id == 0) {
        ++out.skippedBackground;
        continue;
      }
      const double d = cam.depth[p];
      if (!(d > 0.0) || !std::isfinite(d)) {
        ++out.skippedInvalidDepth;
        continue;
      }
      const Eigen::Vector3d local((static_cast<double>(u) + 0.5 - k.cx) * d / k.fx,
                                  (static_cast<double>(v) + 0.5 - k.cy) * d / k.fy,
                                  d);
      out.points.push_back({rot * local + trans, id});
    }
  }
  return out;
}

Eigen::Vector2d project(const CameraFrame& cam, const Eigen::Vector3d& world) {
  const Eigen::Matrix3d rot = cam.poseWorldFromCamera.topLeftCorner<3, 3>();
  const Eigen::Vector3d trans = cam.poseWorldFromCamera.topRightCorner<3, 1>();
  const Eigen::Vector3d local = rot.transpose() * (world - trans);
  const auto& k = cam.intrinsics;
  return {k.fx * local.x() / local.z() + k.cx,
          k.fy * local.y() / local.z() + k.cy};
}

std::size_t MapBuilder::VoxelHash::operator()(const VoxelKey& k) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
  h ^= static_cast<std::uint64_t>(k.y) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(k.z) + 0x94D049BB133111EBULL + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

MapBuilder::MapBuilder(std::size_t dim, FusionConfig cfg)
    : cfg_(cfg), pool_(dim) {
  cfg_.check();
  if (dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "feature dim must be positive");
  }
}

std::uint32_t MapBuilder::insertDescriptor(std::span<const float> raw,
                                           FrameFusionReport& report) {
  const FeatureVector query = normalized(raw);
  std::size_t best = 0;
  double bestSim = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < pool_.size(); ++m) {
    const double sim = unitCosine(pool_.descriptor(m), query);
    if (sim > bestSim) {
      bestSim = sim;
      best = m;
    }
  }
  if (!pool_.empty() && bestSim >= cfg_.similarityThreshold) {
    const std::uint32_t count = pool_.count(best);
    if (count == std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorCode::kOverflow, "pool observation count overflow");
    }
    const auto current = pool_.descriptor(best);
    std::vector<double> merged(query.size());
    const double c = static_cast<double>(count);
    for (std::size_t i = 0; i < merged.size(); ++i) {
      merged[i] = (c * current[i] + static_cast<double>(query[i])) / (c + 1.0);
    }
    pool_.replace(best, normalized(std::span<const double>(merged)), count + 1);
    ++report.mergedEntries;
    return static_cast<std::uint32_t>(best);
  }
  if (pool_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kOverflow, "pool exceeds 32-bit references");
  }
  ++report.newEntries;
  return static_cast<std::uint32_t>(pool_.append(query, 1));
}

void MapBuilder::insertPoint(const Eigen::Vector3d& position, std::uint32_t ref,
                             FrameFusionReport& report) {
  const VoxelKey key{
      static_cast<std::int64_t>(std::floor(position.x() / cfg_.voxelSize)),
      static_cast<std::int64_t>(std::floor(position.y() / cfg_.voxelSize)),
      static_cast<std::int64_t>(std::floor(position.z() / cfg_.voxelSize))};
  const Point3f p{static_cast<float>(position.x()),
                  static_cast<float>(position.y()),
                  static_cast<float>(position.z())};
  auto [it, inserted] = voxels_.try_emplace(key, cloud_.size());
  if (inserted) {
    cloud_.positions.push_back(p);
    cloud_.refs.push_back(ref);
    ++report.pointsAdded;
  } else {
    cloud_.positions[it->second] = p;
    cloud_.refs[it->second] = ref;
    ++report.pointsReplaced;
  }
}

FrameFusionReport MapBuilder::fuseFrame(const MaskIndexedFrame& frame,
                                        const CameraFrame& cam) {
  requireValid(validate(cam), "camera");
  if (frame.height != cam.height || frame.width != cam.width) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("frame is {}x{} but depth is {}x{}", frame.height,
                            frame.width, cam.height, cam.width));
  }
  return fuseFrame(frame, backProject(cam, frame.indexMap, cfg_.pixelStride));
}

FrameFusionReport MapBuilder::fuseFrame(const MaskIndexedFrame& frame,
                                        const BackProjection& lifted) {
  requireValid(validate(frame), "frame");
  if (frame.dim != pool_.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("frame dim {} does not match pool dim {}",
                            frame.dim, pool_.dim()));
  }
  FrameFusionReport report;
  report.skippedBackground = lifted.skippedBackground;
  report.skippedInvalidDepth = lifted.skippedInvalidDepth;
  report.maskRefs.reserve(frame.maskCount);
  for (std::size_t id = 1; id <= frame.maskCount; ++id) {
    report.maskRefs.push_back(insertDescriptor(frame.feature(id), report));
  }
  for (const auto& pt : lifted.points) {
    insertPoint(pt.position, report.maskRefs[pt.maskId - 1], report);
  }
  return report;
}

BuiltMap buildMap(std::span<const FrameObservation> frames,
                  const FusionConfig& cfg) {
  cfg.check();
  if (frames.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "buildMap needs at least one frame");
  }
  const std::size_t dim = frames.front().frame.dim;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& obs = frames[i];
    if (obs.frame.dim != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("frame {} has dim {}, expected {}", i,
                              obs.frame.dim, dim));
    }
    requireValid(validate(obs.camera), "camera");
    if (obs.frame.height != obs.camera.height ||
        obs.frame.width != obs.camera.width) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("frame {} is {}x{} but its depth is {}x{}", i,
                              obs.frame.height, obs.frame.width,
                              obs.camera.height, obs.camera.width));
    }
  }

  std::vector<BackProjection> lifted(frames.size());
  parallelFor(frames.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      lifted[i] = backProject(frames[i].camera, frames[i].frame.indexMap,
                              cfg.pixelStride);
    }
  });

  MapBuilder builder(dim, cfg);
  BuiltMap out;
  out.report.dim = dim;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out.report.masksIngested += frames[i].frame.maskCount;
    out.report.frames.push_back(builder.fuseFrame(frames[i].frame, lifted[i]));
    lifted[i] = {};
  }
  out.pool = builder.takePool();
  out.cloud = builder.takeCloud();

  auto& r = out.report;
  r.points = out.cloud.size();
  r.poolSize = out.pool.size();
  r.refBytes = referenceBytes(r.poolSize);
  if (r.points > 0) {
    StorageModel m;
    m.points = r.points;
    m.poolSize = r.poolSize;
    m.dim = dim;
    m.refBytes = r.refBytes;
    r.dense3DBytes = dense3DCost(m);
    r.indexRef3DBytes = indexRef3DCost(m);
    r.ratio3D = ratio3D(m);
  }
  return out;
}

}  // namespace plaf
