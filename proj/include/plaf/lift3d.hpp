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

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace plaf {

struct FusionConfig {
  double similarityThreshold = 0.90;  // tau, cosine needed to merge
  double voxelSize = 0.02;            // meters
  std::size_t pixelStride = 4;        // lift every s-th pixel in u and v

  // Throws kInvalidArgument when out of range.
  void check() const;
};

struct LiftedPoint {
  Eigen::Vector3d position;  // world frame, meters
  std::uint16_t maskId = 0;
};

struct BackProjection {
  std::vector<LiftedPoint> points;
  std::size_t skippedBackground = 0;
  std::size_t skippedInvalidDepth = 0;
};

// Lifts pixels (u, v) = (s·i, s·j) with a mask ID and valid depth d to
//   world = pose · ((u + 0.5 - cx)·d/fx, (v + 0.5 - cy)·d/fy, d).
// Points are emitted in row-major pixel order.
BackProjection backProject(const CameraFrame& cam,
                           std::span<const std::uint16_t> indexMap,
                           std::size_t stride);

// Inverse of backProject: continuous pixel coordinates (x, y) of a world
// point, where the center of pixel (u, v) is (u + 0.5, v + 0.5).
Eigen::Vector2d project(const CameraFrame& cam, const Eigen::Vector3d& world);

struct FrameFusionReport {
  std::size_t newEntries = 0;
  std::size_t mergedEntries = 0;
  std::size_t pointsAdded = 0;     // points that opened a new voxel
  std::size_t pointsReplaced = 0;  // points that overwrote an occupied voxel
  std::size_t skippedBackground = 0;
  std::size_t skippedInvalidDepth = 0;
  std::vector<std::uint32_t> maskRefs;  // pool entry chosen for mask ID k+1
};

// Incremental fusion of frames into a feature pool and a voxel-deduplicated
// semantic point cloud. Masks are matched greedily in frame order against the
// pool by cosine similarity; a match at or above tau is merged into the
// entry's observation-weighted mean (renormalized), otherwise appended.
class MapBuilder {
 public:
  MapBuilder(std::size_t dim, FusionConfig cfg);

  FrameFusionReport fuseFrame(const MaskIndexedFrame& frame,
                              const CameraFrame& cam);
  // Same as above with an already computed back-projection of frame.
  FrameFusionReport fuseFrame(const MaskIndexedFrame& frame,
                              const BackProjection& lifted);

  const FeaturePool& pool() const { return pool_; }
  const SemanticPointCloud& cloud() const { return cloud_; }
  const FusionConfig& config() const { return cfg_; }

  FeaturePool takePool() { return std::move(pool_); }
  SemanticPointCloud takeCloud() { return std::move(cloud_); }

 private:
  struct VoxelKey {
    std::int64_t x, y, z;
    friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
  };
  struct VoxelHash {
    std::size_t operator()(const VoxelKey& k) const noexcept;
  };

  std::uint32_t insertDescriptor(std::span<const float> raw,
                                 FrameFusionReport& report);
  void insertPoint(const Eigen::Vector3d& position, std::uint32_t ref,
                   FrameFusionReport& report);

  FusionConfig cfg_;
  FeaturePool pool_;
  SemanticPointCloud cloud_;
  std::unordered_map<VoxelKey, std::size_t, VoxelHash> voxels_;
};

struct FrameObservation {
  MaskIndexedFrame frame;
  CameraFrame camera;
};

struct BuildReport {
  std::vector<FrameFusionReport> frames;
  std::size_t masksIngested = 0;
  std::size_t points = 0;    // N
  std::size_t poolSize = 0;  // M
  std::size_t dim = 0;       // C
  std::size_t refBytes = 2;  // b_r chosen for the pool size
  // Realized semantic storage; zero when the map has no points.
  std::uint64_t dense3DBytes = 0;
  std::uint64_t indexRef3DBytes = 0;
  double ratio3D = 0.0;
};

struct BuiltMap {
  FeaturePool pool;
  SemanticPointCloud cloud;
  BuildReport report;
};

// Sequential fold of fuseFrame over frames in the given order. Back-projection
// runs in parallel; fusion order is fixed, so the output is deterministic.
BuiltMap buildMap(std::span<const FrameObservation> frames,
                  const FusionConfig& cfg);

}  // namespace plaf
