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
#include "plaf/io.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace plaf {

// Deterministic toy scene: axis-aligned boxes standing in a 6×6×3 m room,
// observed by cameras on a circle around the room center. Every object owns a
// unit descriptor orthogonal to all others; feature maps carry that
// descriptor plus Gaussian noise inside the object's mask.
struct SyntheticSceneSpec {
  std::size_t objectCount = 5;
  std::size_t dim = 16;
  std::size_t height = 120;
  std::size_t width = 160;
  std::size_t frameCount = 8;
  double noise = 0.05;  // per-channel standard deviation
  std::uint64_t seed = 7;

  void check() const;
};

struct SyntheticBox {
  Eigen::Vector3d lo;
  Eigen::Vector3d hi;
};

struct SyntheticFrame {
  DenseFeatureMap features;
  MaskSet masks;
  std::vector<std::size_t> maskObjects;  // object index of each mask
  CameraFrame camera;
};

struct SyntheticScene {
  SyntheticSceneSpec spec;
  std::vector<FeatureVector> descriptors;  // one per object, orthonormal
  std::vector<SyntheticBox> boxes;
  std::vector<SyntheticFrame> frames;

  // Object whose box (grown by tolerance) contains the point, -1 if none.
  int objectAt(const Eigen::Vector3d& point, double tolerance = 1e-3) const;
};

SyntheticScene generateScene(const SyntheticSceneSpec& spec);

struct SyntheticSceneFiles {
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> features;
  std::vector<std::filesystem::path> masks;
  std::vector<std::filesystem::path> cameras;
  std::vector<std::filesystem::path> embeddings;
};

// Writes per-frame feature/mask/depth/camera files, one text-embedding file
// per object (its clean descriptor) and a scene.json manifest.
SyntheticSceneFiles writeScene(const SyntheticScene& scene,
                               const std::filesystem::path& outDir,
                               MaskEncoding encoding = MaskEncoding::kRle);

}  // namespace plaf
