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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace plaf {

// Parameters of the semantic storage cost model. Each cost function checks
// only the fields it uses.
struct StorageModel {
  std::uint64_t height = 0;      // H, pixels
  std::uint64_t width = 0;       // W, pixels
  std::uint64_t dim = 0;         // C
  std::uint64_t masks = 0;       // K, masks per image
  std::uint64_t points = 0;      // N, 3D points
  std::uint64_t poolSize = 0;    // M, unique descriptors
  std::uint64_t floatBytes = 4;  // b_f
  std::uint64_t indexBytes = 2;  // b_i
  std::uint64_t refBytes = 2;    // b_r
};

// Dense per-pixel storage: H·W·C·b_f.
std::uint64_t dense2DCost(const StorageModel& m);
// Mask-indexed storage: H·W·b_i + K·C·b_f.
std::uint64_t maskIndexed2DCost(const StorageModel& m);
// maskIndexed2DCost / dense2DCost.
double ratio2D(const StorageModel& m);
// b_i / (C·b_f) + K / (H·W).
double ratio2DClosedForm(const StorageModel& m);

// Dense per-point storage: N·C·b_f.
std::uint64_t dense3DCost(const StorageModel& m);
// Index-and-reference storage: N·b_r + M·C·b_f.
std::uint64_t indexRef3DCost(const StorageModel& m);
double ratio3D(const StorageModel& m);
// b_r / (C·b_f) + M / N.
double ratio3DClosedForm(const StorageModel& m);

// "1.26 GB", "1.43 MB" (decimal units, two decimals).
std::string formatBytes(std::uint64_t bytes);
// "0.114%" (three decimals).
std::string formatPercent(double ratio);

// --- binary containers ----------------------------------------------------
//
// Both containers are little-endian: an 8-byte magic, a u32 version, a dims
// block, zero padding up to a fixed 64-byte header, then raw row-major
// payloads with no padding between sections.
//
// .plaf2d  offset  field
//          0       "PLAF2D\0\0"
//          8       u32 version (1)
//          12      u32 height      16  u32 width
//          20      u32 mask count  24  u32 feature dim
//          28      u32 index bytes (2)
//          32      u32 float bytes (4)
//          64      u16 index map [H·W]
//                  f32 feature table [K·C]
//
// .plaf3d  offset  field
//          0       "PLAF3D\0\0"
//          8       u32 version (1)
//          12      u32 feature dim
//          16      u64 point count N
//          24      u64 pool size M
//          32      u32 reference bytes (2, or 4 when M > 65535)
//          36      u32 float bytes (4)
//          64      u16|u32 references [N]
//                  f32 descriptors [M·C]
//                  u32 observation counts [M]
//                  f32 positions [N·3]

inline constexpr std::size_t kHeaderBytes = 64;
inline constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t frameFileSize(std::uint64_t height, std::uint64_t width,
                            std::uint64_t masks, std::uint64_t dim);

std::vector<std::byte> encodeFrame(const MaskIndexedFrame& frame);
MaskIndexedFrame decodeFrame(std::span<const std::byte> bytes);
void writeFrame(const MaskIndexedFrame& frame, const std::filesystem::path& path);
MaskIndexedFrame readFrame(const std::filesystem::path& path);

struct SemanticMap {
  FeaturePool pool;
  SemanticPointCloud cloud;
};

struct MapLayout {
  std::uint64_t refBytes = 2;
  std::uint64_t refsOffset = 0;
  std::uint64_t refsSize = 0;
  std::uint64_t descriptorsOffset = 0;
  std::uint64_t descriptorsSize = 0;
  std::uint64_t countsOffset = 0;
  std::uint64_t countsSize = 0;
  std::uint64_t positionsOffset = 0;
  std::uint64_t positionsSize = 0;
  std::uint64_t totalSize = 0;

  // References plus descriptors, the part priced by indexRef3DCost.
  std::uint64_t semanticPayload() const { return refsSize + descriptorsSize; }
};

MapLayout mapLayout(std::uint64_t points, std::uint64_t poolSize,
                    std::uint64_t dim);

std::vector<std::byte> encodeMap(const FeaturePool& pool,
                                 const SemanticPointCloud& cloud);
SemanticMap decodeMap(std::span<const std::byte> bytes);
void writeMap(const FeaturePool& pool, const SemanticPointCloud& cloud,
              const std::filesystem::path& path);
SemanticMap readMap(const std::filesystem::path& path);

enum class ArtifactKind { kFrame, kMap, kUnknown };
ArtifactKind sniffArtifact(const std::filesystem::path& path);

// Whole-file helpers shared by the readers. readFileBytes throws
// kInputMissing for a missing path.
std::vector<std::byte> readFileBytes(const std::filesystem::path& path);
void writeFileBytes(const std::filesystem::path& path,
                    std::span<const std::byte> bytes);

}  // namespace plaf
