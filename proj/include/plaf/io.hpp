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
#include <string>
#include <string_view>

namespace plaf {

// Interchange formats accepted at ingest. Every payload file <name> carries a
// JSON sidecar <name>.json describing its shape:
//
//   dense features / depth   raw f32 LE, row-major, channels innermost
//                            {"height", "width", "channels"}
//   masks                    {"height", "width", "count", "encoding"}
//     encoding "raw"         count stacked H×W u8 rasters (nonzero = inside)
//     encoding "rle"         per mask: u32 run count, then (u32 start,
//                            u32 length) pairs over row-major pixel indices
//   text embedding           raw f32 LE vector, {"label", "dim"}
//   camera                   JSON {"fx", "fy", "cx", "cy",
//                                  "pose": 16 row-major world-from-camera,
//                                  "depth": path relative to the JSON file}

std::filesystem::path sidecarPath(const std::filesystem::path& payload);

DenseFeatureMap readFeatureMap(const std::filesystem::path& path);
void writeFeatureMap(const DenseFeatureMap& feat,
                     const std::filesystem::path& path);

enum class MaskEncoding { kRaw, kRle };
MaskEncoding parseMaskEncoding(std::string_view name);

MaskSet readMasks(const std::filesystem::path& path);
void writeMasks(const MaskSet& masks, const std::filesystem::path& path,
                MaskEncoding encoding = MaskEncoding::kRle);

// Reads the camera JSON and the depth raster it points to.
CameraFrame readCamera(const std::filesystem::path& jsonPath);
// Writes the camera JSON plus its depth raster as <depthName> next to it.
void writeCamera(const CameraFrame& cam, const std::filesystem::path& jsonPath,
                 const std::string& depthName);

struct TextEmbedding {
  std::string label;
  FeatureVector embedding;
};

TextEmbedding readTextEmbedding(const std::filesystem::path& path);
void writeTextEmbedding(const TextEmbedding& text,
                        const std::filesystem::path& path);

}  // namespace plaf
