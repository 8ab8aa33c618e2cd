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

#include "plaf/io.hpp"

#include "byteio.hpp"
#include "plaf/storage.hpp"

#include <fmt/core.h>
#include "json.hpp"

#include <fstream>

namespace plaf {

namespace {

using nlohmann::json;

json readJson(const std::filesystem::path& path) {
  const auto bytes = readFileBytes(path);
  try {
    return json::parse(reinterpret_cast<const char*>(bytes.data()),
                       reinterpret_cast<const char*>(bytes.data()) + bytes.size());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat,
                fmt::format("{}: invalid JSON ({})", path.string(), e.what()));
  }
}

void writeJson(const json& doc, const std::filesystem::path& path) {
  const std::string text = doc.dump(2) + "\n";
  writeFileBytes(path, std::as_bytes(std::span(text.data(), text.size())));
}

template <typename T>
T field(const json& doc, const char* key, const std::filesystem::path& path) {
  if (!doc.contains(key)) {
    throw Error(ErrorCode::kFormat,
                fmt::format("{}: missing field '{}'", path.string(), key));
  }
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, fmt::format("{}: field '{}': {}",
                                                path.string(), key, e.what()));
  }
}

void expectSize(const std::vector<std::byte>& bytes, std::uint64_t expected,
                const std::filesystem::path& path) {
  if (bytes.size() < expected) {
    throw Error(ErrorCode::kTruncated,
                fmt::format("{}: truncated payload: {} bytes, expected {} "
                            "(data ends at offset {})",
                            path.string(), bytes.size(), expected,
                            bytes.size()));
  }
  if (bytes.size() > expected) {
    throw Error(ErrorCode::kFormat,
                fmt::format("{}: {} unexpected trailing bytes after offset {}",
                            path.string(), bytes.size() - expected, expected));
  }
}

struct RawFloats {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> values;
};

RawFloats readRawFloats(const std::filesystem::path& path) {
  const auto side = readJson(sidecarPath(path));
  RawFloats raw;
  raw.height = field<std::size_t>(side, "height", sidecarPath(path));
  raw.width = field<std::size_t>(side, "width", sidecarPath(path));
  raw.channels = side.contains("channels")
                     ? field<std::size_t>(side, "channels", sidecarPath(path))
                     : 1;
  if (raw.height == 0 || raw.width == 0 || raw.channels == 0) {
    throw Error(ErrorCode::kFormat,
                fmt::format("{}: sidecar dimensions must be positive",
                            path.string()));
  }
  const auto bytes = readFileBytes(path);
  expectSize(bytes, raw.height * raw.width * raw.channels * 4, path);
  raw.values = detail::loadArray<float>(bytes.data(), bytes.size() / 4);
  return raw;
}

void writeRawFloats(std::span<const float> values, const json& sidecar,
                    const std::filesystem::path& path) {
  detail::ByteWriter out(values.size() * 4);
  out.putArray<float>(values);
  const auto bytes = out.take();
  writeFileBytes(path, bytes);
  writeJson(sidecar, sidecarPath(path));
}

std::filesystem::path resolveRelative(const std::filesystem::path& base,
                                      const std::string& ref) {
  std::filesystem::path p(ref);
  if (p.is_absolute()) return p;
  return base.parent_path() / p;
}

}  // namespace

std::filesystem::path sidecarPath(const std::filesystem::path& payload) {
  auto out = payload;
  out += ".json";
  return out;
}

DenseFeatureMap readFeatureMap(const std::filesystem::path& path) {
  auto raw = readRawFloats(path);
  try {
    return DenseFeatureMap(raw.height, raw.width, raw.channels,
                           std::move(raw.values));
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

void writeFeatureMap(const DenseFeatureMap& feat,
                     const std::filesystem::path& path) {
  writeRawFloats(feat.data,
                 json{{"height", feat.height},
                      {"width", feat.width},
                      {"channels", feat.dim}},
                 path);
}

MaskEncoding parseMaskEncoding(std::string_view name) {
  if (name == "raw") return MaskEncoding::kRaw;
  if (name == "rle") return MaskEncoding::kRle;
  throw Error(ErrorCode::kInvalidArgument,
              fmt::format("unknown mask encoding '{}'", name));
}

MaskSet readMasks(const std::filesystem::path& path) {
  const auto sidePath = sidecarPath(path);
  const auto side = readJson(sidePath);
  const auto height = field<std::size_t>(side, "height", sidePath);
  const auto width = field<std::size_t>(side, "width", sidePath);
  const auto count = field<std::size_t>(side, "count", sidePath);
  const auto encoding =
      parseMaskEncoding(field<std::string>(side, "encoding", sidePath));
  if (height == 0 || width == 0) {
    throw Error(ErrorCode::kFormat,
                fmt::format("{}: mask size must be positive", sidePath.string()));
  }
  const std::size_t pixels = height * width;
  const auto bytes = readFileBytes(path);
  std::vector<std::vector<std::uint8_t>> masks(
      count, std::vector<std::uint8_t>(pixels, 0));

  if (encoding == MaskEncoding::kRaw) {
    expectSize(bytes, count * pixels, path);
    for (std::size_t k = 0; k < count; ++k) {
      for (std::size_t p = 0; p < pixels; ++p) {
        masks[k][p] = std::to_integer<std::uint8_t>(bytes[k * pixels + p]) != 0;
      }
    }
  } else {
    std::size_t offset = 0;
    auto u32 = [&]() {
      if (offset + 4 > bytes.size()) {
        throw Error(ErrorCode::kTruncated,
                    fmt::format("{}: truncated payload at offset {}",
                                path.string(), offset));
      }
      const auto v = detail::loadLE<std::uint32_t>(bytes.data() + offset);
      offset += 4;
      return v;
    };
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t runs = u32();
      for (std::size_t r = 0; r < runs; ++r) {
        const std::size_t runOffset = offset;
        const std::size_t start = u32();
        const std::size_t length = u32();
        if (start + length > pixels) {
          throw Error(ErrorCode::kFormat,
                      fmt::format("{}: mask {} run at offset {} exceeds "
                                  "{} pixels",
                                  path.string(), k, runOffset, pixels));
        }
        std::fill_n(masks[k].begin() + static_cast<std::ptrdiff_t>(start),
                    length, std::uint8_t{1});
      }
    }
    if (offset != bytes.size()) {
      throw Error(ErrorCode::kFormat,
                  fmt::format("{}: {} unexpected trailing bytes after offset {}",
                              path.string(), bytes.size() - offset, offset));
    }
  }
  try {
    return MaskSet(height, width, std::move(masks));
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

void writeMasks(const MaskSet& masks, const std::filesystem::path& path,
                MaskEncoding encoding) {
  detail::ByteWriter out(masks.size() * masks.pixelCount());
  if (encoding == MaskEncoding::kRaw) {
    for (std::size_t k = 0; k < masks.size(); ++k) {
      out.putArray<std::uint8_t>(masks.mask(k));
    }
  } else {
    std::vector<std::uint32_t> runs;
    for (std::size_t k = 0; k < masks.size(); ++k) {
      runs.clear();
      const auto m = masks.mask(k);
      std::size_t p = 0;
      while (p < m.size()) {
        if (!m[p]) {
          ++p;
          continue;
        }
        const std::size_t start = p;
        while (p < m.size() && m[p]) ++p;
        runs.push_back(static_cast<std::uint32_t>(start));
        runs.push_back(static_cast<std::uint32_t>(p - start));
      }
      out.put<std::uint32_t>(static_cast<std::uint32_t>(runs.size() / 2));
      out.putArray<std::uint32_t>(runs);
    }
  }
  writeFileBytes(path, out.take());
  writeJson(json{{"height", masks.height()},
                 {"width", masks.width()},
                 {"count", masks.size()},
                 {"encoding", encoding == MaskEncoding::kRaw ? "raw" : "rle"}},
            sidecarPath(path));
}

CameraFrame readCamera(const std::filesystem::path& jsonPath) {
  const auto doc = readJson(jsonPath);
  CameraFrame cam;
  cam.intrinsics.fx = field<double>(doc, "fx", jsonPath);
  cam.intrinsics.fy = field<double>(doc, "fy", jsonPath);
  cam.intrinsics.cx = field<double>(doc, "cx", jsonPath);
  cam.intrinsics.cy = field<double>(doc, "cy", jsonPath);
  const auto pose = field<std::vector<double>>(doc, "pose", jsonPath);
  if (pose.size() != 16) {
    throw Error(ErrorCode::kFormat,
                fmt::format("{}: pose must have 16 entries, got {}",
                            jsonPath.string(), pose.size()));
  }
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) cam.poseWorldFromCamera(r, c) = pose[r * 4 + c];
  }
  const auto depthPath =
      resolveRelative(jsonPath, field<std::string>(doc, "depth", jsonPath));
  auto raw = readRawFloats(depthPath);
  if (raw.channels != 1) {
    throw Error(ErrorCode::kFormat,
                fmt::format("{}: depth must have 1 channel", depthPath.string()));
  }
  cam.height = raw.height;
  cam.width = raw.width;
  cam.depth = std::move(raw.values);
  const auto report = validate(cam);
  if (!report.empty()) {
    throw Error(ErrorCode::kInvariantViolation,
                fmt::format("{}: {}", jsonPath.string(), report.front()));
  }
  return cam;
}

void writeCamera(const CameraFrame& cam, const std::filesystem::path& jsonPath,
                 const std::string& depthName) {
  std::vector<double> pose(16);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) pose[r * 4 + c] = cam.poseWorldFromCamera(r, c);
  }
  writeRawFloats(cam.depth,
                 json{{"height", cam.height}, {"width", cam.width}, {"channels", 1}},
                 jsonPath.parent_path() / depthName);
  writeJson(json{{"fx", cam.intrinsics.fx},
                 {"fy", cam.intrinsics.fy},
                 {"cx", cam.intrinsics.cx},
                 {"cy", cam.intrinsics.cy},
                 {"pose", pose},
                 {"depth", depthName}},
            jsonPath);
}

TextEmbedding readTextEmbedding(const std::filesystem::path& path) {
  const auto sidePath = sidecarPath(path);
  const auto side = readJson(sidePath);
  TextEmbedding text;
  text.label = field<std::string>(side, "label", sidePath);
  const auto dim = field<std::size_t>(side, "dim", sidePath);
  if (dim == 0) {
    throw Error(ErrorCode::kFormat,
                fmt::format("{}: dim must be positive", sidePath.string()));
  }
  const auto bytes = readFileBytes(path);
  expectSize(bytes, dim * 4, path);
  text.embedding = detail::loadArray<float>(bytes.data(), dim);
  if (!allFinite(text.embedding) || l2Norm(text.embedding) == 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{}: embedding must be finite and non-zero",
                            path.string()));
  }
  return text;
}

void writeTextEmbedding(const TextEmbedding& text,
                        const std::filesystem::path& path) {
  writeRawFloats(text.embedding,
                 json{{"label", text.label}, {"dim", text.embedding.size()}},
                 path);
}

}  // namespace plaf
