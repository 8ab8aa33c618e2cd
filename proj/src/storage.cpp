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

#include "plaf/storage.hpp"

#include "byteio.hpp"

#include <fmt/core.h>

#include <cstring>
#include <fstream>

namespace plaf {

namespace {

using detail::ByteWriter;
using detail::loadArray;
using detail::loadLE;

constexpr char kFrameMagic[8] = {'P', 'L', 'A', 'F', '2', 'D', '\0', '\0'};
constexpr char kMapMagic[8] = {'P', 'L', 'A', 'F', '3', 'D', '\0', '\0'};

std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw Error(ErrorCode::kOverflow,
                fmt::format("storage cost overflow: {} * {}", a, b));
  }
  return out;
}

std::uint64_t add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) {
    throw Error(ErrorCode::kOverflow,
                fmt::format("storage cost overflow: {} + {}", a, b));
  }
  return out;
}

void requirePositive(std::uint64_t v, const char* name) {
  if (v == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("storage model: {} must be positive", name));
  }
}

void requireWidth(std::uint64_t v, const char* name) {
  if (v != 2 && v != 4) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("storage model: {} must be 2 or 4, got {}", name, v));
  }
}

void check2DDense(const StorageModel& m) {
  requirePositive(m.height, "H");
  requirePositive(m.width, "W");
  requirePositive(m.dim, "C");
  requireWidth(m.floatBytes, "b_f");
}

void check3DDense(const StorageModel& m) {
  requirePositive(m.points, "N");
  requirePositive(m.dim, "C");
  requireWidth(m.floatBytes, "b_f");
}

bool hasMagic(std::span<const std::byte> bytes, const char (&magic)[8]) {
  return bytes.size() >= 8 && std::memcmp(bytes.data(), magic, 8) == 0;
}

void checkHeader(std::span<const std::byte> bytes, const char (&magic)[8],
                 const char* kind) {
  if (bytes.size() < kHeaderBytes) {
    if (bytes.size() >= 8 && !hasMagic(bytes, magic)) {
      throw Error(ErrorCode::kBadMagic, fmt::format("not a {} file", kind));
    }
    throw Error(ErrorCode::kTruncated,
                fmt::format("truncated payload: {} header needs {} bytes, "
                            "got {}",
                            kind, kHeaderBytes, bytes.size()));
  }
  if (!hasMagic(bytes, magic)) {
    throw Error(ErrorCode::kBadMagic, fmt::format("not a {} file", kind));
  }
  const auto version = loadLE<std::uint32_t>(bytes.data() + 8);
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kBadVersion,
                fmt::format("{} version {} is not supported (expected {})",
                            kind, version, kFormatVersion));
  }
}

void checkSize(std::span<const std::byte> bytes, std::uint64_t expected,
               const char* kind) {
  if (bytes.size() < expected) {
    throw Error(ErrorCode::kTruncated,
                fmt::format("truncated payload: {} has {} bytes, expected {}",
                            kind, bytes.size(), expected));
  }
  if (bytes.size() > expected) {
    throw Error(ErrorCode::kFormat,
                fmt::format("{} has {} trailing bytes", kind,
                            bytes.size() - expected));
  }
}

std::string joinReport(const std::vector<std::string>& report) {
  std::string out;
  for (const auto& line : report) {
    if (!out.empty()) out += "; ";
    out += line;
  }
  return out;
}

}  // namespace

std::uint64_t dense2DCost(const StorageModel& m) {
  check2DDense(m);
  return mul(mul(mul(m.height, m.width), m.dim), m.floatBytes);
}

std::uint64_t maskIndexed2DCost(const StorageModel& m) {
  check2DDense(m);
  requireWidth(m.indexBytes, "b_i");
  return add(mul(mul(m.height, m.width), m.indexBytes),
             mul(mul(m.masks, m.dim), m.floatBytes));
}

double ratio2D(const StorageModel& m) {
  return static_cast<double>(maskIndexed2DCost(m)) /
         static_cast<double>(dense2DCost(m));
}

double ratio2DClosedForm(const StorageModel& m) {
  check2DDense(m);
  requireWidth(m.indexBytes, "b_i");
  const double pixels =
      static_cast<double>(m.height) * static_cast<double>(m.width);
  return static_cast<double>(m.indexBytes) /
             (static_cast<double>(m.dim) * static_cast<double>(m.floatBytes)) +
         static_cast<double>(m.masks) / pixels;
}

std::uint64_t dense3DCost(const StorageModel& m) {
  check3DDense(m);
  return mul(mul(m.points, m.dim), m.floatBytes);
}

std::uint64_t indexRef3DCost(const StorageModel& m) {
  check3DDense(m);
  requireWidth(m.refBytes, "b_r");
  return add(mul(m.points, m.refBytes),
             mul(mul(m.poolSize, m.dim), m.floatBytes));
}

double ratio3D(const StorageModel& m) {
  return static_cast<double>(indexRef3DCost(m)) /
         static_cast<double>(dense3DCost(m));
}

double ratio3DClosedForm(const StorageModel& m) {
  check3DDense(m);
  requireWidth(m.refBytes, "b_r");
  return static_cast<double>(m.refBytes) /
             (static_cast<double>(m.dim) * static_cast<double>(m.floatBytes)) +
         static_cast<double>(m.poolSize) / static_cast<double>(m.points);
}

std::string formatBytes(std::uint64_t bytes) {
  static constexpr const char* kUnits[] = {"B", "kB", "MB", "GB", "TB", "PB"};
  double value = static_cast<double>(bytes);
  std::size_t unit = 0;
  while (value >= 1000.0 && unit + 1 < std::size(kUnits)) {
    value /= 1000.0;
    ++unit;
  }
  if (unit == 0) return fmt::format("{} B", bytes);
  return fmt::format("{:.2f} {}", value, kUnits[unit]);
}

std::string formatPercent(double ratio) {
  return fmt::format("{:.3f}%", ratio * 100.0);
}

std::uint64_t frameFileSize(std::uint64_t height, std::uint64_t width,
                            std::uint64_t masks, std::uint64_t dim) {
  StorageModel m;
  m.height = height;
  m.width = width;
  m.masks = masks;
  m.dim = dim;
  return add(maskIndexed2DCost(m), kHeaderBytes);
}

std::vector<std::byte> encodeFrame(const MaskIndexedFrame& frame) {
  const auto report = validate(frame);
  if (!report.empty()) {
    throw Error(ErrorCode::kInvariantViolation,
                "refusing to write invalid frame: " + joinReport(report));
  }
  const auto size =
      frameFileSize(frame.height, frame.width, frame.maskCount, frame.dim);
  ByteWriter out(size);
  out.putBytes(kFrameMagic, 8);
  out.put<std::uint32_t>(kFormatVersion);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(frame.height));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(frame.width));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(frame.maskCount));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(frame.dim));
  out.put<std::uint32_t>(2);
  out.put<std::uint32_t>(4);
  out.padTo(kHeaderBytes);
  out.putArray<std::uint16_t>(frame.indexMap);
  out.putArray<float>(frame.featureTable);
  return out.take();
}

MaskIndexedFrame decodeFrame(std::span<const std::byte> bytes) {
  checkHeader(bytes, kFrameMagic, ".plaf2d");
  const std::byte* h = bytes.data();
  MaskIndexedFrame frame;
  frame.height = loadLE<std::uint32_t>(h + 12);
  frame.width = loadLE<std::uint32_t>(h + 16);
  frame.maskCount = loadLE<std::uint32_t>(h + 20);
  frame.dim = loadLE<std::uint32_t>(h + 24);
  const auto indexBytes = loadLE<std::uint32_t>(h + 28);
  const auto floatBytes = loadLE<std::uint32_t>(h + 32);
  if (indexBytes != 2 || floatBytes != 4) {
    throw Error(ErrorCode::kFormat,
                fmt::format(".plaf2d element widths ({}, {}) unsupported",
                            indexBytes, floatBytes));
  }
  if (frame.height == 0 || frame.width == 0 || frame.dim == 0) {
    throw Error(ErrorCode::kInvariantViolation,
                ".plaf2d header has a zero dimension");
  }
  checkSize(bytes,
            frameFileSize(frame.height, frame.width, frame.maskCount,
                          frame.dim),
            ".plaf2d");
  const std::byte* p = h + kHeaderBytes;
  const std::size_t pixels = frame.height * frame.width;
  frame.indexMap = loadArray<std::uint16_t>(p, pixels);
  p += pixels * 2;
  frame.featureTable = loadArray<float>(p, frame.maskCount * frame.dim);
  const auto report = validate(frame);
  if (!report.empty()) {
    throw Error(ErrorCode::kInvariantViolation,
                ".plaf2d failed validation: " + joinReport(report));
  }
  return frame;
}

void writeFrame(const MaskIndexedFrame& frame,
                const std::filesystem::path& path) {
  writeFileBytes(path, encodeFrame(frame));
}

MaskIndexedFrame readFrame(const std::filesystem::path& path) {
  try {
    return decodeFrame(readFileBytes(path));
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

MapLayout mapLayout(std::uint64_t points, std::uint64_t poolSize,
                    std::uint64_t dim) {
  MapLayout l;
  l.refBytes = referenceBytes(poolSize);
  l.refsOffset = kHeaderBytes;
  l.refsSize = mul(points, l.refBytes);
  l.descriptorsOffset = add(l.refsOffset, l.refsSize);
  l.descriptorsSize = mul(mul(poolSize, dim), 4);
  l.countsOffset = add(l.descriptorsOffset, l.descriptorsSize);
  l.countsSize = mul(poolSize, 4);
  l.positionsOffset = add(l.countsOffset, l.countsSize);
  l.positionsSize = mul(points, 12);
  l.totalSize = add(l.positionsOffset, l.positionsSize);
  return l;
}

std::vector<std::byte> encodeMap(const FeaturePool& pool,
                                 const SemanticPointCloud& cloud) {
  const auto report = validate(pool, cloud);
  if (!report.empty()) {
    throw Error(ErrorCode::kInvariantViolation,
                "refusing to write invalid map: " + joinReport(report));
  }
  const auto layout = mapLayout(cloud.size(), pool.size(), pool.dim());
  ByteWriter out(layout.totalSize);
  out.putBytes(kMapMagic, 8);
  out.put<std::uint32_t>(kFormatVersion);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(pool.dim()));
  out.put<std::uint64_t>(cloud.size());
  out.put<std::uint64_t>(pool.size());
  out.put<std::uint32_t>(static_cast<std::uint32_t>(layout.refBytes));
  out.put<std::uint32_t>(4);
  out.padTo(kHeaderBytes);
  if (layout.refBytes == 2) {
    std::vector<std::uint16_t> narrow(cloud.refs.begin(), cloud.refs.end());
    out.putArray<std::uint16_t>(narrow);
  } else {
    out.putArray<std::uint32_t>(cloud.refs);
  }
  out.putArray<float>(pool.descriptors());
  out.putArray<std::uint32_t>(pool.counts());
  for (const auto& p : cloud.positions) {
    out.put(p.x);
    out.put(p.y);
    out.put(p.z);
  }
  return out.take();
}

SemanticMap decodeMap(std::span<const std::byte> bytes) {
  checkHeader(bytes, kMapMagic, ".plaf3d");
  const std::byte* h = bytes.data();
  const auto dim = loadLE<std::uint32_t>(h + 12);
  const auto points = loadLE<std::uint64_t>(h + 16);
  const auto poolSize = loadLE<std::uint64_t>(h + 24);
  const auto refBytes = loadLE<std::uint32_t>(h + 32);
  const auto floatBytes = loadLE<std::uint32_t>(h + 36);
  if (dim == 0) {
    throw Error(ErrorCode::kInvariantViolation, ".plaf3d feature dim is zero");
  }
  const auto layout = mapLayout(points, poolSize, dim);
  if (refBytes != layout.refBytes || floatBytes != 4) {
    throw Error(ErrorCode::kFormat,
                fmt::format(".plaf3d element widths ({}, {}) inconsistent "
                            "with pool size {}",
                            refBytes, floatBytes, poolSize));
  }
  checkSize(bytes, layout.totalSize, ".plaf3d");

  SemanticMap map;
  map.pool = FeaturePool(dim);
  const std::byte* base = bytes.data();
  if (refBytes == 2) {
    const auto narrow = loadArray<std::uint16_t>(base + layout.refsOffset, points);
    map.cloud.refs.assign(narrow.begin(), narrow.end());
  } else {
    map.cloud.refs = loadArray<std::uint32_t>(base + layout.refsOffset, points);
  }
  const auto descriptors =
      loadArray<float>(base + layout.descriptorsOffset, poolSize * dim);
  const auto counts =
      loadArray<std::uint32_t>(base + layout.countsOffset, poolSize);
  for (std::size_t m = 0; m < poolSize; ++m) {
    map.pool.append(std::span<const float>(descriptors).subspan(m * dim, dim),
                    counts[m]);
  }
  const auto coords = loadArray<float>(base + layout.positionsOffset, points * 3);
  map.cloud.positions.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    map.cloud.positions[i] = {coords[3 * i], coords[3 * i + 1],
                              coords[3 * i + 2]};
  }
  const auto report = validate(map.pool, map.cloud);
  if (!report.empty()) {
    throw Error(ErrorCode::kInvariantViolation,
                ".plaf3d failed validation: " + joinReport(report));
  }
  return map;
}

void writeMap(const FeaturePool& pool, const SemanticPointCloud& cloud,
              const std::filesystem::path& path) {
  writeFileBytes(path, encodeMap(pool, cloud));
}

SemanticMap readMap(const std::filesystem::path& path) {
  try {
    return decodeMap(readFileBytes(path));
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

ArtifactKind sniffArtifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kInputMissing,
                fmt::format("cannot open '{}'", path.string()));
  }
  char magic[8] = {};
  in.read(magic, 8);
  if (in.gcount() == 8) {
    if (std::memcmp(magic, kFrameMagic, 8) == 0) return ArtifactKind::kFrame;
    if (std::memcmp(magic, kMapMagic, 8) == 0) return ArtifactKind::kMap;
  }
  return ArtifactKind::kUnknown;
}

std::vector<std::byte> readFileBytes(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kInputMissing,
                fmt::format("input '{}' does not exist", path.string()));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo,
                fmt::format("cannot open '{}'", path.string()));
  }
  const auto size = std::filesystem::file_size(path);
  std::vector<std::byte> bytes(size);
  if (size > 0) {
    in.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(size));
  }
  if (!in) {
    throw Error(ErrorCode::kIo,
                fmt::format("read failed for '{}'", path.string()));
  }
  return bytes;
}

void writeFileBytes(const std::filesystem::path& path,
                    std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIo,
                fmt::format("cannot open '{}' for writing", path.string()));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::kIo,
                fmt::format("write failed for '{}'", path.string()));
  }
}

}  // namespace plaf
