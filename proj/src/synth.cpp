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

#include "plaf/synth.hpp"

#include "plaf/storage.hpp"

#include <fmt/core.h>
#include "json.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace plaf {

namespace {

constexpr double kRoomHalfExtent = 3.0;
constexpr double kRoomHeight = 3.0;
constexpr double kCameraRadius = 2.6;
constexpr double kCameraHeight = 1.6;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Entry distance of a ray into a box, or +inf on a miss.
double rayBoxEntry(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                   const SyntheticBox& box) {
  double tNear = 0.0;
  double tFar = kInf;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-12) {
      if (origin[a] < box.lo[a] || origin[a] > box.hi[a]) return kInf;
      continue;
    }
    double t0 = (box.lo[a] - origin[a]) / dir[a];
    double t1 = (box.hi[a] - origin[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    tNear = std::max(tNear, t0);
    tFar = std::min(tFar, t1);
    if (tNear > tFar) return kInf;
  }
  return tNear > 1e-9 ? tNear : kInf;
}

// Exit distance of a ray starting inside the room.
double rayRoomExit(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
  const Eigen::Vector3d lo(-kRoomHalfExtent, -kRoomHalfExtent, 0.0);
  const Eigen::Vector3d hi(kRoomHalfExtent, kRoomHalfExtent, kRoomHeight);
  double t = kInf;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] > 1e-12) t = std::min(t, (hi[a] - origin[a]) / dir[a]);
    if (dir[a] < -1e-12) t = std::min(t, (lo[a] - origin[a]) / dir[a]);
  }
  return t;
}

std::vector<FeatureVector> orthonormalDescriptors(std::size_t count,
                                                  std::size_t dim,
                                                  std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> basis;
  std::vector<FeatureVector> out;
  while (basis.size() < count) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (auto& x : v) x = gauss(rng);
    for (const auto& b : basis) v -= v.dot(b) * b;
    for (const auto& b : basis) v -= v.dot(b) * b;  // second pass for accuracy
    const double norm = v.norm();
    if (norm < 1e-6) continue;
    v /= norm;
    basis.push_back(v);
    FeatureVector f(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      f[i] = static_cast<float>(v[static_cast<Eigen::Index>(i)]);
    }
    out.push_back(normalized(f));
  }
  return out;
}

bool overlaps(const SyntheticBox& a, const SyntheticBox& b, double margin) {
  for (int ax = 0; ax < 2; ++ax) {
    if (a.hi[ax] + margin < b.lo[ax] || b.hi[ax] + margin < a.lo[ax]) {
      return false;
    }
  }
  return true;
}

std::vector<SyntheticBox> placeBoxes(std::size_t count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SyntheticBox> boxes;
  const double sector = 2.0 * std::numbers::pi / static_cast<double>(count);
  for (std::size_t j = 0; j < count; ++j) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const double angle =
          sector * static_cast<double>(j) + (unit(rng) - 0.5) * 0.4 * sector;
      const double radius = 0.5 + 0.8 * unit(rng);
      const double hx = 0.12 + 0.18 * unit(rng);
      const double hy = 0.12 + 0.18 * unit(rng);
      const double height = 0.3 + 0.7 * unit(rng);
      const Eigen::Vector3d center(radius * std::cos(angle),
                                   radius * std::sin(angle), 0.0);
      SyntheticBox box{center - Eigen::Vector3d(hx, hy, 0.0),
                       center + Eigen::Vector3d(hx, hy, height)};
      placed = std::none_of(boxes.begin(), boxes.end(), [&](const auto& other) {
        return overlaps(box, other, 0.05);
      });
      if (placed) boxes.push_back(box);
    }
    if (!placed) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("cannot place {} non-overlapping objects", count));
    }
  }
  return boxes;
}

Eigen::Matrix4d lookAt(const Eigen::Vector3d& eye, const Eigen::Vector3d& target) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  const Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ()).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
  pose.block<3, 1>(0, 0) = right;
  pose.block<3, 1>(0, 1) = down;
  pose.block<3, 1>(0, 2) = forward;
  pose.block<3, 1>(0, 3) = eye;
  return pose;
}

}  // namespace

void SyntheticSceneSpec::check() const {
  if (objectCount == 0 || frameCount == 0 || height == 0 || width == 0 ||
      dim == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "synthetic scene sizes must be positive");
  }
  if (dim < objectCount) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("feature dim {} cannot hold {} orthogonal object "
                            "descriptors",
                            dim, objectCount));
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw Error(ErrorCode::kInvalidArgument, "noise level must be >= 0");
  }
}

int SyntheticScene::objectAt(const Eigen::Vector3d& point,
                             double tolerance) const {
  for (std::size_t j = 0; j < boxes.size(); ++j) {
    const auto& b = boxes[j];
    if ((point.array() >= b.lo.array() - tolerance).all() &&
        (point.array() <= b.hi.array() + tolerance).all()) {
      return static_cast<int>(j);
    }
  }
  return -1;
}

SyntheticScene generateScene(const SyntheticSceneSpec& spec) {
  spec.check();
  std::mt19937_64 rng(spec.seed);
  SyntheticScene scene;
  scene.spec = spec;
  scene.descriptors = orthonormalDescriptors(spec.objectCount, spec.dim, rng);
  scene.boxes = placeBoxes(spec.objectCount, rng);

  const std::size_t H = spec.height;
  const std::size_t W = spec.width;
  Intrinsics k;
  k.fx = static_cast<double>(W) / 2.0;  // 90 degree horizontal field of view
  k.fy = k.fx;
  k.cx = static_cast<double>(W) / 2.0;
  k.cy = static_cast<double>(H) / 2.0;
  const Eigen::Vector3d target(0.0, 0.0, 0.4);

  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t f = 0; f < spec.frameCount; ++f) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(f) /
                         static_cast<double>(spec.frameCount);
    const Eigen::Vector3d eye(kCameraRadius * std::cos(angle),
                              kCameraRadius * std::sin(angle), kCameraHeight);
    CameraFrame cam;
    cam.height = H;
    cam.width = W;
    cam.intrinsics = k;
    cam.poseWorldFromCamera = lookAt(eye, target);
    cam.depth.assign(H * W, 0.f);
    const Eigen::Matrix3d rot = cam.poseWorldFromCamera.topLeftCorner<3, 3>();

    std::vector<int> owner(H * W, -1);
    for (std::size_t v = 0; v < H; ++v) {
      for (std::size_t u = 0; u < W; ++u) {
        // Unit z component, so ray distance equals camera depth.
        const Eigen::Vector3d local((static_cast<double>(u) + 0.5 - k.cx) / k.fx,
                                    (static_cast<double>(v) + 0.5 - k.cy) / k.fy,
                                    1.0);
        const Eigen::Vector3d dir = rot * local;
        double best = rayRoomExit(eye, dir);
        int hit = -1;
        for (std::size_t j = 0; j < scene.boxes.size(); ++j) {
          const double t = rayBoxEntry(eye, dir, scene.boxes[j]);
          if (t < best) {
            best = t;
            hit = static_cast<int>(j);
          }
        }
        cam.depth[v * W + u] = static_cast<float>(best);
        owner[v * W + u] = hit;
      }
    }

    DenseFeatureMap feat(H, W, spec.dim);
    for (std::size_t p = 0; p < H * W; ++p) {
      auto out = feat.at(p / W, p % W);
      for (std::size_t c = 0; c < spec.dim; ++c) {
        const double base =
            owner[p] >= 0
                ? static_cast<double>(
                      scene.descriptors[static_cast<std::size_t>(owner[p])][c])
                : 0.0;
        out[c] = static_cast<float>(base + spec.noise * gauss(rng));
      }
    }

    std::vector<std::vector<std::uint8_t>> rasters;
    std::vector<std::size_t> maskObjects;
    for (std::size_t j = 0; j < spec.objectCount; ++j) {
      std::vector<std::uint8_t> m(H * W, 0);
      bool any = false;
      for (std::size_t p = 0; p < H * W; ++p) {
        if (owner[p] == static_cast<int>(j)) {
          m[p] = 1;
          any = true;
        }
      }
      if (any) {
        rasters.push_back(std::move(m));
        maskObjects.push_back(j);
      }
    }
    scene.frames.push_back({std::move(feat), MaskSet(H, W, std::move(rasters)),
                            std::move(maskObjects), std::move(cam)});
  }
  return scene;
}

SyntheticSceneFiles writeScene(const SyntheticScene& scene,
                               const std::filesystem::path& outDir,
                               MaskEncoding encoding) {
  std::error_code ec;
  std::filesystem::create_directories(outDir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, fmt::format("cannot create '{}': {}",
                                            outDir.string(), ec.message()));
  }
  using nlohmann::json;
  SyntheticSceneFiles files;
  json manifest;
  const auto& s = scene.spec;
  manifest["spec"] = {{"objects", s.objectCount}, {"dim", s.dim},
                      {"height", s.height},       {"width", s.width},
                      {"frames", s.frameCount},   {"noise", s.noise},
                      {"seed", s.seed}};
  json objects = json::array();
  for (std::size_t j = 0; j < scene.descriptors.size(); ++j) {
    const auto name = fmt::format("text_{:02}.f32", j);
    const auto path = outDir / name;
    writeTextEmbedding({fmt::format("object_{}", j), scene.descriptors[j]}, path);
    files.embeddings.push_back(path);
    const auto& b = scene.boxes[j];
    objects.push_back({{"label", fmt::format("object_{}", j)},
                       {"embedding", name},
                       {"box_min", {b.lo.x(), b.lo.y(), b.lo.z()}},
                       {"box_max", {b.hi.x(), b.hi.y(), b.hi.z()}}});
  }
  manifest["objects"] = objects;

  json frames = json::array();
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    const auto& fr = scene.frames[f];
    const auto featName = fmt::format("frame_{:03}_features.f32", f);
    const auto maskName = fmt::format("frame_{:03}_masks.{}", f,
                                      encoding == MaskEncoding::kRaw ? "u8" : "rle");
    const auto depthName = fmt::format("frame_{:03}_depth.f32", f);
    const auto camName = fmt::format("frame_{:03}_camera.json", f);
    writeFeatureMap(fr.features, outDir / featName);
    writeMasks(fr.masks, outDir / maskName, encoding);
    writeCamera(fr.camera, outDir / camName, depthName);
    files.features.push_back(outDir / featName);
    files.masks.push_back(outDir / maskName);
    files.cameras.push_back(outDir / camName);
    frames.push_back({{"features", featName},
                      {"masks", maskName},
                      {"camera", camName},
                      {"mask_objects", fr.maskObjects}});
  }
  manifest["frames"] = frames;
  files.manifest = outDir / "scene.json";
  const std::string text = manifest.dump(2) + "\n";
  writeFileBytes(files.manifest,
                 std::as_bytes(std::span(text.data(), text.size())));
  return files;
}

}  // namespace plaf
