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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include "commands.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "plaf/frame2d.hpp"
#include "plaf/lift3d.hpp"
#include "plaf/query.hpp"
#include "plaf/storage.hpp"
#include "plaf/synth.hpp"
#include "test_support.hpp"

#include <fmt/core.h>

#include <Eigen/Geometry>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace {

using namespace plaf;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double secondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

CliRun cliOrThrow(const std::vector<std::string>& args) {
  auto r = cli(args);
  if (r.code != 0) {
    throw std::runtime_error(
        fmt::format("plaf {} exited {}: {}", args.front(), r.code, r.err));
  }
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

Verdict storage2D() {
  StorageModel m;
  m.height = 480;
  m.width = 640;
  m.dim = 1024;
  m.masks = 200;
  const auto dense = dense2DCost(m);
  const auto mask = maskIndexed2DCost(m);
  const double ratio = ratio2D(m);
  const bool ok = dense == 1'258'291'200ULL && mask == 1'433'600ULL &&
                  std::abs(ratio - 0.0011393) <= 1e-7 &&
                  std::abs(ratio - ratio2DClosedForm(m)) <= 1e-12;
  return {ok, fmt::format("dense={} mask-indexed={} ratio={:.7f}", dense, mask,
                          ratio)};
}

Verdict storage3D() {
  const auto r = cliOrThrow({"stats", "--dry-run", "--json", "--points",
                             "10000000", "--dim", "1024", "--pool", "10000",
                             "--bf", "4", "--br", "2"});
  const auto doc = nlohmann::json::parse(r.out)["storage_3d"];
  const auto dense = doc["dense_3d_bytes"].get<std::uint64_t>();
  const auto index = doc["index_ref_3d_bytes"].get<std::uint64_t>();
  const double ratio = doc["ratio_3d"].get<double>();
  const bool ok = dense == 40'960'000'000ULL && index == 60'960'000ULL &&
                  std::abs(ratio - 0.0014883) <= 1e-7;
  return {ok, fmt::format("dense={} index-ref={} ratio={:.7f}", dense, index,
                          ratio)};
}

struct Case {
  DenseFeatureMap feat;
  std::vector<std::vector<std::uint8_t>> rasters;
};

std::vector<Case> maskCorpus() {
  std::mt19937_64 rng(2024);
  std::vector<Case> corpus;
  for (int i = 0; i < 100; ++i) {
    const std::size_t k = 1 + rng() % 12;
    auto feat = test::randomFeatures(32, 32, 8, rng);
    corpus.push_back(
        {std::move(feat), test::randomMasks(32, 32, k, i % 2 == 0, rng)});
  }
  return corpus;
}

Verdict maskMeanOracle(const std::vector<Case>& corpus) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t masks = 0;
  for (const auto& c : corpus) {
    const auto means = aggregateMaskFeatures(c.feat, MaskSet(32, 32, c.rasters));
    for (std::size_t k = 0; k < c.rasters.size(); ++k, ++masks) {
      const auto expect = oracle::maskMean(c.feat.data, 8, c.rasters[k]);
      for (std::size_t ch = 0; ch < 8; ++ch) {
        worst = std::max(worst, std::abs(means[k][ch] - expect[ch]));
      }
    }
  }
  const double secs = secondsSince(t0);
  return {worst <= 1e-6 && secs < 10.0,
          fmt::format("{} masks, max error {:.2e}, {:.2f} s", masks, worst,
                      secs)};
}

Verdict reconstruction(const std::vector<Case>& corpus) {
  double worst = 0.0;
  std::size_t validityErrors = 0;
  for (const auto& c : corpus) {
    const auto dense = reconstructDense(buildFrame(c.feat, MaskSet(32, 32, c.rasters)));
    for (std::size_t p = 0; p < 32 * 32; ++p) {
      const std::size_t owner = oracle::smallestCoveringMask(c.rasters, p);
      if (owner == 0) {
        validityErrors += dense.valid[p] != 0;
        continue;
      }
      validityErrors += dense.valid[p] != 1;
      const auto expect = oracle::maskMean(c.feat.data, 8, c.rasters[owner - 1]);
      const auto got = dense.at(p / 32, p % 32);
      for (std::size_t ch = 0; ch < 8; ++ch) {
        worst = std::max(worst, std::abs(got[ch] - expect[ch]));
      }
    }
  }
  return {worst <= 1e-6 && validityErrors == 0,
          fmt::format("max error {:.2e}, {} validity mismatches", worst,
                      validityErrors)};
}

MaskIndexedFrame randomFrame(std::mt19937_64& rng) {
  MaskIndexedFrame f;
  f.height = 1 + rng() % 40;
  f.width = 1 + rng() % 40;
  f.dim = 1 + rng() % 16;
  f.maskCount = std::min<std::size_t>(rng() % 30, f.height * f.width);
  f.indexMap.resize(f.height * f.width);
  for (std::size_t p = 0; p < f.indexMap.size(); ++p) {
    f.indexMap[p] = static_cast<std::uint16_t>(
        p < f.maskCount ? p + 1 : rng() % (f.maskCount + 1));
  }
  std::shuffle(f.indexMap.begin(), f.indexMap.end(), rng);
  std::normal_distribution<float> g(0.f, 10.f);
  f.featureTable.resize(f.maskCount * f.dim);
  for (auto& v : f.featureTable) v = g(rng);
  return f;
}

Verdict serialization() {
  std::mt19937_64 rng(99);
  test::TempDir dir("acceptance_fuzz");
  std::size_t mismatches = 0, sizeErrors = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto f = randomFrame(rng);
    const auto path = dir / "f.plaf2d";
    writeFrame(f, path);
    StorageModel m;
    m.height = f.height;
    m.width = f.width;
    m.dim = f.dim;
    m.masks = f.maskCount;
    sizeErrors += fs::file_size(path) != maskIndexed2DCost(m) + 64;
    const auto back = readFrame(path);
    mismatches += !(back == f) || encodeFrame(back) != readFileBytes(path);

    const std::size_t dim = 1 + rng() % 16;
    const std::size_t poolSize = i % 100 == 0 ? 65536 + rng() % 10 : rng() % 50;
    FeaturePool pool(dim);
    for (std::size_t e = 0; e < poolSize; ++e) {
      pool.append(test::randomUnit(dim, rng), 1 + rng() % 1000);
    }
    SemanticPointCloud cloud;
    const std::size_t n = poolSize == 0 ? 0 : rng() % 500;
    std::normal_distribution<float> g(0.f, 3.f);
    for (std::size_t p = 0; p < n; ++p) {
      cloud.positions.push_back({g(rng), g(rng), g(rng)});
      cloud.refs.push_back(static_cast<std::uint32_t>(rng() % poolSize));
    }
    const auto mapPath = dir / "m.plaf3d";
    writeMap(pool, cloud, mapPath);
    const auto map = readMap(mapPath);
    mismatches += !(map.pool == pool) || !(map.cloud == cloud) ||
                  encodeMap(map.pool, map.cloud) != readFileBytes(mapPath);
  }
  return {mismatches == 0 && sizeErrors == 0,
          fmt::format("1000 frames + 1000 maps, {} mismatches, {} size errors",
                      mismatches, sizeErrors)};
}

// Clustered stream: noisy, arbitrarily scaled copies of a few random centers.
std::vector<std::vector<float>> descriptorStream(std::size_t n, std::size_t dim,
                                                 std::size_t centers,
                                                 std::mt19937_64& rng) {
  std::vector<FeatureVector> c;
  for (std::size_t i = 0; i < centers; ++i) c.push_back(test::randomUnit(dim, rng));
  std::normal_distribution<float> noise(0.f, 0.08f);
  std::uniform_real_distribution<float> scale(0.5f, 4.f);
  std::vector<std::vector<float>> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto v = c[rng() % centers];
    const float s = scale(rng);
    for (auto& x : v) x = s * (x + noise(rng));
    out.push_back(std::move(v));
  }
  return out;
}

Verdict fusionOracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(5150);
  double worst = 0.0;
  std::size_t refErrors = 0, sizeErrors = 0, largest = 0, merges = 0;
  struct Run {
    std::size_t masks;
    std::size_t perFrame;
    double tau;
  };
  for (const auto& run : {Run{100, 10, 0.9}, Run{1000, 50, 0.8},
                          Run{10000, 100, 0.9}, Run{10000, 100, 0.95}}) {
    const std::size_t dim = 16;
    const auto stream = descriptorStream(run.masks, dim, 40, rng);
    std::vector<FrameObservation> frames;
    for (std::size_t s = 0; s < stream.size(); s += run.perFrame) {
      const std::vector<std::vector<float>> chunk(
          stream.begin() + s, stream.begin() + s + run.perFrame);
      frames.push_back({test::pixelMaskFrame(chunk, dim),
                        test::lineCamera(run.perFrame, double(s))});
    }
    const auto built = buildMap(frames, {run.tau, 0.02, 1});
    const auto expect = oracle::greedyCluster(stream, run.tau);
    largest = std::max(largest, stream.size());
    merges += stream.size() - expect.descriptors.size();

    if (built.pool.size() != expect.descriptors.size()) {
      ++sizeErrors;
      continue;
    }
    for (std::size_t m = 0; m < expect.descriptors.size(); ++m) {
      sizeErrors += built.pool.count(m) != expect.counts[m];
      const auto d = built.pool.descriptor(m);
      for (std::size_t i = 0; i < dim; ++i) {
        worst = std::max(worst, std::abs(double(d[i]) - expect.descriptors[m][i]));
      }
    }
    std::size_t i = 0;
    for (const auto& fr : built.report.frames) {
      for (auto ref : fr.maskRefs) refErrors += ref != expect.assignment[i++];
    }
    // One point per mask, in stream order.
    sizeErrors += built.cloud.size() != stream.size();
    for (std::size_t p = 0; p < built.cloud.size(); ++p) {
      refErrors += built.cloud.refs[p] != expect.assignment[p];
    }
  }
  const double secs = secondsSince(t0);
  return {worst <= 1e-5 && refErrors == 0 && sizeErrors == 0 && secs < 30.0,
          fmt::format("streams up to {} masks ({} merges), max pool error "
                      "{:.2e}, {} ref errors, {} size errors, {:.2f} s",
                      largest, merges, worst, refErrors, sizeErrors, secs)};
}

struct PipelineOutputs {
  std::vector<fs::path> frames;
  fs::path map;
  std::vector<fs::path> plys;
  fs::path pgm;
  std::size_t poolSize = 0;
};

// synth -> ingest -> build -> query, all through the CLI.
PipelineOutputs runPipeline(const fs::path& dir) {
  PipelineOutputs out;
  const auto synth = nlohmann::json::parse(
      cliOrThrow({"synth", "--json", "--objects", "5", "--noise", "0.05",
                  "--frames", "8", "--seed", "7", "--out", (dir / "scene").string()})
          .out);
  std::vector<std::string> build{"build", "--json", "--tau", "0.9", "--out",
                                 (dir / "map.plaf3d").string()};
  std::size_t i = 0;
  for (const auto& f : synth["frames"]) {
    const auto frame = dir / fmt::format("frame_{}.plaf2d", i++);
    cliOrThrow({"ingest", "--features", f["features"].get<std::string>(), "--masks", f["masks"].get<std::string>(),
                "--out", frame.string()});
    out.frames.push_back(frame);
    build.insert(build.end(), {"--frame", frame.string(), "--camera",
                               f["camera"].get<std::string>()});
  }
  const auto report = nlohmann::json::parse(cliOrThrow(build).out);
  out.map = dir / "map.plaf3d";
  out.poolSize = report["pool_size"].get<std::size_t>();
  std::size_t j = 0;
  for (const auto& e : synth["embeddings"]) {
    const auto ply = dir / fmt::format("object_{}.ply", j++);
    cliOrThrow({"query", "--map", out.map.string(), "--embedding", e.get<std::string>(),
                "--theta", "0.5", "--out", ply.string()});
    out.plys.push_back(ply);
  }
  out.pgm = dir / "frame_0.pgm";
  cliOrThrow({"query", "--frame", out.frames[0].string(), "--embedding",
              synth["embeddings"][0].get<std::string>(), "--theta", "0.5", "--out",
              out.pgm.string()});
  return out;
}

struct PlyPoint {
  Eigen::Vector3d p;
  bool selected = false;
};

std::vector<PlyPoint> readPly(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line) && line != "end_header") {
  }
  std::vector<PlyPoint> pts;
  double x, y, z, s;
  int sel;
  while (in >> x >> y >> z >> s >> sel) pts.push_back({{x, y, z}, sel == 1});
  return pts;
}

Verdict endToEnd(const fs::path& dir, PipelineOutputs& outputs) {
  const auto t0 = Clock::now();
  outputs = runPipeline(dir);
  SyntheticSceneSpec spec;
  spec.objectCount = 5;
  spec.noise = 0.05;
  spec.frameCount = 8;
  spec.seed = 7;
  const auto scene = generateScene(spec);

  double worstRecall = 1.0;
  std::size_t leaks = 0, unplaced = 0, points = 0;
  for (std::size_t j = 0; j < outputs.plys.size(); ++j) {
    const auto pts = readPly(outputs.plys[j]);
    points = pts.size();
    std::size_t own = 0, ownSelected = 0;
    for (const auto& pt : pts) {
      const int obj = scene.objectAt(pt.p);
      if (obj < 0) {
        ++unplaced;
        continue;
      }
      if (obj == static_cast<int>(j)) {
        ++own;
        ownSelected += pt.selected;
      } else {
        leaks += pt.selected;
      }
    }
    worstRecall = std::min(
        worstRecall, own == 0 ? 0.0 : double(ownSelected) / double(own));
  }
  const double secs = secondsSince(t0);
  return {outputs.poolSize == 5 && worstRecall >= 0.99 && leaks == 0 &&
              unplaced == 0 && secs < 60.0,
          fmt::format("M={}, N={}, worst own-object recall {:.4f}, {} "
                      "cross-object selections, {} unplaced, {:.2f} s",
                      outputs.poolSize, points, worstRecall, leaks, unplaced,
                      secs)};
}

Verdict roundTrip() {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  std::size_t samples = 0;
  std::vector<std::uint16_t> index;
  while (samples < 100'000) {
    CameraFrame cam;
    cam.height = 4 + rng() % 60;
    cam.width = 4 + rng() % 80;
    cam.intrinsics.fx = 20.0 + 980.0 * u01(rng);
    cam.intrinsics.fy = 20.0 + 980.0 * u01(rng);
    cam.intrinsics.cx = u01(rng) * double(cam.width);
    cam.intrinsics.cy = u01(rng) * double(cam.height);
    Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
    q.normalize();
    cam.poseWorldFromCamera.topLeftCorner<3, 3>() = q.toRotationMatrix();
    cam.poseWorldFromCamera.topRightCorner<3, 1>() << 10 * g(rng), 10 * g(rng),
        10 * g(rng);
    cam.depth.resize(cam.height * cam.width);
    for (auto& d : cam.depth) d = static_cast<float>(0.1 + 20.0 * u01(rng));
    index.assign(cam.height * cam.width, 1);
    const auto bp = backProject(cam, index, 1);
    for (std::size_t i = 0; i < bp.points.size(); ++i) {
      const auto px = project(cam, bp.points[i].position);
      const double u = double(i % cam.width) + 0.5;
      const double v = double(i / cam.width) + 0.5;
      worst = std::max({worst, std::abs(px.x() - u), std::abs(px.y() - v)});
    }
    samples += bp.points.size();
  }
  return {worst <= 1e-4,
          fmt::format("{} pixels, max error {:.2e} px", samples, worst)};
}

Verdict determinism(const fs::path& dir, const PipelineOutputs& first) {
  // Second run with a different worker count.
  ::setenv("PLAF_THREADS", "3", 1);
  const auto second = runPipeline(dir);
  ::unsetenv("PLAF_THREADS");
  std::vector<std::pair<fs::path, fs::path>> pairs;
  for (std::size_t i = 0; i < first.frames.size(); ++i) {
    pairs.emplace_back(first.frames[i], second.frames[i]);
  }
  pairs.emplace_back(first.map, second.map);
  for (std::size_t i = 0; i < first.plys.size(); ++i) {
    pairs.emplace_back(first.plys[i], second.plys[i]);
  }
  pairs.emplace_back(first.pgm, second.pgm);
  auto f32 = [](fs::path p) { return p += ".f32"; };
  pairs.emplace_back(f32(first.pgm), f32(second.pgm));
  std::size_t differing = 0;
  std::uint64_t bytes = 0;
  for (const auto& [a, b] : pairs) {
    const auto x = slurp(a);
    bytes += x.size();
    differing += x.empty() || x != slurp(b);
  }
  return {differing == 0,
          fmt::format("{} files ({} bytes) compared, {} differ", pairs.size(),
                      bytes, differing)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* name, const std::function<Verdict()>& check) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, fmt::format("exception: {}", e.what())};
    }
    fmt::print("{} {:<24} {}\n", v.pass ? "PASS" : "FAIL", name, v.detail);
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  };

  const auto corpus = maskCorpus();
  test::TempDir work("acceptance");
  PipelineOutputs firstRun;

  report("storage-2d", storage2D);
  report("storage-3d", storage3D);
  report("mask-mean-oracle", [&] { return maskMeanOracle(corpus); });
  report("dense-reconstruction", [&] { return reconstruction(corpus); });
  report("serialization", serialization);
  report("fusion-oracle", fusionOracle);
  report("synthetic-scene", [&] { return endToEnd(work / "run1", firstRun); });
  report("backprojection-roundtrip", roundTrip);
  report("determinism", [&] { return determinism(work / "run2", firstRun); });

  fmt::print("{} of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
