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

#include "commands.hpp"

#include "plaf/frame2d.hpp"
#include "plaf/io.hpp"
#include "plaf/lift3d.hpp"
#include "plaf/query.hpp"
#include "plaf/storage.hpp"
#include "plaf/synth.hpp"

#include "CLI11.hpp"
#include "json.hpp"
#include <fmt/core.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <bit>
#include <map>
#include <optional>
#include <ostream>

namespace plaf::cli {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct SynthOptions {
  SyntheticSceneSpec spec;
  std::string maskFormat = "rle";
  std::string out;
};

struct IngestOptions {
  std::string features;
  std::string masks;
  std::string policy = "smallest";
  std::string out;
};

struct BuildOptions {
  std::vector<std::string> frames;
  std::vector<std::string> cameras;
  FusionConfig fusion;
  std::string out;
};

struct QueryOptions {
  std::string map;
  std::string frame;
  std::vector<std::string> embeddings;
  double theta = 0.5;
  std::optional<std::size_t> topK;
  bool argmax = false;
  std::string out;
};

struct StatsOptions {
  std::string artifact;
  bool dryRun = false;
  StorageModel model;
};

void emitJson(std::ostream& out, const Json& doc) { out << doc.dump(2) << "\n"; }

Json storage2DJson(const StorageModel& m) {
  return Json{{"height", m.height},
              {"width", m.width},
              {"masks", m.masks},
              {"dim", m.dim},
              {"float_bytes", m.floatBytes},
              {"index_bytes", m.indexBytes},
              {"dense_2d_bytes", dense2DCost(m)},
              {"mask_indexed_2d_bytes", maskIndexed2DCost(m)},
              {"ratio_2d", ratio2D(m)},
              {"ratio_2d_closed_form", ratio2DClosedForm(m)}};
}

Json storage3DJson(const StorageModel& m) {
  return Json{{"points", m.points},
              {"pool_size", m.poolSize},
              {"dim", m.dim},
              {"float_bytes", m.floatBytes},
              {"ref_bytes", m.refBytes},
              {"dense_3d_bytes", dense3DCost(m)},
              {"index_ref_3d_bytes", indexRef3DCost(m)},
              {"ratio_3d", ratio3D(m)},
              {"ratio_3d_closed_form", ratio3DClosedForm(m)}};
}

void print2D(std::ostream& out, const StorageModel& m) {
  const auto dense = dense2DCost(m);
  const auto mask = maskIndexed2DCost(m);
  fmt::print(out, "2D  H={} W={} K={} C={} b_f={} b_i={}\n", m.height, m.width,
             m.masks, m.dim, m.floatBytes, m.indexBytes);
  fmt::print(out, "    dense per-pixel     {:>16} bytes  ({})\n", dense,
             formatBytes(dense));
  fmt::print(out, "    mask-indexed        {:>16} bytes  ({})\n", mask,
             formatBytes(mask));
  fmt::print(out, "    ratio               {:.7f}  ({} of dense)\n", ratio2D(m),
             formatPercent(ratio2D(m)));
}

void print3D(std::ostream& out, const StorageModel& m) {
  const auto dense = dense3DCost(m);
  const auto index = indexRef3DCost(m);
  fmt::print(out, "3D  N={} M={} C={} b_f={} b_r={}\n", m.points, m.poolSize,
             m.dim, m.floatBytes, m.refBytes);
  fmt::print(out, "    dense per-point     {:>16} bytes  ({})\n", dense,
             formatBytes(dense));
  fmt::print(out, "    index-and-reference {:>16} bytes  ({})\n", index,
             formatBytes(index));
  fmt::print(out, "    ratio               {:.7f}  ({} of dense)\n", ratio3D(m),
             formatPercent(ratio3D(m)));
}

StorageModel frameModel(const MaskIndexedFrame& frame) {
  StorageModel m;
  m.height = frame.height;
  m.width = frame.width;
  m.masks = frame.maskCount;
  m.dim = frame.dim;
  return m;
}

StorageModel mapModel(const FeaturePool& pool, const SemanticPointCloud& cloud) {
  StorageModel m;
  m.points = cloud.size();
  m.poolSize = pool.size();
  m.dim = pool.dim();
  m.refBytes = referenceBytes(pool.size());
  return m;
}

// Counts per power-of-two bucket: key b holds values in [2^b, 2^(b+1)).
Json log2Histogram(const std::vector<std::uint64_t>& values) {
  std::map<int, std::uint64_t> buckets;
  for (auto v : values) {
    if (v == 0) continue;
    ++buckets[static_cast<int>(std::bit_width(v)) - 1];
  }
  Json out = Json::array();
  for (const auto& [b, n] : buckets) {
    out.push_back({{"min", std::uint64_t{1} << b},
                   {"max", (std::uint64_t{1} << (b + 1)) - 1},
                   {"count", n}});
  }
  return out;
}

int cmdSynth(const SynthOptions& o, bool json, std::ostream& out,
             std::ostream&) {
  const auto scene = generateScene(o.spec);
  const auto files = writeScene(scene, o.out, parseMaskEncoding(o.maskFormat));
  std::size_t masks = 0;
  for (const auto& f : scene.frames) masks += f.masks.size();
  if (json) {
    Json frames = Json::array();
    for (std::size_t i = 0; i < files.features.size(); ++i) {
      frames.push_back({{"features", files.features[i].string()},
                        {"masks", files.masks[i].string()},
                        {"camera", files.cameras[i].string()}});
    }
    Json embeddings = Json::array();
    for (const auto& e : files.embeddings) embeddings.push_back(e.string());
    emitJson(out, Json{{"command", "synth"},
                       {"manifest", files.manifest.string()},
                       {"objects", o.spec.objectCount},
                       {"frames", frames},
                       {"embeddings", embeddings},
                       {"total_masks", masks}});
  } else {
    fmt::print(out, "wrote {} frames ({} masks) and {} embeddings to {}\n",
               scene.frames.size(), masks, files.embeddings.size(), o.out);
    fmt::print(out, "manifest: {}\n", files.manifest.string());
  }
  return 0;
}

int cmdIngest(const IngestOptions& o, bool json, std::ostream& out,
              std::ostream& err) {
  const auto policy = parseAssignmentPolicy(o.policy);
  const auto feat = readFeatureMap(o.features);
  const auto masks = readMasks(o.masks);
  const auto frame = buildFrame(feat, masks, policy);
  writeFrame(frame, o.out);

  if (frame.maskCount == 0) {
    fmt::print(err, "warning: {} has no masks; frame is background only\n",
               o.masks);
  }
  const auto m = frameModel(frame);
  const std::size_t dropped = masks.size() - frame.maskCount;
  if (json) {
    Json doc{{"command", "ingest"},
             {"frame", o.out},
             {"policy", std::string(policyName(policy))},
             {"feature_height", feat.height},
             {"feature_width", feat.width},
             {"masks_in", masks.size()},
             {"masks_dropped", dropped},
             {"file_bytes", frameFileSize(m.height, m.width, m.masks, m.dim)}};
    doc["storage"] = storage2DJson(m);
    emitJson(out, doc);
  } else {
    fmt::print(out, "wrote {} ({} masks, {} dropped by overlap)\n", o.out,
               frame.maskCount, dropped);
    print2D(out, m);
  }
  return 0;
}

int cmdBuild(const BuildOptions& o, bool json, std::ostream& out,
             std::ostream&) {
  if (o.frames.size() != o.cameras.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{} frames but {} cameras", o.frames.size(),
                            o.cameras.size()));
  }
  std::vector<FrameObservation> observations;
  observations.reserve(o.frames.size());
  for (std::size_t i = 0; i < o.frames.size(); ++i) {
    observations.push_back({readFrame(o.frames[i]), readCamera(o.cameras[i])});
  }
  auto built = buildMap(observations, o.fusion);
  writeMap(built.pool, built.cloud, o.out);
  const auto& r = built.report;
  if (json) {
    Json frames = Json::array();
    for (const auto& f : r.frames) {
      frames.push_back({{"new_entries", f.newEntries},
                        {"merged_entries", f.mergedEntries},
                        {"points_added", f.pointsAdded},
                        {"points_replaced", f.pointsReplaced},
                        {"skipped_background", f.skippedBackground},
                        {"skipped_invalid_depth", f.skippedInvalidDepth},
                        {"mask_refs", f.maskRefs}});
    }
    Json doc{{"command", "build"},
             {"map", o.out},
             {"tau", o.fusion.similarityThreshold},
             {"voxel", o.fusion.voxelSize},
             {"stride", o.fusion.pixelStride},
             {"masks_ingested", r.masksIngested},
             {"points", r.points},
             {"pool_size", r.poolSize},
             {"dim", r.dim},
             {"ref_bytes", r.refBytes},
             {"dense_3d_bytes", r.dense3DBytes},
             {"index_ref_3d_bytes", r.indexRef3DBytes},
             {"ratio_3d", r.ratio3D},
             {"frames", frames}};
    emitJson(out, doc);
  } else {
    fmt::print(out, "wrote {}: {} points, {} pool entries from {} masks\n",
               o.out, r.points, r.poolSize, r.masksIngested);
    if (r.points > 0) print3D(out, mapModel(built.pool, built.cloud));
  }
  return 0;
}

int cmdQuery(const QueryOptions& o, bool json, std::ostream& out,
             std::ostream&) {
  if (o.map.empty() == o.frame.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "exactly one of --map or --frame is required");
  }
  if (o.embeddings.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--embedding is required");
  }
  std::vector<TextQuery> queries;
  for (const auto& path : o.embeddings) {
    auto text = readTextEmbedding(path);
    queries.push_back({text.label, std::move(text.embedding), o.theta, o.topK});
  }

  if (o.argmax) {
    std::optional<SemanticMap> map;
    std::optional<MaskIndexedFrame> frame;
    std::vector<int> labels;
    if (!o.map.empty()) {
      map = readMap(o.map);
      labels = argmaxLabels3D(map->pool, map->cloud, queries);
    } else {
      frame = readFrame(o.frame);
      labels = argmaxLabels2D(*frame, queries);
    }
    std::vector<std::size_t> counts(queries.size(), 0);
    std::size_t background = 0;
    for (int l : labels) {
      if (l < 0) {
        ++background;
      } else {
        ++counts[static_cast<std::size_t>(l)];
      }
    }
    if (json) {
      Json perLabel = Json::array();
      for (std::size_t j = 0; j < queries.size(); ++j) {
        perLabel.push_back({{"label", queries[j].label}, {"targets", counts[j]}});
      }
      emitJson(out, Json{{"command", "query"},
                         {"mode", "argmax"},
                         {"targets", labels.size()},
                         {"background", background},
                         {"labels", perLabel}});
    } else {
      for (std::size_t j = 0; j < queries.size(); ++j) {
        fmt::print(out, "{:<24} {} targets\n", queries[j].label, counts[j]);
      }
      fmt::print(out, "{:<24} {} targets\n", "(background)", background);
    }
    return 0;
  }

  if (queries.size() != 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "threshold mode takes exactly one --embedding (use --argmax)");
  }
  const auto& q = queries.front();
  QueryResult result;
  if (!o.map.empty()) {
    const auto map = readMap(o.map);
    result = query3D(map.pool, map.cloud, q);
    if (!o.out.empty()) exportHeatmap(result, map.cloud, o.out);
  } else {
    const auto frame = readFrame(o.frame);
    result = query2D(frame, q);
    if (!o.out.empty()) exportHeatmap(result, frame, o.out);
  }
  float best = -std::numeric_limits<float>::infinity();
  for (float s : result.scores) best = std::max(best, s);
  if (json) {
    emitJson(out, Json{{"command", "query"},
                       {"mode", "threshold"},
                       {"label", q.label},
                       {"target", o.map.empty() ? "frame" : "map"},
                       {"theta", o.theta},
                       {"targets", result.scores.size()},
                       {"selected", result.selected.size()},
                       {"max_score", best},
                       {"output", o.out}});
  } else {
    fmt::print(out, "'{}': {} of {} targets selected at theta {} (max score "
               "{:.4f})\n",
               q.label, result.selected.size(), result.scores.size(), o.theta,
               best);
    if (!o.out.empty()) fmt::print(out, "wrote {}\n", o.out);
  }
  return 0;
}

int cmdStats(const StatsOptions& o, bool json, std::ostream& out,
             std::ostream&) {
  if (o.dryRun) {
    const auto& m = o.model;
    const bool has2D = m.height > 0 || m.width > 0;
    const bool has3D = m.points > 0;
    if (!has2D && !has3D) {
      throw Error(ErrorCode::kInvalidArgument,
                  "--dry-run needs --height/--width/--dim (2D) and/or "
                  "--points/--dim (3D)");
    }
    Json doc{{"command", "stats"}, {"mode", "dry-run"}};
    if (has2D) doc["storage_2d"] = storage2DJson(m);
    if (has3D) doc["storage_3d"] = storage3DJson(m);
    if (json) {
      emitJson(out, doc);
    } else {
      if (has2D) print2D(out, m);
      if (has3D) print3D(out, m);
    }
    return 0;
  }
  if (o.artifact.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "stats needs an artifact or --dry-run");
  }
  const auto kind = sniffArtifact(o.artifact);
  const auto fileBytes = fs::file_size(o.artifact);
  switch (kind) {
    case ArtifactKind::kFrame: {
      const auto frame = readFrame(o.artifact);
      const auto m = frameModel(frame);
      std::vector<std::uint64_t> areas(frame.maskCount, 0);
      std::uint64_t background = 0;
      for (auto id : frame.indexMap) {
        if (id == 0) {
          ++background;
        } else {
          ++areas[id - 1];
        }
      }
      if (json) {
        emitJson(out, Json{{"command", "stats"},
                           {"artifact", "frame"},
                           {"file_bytes", fileBytes},
                           {"header_bytes", kHeaderBytes},
                           {"storage_2d", storage2DJson(m)},
                           {"background_pixels", background},
                           {"mask_pixels", areas},
                           {"mask_pixel_histogram", log2Histogram(areas)}});
      } else {
        fmt::print(out, "frame {} ({} bytes on disk, {}-byte header)\n",
                   o.artifact, fileBytes, kHeaderBytes);
        print2D(out, m);
        fmt::print(out, "    background pixels   {}\n", background);
      }
      return 0;
    }
    case ArtifactKind::kMap: {
      const auto map = readMap(o.artifact);
      const auto m = mapModel(map.pool, map.cloud);
      const auto layout = mapLayout(m.points, m.poolSize, m.dim);
      std::vector<std::uint64_t> perEntry(map.pool.size(), 0);
      for (auto r : map.cloud.refs) ++perEntry[r];
      std::vector<std::uint64_t> observations(map.pool.counts().begin(),
                                              map.pool.counts().end());
      Json doc{{"command", "stats"},
               {"artifact", "map"},
               {"file_bytes", fileBytes},
               {"header_bytes", kHeaderBytes},
               {"semantic_payload_bytes", layout.semanticPayload()},
               {"position_bytes", layout.positionsSize},
               {"count_bytes", layout.countsSize}};
      if (m.points > 0) doc["storage_3d"] = storage3DJson(m);
      doc["points_per_entry"] = perEntry;
      doc["points_per_entry_histogram"] = log2Histogram(perEntry);
      doc["observation_histogram"] = log2Histogram(observations);
      if (json) {
        emitJson(out, doc);
      } else {
        fmt::print(out, "map {} ({} bytes on disk)\n", o.artifact, fileBytes);
        if (m.points > 0) print3D(out, m);
        fmt::print(out, "    semantic payload    {:>16} bytes\n",
                   layout.semanticPayload());
        fmt::print(out, "    positions (extra)   {:>16} bytes\n",
                   layout.positionsSize);
        fmt::print(out, "    counts (extra)      {:>16} bytes\n",
                   layout.countsSize);
      }
      return 0;
    }
    case ArtifactKind::kUnknown:
      break;
  }
  throw Error(ErrorCode::kBadMagic,
              fmt::format("{} is neither a .plaf2d nor a .plaf3d file",
                          o.artifact));
}

}  // namespace

int exitCodeFor(int errorCode) { return 9 + errorCode; }

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Mask-indexed semantic memory and 3D semantic maps", "plaf"};
  app.require_subcommand(1);
  bool json = false;
  app.add_flag("--json", json, "Machine-readable output");

  SynthOptions synth;
  auto* synthCmd = app.add_subcommand("synth", "Generate a synthetic scene");
  synthCmd->add_option("--objects", synth.spec.objectCount, "Object count");
  synthCmd->add_option("--dim", synth.spec.dim, "Feature dimension C");
  synthCmd->add_option("--height", synth.spec.height, "Image height");
  synthCmd->add_option("--width", synth.spec.width, "Image width");
  synthCmd->add_option("--frames", synth.spec.frameCount, "Frame count");
  synthCmd->add_option("--noise", synth.spec.noise, "Feature noise sigma");
  synthCmd->add_option("--seed", synth.spec.seed, "Random seed");
  synthCmd->add_option("--mask-format", synth.maskFormat, "raw or rle")
      ->check(CLI::IsMember({"raw", "rle"}));
  synthCmd->add_option("--out", synth.out, "Output directory")->required();
  synthCmd->add_flag("--json", json, "Machine-readable output");

  IngestOptions ingest;
  auto* ingestCmd = app.add_subcommand("ingest", "Build a .plaf2d frame");
  ingestCmd->add_option("--features", ingest.features, "Dense feature file")
      ->required();
  ingestCmd->add_option("--masks", ingest.masks, "Mask file")->required();
  ingestCmd->add_option("--policy", ingest.policy, "Overlap policy (smallest)");
  ingestCmd->add_option("--out", ingest.out, "Output .plaf2d")->required();
  ingestCmd->add_flag("--json", json, "Machine-readable output");

  BuildOptions build;
  auto* buildCmd = app.add_subcommand("build", "Fuse frames into a .plaf3d map");
  buildCmd->add_option("--frame", build.frames, "Frame (.plaf2d), repeatable")
      ->required();
  buildCmd->add_option("--camera", build.cameras, "Camera JSON, repeatable")
      ->required();
  buildCmd->add_option("--tau", build.fusion.similarityThreshold,
                       "Merge cosine threshold");
  buildCmd->add_option("--voxel", build.fusion.voxelSize, "Voxel size (m)");
  buildCmd->add_option("--stride", build.fusion.pixelStride, "Pixel stride");
  buildCmd->add_option("--out", build.out, "Output .plaf3d")->required();
  buildCmd->add_flag("--json", json, "Machine-readable output");

  QueryOptions query;
  std::size_t topK = 0;
  auto* queryCmd = app.add_subcommand("query", "Score a map or frame");
  queryCmd->add_option("--map", query.map, "Map (.plaf3d)");
  queryCmd->add_option("--frame", query.frame, "Frame (.plaf2d)");
  queryCmd->add_option("--embedding", query.embeddings,
                       "Text embedding file, repeatable");
  queryCmd->add_option("--theta", query.theta, "Score threshold");
  auto* topKOpt = queryCmd->add_option("--topk", topK, "Keep the best K targets");
  queryCmd->add_flag("--argmax", query.argmax,
                     "Label each target with its best query");
  queryCmd->add_option("--out", query.out, "Output PLY (map) or PGM (frame)");
  queryCmd->add_flag("--json", json, "Machine-readable output");

  StatsOptions stats;
  auto* statsCmd = app.add_subcommand("stats", "Storage accounting");
  statsCmd->add_option("artifact", stats.artifact, ".plaf2d or .plaf3d file");
  statsCmd->add_flag("--dry-run", stats.dryRun,
                     "Price hypothetical sizes without data");
  statsCmd->add_option("--height", stats.model.height, "H");
  statsCmd->add_option("--width", stats.model.width, "W");
  statsCmd->add_option("--masks", stats.model.masks, "K");
  statsCmd->add_option("--dim", stats.model.dim, "C");
  statsCmd->add_option("--points", stats.model.points, "N");
  statsCmd->add_option("--pool", stats.model.poolSize, "M");
  statsCmd->add_option("--bf", stats.model.floatBytes, "Bytes per float");
  statsCmd->add_option("--bi", stats.model.indexBytes, "Bytes per mask index");
  statsCmd->add_option("--br", stats.model.refBytes, "Bytes per point reference");
  statsCmd->add_flag("--json", json, "Machine-readable output");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  if (topKOpt->count() > 0) query.topK = topK;

  try {
    if (*synthCmd) return cmdSynth(synth, json, out, err);
    if (*ingestCmd) return cmdIngest(ingest, json, out, err);
    if (*buildCmd) return cmdBuild(build, json, out, err);
    if (*queryCmd) return cmdQuery(query, json, out, err);
    if (*statsCmd) return cmdStats(stats, json, out, err);
  } catch (const Error& e) {
    fmt::print(err, "plaf: {}: {}\n", errorCodeName(e.code()), e.what());
    return exitCodeFor(static_cast<int>(e.code()));
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(err, "plaf: {}\n", e.what());
    return exitCodeFor(static_cast<int>(ErrorCode::kInputMissing));
  }
  return 1;
}

}  // namespace plaf::cli
