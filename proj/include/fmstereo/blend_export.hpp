// SPDX-License-Identifier: Apache-2.0
#pragma once

// Final deliverables: side-by-side and anaglyph stereo packaging, and the
// posed multi-view dataset (frames + cameras + reference depth + manifest).

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fmstereo/error.hpp"
#include "fmstereo/geometry.hpp"
#include "fmstereo/io/checksum.hpp"
#include "fmstereo/io/pfm.hpp"
#include "fmstereo/io/png.hpp"
#include "fmstereo/raster.hpp"

namespace fmstereo {

namespace detail {
inline void require_pairs(const std::vector<Image>& left, const std::vector<Image>& right,
                          const char* what) {
  if (left.size() != right.size()) {
    throw ShapeError(std::string(what) + ": left has " + std::to_string(left.size()) +
                     " frames, right has " + std::to_string(right.size()));
  }
  for (std::size_t i = 0; i < left.size(); ++i) require_same_shape(left[i], right[i], what);
}
}  // namespace detail

inline std::vector<Image> compose_side_by_side(const std::vector<Image>& left,
                                               const std::vector<Image>& right) {
  detail::require_pairs(left, right, "compose_side_by_side");
  std::vector<Image> out;
  out.reserve(left.size());
  for (std::size_t i = 0; i < left.size(); ++i) {
    const Image& l = left[i];
    const Image& r = right[i];
    Image f(l.height(), l.width() * 2, l.channels());
    for (int y = 0; y < l.height(); ++y)
      for (int x = 0; x < l.width(); ++x)
        for (int c = 0; c < l.channels(); ++c) {
          f(y, x, c) = l(y, x, c);
          f(y, x + l.width(), c) = r(y, x, c);
        }
    out.push_back(std::move(f));
  }
  return out;
}

/// Red from the left eye, green and blue from the right eye.
inline std::vector<Image> compose_anaglyph(const std::vector<Image>& left,
                                           const std::vector<Image>& right) {
  detail::require_pairs(left, right, "compose_anaglyph");
  std::vector<Image> out;
  out.reserve(left.size());
  for (std::size_t i = 0; i < left.size(); ++i) {
    if (left[i].channels() != 3) throw ShapeError("compose_anaglyph: frames must be RGB");
    Image f = right[i];
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x) f(y, x, 0) = left[i](y, x, 0);
    out.push_back(std::move(f));
  }
  return out;
}

/// Posed multi-view frames for a downstream 4D optimizer. `frames` is
/// row-major over (times x views).
struct SpatialDataset {
  int times = 0;
  int views = 0;
  std::vector<Image8> frames;
  DepthMap depth0;
  /// Optional: depth for every time of the reference view (t000 repeats depth0).
  std::vector<DepthMap> reference_depths;
  std::vector<Camera> cameras;
  std::vector<double> timestamps;

  const Image8& frame(int t, int v) const { return frames[static_cast<std::size_t>(t) * views + v]; }

  void validate() const {
    if (times < 1 || views < 1) throw ShapeError("spatial dataset needs >= 1 time and view");
    if (static_cast<int>(frames.size()) != times * views) {
      throw ShapeError("spatial dataset: frame count does not match times x views");
    }
    if (static_cast<int>(cameras.size()) != views) throw ShapeError("spatial dataset: camera count != views");
    if (static_cast<int>(timestamps.size()) != times) throw ShapeError("spatial dataset: timestamp count != times");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
      if (!(timestamps[i] > timestamps[i - 1])) throw ShapeError("spatial dataset: timestamps must increase");
    if (depth0.empty()) throw ShapeError("spatial dataset: missing reference depth");
  }
};

/// S+1 times spread uniformly over [0, 1]; a single frame sits at 0.
inline std::vector<double> normalized_timestamps(int times) {
  std::vector<double> ts(times);
  for (int i = 0; i < times; ++i) ts[i] = times > 1 ? static_cast<double>(i) / (times - 1) : 0.0;
  return ts;
}

struct ManifestEntry {
  std::string path;
  std::string checksum;
};

struct Manifest {
  int schema_version = 1;
  int times = 0;
  int views = 0;
  std::vector<ManifestEntry> files;
};

inline std::string frame_path(int view, int time) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "frames/v%03d/t%03d.png", view, time);
  return buf;
}

inline std::string depth_path(int time, int view) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "depth/t%03d_v%03d.pfm", time, view);
  return buf;
}

namespace detail {

inline nlohmann::json cameras_json(const SpatialDataset& ds) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["units"] = "meters";
  j["timestamps"] = ds.timestamps;
  nlohmann::json cams = nlohmann::json::array();
  for (int v = 0; v < ds.views; ++v) {
    const Camera& c = ds.cameras[v];
    cams.push_back({{"view", v},
                    {"width", c.width},
                    {"height", c.height},
                    {"intrinsics", {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}}},
                    {"extrinsics", c.extrinsics()},
                    {"position", c.position},
                    {"orientation", c.orientation}});
  }
  j["cameras"] = cams;
  return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + p.string());
  out << text;
  if (!out) throw IoError("write failed: " + p.string());
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open: " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in " + p.string() + ": " + e.what());
  }
}

}  // namespace detail

/// Writes the dataset under `dir`; manifest.json is written last.
inline Manifest export_spatial(const SpatialDataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  ds.validate();
  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  fs::create_directories(dir / "depth", ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create export directory " + dir.string());

  Manifest m;
  m.times = ds.times;
  m.views = ds.views;
  auto record = [&](const std::string& rel) { m.files.push_back({rel, file_checksum(dir / rel)}); };

  for (int v = 0; v < ds.views; ++v) {
    char sub[32];
    std::snprintf(sub, sizeof sub, "frames/v%03d", v);
    fs::create_directories(dir / sub);
    for (int t = 0; t < ds.times; ++t) {
      const std::string rel = frame_path(v, t);
      write_png(dir / rel, ds.frame(t, v));
      record(rel);
    }
  }
  write_pfm(dir / depth_path(0, 0), ds.depth0);
  record(depth_path(0, 0));
  for (std::size_t t = 1; t < ds.reference_depths.size(); ++t) {
    const std::string rel = depth_path(static_cast<int>(t), 0);
    write_pfm(dir / rel, ds.reference_depths[t]);
    record(rel);
  }
  detail::write_text(dir / "cameras.json", detail::cameras_json(ds).dump(2));
  record("cameras.json");

  nlohmann::json j;
  j["schema_version"] = m.schema_version;
  j["times"] = m.times;
  j["views"] = m.views;
  j["frame_count"] = ds.times * ds.views;
  j["camera_count"] = ds.views;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& e : m.files) files.push_back({{"path", e.path}, {"fnv1a64", e.checksum}});
  j["files"] = files;
  detail::write_text(dir / "manifest.json", j.dump(2));
  return m;
}

inline Manifest read_manifest(const std::filesystem::path& dir) {
  const auto j = detail::read_json(dir / "manifest.json");
  Manifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    m.times = j.value("times", 0);
    m.views = j.value("views", 0);
    for (const auto& f : j.at("files")) {
      m.files.push_back({f.at("path").get<std::string>(), f.at("fnv1a64").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("manifest.json: " + std::string(e.what()));
  }
  if (m.schema_version != 1) throw IoError("manifest.json: unsupported schema version");
  return m;
}

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> mismatched;
  std::vector<std::string> missing;
};

/// Recomputes every manifest checksum under `dir`.
inline VerifyReport verify_manifest(const std::filesystem::path& dir) {
  VerifyReport r;
  for (const auto& e : read_manifest(dir).files) {
    if (!std::filesystem::exists(dir / e.path)) {
      r.missing.push_back(e.path);
    } else if (file_checksum(dir / e.path) != e.checksum) {
      r.mismatched.push_back(e.path);
    }
  }
  r.ok = r.mismatched.empty() && r.missing.empty();
  return r;
}

inline SpatialDataset import_spatial(const std::filesystem::path& dir) {
  const Manifest m = read_manifest(dir);
  const auto cams = detail::read_json(dir / "cameras.json");
  SpatialDataset ds;
  ds.times = m.times;
  ds.views = m.views;
  try {
    ds.timestamps = cams.at("timestamps").get<std::vector<double>>();
    for (const auto& c : cams.at("cameras")) {
      Camera cam;
      cam.width = c.at("width").get<int>();
      cam.height = c.at("height").get<int>();
      const auto& in = c.at("intrinsics");
      cam.fx = in.at("fx").get<double>();
      cam.fy = in.at("fy").get<double>();
      cam.cx = in.at("cx").get<double>();
      cam.cy = in.at("cy").get<double>();
      cam.position = c.at("position").get<Vec3>();
      cam.orientation = c.at("orientation").get<Mat3>();
      ds.cameras.push_back(cam);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cameras.json: " + std::string(e.what()));
  }
  for (int t = 0; t < ds.times; ++t)
    for (int v = 0; v < ds.views; ++v) ds.frames.push_back(read_png(dir / frame_path(v, t), 3));
  ds.depth0 = read_pfm(dir / depth_path(0, 0));
  if (std::filesystem::exists(dir / depth_path(1, 0))) {
    ds.reference_depths.push_back(ds.depth0);
    for (int t = 1; t < ds.times; ++t) ds.reference_depths.push_back(read_pfm(dir / depth_path(t, 0)));
  }
  ds.validate();
  return ds;
}

}  // namespace fmstereo
