// SPDX-License-Identifier: Apache-2.0
#pragma once

// Pipeline configuration: a flat key = value file with '#' comments,
// `--set key=value` overrides and the FM_SEED environment override.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fmstereo/diffusion.hpp"
#include "fmstereo/error.hpp"
#include "fmstereo/geometry.hpp"
#include "fmstereo/io/checksum.hpp"
#include "fmstereo/poisson.hpp"

namespace fmstereo {

enum class OracleKind { kExact, kSmoothing, kNull, kBridge };
enum class OutpaintDepth { kMirror, kConstant };

struct PipelineConfig {
  RigMode mode = RigMode::kStereo;
  int stereo_views = 6;
  double baseline = 0.07;
  int spatial_views = 16;
  double radius = 0.07;

  double depth_near = 1.0;
  double depth_far = 10.0;
  bool normalize_depth = true;
  bool smooth_depth = true;
  int smooth_radius = 2;
  double smooth_sigma = 1.0;

  int planes = 4;
  double isolated_threshold = 0.5;
  double crack_threshold = 0.2;
  double crack_sigma = 0.495;

  int timesteps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  int steps = 50;
  int jump = 20;
  int coarse_resamples = 8;
  int refine_resamples = 4;
  int phase_boundary = 25;
  /// "auto" (right view for stereo, every view for spatial), "right", "left",
  /// "all", or a comma-separated list of column indices.
  std::string refine_views = "auto";

  std::uint64_t seed = 0;
  std::uint32_t condition = 0;

  std::string codec = "box";
  int codec_factor = 8;

  OracleKind oracle = OracleKind::kExact;
  /// Ground-truth directory for the exact oracle, relative to the input dir.
  std::string ground_truth = "gt";
  std::string bridge_address = "127.0.0.1:7070";
  int bridge_timeout_ms = 30000;

  bool outpaint = false;
  OutpaintDepth outpaint_depth = OutpaintDepth::kMirror;

  bool reinject = true;
  bool reinject_every_resample = false;

  bool poisson = true;
  double poisson_tol = 1e-5;
  int poisson_max_iters = 10000;
  double poisson_omega = 1.9;

  bool export_all_depths = false;
  int threads = 1;

  int views() const { return mode == RigMode::kStereo ? stereo_views : spatial_views; }
  double rig_extent() const { return mode == RigMode::kStereo ? baseline : radius; }

  void validate() const;
  std::vector<int> resolved_refine_views() const;

  SamplingPlan plan() const {
    SamplingPlan p{steps, jump, coarse_resamples, refine_resamples, phase_boundary, resolved_refine_views()};
    return p;
  }
  NoiseSchedule schedule() const { return make_schedule(timesteps, beta_start, beta_end); }
  RepairParams repair() const { return {isolated_threshold, crack_threshold, crack_sigma}; }
  DepthRange depth_range() const { return {depth_near, depth_far}; }
  PoissonParams poisson_params() const { return {poisson_tol, poisson_max_iters, poisson_omega}; }

  /// Sets one field from its textual form; throws ConfigError on unknown
  /// keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  /// All fields as sorted "key = value" lines.
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), hex.
  std::string hash() const {
    Fnv1a64 h;
    h.update(canonical());
    return to_hex(h.digest());
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ConfigError("config key '" + key + "': cannot parse \"" + text + "\"");
  }
  return value;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got \"" + text + "\"");
}

struct Field {
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

template <typename T>
Field number_field(T PipelineConfig::*member, const std::string& key) {
  return {[member](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
            else return std::to_string(c.*member);
          },
          [member, key](PipelineConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); }};
}

inline Field bool_field(bool PipelineConfig::*member, const std::string& key) {
  return {[member](const PipelineConfig& c) { return std::string(c.*member ? "true" : "false"); },
          [member, key](PipelineConfig& c, const std::string& v) { c.*member = parse_bool(key, v); }};
}

inline Field string_field(std::string PipelineConfig::*member) {
  return {[member](const PipelineConfig& c) { return c.*member; },
          [member](PipelineConfig& c, const std::string& v) { c.*member = v; }};
}

inline const std::map<std::string, Field>& fields() {
  using C = PipelineConfig;
  static const std::map<std::string, Field> table = {
      {"mode",
       {[](const C& c) { return std::string(c.mode == RigMode::kStereo ? "stereo" : "spatial"); },
        [](C& c, const std::string& v) {
          if (v == "stereo") c.mode = RigMode::kStereo;
          else if (v == "spatial") c.mode = RigMode::kSpatial;
          else throw ConfigError("config key 'mode': expected stereo|spatial, got \"" + v + "\"");
        }}},
      {"stereo.views", number_field(&C::stereo_views, "stereo.views")},
      {"stereo.baseline", number_field(&C::baseline, "stereo.baseline")},
      {"spatial.views", number_field(&C::spatial_views, "spatial.views")},
      {"spatial.radius", number_field(&C::radius, "spatial.radius")},
      {"depth.near", number_field(&C::depth_near, "depth.near")},
      {"depth.far", number_field(&C::depth_far, "depth.far")},
      {"depth.normalize", bool_field(&C::normalize_depth, "depth.normalize")},
      {"depth.smooth", bool_field(&C::smooth_depth, "depth.smooth")},
      {"depth.smooth_radius", number_field(&C::smooth_radius, "depth.smooth_radius")},
      {"depth.smooth_sigma", number_field(&C::smooth_sigma, "depth.smooth_sigma")},
      {"warp.planes", number_field(&C::planes, "warp.planes")},
      {"warp.isolated_threshold", number_field(&C::isolated_threshold, "warp.isolated_threshold")},
      {"warp.crack_threshold", number_field(&C::crack_threshold, "warp.crack_threshold")},
      {"warp.crack_sigma", number_field(&C::crack_sigma, "warp.crack_sigma")},
      {"schedule.timesteps", number_field(&C::timesteps, "schedule.timesteps")},
      {"schedule.beta_start", number_field(&C::beta_start, "schedule.beta_start")},
      {"schedule.beta_end", number_field(&C::beta_end, "schedule.beta_end")},
      {"plan.steps", number_field(&C::steps, "plan.steps")},
      {"plan.jump", number_field(&C::jump, "plan.jump")},
      {"plan.coarse_resamples", number_field(&C::coarse_resamples, "plan.coarse_resamples")},
      {"plan.refine_resamples", number_field(&C::refine_resamples, "plan.refine_resamples")},
      {"plan.phase_boundary", number_field(&C::phase_boundary, "plan.phase_boundary")},
      {"plan.refine_views", string_field(&C::refine_views)},
      {"seed", number_field(&C::seed, "seed")},
      {"condition", number_field(&C::condition, "condition")},
      {"codec", string_field(&C::codec)},
      {"codec.factor", number_field(&C::codec_factor, "codec.factor")},
      {"oracle",
       {[](const C& c) {
          switch (c.oracle) {
            case OracleKind::kExact: return std::string("exact");
            case OracleKind::kSmoothing: return std::string("smoothing");
            case OracleKind::kNull: return std::string("null");
            case OracleKind::kBridge: return std::string("bridge");
          }
          return std::string("exact");
        },
        [](C& c, const std::string& v) {
          if (v == "exact") c.oracle = OracleKind::kExact;
          else if (v == "smoothing") c.oracle = OracleKind::kSmoothing;
          else if (v == "null") c.oracle = OracleKind::kNull;
          else if (v == "bridge") c.oracle = OracleKind::kBridge;
          else throw ConfigError("config key 'oracle': expected exact|smoothing|null|bridge, got \"" + v + "\"");
        }}},
      {"oracle.ground_truth", string_field(&C::ground_truth)},
      {"oracle.bridge_address", string_field(&C::bridge_address)},
      {"oracle.bridge_timeout_ms", number_field(&C::bridge_timeout_ms, "oracle.bridge_timeout_ms")},
      {"outpaint", bool_field(&C::outpaint, "outpaint")},
      {"outpaint.depth",
       {[](const C& c) { return std::string(c.outpaint_depth == OutpaintDepth::kMirror ? "mirror" : "constant"); },
        [](C& c, const std::string& v) {
          if (v == "mirror") c.outpaint_depth = OutpaintDepth::kMirror;
          else if (v == "constant") c.outpaint_depth = OutpaintDepth::kConstant;
          else throw ConfigError("config key 'outpaint.depth': expected mirror|constant, got \"" + v + "\"");
        }}},
      {"reinject", bool_field(&C::reinject, "reinject")},
      {"reinject.every_resample", bool_field(&C::reinject_every_resample, "reinject.every_resample")},
      {"poisson", bool_field(&C::poisson, "poisson")},
      {"poisson.tol", number_field(&C::poisson_tol, "poisson.tol")},
      {"poisson.max_iters", number_field(&C::poisson_max_iters, "poisson.max_iters")},
      {"poisson.omega", number_field(&C::poisson_omega, "poisson.omega")},
      {"export.all_depths", bool_field(&C::export_all_depths, "export.all_depths")},
      {"threads", number_field(&C::threads, "threads")},
  };
  return table;
}

}  // namespace detail

inline void PipelineConfig::set(const std::string& key, const std::string& value) {
  const auto& table = detail::fields();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(*this, detail::trim(value));
}

inline std::string PipelineConfig::canonical() const {
  std::string out;
  for (const auto& [key, field] : detail::fields()) out += key + " = " + field.get(*this) + "\n";
  return out;
}

inline std::vector<int> PipelineConfig::resolved_refine_views() const {
  const int n = views();
  const std::string& r = refine_views;
  if (r == "all") return {};
  if (r == "auto") return mode == RigMode::kStereo ? std::vector<int>{n - 1} : std::vector<int>{};
  if (r == "right") return {n - 1};
  if (r == "left") return {0};
  std::vector<int> out;
  std::stringstream ss(r);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const int v = detail::parse_number<int>("plan.refine_views", detail::trim(item));
    if (v < 0 || v >= n) {
      throw ConfigError("plan.refine_views: view " + std::to_string(v) + " outside [0, " + std::to_string(n - 1) + "]");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("plan.refine_views: empty view list");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline void PipelineConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(stereo_views >= 2, "stereo.views must be >= 2");
  require(spatial_views >= 3, "spatial.views must be >= 3");
  require(baseline >= 0.0 && std::isfinite(baseline), "stereo.baseline must be finite and >= 0");
  require(radius >= 0.0 && std::isfinite(radius), "spatial.radius must be finite and >= 0");
  require(depth_near > 0.0 && depth_far > depth_near, "depth range needs 0 < near < far");
  require(smooth_radius >= 1, "depth.smooth_radius must be >= 1");
  require(smooth_sigma > 0.0, "depth.smooth_sigma must be > 0");
  require(planes >= 1, "warp.planes must be >= 1");
  require(isolated_threshold >= 0.0 && isolated_threshold <= 1.0, "warp.isolated_threshold must lie in [0, 1]");
  require(crack_threshold >= 0.0 && crack_threshold <= 1.0, "warp.crack_threshold must lie in [0, 1]");
  require(crack_sigma > 0.0, "warp.crack_sigma must be > 0");
  require(timesteps >= 1, "schedule.timesteps must be >= 1");
  require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
          "schedule betas need 0 < beta_start <= beta_end < 1");
  require(codec == "box", "codec must be 'box'");
  require(codec_factor >= 1, "codec.factor must be >= 1");
  require(bridge_timeout_ms > 0, "oracle.bridge_timeout_ms must be > 0");
  require(poisson_tol > 0.0, "poisson.tol must be > 0");
  require(poisson_max_iters >= 0, "poisson.max_iters must be >= 0");
  require(poisson_omega > 0.0 && poisson_omega < 2.0, "poisson.omega must lie in (0, 2)");
  require(threads >= 1, "threads must be >= 1");
  plan().validate(schedule());
}

/// Parses "key = value" lines ('#' starts a comment) into `cfg`.
inline void apply_config_text(PipelineConfig& cfg, const std::string& text, const std::string& origin = "config") {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected key = value");
    }
    try {
      cfg.set(detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

inline void apply_override(PipelineConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects key=value, got \"" + assignment + "\"");
  cfg.set(detail::trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

/// Defaults <- file <- overrides <- FM_SEED, then validation.
inline PipelineConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides,
                                  const char* env_seed = std::getenv("FM_SEED")) {
  PipelineConfig cfg;
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str(), file.string());
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  if (env_seed && *env_seed) {
    try {
      cfg.set("seed", env_seed);
    } catch (const ConfigError&) {
      throw ConfigError(std::string("FM_SEED: not an unsigned integer: \"") + env_seed + "\"");
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace fmstereo
