// SPDX-License-Identifier: Apache-2.0
// fmstereo command-line front end: synth, run, verify, bridge-check,
// echo-server.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fmstereo/bridge.hpp"
#include "fmstereo/config.hpp"
#include "fmstereo/pipeline.hpp"
#include "fmstereo/synthetic.hpp"

namespace {

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", file, "key = value config file");
    app->add_option("--set", overrides, "override one config key (key=value), repeatable");
  }
  fmstereo::PipelineConfig load() const { return fmstereo::load_config(file, overrides); }
};

int print_checks(const std::string& title, const auto& checks) {
  bool ok = true;
  for (const auto& c : checks) {
    std::printf("%s  %-28s %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    ok = ok && c.passed;
  }
  std::printf("%s: %s\n", title.c_str(), ok ? "ok" : "FAILED");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monocular video to stereo / spatial video via frame-matrix denoising inpainting"};
  app.require_subcommand(1);

  ConfigArgs synth_cfg;
  std::string synth_out;
  int synth_w = 576, synth_h = 320, synth_frames = 16;
  bool synth_static = false;
  auto* synth = app.add_subcommand("synth", "write a synthetic input clip with exact depth, flow and ground truth");
  synth->add_option("-o,--out", synth_out, "output directory")->required();
  synth->add_option("--width", synth_w, "frame width");
  synth->add_option("--height", synth_h, "frame height");
  synth->add_option("--frames", synth_frames, "number of frames");
  synth->add_flag("--static", synth_static, "freeze the foreground (all flows zero)");
  synth_cfg.attach(synth);

  ConfigArgs run_cfg;
  std::string run_in, run_out;
  auto* run = app.add_subcommand("run", "run the pipeline on an input directory");
  run->add_option("-i,--input", run_in, "input directory")->required();
  run->add_option("-o,--output", run_out, "output directory")->required();
  run_cfg.attach(run);

  std::string verify_dir;
  auto* verify = app.add_subcommand("verify", "re-check invariants of an output directory");
  verify->add_option("dir", verify_dir, "output directory")->required();

  std::string address;
  int timeout_ms = 5000;
  auto* check = app.add_subcommand("bridge-check", "protocol self-test against a denoiser endpoint");
  check->add_option("address", address, "host:port")->required();
  check->add_option("--timeout-ms", timeout_ms, "socket timeout");

  int port = 7070;
  std::string host = "127.0.0.1";
  std::string mode = "zero";
  auto* echo = app.add_subcommand("echo-server", "serve the reference echo endpoint until killed");
  echo->add_option("--port", port, "TCP port (0 = ephemeral)");
  echo->add_option("--host", host, "IPv4 address to bind");
  echo->add_option("--mode", mode, "zero (eps = 0) or echo (eps = input)")
      ->check(CLI::IsMember({"zero", "echo"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const fmstereo::PipelineConfig cfg = synth_cfg.load();
      fmstereo::SceneSpec spec = fmstereo::default_scene(synth_w, synth_h, synth_frames);
      if (synth_static)
        for (auto& l : spec.foreground) l.vx = l.vy = 0.0;
      const auto s = fmstereo::write_synthetic(spec, cfg, synth_out);
      std::printf("wrote %d frames, ground truth for %d views%s to %s\n", s.frames, s.views,
                  s.padding ? (", outpaint padding " + std::to_string(s.padding)).c_str() : "", synth_out.c_str());
      return 0;
    }
    if (*run) {
      const fmstereo::PipelineConfig cfg = run_cfg.load();
      const auto report = fmstereo::run_pipeline(cfg, run_in, run_out);
      for (const auto& t : report.timings) std::printf("%-10s %8.3f s\n", t.stage.c_str(), t.seconds);
      std::printf("seed %llu  config %s  known-fidelity %s\n", static_cast<unsigned long long>(report.seed),
                  report.config_hash.c_str(), report.known_fidelity_max_abs == 0 ? "ok" : "VIOLATED");
      return 0;
    }
    if (*verify) return print_checks("verify", fmstereo::verify_output(verify_dir));
    if (*check) return print_checks("bridge-check", fmstereo::bridge::self_test(address, timeout_ms));
    if (*echo) {
      fmstereo::bridge::EchoServer server(
          mode == "echo" ? fmstereo::bridge::EchoMode::kEcho : fmstereo::bridge::EchoMode::kZero, port, host);
      std::printf("listening on %s (%s)\n", server.address().c_str(), mode.c_str());
      std::fflush(stdout);
      server.wait();
      return 0;
    }
  } catch (const fmstereo::StageError& e) {
    std::fprintf(stderr, "error in stage %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
