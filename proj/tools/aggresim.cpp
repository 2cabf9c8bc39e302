// Command-line driver: run, sweep, stability, bridge, recenter.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "aggresim/error.hpp"
#include "aggresim/io.hpp"

namespace fs = std::filesystem;
using namespace aggresim;

namespace {

RunConfig load(const std::string& path) {
  std::vector<std::string> warnings;
  RunConfig cfg = path.empty() ? parse_config("", &warnings) : load_config(path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return cfg;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

int cmd_run(const std::string& config_path, const std::string& out) {
  RunConfig cfg = load(config_path);
  const std::string dir = out.empty() ? cfg.output.directory : out;
  const RunSummary s = run_simulation(cfg, dir, &std::cerr);
  std::cout << "accepted " << s.accepted_steps << " rejected " << s.rejected_steps << " t " << s.final_time << '\n';
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& vary, const std::string& out) {
  const RunConfig base = load(config_path);
  const auto eq = vary.find('=');
  if (eq == std::string::npos) throw InvalidArgument("--vary expects key=v1,v2,...");
  const std::string key = vary.substr(0, eq);
  const auto values = split(vary.substr(eq + 1), ',');
  const std::string root = out.empty() ? base.output.directory : out;
  for (const auto& v : values) {
    RunConfig cfg = base;
    set_config_value(cfg, key, v);
    cfg.validate();
    const std::string dir = (fs::path(root) / (key + "_" + v)).string();
    std::cerr << "sweep " << key << " = " << v << " -> " << dir << '\n';
    const RunSummary s = run_simulation(cfg, dir, &std::cerr);
    std::cout << key << '=' << v << " accepted " << s.accepted_steps << " rejected " << s.rejected_steps << '\n';
  }
  return 0;
}

int cmd_stability(const std::string& config_path) {
  const RunConfig cfg = load(config_path);
  const StabilityOnset s = stability_onset(cfg.params, cfg.initial.uniform.base_density);
  std::cout.precision(6);
  std::cout << "value " << s.value << '\n' << "verdict " << (s.separates ? "separates" : "stable") << '\n';
  return 0;
}

int cmd_bridge(const std::string& dir, const std::string& out, int axis, Frame frame) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("snapshot_", 0) == 0 && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  if (files.empty()) throw Error("no snapshot_*.txt files in " + dir);
  std::sort(files.begin(), files.end());
  std::vector<BridgeRow> rows;
  for (const auto& f : files) {
    const Snapshot snap = read_snapshot(f.string());
    if (snap.mode != Model::full) throw InvalidArgument(f.string() + ": bridge length needs a full-model snapshot");
    const Mesh mesh = build_mesh(snap.mesh);
    rows.push_back({snap.state.time, bridge_length(snap.state, mesh, axis, -1.0, 0.96, frame)});
  }
  std::sort(rows.begin(), rows.end(), [](const BridgeRow& a, const BridgeRow& b) { return a.time < b.time; });
  if (out.empty()) {
    write_bridge_csv(rows, std::cout);
  } else {
    std::ofstream f(out);
    if (!f) throw Error("cannot open " + out);
    write_bridge_csv(rows, f);
  }
  return 0;
}

int cmd_recenter(const std::string& path, const std::string& out) {
  const Snapshot snap = read_snapshot(path);
  const Mesh mesh = build_mesh(snap.mesh);
  const RecenterResult r = recenter_periodic(snap.state, mesh);
  std::cerr << "shift " << r.shift.x() << ' ' << r.shift.y() << '\n';
  if (out.empty()) {
    write_snapshot(std::cout, r.state, mesh, snap.mode, snap.step);
  } else {
    write_snapshot(out, r.state, mesh, snap.mode, snap.step);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aggresim: finite element simulation of pili-mediated cellular aggregation"};
  app.require_subcommand(1);

  std::string config, out, vary, snapshot_dir, snapshot;
  int axis = 1;
  Frame frame = Frame::material;

  auto* run = app.add_subcommand("run", "run one simulation");
  run->add_option("--config", config, "configuration file");
  run->add_option("--out", out, "output directory (overrides the config)");

  auto* sweep = app.add_subcommand("sweep", "run one simulation per parameter value");
  sweep->add_option("--config", config, "configuration file");
  sweep->add_option("--vary", vary, "key=v1,v2,...")->required();
  sweep->add_option("--out", out, "root output directory");

  auto* stab = app.add_subcommand("stability", "print the linear stability indicator");
  stab->add_option("--config", config, "configuration file");

  auto* bridge = app.add_subcommand("bridge", "bridge length versus time from snapshots");
  bridge->add_option("--snapshot-dir", snapshot_dir, "directory holding snapshot_*.txt")->required();
  bridge->add_option("--out", out, "CSV output file (default stdout)");
  bridge->add_option("--axis", axis, "transverse axis, 0 = x, 1 = y")->check(CLI::Range(0, 1));
  bridge->add_option("--frame", frame, "measure in the material or spatial frame")
      ->transform(CLI::CheckedTransformer(std::map<std::string, Frame>{{"material", Frame::material},
                                                                        {"spatial", Frame::spatial}}));

  auto* rec = app.add_subcommand("recenter", "periodically recenter a snapshot");
  rec->add_option("--snapshot", snapshot, "snapshot file")->required();
  rec->add_option("--out", out, "output snapshot (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config, out);
    if (sweep->parsed()) return cmd_sweep(config, vary, out);
    if (stab->parsed()) return cmd_stability(config);
    if (bridge->parsed()) return cmd_bridge(snapshot_dir, out, axis, frame);
    if (rec->parsed()) return cmd_recenter(snapshot, out);
  } catch (const std::exception& e) {
    std::cout.flush();
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
