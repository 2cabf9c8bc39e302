#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "aggresim/analysis.hpp"
#include "aggresim/solver.hpp"

namespace aggresim {

struct MeshSpec {
  int nx = 20;
  int ny = 20;
  double lx = 80.0;
  double ly = 80.0;
  bool operator==(const MeshSpec&) const = default;
};

enum class InitialKind { uniform, two_colony };

/// Uniform perturbed density, or two Gaussian colonies on the uniform
/// background separated along x about the domain center.
struct InitialSpec {
  InitialKind kind = InitialKind::uniform;
  InitialCondition uniform;
  double colony_peak = 0.12;
  double colony_width = 4.0;
  double colony_separation = 18.0;
  bool operator==(const InitialSpec&) const = default;
};

struct OutputSpec {
  std::string directory = "out";
  /// Simulated seconds between snapshots; the stepper lands on each mark.
  double snapshot_interval = 100.0;
  /// Accepted steps between diagnostics rows.
  int diagnostics_interval = 1;
  bool operator==(const OutputSpec&) const = default;
};

struct RunConfig {
  MaterialParams params;
  MeshSpec mesh;
  SolverConfig solver;
  InitialSpec initial;
  Model mode = Model::full;
  OutputSpec output;

  /// Throws InvalidArgument naming the failing invariant.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Line-oriented `key = value` text with optional `[section]` headers and `#`
/// comments. Unknown keys fail with the line number. Warnings (such as f_p in
/// passive-only mode) are appended to `warnings` when given.
RunConfig parse_config(const std::string& text, std::vector<std::string>* warnings = nullptr);
RunConfig load_config(const std::string& path, std::vector<std::string>* warnings = nullptr);

/// Canonical text that parse_config maps back to an equal RunConfig.
std::string to_text(const RunConfig& config);

/// Sets one key (bare name as in the config file) from its text value; used by
/// parameter sweeps. Throws ParseError for unknown keys or bad values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

Mesh build_mesh(const MeshSpec& spec);
FieldState two_colony_state(const Mesh& mesh, const MaterialParams& params, const InitialSpec& spec,
                            int quadrature_points = 9);
FieldState initial_state(const RunConfig& config, const Mesh& mesh);

struct Snapshot {
  FieldState state;
  int step = 0;
  MeshSpec mesh;
  Model mode = Model::full;
};

void write_snapshot(std::ostream& os, const FieldState& state, const Mesh& mesh, Model mode, int step);
/// Throws Error naming the path on IO failure.
void write_snapshot(const std::string& path, const FieldState& state, const Mesh& mesh, Model mode, int step);
Snapshot read_snapshot(std::istream& is);
Snapshot read_snapshot(const std::string& path);

/// Diagnostics CSV; the header row goes out with the first row.
class DiagnosticsWriter {
 public:
  explicit DiagnosticsWriter(std::ostream& os) : os_(&os) {}
  void write_row(const Diagnostics& diag, double dt, int newton_iters);

 private:
  std::ostream* os_;
  bool header_written_ = false;
};

void write_diagnostics_row(const Diagnostics& diag, double dt, int newton_iters, std::ostream& os,
                           bool& header_written);

struct BridgeRow {
  double time = 0.0;
  BridgeMeasurement bridge;
};

void write_bridge_csv(const std::vector<BridgeRow>& rows, std::ostream& os);

struct RunSummary {
  int accepted_steps = 0;
  int rejected_steps = 0;
  double final_time = 0.0;
  std::vector<BridgeRow> bridge;
};

/// Runs one configured simulation into out_dir: diagnostics.csv, a snapshot at
/// t = 0 and at every snapshot mark, and bridge.csv for the two-colony preset.
/// Progress lines go to `log` when given.
RunSummary run_simulation(const RunConfig& config, const std::string& out_dir, std::ostream* log = nullptr);

}  // namespace aggresim
