#include "aggresim/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "aggresim/error.hpp"

namespace aggresim {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
    throw InvalidArgument("expected a finite number, got '" + s + "'");
  return v;
}

long long to_integer(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno == ERANGE) throw InvalidArgument("expected an integer, got '" + s + "'");
  return v;
}

int to_int(const std::string& s) {
  const long long v = to_integer(s);
  if (v < INT32_MIN || v > INT32_MAX) throw InvalidArgument("integer out of range: '" + s + "'");
  return static_cast<int>(v);
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw InvalidArgument("expected true or false, got '" + s + "'");
}

struct KeyDef {
  const char* section;
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define AGG_DOUBLE(sec, key, field)                                            \
  KeyDef {                                                                     \
    sec, key, [](RunConfig& c, const std::string& v) { c.field = to_double(v); }, \
        [](const RunConfig& c) { return fmt(c.field); }                        \
  }
#define AGG_INT(sec, key, field)                                            \
  KeyDef {                                                                  \
    sec, key, [](RunConfig& c, const std::string& v) { c.field = to_int(v); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }          \
  }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      KeyDef{"model", "mode",
             [](RunConfig& c, const std::string& v) {
               if (v == "full") c.mode = Model::full;
               else if (v == "passive_only") c.mode = Model::passive_only;
               else throw InvalidArgument("mode must be full or passive_only, got '" + v + "'");
             },
             [](const RunConfig& c) { return std::string(c.mode == Model::full ? "full" : "passive_only"); }},
      AGG_DOUBLE("material", "R", params.R),
      AGG_DOUBLE("material", "E_mod", params.E_mod),
      AGG_DOUBLE("material", "xi", params.xi),
      AGG_DOUBLE("material", "k_on", params.k_on),
      AGG_DOUBLE("material", "k_off", params.k_off),
      AGG_DOUBLE("material", "ell0", params.ell0),
      AGG_DOUBLE("material", "f_p", params.f_p),
      AGG_DOUBLE("material", "lambda", params.lambda_pen),
      AGG_INT("mesh", "nx", mesh.nx),
      AGG_INT("mesh", "ny", mesh.ny),
      AGG_DOUBLE("mesh", "Lx", mesh.lx),
      AGG_DOUBLE("mesh", "Ly", mesh.ly),
      AGG_DOUBLE("solver", "dt_init", solver.dt_init),
      AGG_DOUBLE("solver", "dt_growth", solver.dt_growth),
      AGG_DOUBLE("solver", "dt_shrink", solver.dt_shrink),
      AGG_DOUBLE("solver", "dt_min", solver.dt_min),
      AGG_DOUBLE("solver", "dt_max", solver.dt_max),
      AGG_DOUBLE("solver", "newton_tol_abs", solver.newton_tol_abs),
      AGG_DOUBLE("solver", "newton_tol_rel", solver.newton_tol_rel),
      AGG_INT("solver", "newton_max_iter", solver.newton_max_iter),
      AGG_DOUBLE("solver", "newton_stagnation_rel", solver.newton_stagnation_rel),
      AGG_INT("solver", "fast_iter_threshold", solver.fast_iter_threshold),
      AGG_DOUBLE("solver", "t_end", solver.t_end),
      KeyDef{"solver", "scaled_norm", [](RunConfig& c, const std::string& v) { c.solver.scaled_norm = to_bool(v); },
             [](const RunConfig& c) { return std::string(c.solver.scaled_norm ? "true" : "false"); }},
      KeyDef{"initial", "type",
             [](RunConfig& c, const std::string& v) {
               if (v == "uniform") c.initial.kind = InitialKind::uniform;
               else if (v == "two_colony") c.initial.kind = InitialKind::two_colony;
               else throw InvalidArgument("initial type must be uniform or two_colony, got '" + v + "'");
             },
             [](const RunConfig& c) {
               return std::string(c.initial.kind == InitialKind::uniform ? "uniform" : "two_colony");
             }},
      AGG_DOUBLE("initial", "base_density", initial.uniform.base_density),
      AGG_DOUBLE("initial", "amplitude", initial.uniform.amplitude),
      KeyDef{"initial", "seed",
             [](RunConfig& c, const std::string& v) {
               const long long s = to_integer(v);
               if (s < 0) throw InvalidArgument("seed must be non-negative");
               c.initial.uniform.seed = static_cast<std::uint64_t>(s);
             },
             [](const RunConfig& c) { return std::to_string(c.initial.uniform.seed); }},
      AGG_DOUBLE("initial", "colony_peak", initial.colony_peak),
      AGG_DOUBLE("initial", "colony_width", initial.colony_width),
      AGG_DOUBLE("initial", "colony_separation", initial.colony_separation),
      KeyDef{"output", "directory", [](RunConfig& c, const std::string& v) { c.output.directory = v; },
             [](const RunConfig& c) { return c.output.directory; }},
      AGG_DOUBLE("output", "snapshot_interval", output.snapshot_interval),
      AGG_INT("output", "diagnostics_interval", output.diagnostics_interval),
  };
  return table;
}

#undef AGG_DOUBLE
#undef AGG_INT

const KeyDef* find_key(const std::string& name) {
  for (const KeyDef& k : key_table())
    if (name == k.name) return &k;
  return nullptr;
}

}  // namespace

void RunConfig::validate() const {
  params.validate();
  solver.validate();
  if (mesh.nx < 2 || mesh.ny < 2) throw InvalidArgument("mesh needs at least 2 elements per direction");
  if (!(mesh.lx > 0.0) || !(mesh.ly > 0.0)) throw InvalidArgument("domain lengths must be positive");
  const double cmax = params.max_density();
  if (!(initial.uniform.base_density > 0.0 && initial.uniform.base_density < cmax))
    throw InvalidArgument("base_density must lie in (0, 1/(pi R^2))");
  if (!(initial.uniform.amplitude >= 0.0 && initial.uniform.amplitude < 1.0))
    throw InvalidArgument("amplitude must lie in [0, 1)");
  if (initial.kind == InitialKind::two_colony) {
    if (!(initial.colony_peak > 0.0)) throw InvalidArgument("colony_peak must be positive");
    if (!(initial.colony_width > 0.0)) throw InvalidArgument("colony_width must be positive");
    if (!(initial.colony_separation >= 0.0)) throw InvalidArgument("colony_separation must be non-negative");
  }
  if (mode == Model::full && !(params.lambda_pen > 0.0))
    throw InvalidArgument("lambda must be positive in full mode (the gradient field is otherwise undetermined)");
  if (!(output.snapshot_interval > 0.0)) throw InvalidArgument("snapshot_interval must be positive");
  if (output.diagnostics_interval < 1) throw InvalidArgument("diagnostics_interval must be at least 1");
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const KeyDef* k = find_key(key);
  if (k == nullptr) throw ParseError("unknown key '" + key + "'", 0);
  try {
    k->set(config, value);
  } catch (const InvalidArgument& e) {
    throw ParseError(key + ": " + e.what(), 0);
  }
}

RunConfig parse_config(const std::string& text, std::vector<std::string>* warnings) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  bool fp_set = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", lineno);
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const KeyDef& k : key_table()) known = known || section == k.section;
      if (!known) throw ParseError("unknown section [" + section + "]", lineno);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const KeyDef* k = find_key(key);
    if (k == nullptr || (!section.empty() && section != k->section))
      throw ParseError("unknown key '" + key + "'" + (section.empty() ? "" : " in [" + section + "]"), lineno);
    try {
      k->set(cfg, value);
    } catch (const InvalidArgument& e) {
      throw ParseError(key + ": " + e.what(), lineno);
    }
    if (key == "f_p") fp_set = true;
  }
  cfg.validate();
  if (cfg.mode == Model::passive_only && fp_set && warnings != nullptr)
    warnings->push_back("f_p is ignored in passive_only mode");
  return cfg;
}

RunConfig load_config(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), warnings);
}

std::string to_text(const RunConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const KeyDef& k : key_table()) {
    if (section != k.section) {
      section = k.section;
      os << (os.tellp() > 0 ? "\n" : "") << '[' << section << "]\n";
    }
    os << k.name << " = " << k.get(config) << '\n';
  }
  return os.str();
}

Mesh build_mesh(const MeshSpec& spec) { return build_periodic_grid(spec.nx, spec.ny, spec.lx, spec.ly); }

FieldState two_colony_state(const Mesh& mesh, const MaterialParams& params, const InitialSpec& spec,
                            int quadrature_points) {
  FieldState s = initialize_state(mesh, params, spec.uniform, quadrature_points);
  const Vec2 L = mesh.domain_size;
  const Vec2 center = 0.5 * L;
  const Vec2 c1 = center - Vec2(0.5 * spec.colony_separation, 0.0);
  const Vec2 c2 = center + Vec2(0.5 * spec.colony_separation, 0.0);
  const double cap = 0.9 * params.max_density();
  auto periodic_r2 = [&](const Vec2& X, const Vec2& c) {
    Vec2 d = X - c;
    for (int i = 0; i < 2; ++i) d(i) -= L(i) * std::round(d(i) / L(i));
    return d.squaredNorm();
  };
  const double w2 = 2.0 * spec.colony_width * spec.colony_width;
  for (int a = 0; a < mesh.num_corner_nodes(); ++a) {
    const Vec2 X = mesh.unique_coords(mesh.corner_node(a));
    double& c = s.c[static_cast<std::size_t>(a)];
    c += spec.colony_peak * (std::exp(-periodic_r2(X, c1) / w2) + std::exp(-periodic_r2(X, c2) / w2));
    c = std::min(c, cap);
  }
  return s;
}

FieldState initial_state(const RunConfig& config, const Mesh& mesh) {
  if (config.initial.kind == InitialKind::two_colony) return two_colony_state(mesh, config.params, config.initial);
  return initialize_state(mesh, config.params, config.initial.uniform);
}

void write_snapshot(std::ostream& os, const FieldState& state, const Mesh& mesh, Model mode, int step) {
  const bool full = mode == Model::full;
  os << "# aggresim snapshot\n";
  os << "# time " << fmt(state.time) << '\n';
  os << "# step " << step << '\n';
  os << "# mesh " << mesh.nx << ' ' << mesh.ny << ' ' << fmt(mesh.domain_size.x()) << ' ' << fmt(mesh.domain_size.y())
     << '\n';
  os << "# mode " << (full ? "full" : "passive_only") << '\n';
  os << "# nodes " << mesh.num_unique_nodes() << '\n';
  os << "# X Y x y c p g_x g_y\n";
  for (int n = 0; n < mesh.num_unique_nodes(); ++n) {
    const Vec2 X = mesh.unique_coords(n);
    const Vec2& y = state.y[static_cast<std::size_t>(n)];
    double c, p;
    Vec2 g;
    const int ci = mesh.corner_index(n);
    if (ci >= 0) {
      const auto idx = static_cast<std::size_t>(ci);
      c = state.c[idx];
      p = full ? state.p[idx] : 0.0;
      g = full ? state.g[idx] : Vec2::Zero();
    } else {
      const FieldSample f = sample_fields(state, mesh, X);
      c = f.c;
      p = full ? f.p : 0.0;
      g = full ? f.g : Vec2::Zero();
    }
    os << fmt(X.x()) << ' ' << fmt(X.y()) << ' ' << fmt(y.x()) << ' ' << fmt(y.y()) << ' ' << fmt(c) << ' ' << fmt(p)
       << ' ' << fmt(g.x()) << ' ' << fmt(g.y()) << '\n';
  }
  os << "# elements " << mesh.num_elements() << '\n';
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& conn = mesh.elements[static_cast<std::size_t>(e)];
    for (int k = 0; k < 9; ++k) os << (k ? " " : "") << mesh.unique_node(conn[k]);
    os << '\n';
  }
  if (full && !state.S_a.empty()) {
    os << "# active_stress " << state.S_a.size() << '\n';
    for (const Mat2& S : state.S_a) os << fmt(S(0, 0)) << ' ' << fmt(S(0, 1)) << ' ' << fmt(S(1, 1)) << '\n';
  }
}

void write_snapshot(const std::string& path, const FieldState& state, const Mesh& mesh, Model mode, int step) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open snapshot for writing: " + path);
  write_snapshot(f, state, mesh, mode, step);
  f.flush();
  if (!f) throw Error("failed writing snapshot: " + path);
}

Snapshot read_snapshot(std::istream& is) {
  Snapshot snap;
  std::string line;
  int lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(is, line)) throw ParseError("unexpected end of snapshot", lineno);
    ++lineno;
    return line;
  };
  auto header = [&](const std::string& key) {
    next_line();
    std::istringstream ls(line);
    std::string hash, k;
    ls >> hash >> k;
    if (hash != "#" || k != key) throw ParseError("expected header '# " + key + "'", lineno);
    std::string rest;
    std::getline(ls, rest);
    return trim(rest);
  };
  auto numbers = [&](const std::string& text, std::size_t count) {
    std::istringstream ls(text);
    std::vector<double> v;
    std::string tok;
    while (ls >> tok) {
      try {
        v.push_back(to_double(tok));
      } catch (const InvalidArgument& e) {
        throw ParseError(e.what(), lineno);
      }
    }
    if (v.size() != count) throw ParseError("expected " + std::to_string(count) + " values", lineno);
    return v;
  };

  next_line();
  if (trim(line) != "# aggresim snapshot") throw ParseError("not an aggresim snapshot", lineno);
  const double time = numbers(header("time"), 1)[0];
  snap.step = to_int(header("step"));
  {
    std::istringstream ls(header("mesh"));
    std::string a, b, c, d;
    if (!(ls >> a >> b >> c >> d)) throw ParseError("bad mesh header", lineno);
    snap.mesh = MeshSpec{to_int(a), to_int(b), to_double(c), to_double(d)};
  }
  const std::string mode = header("mode");
  if (mode == "full") snap.mode = Model::full;
  else if (mode == "passive_only") snap.mode = Model::passive_only;
  else throw ParseError("bad mode '" + mode + "'", lineno);
  const int nodes = to_int(header("nodes"));
  const Mesh mesh = build_mesh(snap.mesh);
  if (nodes != mesh.num_unique_nodes()) throw ParseError("node count does not match the mesh", lineno);
  next_line();  // column legend

  FieldState& s = snap.state;
  s = reference_state(mesh, 9);
  s.time = time;
  for (int n = 0; n < nodes; ++n) {
    const auto v = numbers(next_line(), 8);
    s.y[static_cast<std::size_t>(n)] = Vec2(v[2], v[3]);
    const int ci = mesh.corner_index(n);
    if (ci < 0) continue;
    const auto idx = static_cast<std::size_t>(ci);
    s.c[idx] = v[4];
    s.p[idx] = v[5];
    s.g[idx] = Vec2(v[6], v[7]);
  }
  const int elements = to_int(header("elements"));
  if (elements != mesh.num_elements()) throw ParseError("element count does not match the mesh", lineno);
  for (int e = 0; e < elements; ++e) {
    const auto v = numbers(next_line(), 9);
    const auto& conn = mesh.elements[static_cast<std::size_t>(e)];
    for (int k = 0; k < 9; ++k)
      if (static_cast<int>(v[k]) != mesh.unique_node(conn[k])) throw ParseError("connectivity mismatch", lineno);
  }
  if (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string hash, key;
    std::size_t count = 0;
    ls >> hash >> key >> count;
    if (hash != "#" || key != "active_stress") throw ParseError("unexpected trailing content", lineno);
    if (count != s.S_a.size()) throw ParseError("active stress count does not match the mesh", lineno);
    for (Mat2& S : s.S_a) {
      const auto v = numbers(next_line(), 3);
      S << v[0], v[1], v[1], v[2];
    }
  }
  return snap;
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open snapshot " + path);
  try {
    return read_snapshot(f);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

void write_diagnostics_row(const Diagnostics& d, double dt, int newton_iters, std::ostream& os, bool& header_written) {
  if (!header_written) {
    os << "time,total_cell_number,c_min,c_max,delta_c,constraint_violation,dt,newton_iters\n";
    header_written = true;
  }
  os << fmt(d.time) << ',' << fmt(d.total_cell_number) << ',' << fmt(d.c_min) << ',' << fmt(d.c_max) << ','
     << fmt(d.delta_c) << ',' << fmt(d.constraint_violation) << ',' << fmt(dt) << ',' << newton_iters << '\n';
  if (!os) throw Error("failed writing diagnostics row");
}

void DiagnosticsWriter::write_row(const Diagnostics& diag, double dt, int newton_iters) {
  write_diagnostics_row(diag, dt, newton_iters, *os_, header_written_);
}

void write_bridge_csv(const std::vector<BridgeRow>& rows, std::ostream& os) {
  os << "time,h,detected\n";
  for (const BridgeRow& r : rows) os << fmt(r.time) << ',' << fmt(r.bridge.h) << ',' << (r.bridge.detected ? 1 : 0) << '\n';
  if (!os) throw Error("failed writing bridge table");
}

RunSummary run_simulation(const RunConfig& config, const std::string& out_dir, std::ostream* log) {
  config.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory " + out_dir + ": " + ec.message());

  const Mesh mesh = build_mesh(config.mesh);
  AssemblyOptions opts;
  opts.threads = threads_from_environment();
  const Assembler assembler(mesh, config.mode, config.params, opts);
  const FieldState state0 = initial_state(config, mesh);
  const bool colonies = config.initial.kind == InitialKind::two_colony && config.mode == Model::full;

  const std::string diag_path = (fs::path(out_dir) / "diagnostics.csv").string();
  std::ofstream diag_file(diag_path);
  if (!diag_file) throw Error("cannot open " + diag_path);
  DiagnosticsWriter diag(diag_file);
  RunSummary summary;

  auto snapshot = [&](const FieldState& s, int step) {
    char name[40];
    std::snprintf(name, sizeof name, "snapshot_%06d.txt", step);
    write_snapshot((fs::path(out_dir) / name).string(), s, mesh, config.mode, step);
    if (colonies) summary.bridge.push_back({s.time, bridge_length(s, mesh)});
  };

  diag.write_row(compute_diagnostics(state0, mesh, config.mode), 0.0, 0);
  snapshot(state0, 0);

  std::vector<double> stops;
  for (int k = 1; k * config.output.snapshot_interval < config.solver.t_end; ++k)
    stops.push_back(k * config.output.snapshot_interval);

  int last_snapshot = 0;
  auto on_step = [&](const FieldState& s, const StepInfo& info) {
    if (info.step % config.output.diagnostics_interval == 0 || info.at_stop)
      diag.write_row(compute_diagnostics(s, mesh, config.mode), info.report.dt_used, info.report.newton_iters);
    if (info.at_stop) {
      snapshot(s, info.step);
      last_snapshot = info.step;
    }
    if (log != nullptr && info.at_stop)
      *log << "t = " << s.time << "  step " << info.step << "  dt " << info.report.dt_used << "  newton "
           << info.report.newton_iters << '\n';
    return true;
  };

  AdvanceResult res;
  try {
    res = advance(state0, assembler, config.solver, on_step, stops);
  } catch (...) {
    diag_file.flush();
    throw;
  }
  summary.accepted_steps = static_cast<int>(res.steps.size());
  summary.rejected_steps = res.rejected;
  summary.final_time = res.final_state.time;
  if (summary.accepted_steps > 0 && last_snapshot != summary.accepted_steps)
    snapshot(res.final_state, summary.accepted_steps);
  if (colonies) {
    std::ofstream bf(fs::path(out_dir) / "bridge.csv");
    if (!bf) throw Error("cannot open bridge.csv in " + out_dir);
    write_bridge_csv(summary.bridge, bf);
  }
  return summary;
}

}  // namespace aggresim
