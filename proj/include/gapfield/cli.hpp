#pragma once

// Subcommands behind the gapfield executable. Exit status: 0 pass, 1 check or solver
// failure, 2 usage or configuration error, 3 refusal to overwrite an existing output.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gapfield/config_io.hpp"
#include "gapfield/svg_plot.hpp"

namespace gapfield {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kExitPass = 0, kExitCheckFailed = 1, kExitUsage = 2, kExitRefused = 3 };

struct RunManifest {
  std::string subcommand;
  std::string config_path;
  std::string out_dir = "out";
  std::string from_csv;  ///< rates/plot: reuse a sweep table instead of solving
  bool force = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> mesh_base;
  std::optional<std::size_t> mesh_cap;
};

namespace detail {

struct Refused : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::ParseError:
    case ErrorKind::InvalidUsage:
    case ErrorKind::InvalidParameter:
    case ErrorKind::InvalidGeometry: return kExitUsage;
    default: return kExitCheckFailed;
  }
}

/// Output files of one run. Every target is checked before anything is written.
class OutputSet {
 public:
  OutputSet(const RunManifest& m, std::vector<std::string> names) : dir_(m.out_dir), names_(std::move(names)) {
    if (!m.force)
      for (const auto& n : names_)
        if (std::filesystem::exists(dir_ / n))
          throw Refused("refusing to overwrite " + (dir_ / n).string() + " (use --force)");
    std::filesystem::create_directories(dir_);
  }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }
  void write(const std::string& name, const std::string& body) const {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) fail(ErrorKind::InvalidUsage, "cannot write " + path(name).string());
    out << body;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

inline RunConfig load_with_overrides(const RunManifest& m) {
  RunConfig rc = load_config(m.config_path);
  if (m.mesh_base) rc.mesh.base_panels = *m.mesh_base;
  if (m.mesh_cap) rc.mesh.max_nodes = *m.mesh_cap;
  if (m.seed) {
    rc.sweep.seed = *m.seed;
    rc.verify.seed = *m.seed;
  }
  rc.sweep.scene = rc.scene;
  rc.sweep.mesh = rc.mesh;
  return rc;
}

inline const SweepSpec& require_sweep(const RunConfig& rc) {
  if (!rc.has_sweep) fail(ErrorKind::InvalidUsage, "config has no [sweep] section");
  if (!rc.sweep_configured) fail(ErrorKind::InvalidUsage, "[sweep] section is empty");
  return rc.sweep;
}

inline std::string seconds_since(std::chrono::steady_clock::time_point t0) {
  return format_number(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

// Sweep table either from --from or from a fresh run; the footer travels with it.
inline std::pair<SweepTable, Footer> obtain_table(const RunManifest& m, std::ostream& log) {
  if (!m.from_csv.empty()) {
    std::ifstream in(m.from_csv);
    if (!in) fail(ErrorKind::InvalidUsage, "cannot open sweep table '" + m.from_csv + "'");
    Footer f;
    SweepTable t = read_sweep_csv(in, &f);
    log << "read " << t.rows.size() << " rows from " << m.from_csv << '\n';
    return {t, f};
  }
  RunConfig rc = load_with_overrides(m);
  const SweepSpec& spec = require_sweep(rc);
  SweepTable t = run_sweep(spec);
  return {t, summarize(t, spec.spread_limit)};
}

inline double footer_limit(const Footer& f) {
  for (const auto& [k, v] : f)
    if (k == "spread_limit") return std::strtod(v.c_str(), nullptr);
  return SweepSpec{}.spread_limit;
}

inline std::vector<std::string> predicted_columns(const SweepTable& t) {
  std::vector<std::string> out;
  for (const auto& c : t.columns)
    if (c.rfind("scale_", 0) != 0 && t.has("scale_" + c)) out.push_back(c);
  return out;
}

}  // namespace detail

inline int cmd_solve(const RunManifest& m, std::ostream& log) {
  auto t0 = std::chrono::steady_clock::now();
  RunConfig rc = detail::load_with_overrides(m);
  detail::OutputSet out(m, {"solution.csv", "summary.txt"});
  Configuration cfg = build_scene(rc.scene);
  auto op = assemble(cfg.bodies, rc.mesh);
  auto u = solve_u(op, cfg);

  std::ostringstream sol;
  write_solution_csv(sol, u);
  std::ostringstream sum;
  sum << std::setprecision(17);
  sum << "# gapfield " << kVersion << " solve wall_seconds=" << detail::seconds_since(t0) << '\n';
  sum << "family=" << to_string(rc.scene.family) << '\n';
  sum << "nodes=" << op.mesh->size() << '\n';
  sum << "condition=" << format_number(u.condition) << '\n';
  for (std::size_t c = 0; c < u.constants.size(); ++c)
    sum << "constant_" << c + 1 << '=' << format_number(u.constants[c]) << '\n';
  for (std::size_t i = 0; i < u.constants.size(); ++i)
    for (std::size_t j = i + 1; j < u.constants.size(); ++j)
      sum << "difference_" << j + 1 << '_' << i + 1 << '=' << format_number(u.constants[j] - u.constants[i]) << '\n';
  for (std::size_t c = 0; c + 1 < cfg.conductors.size(); ++c) {
    auto g = gap(cfg, cfg.conductors[c].front(), cfg.conductors[c + 1].front());
    auto mg = max_gap_gradient(u, g);
    sum << "gap_" << c + 1 << '_' << c + 2 << "_distance=" << format_number(g.distance) << '\n';
    sum << "gap_" << c + 1 << '_' << c + 2 << "_max_gradient=" << format_number(mg.value) << '\n';
    sum << "gap_" << c + 1 << '_' << c + 2 << "_argmax_fraction=" << format_number(mg.fraction) << '\n';
  }
  auto fc = flux_check(u);
  for (std::size_t c = 0; c < fc.residual.size(); ++c)
    sum << "flux_residual_" << c + 1 << '=' << format_number(fc.residual[c]) << '\n';
  sum << "constancy_residual=" << format_number(constancy_residual(u)) << '\n';
  for (const auto& w : cfg.warnings) sum << "warning=" << w << '\n';

  out.write("solution.csv", sol.str());
  out.write("summary.txt", sum.str());
  log << "wrote " << out.path("solution.csv").string() << " and " << out.path("summary.txt").string() << '\n';
  return kExitPass;
}

inline int cmd_sweep(const RunManifest& m, std::ostream& log) {
  RunConfig rc = detail::load_with_overrides(m);
  const SweepSpec& spec = detail::require_sweep(rc);
  detail::OutputSet out(m, {"sweep.csv"});
  SweepTable t = run_sweep(spec);
  std::ostringstream os;
  write_sweep_csv(os, t, summarize(t, spec.spread_limit));
  out.write("sweep.csv", os.str());
  log << "wrote " << out.path("sweep.csv").string() << " (" << t.rows.size() << " rows, " << t.failed_rows()
      << " failed)\n";
  return kExitPass;
}

inline int cmd_rates(const RunManifest& m, std::ostream& log) {
  detail::OutputSet out(m, {"rates.csv"});
  auto [t, footer] = detail::obtain_table(m, log);
  double limit = detail::footer_limit(footer);
  std::ostringstream os;
  os << "quantity,exponent,intercept,r_squared,predicted_exponent,stability,ratio_min,ratio_max,spread,sandwich,used,"
        "excluded\n";
  bool all_bounded = true;
  for (const auto& q : detail::predicted_columns(t)) {
    RateFit f = fit_rate(t, t.vary, q);
    RateFit p = fit_rate(t, t.vary, "scale_" + q);
    auto s = sandwich_check(t, q, "scale_" + q, limit);
    all_bounded = all_bounded && s.bounded;
    os << q << ',' << format_number(f.exponent) << ',' << format_number(f.intercept) << ','
       << format_number(f.r_squared) << ',' << format_number(p.exponent) << ','
       << format_number(exponent_stability(t, t.vary, q)) << ',' << format_number(s.min) << ','
       << format_number(s.max) << ',' << format_number(s.spread) << ',' << (s.bounded ? "bounded" : "unbounded")
       << ',' << f.used << ',' << f.excluded << '\n';
  }
  out.write("rates.csv", os.str());
  log << "wrote " << out.path("rates.csv").string() << '\n';
  return all_bounded ? kExitPass : kExitCheckFailed;
}

inline int cmd_plot(const RunManifest& m, std::ostream& log) {
  // target names depend on the table, so refusal is checked after loading it
  auto [t, footer] = detail::obtain_table(m, log);
  double limit = detail::footer_limit(footer);
  std::vector<std::string> names;
  for (const auto& q : detail::predicted_columns(t)) names.push_back(q + ".svg");
  if (names.empty()) fail(ErrorKind::InvalidUsage, "sweep table has no column with a prediction");
  detail::OutputSet out(m, names);
  for (const auto& q : detail::predicted_columns(t)) {
    std::ostringstream os;
    write_svg(os, sweep_plot(t, q, limit));
    out.write(q + ".svg", os.str());
    log << "wrote " << out.path(q + ".svg").string() << '\n';
  }
  return kExitPass;
}

inline int cmd_verify(const RunManifest& m, std::ostream& log) {
  RunConfig rc = detail::load_with_overrides(m);
  Configuration cfg = build_scene(rc.scene);
  if (cfg.tag != CaseTag::A && cfg.tag != CaseTag::B && cfg.tag != CaseTag::D)
    fail(ErrorKind::InvalidUsage, std::string("no lemma diagnostics for scene ") + to_string(rc.scene.family));
  detail::OutputSet out(m, {"verify.csv"});
  LemmaReport rep = lemma_suite(cfg, rc.mesh, rc.verify);
  std::ostringstream os;
  write_report_csv(os, rep);
  out.write("verify.csv", os.str());
  for (const auto& c : rep.checks)
    if (c.verdict == Verdict::Fail) log << "check failed: " << c.name << " (" << format_number(c.ratio) << ")\n";
  log << "wrote " << out.path("verify.csv").string() << ": " << (rep.passed() ? "all checks pass" : "checks failed")
      << '\n';
  return rep.passed() ? kExitPass : kExitCheckFailed;
}

inline int dispatch(const RunManifest& m, std::ostream& log, std::ostream& err) {
  try {
    if (m.subcommand == "solve") return cmd_solve(m, log);
    if (m.subcommand == "sweep") return cmd_sweep(m, log);
    if (m.subcommand == "rates") return cmd_rates(m, log);
    if (m.subcommand == "plot") return cmd_plot(m, log);
    if (m.subcommand == "verify") return cmd_verify(m, log);
    err << "unknown subcommand '" << m.subcommand << "'\n";
    return kExitUsage;
  } catch (const detail::Refused& e) {
    err << e.what() << '\n';
    return kExitRefused;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return detail::exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }
}

/// Parses argv and runs the selected subcommand.
inline int run_cli(int argc, const char* const* argv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"gapfield: field concentration between nearly touching conductors"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  RunManifest m;
  std::uint64_t seed = 0;
  int mesh_base = 0;
  std::size_t mesh_cap = 0;
  struct Sub {
    const char* name;
    const char* help;
    bool config_required;
  };
  for (const Sub& s : {Sub{"solve", "solve the configured scene and write the solution and a summary", true},
                       Sub{"sweep", "run the configured parameter sweep", true},
                       Sub{"rates", "fit power laws to a sweep (runs it unless --from is given)", false},
                       Sub{"plot", "write log-log SVG plots of a sweep (runs it unless --from is given)", false},
                       Sub{"verify", "run the lemma diagnostics for Case A, B or D scenes", true}}) {
    auto* sub = app.add_subcommand(s.name, s.help);
    auto* cfg = sub->add_option("config", m.config_path, "configuration file")->check(CLI::ExistingFile);
    if (s.config_required) cfg->required();
    if (!s.config_required) sub->add_option("--from", m.from_csv, "sweep table written by 'sweep'")->check(CLI::ExistingFile);
    sub->add_option("--out", m.out_dir, "output directory (created if absent)");
    sub->add_flag("--force", m.force, "overwrite existing outputs");
    sub->add_option("--seed", seed, "seed for randomized probes");
    sub->add_option("--mesh-base", mesh_base, "panels per closed curve before refinement")->check(CLI::PositiveNumber);
    sub->add_option("--mesh-cap", mesh_cap, "node cap of the mesh")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, log, err);
    return code == 0 ? kExitPass : kExitUsage;
  }
  for (auto* sub : app.get_subcommands()) {
    m.subcommand = sub->get_name();
    if (sub->count("--seed")) m.seed = seed;
    if (sub->count("--mesh-base")) m.mesh_base = mesh_base;
    if (sub->count("--mesh-cap")) m.mesh_cap = mesh_cap;
  }
  if (m.config_path.empty() && m.from_csv.empty()) {
    err << m.subcommand << ": give a config file or --from\n";
    return kExitUsage;
  }
  return dispatch(m, log, err);
}

}  // namespace gapfield
