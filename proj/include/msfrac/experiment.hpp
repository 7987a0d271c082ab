#pragma once

// Single runs and epsilon x l sweeps: results.csv, SVG figures, manifest.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "config.hpp"
#include "damage.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "minimize.hpp"
#include "phasefield.hpp"
#include "solve.hpp"
#include "svg.hpp"

namespace msfrac {

/// Everything computed for one epsilon. Classification by l happens later.
struct InstanceRun {
  double epsilon = 0.0;
  CellLattice lattice;
  Mesh mesh;
  CrackState state;  // emergent stays empty for the phase field backend
  CellLengths lengths;
  EnergyBreakdown baseline;
  EnergyBreakdown achieved;
  double uncracked_elastic = 0.0;
  std::size_t candidates = 0;
  std::optional<double> oracle_total;
  std::optional<double> delta;
  bool converged = true;
  double wall_ms = 0.0;
};

struct ResultRow {
  double epsilon = 0.0;
  double l = 0.0;
  std::size_t n_cells = 0;
  double coverage_ratio = 0.0;
  double baseline_total = 0.0;
  double achieved_total = 0.0;
  double surface = 0.0;
  double emergent_length = 0.0;
  std::size_t m_count = 0;
  double eps_times_m = 0.0;
  double damaged_area = 0.0;
  double area_bound_rhs = 0.0;
  bool chain_pass = false;
  std::optional<double> straightness;
  std::optional<double> wall_time_ms;
  std::optional<double> delta_certificate;
};

struct RunOutcome {
  std::vector<InstanceRun> instances;  // epsilon descending
  std::vector<ResultRow> rows;         // epsilon descending, then l ascending
  std::vector<DamageReport> reports;   // aligned with rows
  double bound = 0.0;
  bool ok = false;
  std::string error;                   // first failure, empty when none

  int exit_code() const { return ok ? 0 : 1; }
};

inline std::vector<double> sorted_epsilons(const RunConfig& c) {
  auto e = c.epsilons;
  std::sort(e.begin(), e.end(), std::greater<>());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return e;
}

inline std::vector<double> sorted_ls(const RunConfig& c) {
  auto l = c.ls;
  std::sort(l.begin(), l.end());
  l.erase(std::unique(l.begin(), l.end()), l.end());
  return l;
}

/// Lattice, mesh and rasterized pre-cracks for one epsilon.
inline InstanceRun prepare_instance(const RunConfig& c, double epsilon) {
  InstanceRun run;
  run.epsilon = epsilon;
  run.lattice = build_lattice(c.domain, epsilon);
  if (run.lattice.empty()) throw std::invalid_argument("no admissible cell for epsilon " + detail::format_number(epsilon));
  run.mesh = build_grid(run.lattice, c.cell_resolution);
  run.state.precrack = rasterize_cracks(place_precracks(run.lattice, c.pattern, c.overrides), run.mesh, run.lattice);
  return run;
}

inline ATParams at_params(const RunConfig& c, const Mesh& mesh) {
  return ATParams{c.at_eta.value_or(2.0 * mesh.h), c.at_k_eta};
}

inline InstanceRun run_instance(const RunConfig& c, double epsilon) {
  const auto start = std::chrono::steady_clock::now();
  InstanceRun run = prepare_instance(c, epsilon);
  const Mesh& mesh = run.mesh;
  const Problem p{mesh, run.state.precrack, c.bc, c.material, c.solver};
  run.baseline = baseline_energy(p);
  run.uncracked_elastic = evaluate(Problem{mesh, {}, c.bc, c.material, c.solver}, {}).energy.elastic;

  if (c.backend == "phasefield") {
    const ATParams params = at_params(c, mesh);
    const ATResult at = alternate_minimize(mesh, run.state.precrack, c.bc, c.material, params,
                                           ATOptions{c.at_tolerance, c.at_max_sweeps});
    run.achieved = at.energy;
    run.lengths = at_emergent_lengths(at.v.v, params, run.lattice, mesh, run.state.precrack);
    run.converged = at.converged;
  } else {
    const EdgeSet candidates = candidate_edges(mesh, CrackState{run.state.precrack, {}}, c.policy);
    run.candidates = candidates.size();
    GreedyOptions options = c.greedy_options();
    std::optional<MinimizeResult> oracle;
    if (candidates.size() <= c.candidate_cap) {
      oracle = exhaustive_oracle(p, candidates);
      options.pool = candidates;
    }
    MinimizeResult greedy = greedy_propagate(p, c.policy, options);
    if (oracle) {
      run.oracle_total = oracle->energy.total;
      run.delta = delta_certificate(greedy, *oracle);
    }
    run.state = greedy.state;
    run.achieved = greedy.energy;
    run.lengths = emergent_per_cell(run.state, mesh, run.lattice);
  }
  run.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return run;
}

inline DamageReport report_for(const InstanceRun& run, double l) {
  DamageReport report = classify_active(run.lengths.per_cell, run.epsilon, l);
  report.energy_total = run.achieved.total;
  return report;
}

inline ResultRow make_row(const RunConfig& c, const InstanceRun& run, DamageReport& report, double bound) {
  const BoundChain chain = check_bound_chain(report, run.achieved, c.material, bound);
  report.bound_rhs = chain.count_bound;
  ResultRow row;
  row.epsilon = run.epsilon;
  row.l = report.l;
  row.n_cells = run.lattice.size();
  row.coverage_ratio = coverage_ratio(run.lattice);
  row.baseline_total = run.baseline.total;
  row.achieved_total = run.achieved.total;
  row.surface = run.achieved.surface;
  row.emergent_length = run.lengths.inside() + run.lengths.outside;
  row.m_count = report.m_count;
  row.eps_times_m = run.epsilon * static_cast<double>(report.m_count);
  row.damaged_area = report.damaged_area;
  row.area_bound_rhs = chain.area_bound;
  row.chain_pass = chain.pass();
  row.straightness = straightness(report, run.lattice);
  if (c.record_wall_time) row.wall_time_ms = run.wall_ms;
  row.delta_certificate = run.delta;
  return row;
}

inline const char* csv_header() {
  return "epsilon,l,n_cells,coverage_ratio,baseline_total,achieved_total,surface,emergent_length,m_count,"
         "eps_times_m,damaged_area,area_bound_rhs,chain_pass,straightness,wall_time_ms,delta_certificate";
}

inline std::string csv_line(const ResultRow& r) {
  using detail::format_number;
  const auto opt = [](const std::optional<double>& x) { return x ? format_number(*x) : std::string("NA"); };
  std::ostringstream os;
  os << format_number(r.epsilon) << ',' << format_number(r.l) << ',' << r.n_cells << ','
     << format_number(r.coverage_ratio) << ',' << format_number(r.baseline_total) << ','
     << format_number(r.achieved_total) << ',' << format_number(r.surface) << ','
     << format_number(r.emergent_length) << ',' << r.m_count << ',' << format_number(r.eps_times_m) << ','
     << format_number(r.damaged_area) << ',' << format_number(r.area_bound_rhs) << ','
     << (r.chain_pass ? "true" : "false") << ',' << opt(r.straightness) << ',' << opt(r.wall_time_ms) << ','
     << opt(r.delta_certificate);
  return os.str();
}

inline std::string csv_document(const std::vector<ResultRow>& rows) {
  std::string out = std::string(csv_header()) + "\n";
  for (const auto& r : rows) out += csv_line(r) + "\n";
  return out;
}

inline std::string svg_name(std::size_t eps_index, std::size_t l_index, bool single) {
  if (single) return "damage.svg";
  return "damage_e" + std::to_string(eps_index) + "_l" + std::to_string(l_index) + ".svg";
}

/// Config text followed by `#@ <instance> <key> = <value>` result lines.
/// The result lines are comments, so parse_config reads the manifest back.
inline std::string manifest_text(const RunConfig& c, const RunOutcome& out) {
  using detail::format_list;
  using detail::format_number;
  std::ostringstream os;
  os << "# run manifest\n" << to_text(c) << "#\n# results\n";
  os << "#@ sweep bound = " << format_number(out.bound) << "\n";
  os << "#@ sweep ok = " << (out.ok ? "true" : "false") << "\n";
  if (!out.error.empty()) os << "#@ sweep error = " << out.error << "\n";
  for (std::size_t k = 0; k < out.instances.size(); ++k) {
    const InstanceRun& r = out.instances[k];
    const auto put = [&](const char* key, const std::string& value) {
      os << "#@ " << k << ' ' << key << " = " << value << "\n";
    };
    put("epsilon", format_number(r.epsilon));
    put("n_cells", std::to_string(r.lattice.size()));
    put("baseline_total", format_number(r.baseline.total));
    put("uncracked_elastic", format_number(r.uncracked_elastic));
    put("achieved_elastic", format_number(r.achieved.elastic));
    put("achieved_surface", format_number(r.achieved.surface));
    put("achieved_total", format_number(r.achieved.total));
    put("candidates", std::to_string(r.candidates));
    put("oracle_total", r.oracle_total ? format_number(*r.oracle_total) : "NA");
    put("delta_certificate", r.delta ? format_number(*r.delta) : "NA");
    put("converged", r.converged ? "true" : "false");
    std::vector<double> edges(r.state.emergent.begin(), r.state.emergent.end());
    put("emergent_edges", format_list(edges));
    put("per_cell", format_list(r.lengths.per_cell));
  }
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    const ResultRow& row = out.rows[i];
    os << "#@ row" << i << " chain = l " << format_number(row.l) << " m_count " << row.m_count << " pass "
       << (row.chain_pass ? "true" : "false") << "\n";
  }
  return os.str();
}

/// Runs every epsilon (concurrently up to `workers`) and classifies each for
/// every l. Failed instances stop the sweep; rows before the first failure
/// are kept.
inline RunOutcome run_experiment(const RunConfig& c, std::size_t workers) {
  validate_config(c);
  const auto eps = sorted_epsilons(c);
  const auto ls = sorted_ls(c);
  std::vector<std::optional<InstanceRun>> runs(eps.size());
  std::vector<std::string> errors(eps.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  const auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < eps.size();) {
      if (failed) return;
      try {
        runs[k] = run_instance(c, eps[k]);
      } catch (const std::exception& e) {
        errors[k] = e.what();
        failed = true;
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(workers, eps.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  RunOutcome out;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (!runs[k]) {
      out.error = "epsilon " + detail::format_number(eps[k]) + ": " +
                  (errors[k].empty() ? std::string("not run after an earlier failure") : errors[k]);
      break;
    }
    out.instances.push_back(std::move(*runs[k]));
  }
  // B: the largest achieved total of the sweep.
  for (const auto& r : out.instances) out.bound = std::max(out.bound, r.achieved.total);
  bool all_ok = out.error.empty();
  for (const auto& r : out.instances) {
    all_ok = all_ok && r.converged;
    for (double l : ls) {
      DamageReport report = report_for(r, l);
      ResultRow row = make_row(c, r, report, out.bound);
      all_ok = all_ok && row.chain_pass;
      out.rows.push_back(row);
      out.reports.push_back(std::move(report));
    }
  }
  out.ok = all_ok;
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

/// Writes results.csv, one SVG per row and manifest.txt into `dir`.
inline void write_outputs(const RunConfig& c, const RunOutcome& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "results.csv", csv_document(out.rows));
  const std::size_t nl = sorted_ls(c).size();
  const bool single = out.instances.size() == 1 && nl == 1;
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    const InstanceRun& r = out.instances[i / nl];
    write_file(dir / svg_name(i / nl, i % nl, single), render_svg(r.state, out.reports[i], r.mesh, r.lattice));
  }
  write_file(dir / "manifest.txt", manifest_text(c, out));
}

/// One epsilon, one l.
inline RunOutcome run_single(const RunConfig& c, const std::filesystem::path& dir) {
  if (sorted_epsilons(c).size() != 1) throw ConfigError("epsilon_list", "a single run needs exactly one epsilon");
  if (sorted_ls(c).size() != 1) throw ConfigError("l_list", "a single run needs exactly one l");
  RunOutcome out = run_experiment(c, 1);
  write_outputs(c, out, dir);
  return out;
}

inline RunOutcome run_sweep(const RunConfig& c, const std::filesystem::path& dir, std::size_t workers) {
  RunOutcome out = run_experiment(c, workers);
  write_outputs(c, out, dir);
  return out;
}

struct ManifestInstance {
  double epsilon = 0.0;
  EdgeSet emergent;
  std::vector<double> per_cell;
};

/// Reads back the config and the per-instance results of a manifest.
inline std::pair<RunConfig, std::vector<ManifestInstance>> read_manifest(const std::string& text) {
  RunConfig c = parse_config(text);
  std::vector<ManifestInstance> instances;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("#@ ", 0) != 0) continue;
    std::istringstream ls(line.substr(3));
    std::string tag, key, eq;
    ls >> tag >> key >> eq;
    if (tag.empty() || !std::all_of(tag.begin(), tag.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) continue;
    const std::size_t k = std::stoul(tag);
    if (instances.size() <= k) instances.resize(k + 1);
    std::string value;
    std::getline(ls, value);
    if (key == "epsilon") {
      instances[k].epsilon = detail::parse_number(key, value);
    } else if (key == "emergent_edges") {
      std::vector<std::size_t> edges;
      for (double x : detail::parse_list(key, value)) edges.push_back(static_cast<std::size_t>(x));
      instances[k].emergent = make_edge_set(std::move(edges));
    } else if (key == "per_cell") {
      instances[k].per_cell = detail::parse_list(key, value);
    }
  }
  return {c, instances};
}

/// Re-renders every figure of a manifest into `dir`. Returns the file count.
inline std::size_t render_manifest(const std::string& text, const std::filesystem::path& dir) {
  const auto [c, instances] = read_manifest(text);
  const auto ls = sorted_ls(c);
  const bool single = instances.size() == 1 && ls.size() == 1;
  std::filesystem::create_directories(dir);
  std::size_t written = 0;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    InstanceRun run = prepare_instance(c, instances[k].epsilon);
    if (instances[k].per_cell.size() != run.lattice.size())
      throw std::runtime_error("manifest per_cell does not match the lattice of instance " + std::to_string(k));
    for (std::size_t e : instances[k].emergent)
      if (e >= run.mesh.edges.size()) throw std::runtime_error("manifest edge index out of range");
    run.state.emergent = instances[k].emergent;
    for (std::size_t j = 0; j < ls.size(); ++j) {
      const DamageReport report = classify_active(instances[k].per_cell, run.epsilon, ls[j]);
      write_file(dir / svg_name(k, j, single), render_svg(run.state, report, run.mesh, run.lattice));
      ++written;
    }
  }
  return written;
}

}  // namespace msfrac
