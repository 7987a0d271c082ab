// msfrac command line: lattice, solve, sweep, oracle, render.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "msfrac/msfrac.hpp"

namespace {

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct Flags {
  std::string config;
  std::string out;
  std::size_t workers = 0;
  std::string backend;
};

msfrac::RunConfig load(const Flags& f) {
  msfrac::RunConfig c = msfrac::parse_config(read_text(f.config));
  if (!f.backend.empty()) c.backend = f.backend;
  if (f.workers > 0) c.workers = f.workers;
  msfrac::validate_config(c);
  return c;
}

std::filesystem::path out_dir(const Flags& f, const msfrac::RunConfig& c) {
  return f.out.empty() ? std::filesystem::path(c.output_dir) : std::filesystem::path(f.out);
}

int report(const msfrac::RunOutcome& out, const std::filesystem::path& dir) {
  std::cout << msfrac::csv_document(out.rows);
  if (!out.error.empty()) std::cerr << "error: " << out.error << "\n";
  std::cerr << "wrote " << (dir / "results.csv").string() << " (" << (out.ok ? "ok" : "FAILED") << ")\n";
  return out.exit_code();
}

int cmd_lattice(const Flags& f) {
  const auto c = load(f);
  std::printf("epsilon,n_cells,coverage_ratio\n");
  for (double e : msfrac::sorted_epsilons(c)) {
    const auto lattice = msfrac::build_lattice(c.domain, e);
    std::printf("%.17g,%zu,%.17g\n", e, lattice.size(), msfrac::coverage_ratio(lattice));
  }
  return 0;
}

int cmd_oracle(const Flags& f) {
  const auto c = load(f);
  const double eps = msfrac::sorted_epsilons(c).front();
  msfrac::InstanceRun run = msfrac::prepare_instance(c, eps);
  const msfrac::Problem p{run.mesh, run.state.precrack, c.bc, c.material, c.solver};
  const auto candidates = msfrac::candidate_edges(run.mesh, run.state, c.policy);
  if (candidates.size() > msfrac::oracle_candidate_limit) {
    std::cerr << "error: " << candidates.size() << " candidates exceed the oracle limit of "
              << msfrac::oracle_candidate_limit << "\n";
    return 2;
  }
  const auto oracle = msfrac::exhaustive_oracle(p, candidates);
  auto options = c.greedy_options();
  options.pool = candidates;
  const auto greedy = msfrac::greedy_propagate(p, c.policy, options);
  std::printf("candidates %zu\nsubsets %zu\n", candidates.size(), oracle.evaluations);
  std::printf("oracle_total %.17g\noracle_emergent_length %.17g\n", oracle.energy.total,
              msfrac::edge_set_length(run.mesh, oracle.state.emergent));
  std::printf("greedy_total %.17g\ndelta_certificate %.17g\n", greedy.energy.total,
              msfrac::delta_certificate(greedy, oracle));
  std::printf("oracle_edges");
  for (std::size_t e : oracle.state.emergent) std::printf(" %zu", e);
  std::printf("\n");
  return 0;
}

int cmd_render(const Flags& f, const std::string& manifest) {
  const std::string text = read_text(manifest);
  const auto [c, instances] = msfrac::read_manifest(text);
  const auto dir = out_dir(f, c);
  const std::size_t n = msfrac::render_manifest(text, dir);
  std::cerr << "wrote " << n << " figure(s) to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fracture of periodically microfractured elastic bodies"};
  app.require_subcommand(1);
  Flags flags;
  std::string manifest;

  const auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("--config", flags.config, "configuration file");
    if (need_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory (default: output_dir key)");
    sub->add_option("--workers", flags.workers, "concurrent sweep entries")->check(CLI::PositiveNumber);
    sub->add_option("--backend", flags.backend, "discrete or phasefield")
        ->check(CLI::IsMember({"discrete", "phasefield"}));
  };
  auto* lattice = app.add_subcommand("lattice", "print N(eps) and the coverage ratio");
  auto* solve = app.add_subcommand("solve", "single run: results.csv, damage.svg, manifest.txt");
  auto* sweep = app.add_subcommand("sweep", "epsilon x l sweep");
  auto* oracle = app.add_subcommand("oracle", "exhaustive minimization of a small instance");
  auto* render = app.add_subcommand("render", "re-render figures from a manifest");
  for (auto* sub : {lattice, solve, sweep, oracle}) add_common(sub, true);
  add_common(render, false);
  render->add_option("manifest", manifest, "manifest.txt of an earlier run")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*lattice) return cmd_lattice(flags);
    if (*oracle) return cmd_oracle(flags);
    if (*render) return cmd_render(flags, manifest);
    const auto c = load(flags);
    const auto dir = out_dir(flags, c);
    if (*solve) return report(msfrac::run_single(c, dir), dir);
    return report(msfrac::run_sweep(c, dir, c.workers), dir);
  } catch (const msfrac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
