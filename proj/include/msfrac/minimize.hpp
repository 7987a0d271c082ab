#pragma once

// Minimization of the fracture energy over crack states that contain the
// pre-crack set: exhaustive enumeration on small candidate sets, greedy
// single-edge propagation at scale, and the gap between the two.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grid.hpp"
#include "material.hpp"
#include "solve.hpp"

namespace msfrac {

/// One loading instance: mesh, rasterized pre-cracks, boundary data, material.
struct Problem {
  const Mesh& mesh;
  EdgeSet precrack;
  BoundaryCondition bc;
  Material material;
  SolverOptions solver;
};

/// A crack state together with its equilibrium field and energy.
struct Evaluation {
  CrackState state;
  Connectivity conn;
  DisplacementField u;
  EnergyBreakdown energy;
};

struct MinimizeResult {
  CrackState state;
  Connectivity conn;
  DisplacementField u;
  EnergyBreakdown energy;
  std::optional<double> delta_certificate;
  std::size_t evaluations = 0;
  std::vector<double> history;  // accepted total energies, baseline first
};

namespace detail {

inline Evaluation solve_state(const Problem& p, CrackState state, Connectivity conn, const Eigen::VectorXd& guess) {
  const QuadraticSystem sys = assemble(p.mesh, conn, p.material, p.solver.rho);
  const DofConstraints constraints = apply_bc(p.mesh, conn, p.bc);
  Evaluation ev{std::move(state), std::move(conn), {}, {}};
  ev.u = equilibrium(sys, constraints, p.solver, &guess);
  ev.energy = total_energy(ev.u, ev.state, p.mesh, ev.conn, p.material);
  return ev;
}

inline MinimizeResult to_result(Evaluation ev) {
  MinimizeResult r;
  r.state = std::move(ev.state);
  r.conn = std::move(ev.conn);
  r.u = std::move(ev.u);
  r.energy = ev.energy;
  return r;
}

}  // namespace detail

/// Equilibrium for precrack + emergent, started from u0 at the nodes.
inline Evaluation evaluate(const Problem& p, EdgeSet emergent) {
  CrackState state{p.precrack, make_edge_set(std::move(emergent))};
  Connectivity conn = break_edges(p.mesh, state);
  const Eigen::VectorXd guess = affine_guess(p.mesh, conn, p.bc);
  return detail::solve_state(p, std::move(state), std::move(conn), guess);
}

/// Same as evaluate, warm-started from a field on a subset crack state.
inline Evaluation evaluate_from(const Problem& p, EdgeSet emergent, const Evaluation& previous) {
  CrackState state{p.precrack, make_edge_set(std::move(emergent))};
  Connectivity conn = break_edges(p.mesh, state);
  const Eigen::VectorXd guess = transfer_field(p.mesh, previous.conn, previous.u.values, conn);
  return detail::solve_state(p, std::move(state), std::move(conn), guess);
}

/// Equilibrium with exactly the pre-cracks broken; an upper bound for the
/// infimum of the energy since its surface term is zero.
inline EnergyBreakdown baseline_energy(const Problem& p) { return evaluate(p, {}).energy; }

struct CandidatePolicy {
  enum class Kind { All, TipNeighborhood };
  Kind kind = Kind::TipNeighborhood;
  int radius = 1;

  /// Accepts "all" or "tip-neighborhood(r)" with r >= 1.
  static CandidatePolicy parse(const std::string& text) {
    if (text == "all") return {Kind::All, 0};
    const std::string prefix = "tip-neighborhood(";
    if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size() + 1 && text.back() == ')') {
      const std::string digits = text.substr(prefix.size(), text.size() - prefix.size() - 1);
      if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        const int r = std::stoi(digits);
        if (r >= 1) return {Kind::TipNeighborhood, r};
      }
    }
    throw std::invalid_argument("unknown candidate policy '" + text + "'");
  }

  std::string str() const { return kind == Kind::All ? "all" : "tip-neighborhood(" + std::to_string(radius) + ")"; }

  bool operator==(const CandidatePolicy&) const = default;
};

/// Unbroken interior edges eligible to break next, ascending by index. The
/// tip neighborhood of radius r holds edges with an endpoint within r - 1
/// node hops of a broken edge (r = 1: edges sharing a node with one).
inline EdgeSet candidate_edges(const Mesh& mesh, const CrackState& state, const CandidatePolicy& policy) {
  std::vector<char> broken(mesh.edges.size(), 0);
  for (std::size_t e : state.precrack) broken[e] = 1;
  for (std::size_t e : state.emergent) broken[e] = 1;

  EdgeSet out;
  if (policy.kind == CandidatePolicy::Kind::All) {
    for (std::size_t e : mesh.interior_edges)
      if (!broken[e]) out.push_back(e);
    return out;
  }

  constexpr int unreached = std::numeric_limits<int>::max();
  std::vector<int> depth(mesh.nodes.size(), unreached);
  std::queue<std::size_t> frontier;
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    if (!broken[e]) continue;
    for (std::size_t v : mesh.edges[e].nodes) {
      if (depth[v] == 0) continue;
      depth[v] = 0;
      frontier.push(v);
    }
  }
  const int max_depth = policy.radius - 1;
  while (!frontier.empty()) {
    const std::size_t v = frontier.front();
    frontier.pop();
    if (depth[v] >= max_depth) continue;
    for (std::size_t e : mesh.node_edges[v]) {
      const std::size_t w = mesh.other_node(e, v);
      if (depth[w] != unreached) continue;
      depth[w] = depth[v] + 1;
      frontier.push(w);
    }
  }
  for (std::size_t e : mesh.interior_edges) {
    if (broken[e]) continue;
    const auto& nodes = mesh.edges[e].nodes;
    if (std::min(depth[nodes[0]], depth[nodes[1]]) <= max_depth) out.push_back(e);
  }
  return out;
}

namespace detail {

inline bool lexicographic_less(const EdgeSet& a, const EdgeSet& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

/// Largest candidate set accepted by exhaustive_oracle.
inline constexpr std::size_t oracle_candidate_limit = 16;

/// Exact minimizer over every subset of `candidates` added to the pre-cracks.
/// Energies within 1e-10 (relative) of the minimum count as ties, broken by
/// smallest emergent length and then the lexicographically smallest edge set.
inline MinimizeResult exhaustive_oracle(const Problem& p, const EdgeSet& candidates) {
  if (candidates.size() > oracle_candidate_limit)
    throw std::invalid_argument("exhaustive_oracle: " + std::to_string(candidates.size()) +
                                " candidates exceed the limit of " + std::to_string(oracle_candidate_limit));
  for (std::size_t e : candidates)
    if (edge_set_contains(p.precrack, e))
      throw std::invalid_argument("exhaustive_oracle: candidate " + std::to_string(e) + " is a pre-crack edge");

  const std::uint32_t subsets = std::uint32_t{1} << candidates.size();
  std::vector<Evaluation> all;
  all.reserve(subsets);
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    std::vector<std::size_t> emergent;
    for (std::size_t k = 0; k < candidates.size(); ++k)
      if (mask & (std::uint32_t{1} << k)) emergent.push_back(candidates[k]);
    all.push_back(evaluate(p, std::move(emergent)));
  }

  double best_total = std::numeric_limits<double>::infinity();
  for (const auto& ev : all) best_total = std::min(best_total, ev.energy.total);
  const double tie = 1e-10 * std::abs(best_total) + 1e-14;
  const double length_tie = 1e-9 * p.mesh.h;

  const Evaluation* best = nullptr;
  double best_length = 0.0;
  for (const auto& ev : all) {
    if (ev.energy.total > best_total + tie) continue;
    const double len = edge_set_length(p.mesh, ev.state.emergent);
    if (!best || len < best_length - length_tie ||
        (len <= best_length + length_tie && detail::lexicographic_less(ev.state.emergent, best->state.emergent))) {
      best = &ev;
      best_length = len;
    }
  }
  MinimizeResult result = detail::to_result(*best);
  result.delta_certificate = 0.0;
  result.evaluations = subsets;
  result.history = {result.energy.total};
  return result;
}

struct GreedyOptions {
  enum class Mode { Exact, Local };

  double threshold = 1e-10;
  Mode mode = Mode::Local;
  int local_radius = 2;
  std::optional<EdgeSet> pool;  // restricts candidates when set
  std::size_t max_steps = 0;    // 0: unlimited
};

namespace detail {

struct PatchSolution {
  double delta_elastic = 0.0;
  std::vector<std::size_t> keys;  // corner keys of free copies
  std::vector<Vec2> values;       // solved values, aligned with keys
};

// Relaxes the copies of `free_nodes` with every other copy held fixed and
// reports the elastic energy change over the triangles touching them.
template <typename CornerKey, typename CornerValue>
PatchSolution relax_patch(const Mesh& mesh, const Eigen::Matrix3d& q, double mass_weight,
                          const std::vector<std::size_t>& free_nodes, CornerKey&& corner_key,
                          CornerValue&& corner_value) {
  std::vector<std::size_t> tris;
  for (std::size_t v : free_nodes) tris.insert(tris.end(), mesh.node_triangles[v].begin(), mesh.node_triangles[v].end());
  std::sort(tris.begin(), tris.end());
  tris.erase(std::unique(tris.begin(), tris.end()), tris.end());

  std::map<std::size_t, int> local;
  std::vector<std::size_t> keys;
  std::vector<char> is_free;
  std::vector<Vec2> initial;
  std::vector<std::array<int, 3>> corner_local(tris.size());
  for (std::size_t i = 0; i < tris.size(); ++i) {
    const std::size_t t = tris[i];
    for (int k = 0; k < 3; ++k) {
      const std::size_t key = corner_key(t, k);
      auto [it, inserted] = local.emplace(key, static_cast<int>(keys.size()));
      if (inserted) {
        const std::size_t v = mesh.triangles[t][k];
        keys.push_back(key);
        is_free.push_back(!mesh.boundary_node[v] &&
                          std::binary_search(free_nodes.begin(), free_nodes.end(), v));
        initial.push_back(corner_value(t, k));
      }
      corner_local[i][k] = it->second;
    }
  }

  const int m = static_cast<int>(keys.size());
  Eigen::MatrixXd k_el = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (std::size_t i = 0; i < tris.size(); ++i) {
    const auto ke = element_stiffness(mesh, tris[i], q);
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) k_el(2 * corner_local[i][a / 2] + a % 2, 2 * corner_local[i][b / 2] + b % 2) += ke(a, b);
  }
  Eigen::VectorXd x(2 * m);
  for (int i = 0; i < m; ++i) x.segment<2>(2 * i) = initial[static_cast<std::size_t>(i)];

  std::vector<int> free_dofs, fixed_dofs;
  for (int i = 0; i < m; ++i)
    for (int d = 0; d < 2; ++d) (is_free[static_cast<std::size_t>(i)] ? free_dofs : fixed_dofs).push_back(2 * i + d);

  PatchSolution out;
  if (free_dofs.empty()) return out;
  const auto nf = static_cast<Eigen::Index>(free_dofs.size());
  Eigen::MatrixXd a(nf, nf);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
  for (Eigen::Index i = 0; i < nf; ++i) {
    for (Eigen::Index j = 0; j < nf; ++j) a(i, j) = k_el(free_dofs[static_cast<std::size_t>(i)], free_dofs[static_cast<std::size_t>(j)]);
    a(i, i) += 2.0 * mass_weight;
    for (int c : fixed_dofs) rhs[i] -= k_el(free_dofs[static_cast<std::size_t>(i)], c) * x[c];
  }
  const Eigen::VectorXd solved = a.ldlt().solve(rhs);
  if (!solved.allFinite()) {
    out.delta_elastic = std::numeric_limits<double>::infinity();
    return out;
  }

  const double before = 0.5 * x.dot(k_el * x);
  for (Eigen::Index i = 0; i < nf; ++i) x[free_dofs[static_cast<std::size_t>(i)]] = solved[i];
  const double after = 0.5 * x.dot(k_el * x);
  out.delta_elastic = after - before;
  for (int i = 0; i < m; ++i) {
    if (!is_free[static_cast<std::size_t>(i)]) continue;
    out.keys.push_back(keys[static_cast<std::size_t>(i)]);
    out.values.push_back(x.segment<2>(2 * i));
  }
  return out;
}

inline std::vector<std::size_t> nodes_within(const Mesh& mesh, std::size_t edge, int radius) {
  std::map<std::size_t, int> depth;
  std::vector<std::size_t> frontier;
  for (std::size_t v : mesh.edges[edge].nodes) {
    depth.emplace(v, 0);
    frontier.push_back(v);
  }
  for (int d = 1; d <= radius; ++d) {
    std::vector<std::size_t> next;
    for (std::size_t v : frontier)
      for (std::size_t e : mesh.node_edges[v]) {
        const std::size_t w = mesh.other_node(e, v);
        if (depth.emplace(w, d).second) next.push_back(w);
      }
    frontier = std::move(next);
  }
  std::vector<std::size_t> out;
  out.reserve(depth.size());
  for (const auto& [v, d] : depth) out.push_back(v);
  return out;
}

// Elastic energy change from breaking `edge` with only the copies near it
// relaxed. It bounds the change after a full re-solve from above.
inline double local_break_delta(const Problem& p, const Evaluation& current, const std::vector<char>& broken,
                                std::size_t edge, int radius, const Eigen::Matrix3d& q) {
  const auto is_broken = [&](std::size_t e) { return e == edge || broken[e] != 0; };
  const std::array<std::size_t, 2> ends = p.mesh.edges[edge].nodes;
  std::array<std::vector<std::size_t>, 2> groups{node_groups(p.mesh, ends[0], is_broken),
                                                 node_groups(p.mesh, ends[1], is_broken)};
  const std::size_t virtual_base = current.conn.copy_count();
  const auto corner_key = [&](std::size_t t, int k) -> std::size_t {
    const std::size_t v = p.mesh.triangles[t][static_cast<std::size_t>(k)];
    for (int s = 0; s < 2; ++s) {
      if (v != ends[static_cast<std::size_t>(s)]) continue;
      const auto& tris = p.mesh.node_triangles[v];
      const auto pos = static_cast<std::size_t>(std::find(tris.begin(), tris.end(), t) - tris.begin());
      return virtual_base + 16 * static_cast<std::size_t>(s) + groups[static_cast<std::size_t>(s)][pos];
    }
    return current.conn.corner_copy[t][static_cast<std::size_t>(k)];
  };
  const auto corner_value = [&](std::size_t t, int k) -> Vec2 {
    return current.u.at(current.conn.corner_copy[t][static_cast<std::size_t>(k)]);
  };
  const auto free_nodes = nodes_within(p.mesh, edge, radius);
  return relax_patch(p.mesh, q, p.solver.rho * p.mesh.h * p.mesh.h, free_nodes, corner_key, corner_value)
      .delta_elastic;
}

}  // namespace detail

/// Repeatedly breaks the single candidate edge with the most negative
/// total-energy change (ties to the lower edge index) until no break lowers
/// the energy by more than the threshold. Exact mode re-solves the whole body
/// per candidate; local mode relaxes a node patch around the candidate, which
/// overestimates the post-break energy, and re-solves globally only on
/// acceptance.
inline MinimizeResult greedy_propagate(const Problem& p, const CandidatePolicy& policy,
                                       const GreedyOptions& options = {}) {
  const Eigen::Matrix3d q = stiffness_form(p.material);
  Evaluation current = evaluate(p, {});
  std::size_t evaluations = 1;
  std::vector<double> history{current.energy.total};

  for (std::size_t step = 0; options.max_steps == 0 || step < options.max_steps; ++step) {
    EdgeSet candidates = candidate_edges(p.mesh, current.state, policy);
    if (options.pool) {
      EdgeSet kept;
      std::set_intersection(candidates.begin(), candidates.end(), options.pool->begin(), options.pool->end(),
                            std::back_inserter(kept));
      candidates = std::move(kept);
    }
    if (candidates.empty()) break;

    std::vector<char> broken(p.mesh.edges.size(), 0);
    for (std::size_t e : current.state.precrack) broken[e] = 1;
    for (std::size_t e : current.state.emergent) broken[e] = 1;

    double best_delta = std::numeric_limits<double>::infinity();
    std::size_t best_edge = 0;
    std::optional<Evaluation> best_eval;
    for (std::size_t e : candidates) {
      const double surface = p.material.griffith * p.mesh.edges[e].length;
      double delta;
      std::optional<Evaluation> trial;
      if (options.mode == GreedyOptions::Mode::Exact) {
        EdgeSet emergent = current.state.emergent;
        emergent.push_back(e);
        trial = evaluate_from(p, std::move(emergent), current);
        ++evaluations;
        delta = trial->energy.total - current.energy.total;
      } else {
        // Elastic relief can never exceed the stored elastic energy.
        if (surface > current.energy.elastic) continue;
        delta = detail::local_break_delta(p, current, broken, e, options.local_radius, q) + surface;
      }
      if (delta < best_delta) {
        best_delta = delta;
        best_edge = e;
        best_eval = std::move(trial);
      }
    }
    if (!(best_delta < -options.threshold)) break;

    if (best_eval) {
      current = std::move(*best_eval);
    } else {
      CrackState state = current.state;
      state.emergent = make_edge_set([&] {
        auto v = state.emergent;
        v.push_back(best_edge);
        return v;
      }());
      Connectivity conn = break_edges(p.mesh, state);
      Eigen::VectorXd guess = transfer_field(p.mesh, current.conn, current.u.values, conn);
      const auto patch = detail::relax_patch(
          p.mesh, q, p.solver.rho * p.mesh.h * p.mesh.h, detail::nodes_within(p.mesh, best_edge, options.local_radius),
          [&](std::size_t t, int k) { return conn.corner_copy[t][static_cast<std::size_t>(k)]; },
          [&](std::size_t t, int k) -> Vec2 {
            return guess.segment<2>(static_cast<Eigen::Index>(2 * conn.corner_copy[t][static_cast<std::size_t>(k)]));
          });
      for (std::size_t i = 0; i < patch.keys.size(); ++i)
        guess.segment<2>(static_cast<Eigen::Index>(2 * patch.keys[i])) = patch.values[i];
      current = detail::solve_state(p, std::move(state), std::move(conn), guess);
      ++evaluations;
    }
    history.push_back(current.energy.total);
  }

  // Re-evaluate from the canonical start so equal states give equal energies.
  MinimizeResult result = detail::to_result(evaluate(p, current.state.emergent));
  result.evaluations = evaluations + 1;
  result.history = std::move(history);
  return result;
}

/// result.total - oracle.total: the smallest delta for which `result` is a
/// delta-approximate minimizer of the instance. Differences within solver
/// rounding of zero are reported as zero.
inline double delta_certificate(const MinimizeResult& result, const MinimizeResult& oracle) {
  if (result.state.precrack != oracle.state.precrack || result.conn.corner_copy.size() != oracle.conn.corner_copy.size())
    throw std::invalid_argument("delta_certificate: results come from different instances");
  const double delta = result.energy.total - oracle.energy.total;
  const double tolerance = 1e-9 * std::max(1.0, std::abs(oracle.energy.total));
  if (delta < -tolerance)
    throw std::invalid_argument("delta_certificate: reference result is not a minimizer of the instance");
  return std::max(delta, 0.0);
}

}  // namespace msfrac
