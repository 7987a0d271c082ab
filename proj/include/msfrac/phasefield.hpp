#pragma once

// Ambrosio-Tortorelli regularization of the fracture energy:
//
//   E(u, v) = sum_T (vbar^2 + k) w(e(u)) |T|
//           + G sum_T ( eta |grad v|^2 + (1 - v)^2 / (4 eta) ) |T|
//
// on the uncracked mesh, with v pinned to 0 on pre-crack nodes. Nodal
// quadrature is used for every v-dependent mass term (vbar^2 is the vertex
// mean of v^2), which keeps the v-subproblem an M-matrix system so its
// minimizer stays in [0, 1]. The reported surface term skips triangles whose
// centroid lies within 2 eta of a pre-crack edge.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "damage.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "material.hpp"
#include "solve.hpp"

namespace msfrac {

struct ATParams {
  double eta = 0.0;
  double k_eta = 1e-6;

  void validate(double h) const {
    if (!(eta >= 2.0 * h * (1.0 - 1e-12)))
      throw std::invalid_argument("phase field: eta must be at least 2h");
    if (!(k_eta > 0.0) || k_eta > 1e-6) throw std::invalid_argument("phase field: k_eta must lie in (0, 1e-6]");
  }
};

struct PhaseField {
  Eigen::VectorXd v;  // per mesh node, 1 intact, 0 broken
};

struct ATOptions {
  double tolerance = 1e-8;  // relative energy decrease per sweep
  std::size_t max_sweeps = 200;
};

struct ATResult {
  Connectivity conn;  // uncracked
  DisplacementField u;
  PhaseField v;
  EnergyBreakdown energy;       // reported: surface outside the pre-crack tube
  std::vector<double> history;  // minimized functional, initial state first
  std::size_t sweeps = 0;
  bool converged = false;
};

namespace detail {

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + s * d)).norm();
}

inline Vec2 centroid(const Mesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  return (mesh.nodes[tri[0]] + mesh.nodes[tri[1]] + mesh.nodes[tri[2]]) / 3.0;
}

// Gradients of the three linear shape functions of triangle t.
inline std::array<Vec2, 3> shape_gradients(const Mesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const double area = mesh.signed_area(t);
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Vec2& pj = mesh.nodes[tri[static_cast<std::size_t>((i + 1) % 3)]];
    const Vec2& pk = mesh.nodes[tri[static_cast<std::size_t>((i + 2) % 3)]];
    g[static_cast<std::size_t>(i)] = Vec2(pj.y() - pk.y(), pk.x() - pj.x()) / (2.0 * area);
  }
  return g;
}

inline double triangle_surface_density(const Mesh& mesh, std::size_t t, const Eigen::VectorXd& v, double eta) {
  const auto& tri = mesh.triangles[t];
  const auto g = shape_gradients(mesh, t);
  Vec2 grad = Vec2::Zero();
  double defect = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double vi = v[static_cast<Eigen::Index>(tri[static_cast<std::size_t>(i)])];
    grad += vi * g[static_cast<std::size_t>(i)];
    defect += (1.0 - vi) * (1.0 - vi);
  }
  return mesh.signed_area(t) * (eta * grad.squaredNorm() + defect / 3.0 / (4.0 * eta));
}

inline double mean_square(const Mesh& mesh, std::size_t t, const Eigen::VectorXd& v) {
  double s = 0.0;
  for (std::size_t node : mesh.triangles[t]) s += v[static_cast<Eigen::Index>(node)] * v[static_cast<Eigen::Index>(node)];
  return s / 3.0;
}

}  // namespace detail

/// Nodes touched by any pre-crack edge, ascending.
inline std::vector<std::size_t> precrack_nodes(const Mesh& mesh, const EdgeSet& precrack) {
  std::vector<std::size_t> nodes;
  for (std::size_t e : precrack) nodes.insert(nodes.end(), mesh.edges[e].nodes.begin(), mesh.edges[e].nodes.end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

/// 1 for triangles whose centroid is farther than 2 eta from every pre-crack edge.
inline std::vector<char> outside_tube(const Mesh& mesh, const EdgeSet& precrack, double eta) {
  std::vector<char> outside(mesh.triangles.size(), 1);
  const double radius = 2.0 * eta;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec2 c = detail::centroid(mesh, t);
    for (std::size_t e : precrack) {
      const auto& n = mesh.edges[e].nodes;
      if (detail::point_segment_distance(c, mesh.nodes[n[0]], mesh.nodes[n[1]]) <= radius) {
        outside[t] = 0;
        break;
      }
    }
  }
  return outside;
}

/// Energy of (u, v); the surface term is summed over triangles with
/// include[t] != 0 (all triangles when `include` is empty).
inline EnergyBreakdown at_functional(const Mesh& mesh, const Connectivity& conn, const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& v, const ATParams& params, const Material& material,
                                     const std::vector<char>& include = {}) {
  EnergyBreakdown e;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double w = elastic_density(sym_grad(element_gradient(mesh, conn, u, t)), material);
    e.elastic += mesh.signed_area(t) * w * (detail::mean_square(mesh, t, v) + params.k_eta);
    if (include.empty() || include[t]) e.surface += detail::triangle_surface_density(mesh, t, v, params.eta);
  }
  e.surface *= material.griffith;
  e.total = e.elastic + e.surface;
  return e;
}

/// Reported phase-field energy: surface term outside the pre-crack tube.
inline EnergyBreakdown at_energy(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const ATParams& params,
                                 const Material& material, const Mesh& mesh, const Connectivity& conn,
                                 const EdgeSet& precrack) {
  if (v.size() != static_cast<Eigen::Index>(mesh.nodes.size()))
    throw std::invalid_argument("at_energy: phase field size does not match mesh");
  if (v.minCoeff() < 0.0 || v.maxCoeff() > 1.0) throw std::invalid_argument("at_energy: phase field outside [0, 1]");
  return at_functional(mesh, conn, u, v, params, material, outside_tube(mesh, precrack, params.eta));
}

namespace detail {

inline Eigen::VectorXd solve_phase(const Mesh& mesh, const Connectivity& conn, const Eigen::VectorXd& u,
                                   const std::vector<double>& pinned, const ATParams& params, const Material& material) {
  const auto n = static_cast<Eigen::Index>(mesh.nodes.size());
  std::vector<Eigen::Index> free_index(mesh.nodes.size(), -1);
  Eigen::Index free_count = 0;
  Eigen::VectorXd v(n);
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    if (std::isnan(pinned[i]))
      free_index[i] = free_count++;
    else
      v[static_cast<Eigen::Index>(i)] = pinned[i];
  }
  if (free_count == 0) return v;

  const double g = material.griffith;
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(free_count);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double area = mesh.signed_area(t);
    const double w = elastic_density(sym_grad(element_gradient(mesh, conn, u, t)), material);
    const auto grads = shape_gradients(mesh, t);
    for (int i = 0; i < 3; ++i) {
      const Eigen::Index fi = free_index[tri[static_cast<std::size_t>(i)]];
      if (fi < 0) continue;
      triplets.emplace_back(fi, fi, 2.0 * area * w / 3.0 + g * area / (6.0 * params.eta));
      rhs[fi] += g * area / (6.0 * params.eta);
      for (int j = 0; j < 3; ++j) {
        const std::size_t nj = tri[static_cast<std::size_t>(j)];
        const double k = 2.0 * g * params.eta * area * grads[static_cast<std::size_t>(i)].dot(grads[static_cast<std::size_t>(j)]);
        if (free_index[nj] >= 0)
          triplets.emplace_back(fi, free_index[nj], k);
        else
          rhs[fi] -= k * pinned[nj];
      }
    }
  }
  Eigen::SparseMatrix<double> a(free_count, free_count);
  a.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw SolverError("phase field: factorization failed", 1.0);
  const Eigen::VectorXd x = ldlt.solve(rhs);
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
    if (free_index[i] >= 0) v[static_cast<Eigen::Index>(i)] = std::clamp(x[free_index[i]], 0.0, 1.0);
  return v;
}

inline DisplacementField solve_displacement(const Mesh& mesh, const Connectivity& conn, const Eigen::VectorXd& v,
                                            const BoundaryCondition& bc, const ATParams& params,
                                            const Material& material) {
  std::vector<double> weights(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) weights[t] = mean_square(mesh, t, v) + params.k_eta;
  const QuadraticSystem sys = assemble(mesh, conn, material, 0.0, weights);
  return equilibrium_direct(sys, apply_bc(mesh, conn, bc));
}

}  // namespace detail

/// Alternates exact minimization in u (v fixed) and in v (u fixed), starting
/// from v = 1 off the pre-crack, until the functional drops by less than
/// tolerance * (initial value) in one sweep.
inline ATResult alternate_minimize(const Mesh& mesh, const EdgeSet& precrack, const BoundaryCondition& bc,
                                   const Material& material, const ATParams& params, const ATOptions& options = {}) {
  material.validate();
  params.validate(mesh.h);
  ATResult r;
  r.conn = break_edges(mesh, CrackState{});
  // v = 1 where u is prescribed, v = 0 on the pre-crack.
  std::vector<double> pinned(mesh.nodes.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
    if (mesh.boundary_node[i]) pinned[i] = 1.0;
  for (std::size_t node : precrack_nodes(mesh, precrack)) pinned[node] = 0.0;

  r.v.v = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(mesh.nodes.size()));
  for (std::size_t i = 0; i < pinned.size(); ++i)
    if (!std::isnan(pinned[i])) r.v.v[static_cast<Eigen::Index>(i)] = pinned[i];
  r.u = detail::solve_displacement(mesh, r.conn, r.v.v, bc, params, material);
  const double initial = at_functional(mesh, r.conn, r.u.values, r.v.v, params, material).total;
  r.history.push_back(initial);

  for (r.sweeps = 1; r.sweeps <= options.max_sweeps; ++r.sweeps) {
    r.v.v = detail::solve_phase(mesh, r.conn, r.u.values, pinned, params, material);
    r.u = detail::solve_displacement(mesh, r.conn, r.v.v, bc, params, material);
    const double value = at_functional(mesh, r.conn, r.u.values, r.v.v, params, material).total;
    const double decrease = r.history.back() - value;
    r.history.push_back(value);
    if (decrease <= options.tolerance * initial) {
      r.converged = true;
      break;
    }
  }
  if (!r.converged) r.sweeps = options.max_sweeps;
  r.energy = at_energy(r.u.values, r.v.v, params, material, mesh, r.conn, precrack);
  r.energy.residual = r.u.residual;
  return r;
}

/// Surface integral (without G) outside the pre-crack tube, accumulated per
/// cell by triangle centroid. Units of length.
inline CellLengths at_emergent_lengths(const Eigen::VectorXd& v, const ATParams& params, const CellLattice& lattice,
                                       const Mesh& mesh, const EdgeSet& precrack) {
  CellLengths out;
  out.per_cell.assign(lattice.size(), 0.0);
  const auto include = outside_tube(mesh, precrack, params.eta);
  const long n = mesh.resolution;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (!include[t]) continue;
    const double s = detail::triangle_surface_density(mesh, t, v, params.eta);
    // Centroids are interior to their pixel, so the containing cell is unique.
    long si = 0, sj = 0;
    for (std::size_t node : mesh.triangles[t]) {
      si += mesh.grid[node].i;
      sj += mesh.grid[node].j;
    }
    const auto floor_div = [](long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
    const CellIndex cell{floor_div(si, 3 * n), floor_div(sj, 3 * n)};
    const auto it = std::lower_bound(lattice.cells.begin(), lattice.cells.end(), cell);
    if (it != lattice.cells.end() && *it == cell)
      out.per_cell[static_cast<std::size_t>(it - lattice.cells.begin())] += s;
    else
      out.outside += s;
  }
  return out;
}

}  // namespace msfrac
