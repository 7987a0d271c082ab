#pragma once

// Per-cell emergent crack length, active cells, damaged area, and the
// inequality chain bounding the number of active cells by the energy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "geometry.hpp"
#include "grid.hpp"
#include "material.hpp"
#include "solve.hpp"

namespace msfrac {

struct CellLengths {
  std::vector<double> per_cell;  // aligned with CellLattice::cells
  double outside = 0.0;          // emergent length not inside any cell

  double inside() const {
    double total = 0.0;
    for (double x : per_cell) total += x;
    return total;
  }
};

struct DamageReport {
  double epsilon = 0.0;
  double l = 0.0;
  std::vector<double> per_cell;
  std::vector<std::size_t> active;  // cell indices, ascending
  std::size_t m_count = 0;
  double damaged_area = 0.0;
  double energy_total = 0.0;
  std::optional<double> bound_rhs;  // (M + delta) / (G l)
};

namespace detail {

// Lexicographically smallest cell (m, then n) whose closed square contains the
// point given in doubled grid units. Returns size() when none does.
inline std::size_t owning_cell(const CellLattice& lattice, long n, long twice_i, long twice_j) {
  const auto floor_div = [](long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  const long span = 2 * n;
  const long m_hi = floor_div(twice_i, span);
  const long k_hi = floor_div(twice_j, span);
  for (long m : {m_hi - 1, m_hi}) {
    if (!(span * m <= twice_i && twice_i <= span * (m + 1))) continue;
    for (long k : {k_hi - 1, k_hi}) {
      if (!(span * k <= twice_j && twice_j <= span * (k + 1))) continue;
      const auto it = std::lower_bound(lattice.cells.begin(), lattice.cells.end(), CellIndex{m, k});
      if (it != lattice.cells.end() && *it == CellIndex{m, k})
        return static_cast<std::size_t>(it - lattice.cells.begin());
    }
  }
  return lattice.size();
}

}  // namespace detail

/// Assigns each emergent edge to the lexicographically smallest cell whose
/// closed square contains the edge midpoint. Exact in integer grid units.
inline CellLengths emergent_per_cell(const CrackState& state, const Mesh& mesh, const CellLattice& lattice) {
  CellLengths out;
  out.per_cell.assign(lattice.size(), 0.0);
  for (std::size_t e : state.emergent) {
    const auto& nodes = mesh.edges[e].nodes;
    const GridPoint a = mesh.grid[nodes[0]];
    const GridPoint b = mesh.grid[nodes[1]];
    const std::size_t cell = detail::owning_cell(lattice, mesh.resolution, a.i + b.i, a.j + b.j);
    if (cell < lattice.size())
      out.per_cell[cell] += mesh.edges[e].length;
    else
      out.outside += mesh.edges[e].length;
  }
  return out;
}

/// A cell is active when its emergent length reaches eps * l (inclusive; a
/// relative 1e-12 guard absorbs summation rounding).
inline DamageReport classify_active(const std::vector<double>& per_cell, double epsilon, double l) {
  if (!(l > 0.0)) throw std::invalid_argument("classify_active: l must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("classify_active: epsilon must be positive");
  DamageReport r;
  r.epsilon = epsilon;
  r.l = l;
  r.per_cell = per_cell;
  const double threshold = epsilon * l * (1.0 - 1e-12);
  for (std::size_t k = 0; k < per_cell.size(); ++k)
    if (per_cell[k] >= threshold) r.active.push_back(k);
  r.m_count = r.active.size();
  r.damaged_area = epsilon * epsilon * static_cast<double>(r.m_count);
  return r;
}

struct BoundChain {
  double lower = 0.0;        // G * M * l * eps
  double surface = 0.0;      // G * emergent length
  double total = 0.0;        // E(u)
  double bound = 0.0;        // B >= total supplied by the caller
  double count_bound = 0.0;  // (1/eps) * B / (G l)
  double area_bound = 0.0;   // eps * B / (G l)
  bool lower_ok = false;
  bool surface_ok = false;
  bool count_ok = false;
  bool area_ok = false;

  bool pass() const { return lower_ok && surface_ok && count_ok && area_ok; }
};

/// Checks G M l eps <= surface <= total and M <= B / (eps G l),
/// eps^2 M <= eps B / (G l) for an upper bound B >= total.
inline BoundChain check_bound_chain(const DamageReport& report, const EnergyBreakdown& energy,
                                    const Material& material, double bound) {
  if (std::abs(report.energy_total - energy.total) > 1e-12 * std::max(1.0, std::abs(energy.total)))
    throw std::invalid_argument("check_bound_chain: report and energy come from different runs");
  constexpr double slack = 1e-9;
  const double g = material.griffith;
  BoundChain c;
  c.lower = g * static_cast<double>(report.m_count) * report.l * report.epsilon;
  c.surface = energy.surface;
  c.total = energy.total;
  c.bound = bound;
  c.lower_ok = c.lower <= c.surface + slack;
  c.surface_ok = c.surface <= c.total + slack;
  if (g > 0.0) {
    c.count_bound = bound / (report.epsilon * g * report.l);
    c.area_bound = report.epsilon * bound / (g * report.l);
    c.count_ok = bound + slack >= c.total && static_cast<double>(report.m_count) <= c.count_bound * (1.0 + 1e-12) + slack;
    c.area_ok = bound + slack >= c.total && report.damaged_area <= c.area_bound * (1.0 + 1e-12) + slack;
  } else {
    c.count_bound = c.area_bound = std::numeric_limits<double>::infinity();
    c.count_ok = c.area_ok = bound + slack >= c.total;
  }
  return c;
}

/// RMS perpendicular distance of active-cell centers from their total least
/// squares line, in units of eps. Absent for fewer than two active cells.
inline std::optional<double> straightness(const DamageReport& report, const CellLattice& lattice) {
  if (report.m_count < 2) return std::nullopt;
  Vec2 mean = Vec2::Zero();
  for (std::size_t k : report.active) mean += lattice.center(k);
  mean /= static_cast<double>(report.m_count);
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (std::size_t k : report.active) {
    const Vec2 d = lattice.center(k) - mean;
    scatter += d * d.transpose();
  }
  // The smallest eigenvalue of the scatter is the summed squared residual.
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
  const double ss = std::max(0.0, eig.eigenvalues()[0]);
  return std::sqrt(ss / static_cast<double>(report.m_count)) / lattice.epsilon;
}

}  // namespace msfrac
