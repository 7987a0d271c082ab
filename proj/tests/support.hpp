#pragma once

#include <cmath>
#include <random>

#include "msfrac/msfrac.hpp"

namespace msfrac::fixture {

inline Domain unit_square() { return Domain{Vec2(0.0, 0.0), 1.0, 1.0}; }

// eps = 1/3 on the unit square leaves exactly one cell, origin (1/3, 1/3).
inline CellLattice one_cell() { return build_lattice(unit_square(), 1.0 / 3.0); }

inline PreCrackPattern mid_segment() { return PreCrackPattern{{{Vec2(0.25, 0.5), Vec2(0.75, 0.5)}}}; }

inline BoundaryCondition uniaxial_y(double t) {
  return BoundaryCondition{(Mat2() << 0.0, 0.0, 0.0, t).finished(), Vec2::Zero()};
}

inline BoundaryCondition uniaxial_x(double t) {
  return BoundaryCondition{(Mat2() << t, 0.0, 0.0, 0.0).finished(), Vec2::Zero()};
}

// Pre-crack edges of `pattern` in every cell of `lattice` on a mesh of resolution n.
inline EdgeSet precrack_edges(const Mesh& mesh, const CellLattice& lattice, const PreCrackPattern& pattern) {
  return rasterize_cracks(place_precracks(lattice, pattern), mesh, lattice);
}

inline std::size_t edge_between(const Mesh& mesh, GridPoint a, GridPoint b) {
  return *mesh.find_edge(*mesh.node_at(a), *mesh.node_at(b));
}

}  // namespace msfrac::fixture
