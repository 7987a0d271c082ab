#pragma once

// Structured right-triangle mesh over the cell union, rasterization of the
// pre-crack set onto mesh edges, and node duplication along broken edges.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "geometry.hpp"

namespace msfrac {

/// Integer node position in units of the mesh spacing h.
struct GridPoint {
  long i = 0;
  long j = 0;
  auto operator<=>(const GridPoint&) const = default;
};

struct MeshEdge {
  std::array<std::size_t, 2> nodes{};
  double length = 0.0;
  std::array<std::ptrdiff_t, 2> triangles{-1, -1};

  bool interior() const { return triangles[1] >= 0; }
};

/// Conforming triangulation of the lattice cell union. Each cell is an n x n
/// pixel grid, each pixel split along its main diagonal.
struct Mesh {
  double epsilon = 0.0;
  int resolution = 0;
  double h = 0.0;

  std::vector<Vec2> nodes;
  std::vector<GridPoint> grid;
  std::vector<std::array<std::size_t, 3>> triangles;
  std::vector<MeshEdge> edges;
  std::vector<std::size_t> interior_edges;
  std::vector<char> boundary_node;
  std::vector<std::vector<std::size_t>> node_triangles;
  std::vector<std::vector<std::size_t>> node_edges;

  std::map<GridPoint, std::size_t> node_lookup;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_lookup;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t triangle_count() const { return triangles.size(); }

  std::optional<std::size_t> node_at(GridPoint p) const {
    const auto it = node_lookup.find(p);
    if (it == node_lookup.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> find_edge(std::size_t a, std::size_t b) const {
    const auto it = edge_lookup.find(std::minmax(a, b));
    if (it == edge_lookup.end()) return std::nullopt;
    return it->second;
  }

  std::size_t other_node(std::size_t edge, std::size_t node) const {
    const auto& e = edges[edge];
    return e.nodes[0] == node ? e.nodes[1] : e.nodes[0];
  }

  double signed_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Vec2 a = nodes[tri[1]] - nodes[tri[0]];
    const Vec2 b = nodes[tri[2]] - nodes[tri[0]];
    return 0.5 * (a.x() * b.y() - a.y() * b.x());
  }

  double area() const {
    double total = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) total += signed_area(t);
    return total;
  }

  Vec2 edge_midpoint(std::size_t e) const {
    return 0.5 * (nodes[edges[e].nodes[0]] + nodes[edges[e].nodes[1]]);
  }
};

inline Mesh build_grid(const CellLattice& lattice, int n) {
  if (n < 2) throw std::invalid_argument("build_grid: cell resolution must be at least 2");
  if (lattice.empty()) throw std::invalid_argument("build_grid: lattice has no cells");

  Mesh mesh;
  mesh.epsilon = lattice.epsilon;
  mesh.resolution = n;
  mesh.h = lattice.epsilon / n;

  // Pixels keyed by lower-left grid point; cells never overlap so pixels are unique.
  std::set<GridPoint> pixels;
  std::set<std::pair<long, long>> point_set;  // (j, i): row-major node order
  for (const CellIndex& c : lattice.cells) {
    for (long b = 0; b <= n; ++b)
      for (long a = 0; a <= n; ++a) point_set.insert({c.n * n + b, c.m * n + a});
    for (long b = 0; b < n; ++b)
      for (long a = 0; a < n; ++a) pixels.insert({c.m * n + a, c.n * n + b});
  }

  for (const auto& [j, i] : point_set) {
    const GridPoint p{i, j};
    mesh.node_lookup.emplace(p, mesh.nodes.size());
    mesh.grid.push_back(p);
    mesh.nodes.emplace_back(mesh.h * static_cast<double>(i), mesh.h * static_cast<double>(j));
  }

  // Row-major pixel order for triangles.
  std::vector<GridPoint> ordered(pixels.begin(), pixels.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const GridPoint& a, const GridPoint& b) { return std::pair(a.j, a.i) < std::pair(b.j, b.i); });
  for (const GridPoint& p : ordered) {
    const std::size_t p00 = mesh.node_lookup.at({p.i, p.j});
    const std::size_t p10 = mesh.node_lookup.at({p.i + 1, p.j});
    const std::size_t p11 = mesh.node_lookup.at({p.i + 1, p.j + 1});
    const std::size_t p01 = mesh.node_lookup.at({p.i, p.j + 1});
    mesh.triangles.push_back({p00, p10, p11});
    mesh.triangles.push_back({p00, p11, p01});
  }

  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> edge_triangles;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) edge_triangles[std::minmax(tri[k], tri[(k + 1) % 3])].push_back(t);
  }
  for (const auto& [key, tris] : edge_triangles) {
    MeshEdge e;
    e.nodes = {key.first, key.second};
    e.length = (mesh.nodes[key.second] - mesh.nodes[key.first]).norm();
    e.triangles[0] = static_cast<std::ptrdiff_t>(tris[0]);
    if (tris.size() > 1) e.triangles[1] = static_cast<std::ptrdiff_t>(tris[1]);
    mesh.edge_lookup.emplace(key, mesh.edges.size());
    if (e.interior()) mesh.interior_edges.push_back(mesh.edges.size());
    mesh.edges.push_back(e);
  }

  mesh.boundary_node.assign(mesh.nodes.size(), 0);
  mesh.node_triangles.resize(mesh.nodes.size());
  mesh.node_edges.resize(mesh.nodes.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    for (std::size_t v : mesh.triangles[t]) mesh.node_triangles[v].push_back(t);
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    for (std::size_t v : mesh.edges[e].nodes) {
      mesh.node_edges[v].push_back(e);
      if (!mesh.edges[e].interior()) mesh.boundary_node[v] = 1;
    }
  }
  return mesh;
}

using EdgeSet = std::vector<std::size_t>;  // sorted, unique edge indices

inline EdgeSet make_edge_set(std::vector<std::size_t> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

inline bool edge_set_contains(const EdgeSet& set, std::size_t e) {
  return std::binary_search(set.begin(), set.end(), e);
}

inline EdgeSet edge_set_union(const EdgeSet& a, const EdgeSet& b) {
  EdgeSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline double edge_set_length(const Mesh& mesh, const EdgeSet& set) {
  double total = 0.0;
  for (std::size_t e : set) total += mesh.edges[e].length;
  return total;
}

/// The discrete jump set: rasterized pre-cracks plus emergent edges.
struct CrackState {
  EdgeSet precrack;
  EdgeSet emergent;

  EdgeSet broken() const { return edge_set_union(precrack, emergent); }

  bool is_broken(std::size_t e) const {
    return edge_set_contains(precrack, e) || edge_set_contains(emergent, e);
  }

  bool operator==(const CrackState&) const = default;
};

inline void validate_state(const Mesh& mesh, const CrackState& state) {
  for (const EdgeSet* set : {&state.precrack, &state.emergent}) {
    for (std::size_t k = 0; k < set->size(); ++k) {
      const std::size_t e = (*set)[k];
      if (e >= mesh.edges.size() || !mesh.edges[e].interior())
        throw std::invalid_argument("crack state: edge " + std::to_string(e) + " is not an interior edge");
      if (k > 0 && (*set)[k - 1] >= e)
        throw std::invalid_argument("crack state: edge sets must be sorted and unique");
    }
  }
  for (std::size_t e : state.emergent)
    if (edge_set_contains(state.precrack, e))
      throw std::invalid_argument("crack state: edge " + std::to_string(e) +
                                  " is both pre-crack and emergent");
}

namespace detail {

// 4-connected digital path between two grid points, including both ends.
inline std::vector<GridPoint> grid_walk(GridPoint from, GridPoint to) {
  const long dx = std::labs(to.i - from.i);
  const long dy = std::labs(to.j - from.j);
  const long sx = to.i > from.i ? 1 : -1;
  const long sy = to.j > from.j ? 1 : -1;
  std::vector<GridPoint> path{from};
  GridPoint p = from;
  long ix = 0, iy = 0;
  while (ix < dx || iy < dy) {
    // Step along x when the next x crossing comes before the next y crossing.
    if (iy >= dy || (ix < dx && (1 + 2 * ix) * dy < (1 + 2 * iy) * dx)) {
      p.i += sx;
      ++ix;
    } else {
      p.j += sy;
      ++iy;
    }
    path.push_back(p);
  }
  return path;
}

}  // namespace detail

/// Snaps every pre-crack vertex to the nearest grid point of its cell and
/// joins consecutive vertices by axis-aligned edge chains. Throws when a
/// vertex is closer than h to its cell boundary.
inline EdgeSet rasterize_cracks(const CrackGeometry& f, const Mesh& mesh, const CellLattice& lattice) {
  const long n = mesh.resolution;
  constexpr double guard = 1e-9;
  std::vector<std::size_t> edges;

  const auto snap = [&](const Vec2& x, const CellIndex& cell) {
    const Vec2 z(lattice.epsilon * static_cast<double>(cell.m), lattice.epsilon * static_cast<double>(cell.n));
    const Vec2 local = (x - z) / mesh.h;
    for (int d = 0; d < 2; ++d) {
      if (local[d] < 1.0 - guard || local[d] > static_cast<double>(n - 1) + guard)
        throw std::invalid_argument("rasterize_cracks: pre-crack vertex (" + std::to_string(x.x()) + ", " +
                                    std::to_string(x.y()) + ") lies closer than h to its cell boundary");
    }
    return GridPoint{cell.m * n + std::lround(local.x()), cell.n * n + std::lround(local.y())};
  };

  for (const CrackSegment& s : f.segments) {
    if (s.cell >= lattice.size()) throw std::invalid_argument("rasterize_cracks: segment cell out of range");
    const CellIndex& cell = lattice.cells[s.cell];
    const auto path = detail::grid_walk(snap(s.a, cell), snap(s.b, cell));
    for (std::size_t k = 1; k < path.size(); ++k) {
      const auto a = mesh.node_at(path[k - 1]);
      const auto b = mesh.node_at(path[k]);
      if (!a || !b) throw std::invalid_argument("rasterize_cracks: pre-crack leaves the mesh");
      const auto e = mesh.find_edge(*a, *b);
      if (!e || !mesh.edges[*e].interior())
        throw std::invalid_argument("rasterize_cracks: rasterized edge is not an interior edge");
      edges.push_back(*e);
    }
  }
  return make_edge_set(std::move(edges));
}

/// Degree-of-freedom layout after node duplication. Every mesh node owns one
/// or more copies; copies of node k are first_copy[k] .. first_copy[k+1]-1.
/// Triangle corners reference copies, and copy c carries dofs 2c and 2c+1.
struct Connectivity {
  std::vector<std::array<std::size_t, 3>> corner_copy;
  std::vector<std::size_t> copy_node;
  std::vector<std::size_t> first_copy;

  std::size_t copy_count() const { return copy_node.size(); }
  std::size_t dof_count() const { return 2 * copy_node.size(); }
  std::size_t copies_of(std::size_t node) const { return first_copy[node + 1] - first_copy[node]; }
};

/// Groups the triangles around `node` into pieces connected through unbroken
/// interior edges. Returns one group id per entry of mesh.node_triangles[node],
/// numbered by first appearance.
template <typename IsBroken>
std::vector<std::size_t> node_groups(const Mesh& mesh, std::size_t node, IsBroken&& is_broken) {
  const auto& tris = mesh.node_triangles[node];
  std::vector<std::size_t> parent(tris.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const auto local = [&](std::ptrdiff_t t) {
    return static_cast<std::size_t>(std::find(tris.begin(), tris.end(), static_cast<std::size_t>(t)) - tris.begin());
  };
  for (std::size_t e : mesh.node_edges[node]) {
    const MeshEdge& edge = mesh.edges[e];
    if (!edge.interior() || is_broken(e)) continue;
    const std::size_t a = find(local(edge.triangles[0]));
    const std::size_t b = find(local(edge.triangles[1]));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> group(tris.size());
  std::vector<std::size_t> label(tris.size(), static_cast<std::size_t>(-1));
  std::size_t next = 0;
  for (std::size_t k = 0; k < tris.size(); ++k) {
    const std::size_t root = find(k);
    if (label[root] == static_cast<std::size_t>(-1)) label[root] = next++;
    group[k] = label[root];
  }
  return group;
}

template <typename IsBroken>
Connectivity build_connectivity(const Mesh& mesh, IsBroken&& is_broken) {
  Connectivity conn;
  conn.corner_copy.assign(mesh.triangles.size(), {0, 0, 0});
  conn.first_copy.reserve(mesh.nodes.size() + 1);
  for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
    conn.first_copy.push_back(conn.copy_node.size());
    const auto group = node_groups(mesh, v, is_broken);
    const std::size_t groups = group.empty() ? 0 : *std::max_element(group.begin(), group.end()) + 1;
    for (std::size_t k = 0; k < mesh.node_triangles[v].size(); ++k) {
      const std::size_t t = mesh.node_triangles[v][k];
      const auto& tri = mesh.triangles[t];
      const int corner = tri[0] == v ? 0 : (tri[1] == v ? 1 : 2);
      conn.corner_copy[t][corner] = conn.copy_node.size() + group[k];
    }
    conn.copy_node.insert(conn.copy_node.end(), groups, v);
  }
  conn.first_copy.push_back(conn.copy_node.size());
  return conn;
}

/// Splits nodes so that triangles on opposite sides of a broken edge use
/// distinct copies.
inline Connectivity break_edges(const Mesh& mesh, const CrackState& state) {
  validate_state(mesh, state);
  std::vector<char> broken(mesh.edges.size(), 0);
  for (std::size_t e : state.precrack) broken[e] = 1;
  for (std::size_t e : state.emergent) broken[e] = 1;
  return build_connectivity(mesh, [&](std::size_t e) { return broken[e] != 0; });
}

/// Number of connected pieces of material: triangles linked through shared copies.
inline std::size_t component_count(const Mesh& mesh, const Connectivity& conn) {
  std::vector<std::size_t> parent(mesh.triangles.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::ptrdiff_t> owner(conn.copy_count(), -1);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (std::size_t c : conn.corner_copy[t]) {
      if (owner[c] < 0) {
        owner[c] = static_cast<std::ptrdiff_t>(t);
      } else {
        const std::size_t a = find(t), b = find(static_cast<std::size_t>(owner[c]));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::size_t count = 0;
  for (std::size_t t = 0; t < parent.size(); ++t)
    if (find(t) == t) ++count;
  return count;
}

/// Carries a field from a coarser connectivity to one obtained from a superset
/// crack set: each new copy takes the value of the old copy at the same corner.
inline Eigen::VectorXd transfer_field(const Mesh& mesh, const Connectivity& from, const Eigen::VectorXd& u,
                                      const Connectivity& to) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(to.dof_count()));
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const auto src = static_cast<Eigen::Index>(2 * from.corner_copy[t][k]);
      const auto dst = static_cast<Eigen::Index>(2 * to.corner_copy[t][k]);
      out.segment<2>(dst) = u.segment<2>(src);
    }
  }
  return out;
}

/// Affine boundary displacement u0(x) = matrix * x + offset.
struct BoundaryCondition {
  Mat2 matrix = Mat2::Zero();
  Vec2 offset = Vec2::Zero();

  Vec2 operator()(const Vec2& x) const { return matrix * x + offset; }

  BoundaryCondition scaled(double t) const { return {t * matrix, t * offset}; }
};

/// Pinned dofs and their prescribed values.
struct DofConstraints {
  std::vector<char> pinned;
  Eigen::VectorXd value;

  std::size_t pinned_count() const {
    return static_cast<std::size_t>(std::count(pinned.begin(), pinned.end(), char{1}));
  }
};

/// Pins every copy of every node on the outer boundary of the meshed region.
inline DofConstraints apply_bc(const Mesh& mesh, const Connectivity& conn, const BoundaryCondition& bc) {
  DofConstraints c;
  c.pinned.assign(conn.dof_count(), 0);
  c.value = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(conn.dof_count()));
  for (std::size_t copy = 0; copy < conn.copy_count(); ++copy) {
    const std::size_t v = conn.copy_node[copy];
    if (!mesh.boundary_node[v]) continue;
    const Vec2 u0 = bc(mesh.nodes[v]);
    c.pinned[2 * copy] = c.pinned[2 * copy + 1] = 1;
    c.value.segment<2>(static_cast<Eigen::Index>(2 * copy)) = u0;
  }
  return c;
}

}  // namespace msfrac
