#pragma once

// Cell lattice over a rectangular domain and placement of the scaled
// unit-cell pre-crack pattern into every cell.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace msfrac {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Open axis-aligned rectangle (origin, origin + (width, height)).
struct Domain {
  Vec2 origin{0.0, 0.0};
  double width = 1.0;
  double height = 1.0;

  double area() const { return width * height; }

  void validate() const {
    if (!(width > 0.0) || !(height > 0.0))
      throw std::invalid_argument("domain: width and height must be positive");
  }
};

/// Integer lattice coordinates of a cell; its origin is epsilon * (m, n).
struct CellIndex {
  long m = 0;
  long n = 0;
  auto operator<=>(const CellIndex&) const = default;
};

/// The cells z + epsilon*Y lying inside the open domain, sorted
/// lexicographically by origin (x first, then y).
struct CellLattice {
  double epsilon = 0.0;
  std::vector<CellIndex> cells;
  Domain domain;

  std::size_t size() const { return cells.size(); }
  bool empty() const { return cells.empty(); }

  Vec2 origin(std::size_t k) const {
    return {epsilon * static_cast<double>(cells[k].m), epsilon * static_cast<double>(cells[k].n)};
  }
  Vec2 center(std::size_t k) const { return origin(k) + Vec2(0.5 * epsilon, 0.5 * epsilon); }
};

/// Polylines in unit-cell coordinates; every vertex must lie in (0,1)^2.
struct PreCrackPattern {
  std::vector<std::vector<Vec2>> polylines;

  double length() const {
    double total = 0.0;
    for (const auto& line : polylines)
      for (std::size_t i = 1; i < line.size(); ++i) total += (line[i] - line[i - 1]).norm();
    return total;
  }
};

struct CrackSegment {
  Vec2 a;
  Vec2 b;
  std::size_t cell = 0;      // index into CellLattice::cells
  std::size_t polyline = 0;  // polyline index within that cell's pattern

  double length() const { return (b - a).norm(); }
};

/// The global pre-crack set: every pattern segment mapped into every cell.
struct CrackGeometry {
  std::vector<CrackSegment> segments;
  double total_length = 0.0;
};

/// Returns std::nullopt when the pattern is valid, otherwise a description of
/// the first violated invariant.
inline std::optional<std::string> validate_pattern(const PreCrackPattern& pattern) {
  if (pattern.polylines.empty()) return "pattern has no polylines";
  for (std::size_t p = 0; p < pattern.polylines.size(); ++p) {
    const auto& line = pattern.polylines[p];
    if (line.size() < 2) {
      std::ostringstream os;
      os << "polyline " << p << " has fewer than 2 vertices";
      return os.str();
    }
    for (std::size_t v = 0; v < line.size(); ++v) {
      const Vec2& q = line[v];
      if (!std::isfinite(q.x()) || !std::isfinite(q.y()) || !(q.x() > 0.0) || !(q.x() < 1.0) ||
          !(q.y() > 0.0) || !(q.y() < 1.0)) {
        std::ostringstream os;
        os << "polyline " << p << " vertex " << v << " (" << q.x() << ", " << q.y()
           << ") is not strictly inside the unit cell";
        return os.str();
      }
    }
    double len = 0.0;
    for (std::size_t v = 1; v < line.size(); ++v) len += (line[v] - line[v - 1]).norm();
    if (!(len > 0.0)) {
      std::ostringstream os;
      os << "polyline " << p << " has zero length";
      return os.str();
    }
  }
  return std::nullopt;
}

/// Enumerates every z = (eps*m, eps*n) with the closed square z + eps*Y inside
/// the open domain. A relative guard of 1e-12 treats squares that touch the
/// boundary up to rounding as touching it.
inline CellLattice build_lattice(const Domain& domain, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("build_lattice: epsilon must be positive");
  domain.validate();

  const auto admissible_range = [epsilon](double lo, double extent) {
    const double hi = lo + extent;
    const double guard = 1e-12 * (std::abs(lo) + std::abs(hi) + extent);
    std::vector<long> out;
    const long first = static_cast<long>(std::floor(lo / epsilon)) - 1;
    const long last = static_cast<long>(std::ceil(hi / epsilon)) + 1;
    for (long m = first; m <= last; ++m) {
      const double a = epsilon * static_cast<double>(m);
      const double b = epsilon * static_cast<double>(m + 1);
      if (a > lo + guard && b < hi - guard) out.push_back(m);
    }
    return out;
  };

  CellLattice lattice;
  lattice.epsilon = epsilon;
  lattice.domain = domain;
  const auto ms = admissible_range(domain.origin.x(), domain.width);
  const auto ns = admissible_range(domain.origin.y(), domain.height);
  lattice.cells.reserve(ms.size() * ns.size());
  for (long m : ms)
    for (long n : ns) lattice.cells.push_back({m, n});
  return lattice;
}

/// N(eps) * eps^2 / A(domain).
inline double coverage_ratio(const CellLattice& lattice) {
  return static_cast<double>(lattice.size()) * lattice.epsilon * lattice.epsilon /
         lattice.domain.area();
}

/// Maps pattern segments p->q to z + eps*p -> z + eps*q for every cell. An
/// override pattern keyed by cell index replaces the shared pattern in that
/// cell.
inline CrackGeometry place_precracks(const CellLattice& lattice, const PreCrackPattern& pattern,
                                     const std::map<std::size_t, PreCrackPattern>& overrides = {}) {
  if (auto why = validate_pattern(pattern))
    throw std::invalid_argument("place_precracks: invalid pattern: " + *why);
  for (const auto& [cell, local] : overrides) {
    if (auto why = validate_pattern(local))
      throw std::invalid_argument("place_precracks: invalid override for cell " +
                                  std::to_string(cell) + ": " + *why);
  }

  CrackGeometry geometry;
  for (std::size_t k = 0; k < lattice.size(); ++k) {
    const auto it = overrides.find(k);
    const PreCrackPattern& local = it == overrides.end() ? pattern : it->second;
    const Vec2 z = lattice.origin(k);
    for (std::size_t p = 0; p < local.polylines.size(); ++p) {
      const auto& line = local.polylines[p];
      for (std::size_t v = 1; v < line.size(); ++v) {
        CrackSegment s{z + lattice.epsilon * line[v - 1], z + lattice.epsilon * line[v], k, p};
        geometry.total_length += s.length();
        geometry.segments.push_back(s);
      }
    }
  }
  return geometry;
}

}  // namespace msfrac
