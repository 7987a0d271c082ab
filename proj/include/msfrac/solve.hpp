#pragma once

// Linear-element elasticity on a duplicated-node connectivity: assembly,
// constrained equilibrium, and evaluation of the fracture energy.

#include <array>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/Sparse>

#include "grid.hpp"
#include "material.hpp"

namespace msfrac {

struct SolverOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 0;  // 0 selects 50 * (free dof count)
  double rho = 1e-8;

  bool operator==(const SolverOptions&) const = default;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Energy 0.5 u^T K u + mass_weight * |u|^2, with mass_weight = rho * h^2.
struct QuadraticSystem {
  Eigen::SparseMatrix<double> stiffness;
  double mass_weight = 0.0;

  Eigen::Index size() const { return stiffness.rows(); }
  double elastic_energy(const Eigen::VectorXd& u) const { return 0.5 * u.dot(stiffness * u); }
  double regularization_energy(const Eigen::VectorXd& u) const { return mass_weight * u.squaredNorm(); }
  double energy(const Eigen::VectorXd& u) const { return elastic_energy(u) + regularization_energy(u); }
};

struct DisplacementField {
  Eigen::VectorXd values;
  double residual = 0.0;
  std::size_t iterations = 0;

  Vec2 at(std::size_t copy) const { return values.segment<2>(static_cast<Eigen::Index>(2 * copy)); }
};

struct EnergyBreakdown {
  double elastic = 0.0;
  double surface = 0.0;
  double total = 0.0;
  double residual = 0.0;
};

namespace detail {

// Strain-displacement matrix for the (xx, yy, xy) strain of a linear triangle.
inline Eigen::Matrix<double, 3, 6> strain_matrix(const Vec2& p0, const Vec2& p1, const Vec2& p2, double area) {
  const std::array<Vec2, 3> p{p0, p1, p2};
  Eigen::Matrix<double, 3, 6> b = Eigen::Matrix<double, 3, 6>::Zero();
  for (int i = 0; i < 3; ++i) {
    const Vec2& pj = p[(i + 1) % 3];
    const Vec2& pk = p[(i + 2) % 3];
    const double dx = (pj.y() - pk.y()) / (2.0 * area);
    const double dy = (pk.x() - pj.x()) / (2.0 * area);
    b(0, 2 * i) = dx;
    b(1, 2 * i + 1) = dy;
    b(2, 2 * i) = 0.5 * dy;
    b(2, 2 * i + 1) = 0.5 * dx;
  }
  return b;
}

}  // namespace detail

/// Element stiffness area * B^T Q B; the element energy is 0.5 d^T k d.
inline Eigen::Matrix<double, 6, 6> element_stiffness(const Mesh& mesh, std::size_t t, const Eigen::Matrix3d& q) {
  const double area = mesh.signed_area(t);
  if (!(area > 0.0)) throw std::invalid_argument("assemble: degenerate triangle " + std::to_string(t));
  const auto& tri = mesh.triangles[t];
  const auto b = detail::strain_matrix(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]], area);
  return area * b.transpose() * q * b;
}

/// Displacement gradient of triangle t under field u (rows: components).
inline Mat2 element_gradient(const Mesh& mesh, const Connectivity& conn, const Eigen::VectorXd& u, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Vec2 e1 = mesh.nodes[tri[1]] - mesh.nodes[tri[0]];
  const Vec2 e2 = mesh.nodes[tri[2]] - mesh.nodes[tri[0]];
  const auto c = conn.corner_copy[t];
  const auto value = [&](int k) { return Vec2(u.segment<2>(static_cast<Eigen::Index>(2 * c[k]))); };
  Mat2 x, du;
  x << e1, e2;
  du << value(1) - value(0), value(2) - value(0);
  return du * x.inverse();
}

/// Assembles the elastic stiffness over the connectivity. Optional per-triangle
/// weights scale each element (used by the phase-field backend).
inline QuadraticSystem assemble(const Mesh& mesh, const Connectivity& conn, const Material& material, double rho,
                                std::span<const double> weights = {}) {
  material.validate();
  if (!(rho >= 0.0)) throw std::invalid_argument("assemble: rho must be non-negative");
  if (!weights.empty() && weights.size() != mesh.triangles.size())
    throw std::invalid_argument("assemble: weight count does not match triangle count");

  const Eigen::Matrix3d q = stiffness_form(material);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(36 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    Eigen::Matrix<double, 6, 6> ke = element_stiffness(mesh, t, q);
    if (!weights.empty()) ke *= weights[t];
    const auto& c = conn.corner_copy[t];
    for (int a = 0; a < 6; ++a) {
      const auto row = static_cast<Eigen::Index>(2 * c[a / 2] + a % 2);
      for (int b = 0; b < 6; ++b) {
        const auto col = static_cast<Eigen::Index>(2 * c[b / 2] + b % 2);
        triplets.emplace_back(row, col, ke(a, b));
      }
    }
  }
  QuadraticSystem sys;
  const auto n = static_cast<Eigen::Index>(conn.dof_count());
  sys.stiffness.resize(n, n);
  sys.stiffness.setFromTriplets(triplets.begin(), triplets.end());
  sys.mass_weight = rho * mesh.h * mesh.h;
  return sys;
}

/// u0 evaluated at every copy; the natural starting point for equilibrium.
inline Eigen::VectorXd affine_guess(const Mesh& mesh, const Connectivity& conn, const BoundaryCondition& bc) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(conn.dof_count()));
  for (std::size_t c = 0; c < conn.copy_count(); ++c)
    u.segment<2>(static_cast<Eigen::Index>(2 * c)) = bc(mesh.nodes[conn.copy_node[c]]);
  return u;
}

namespace detail {

// Free-dof block of the system and the load from the pinned values.
struct ReducedSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  std::vector<Eigen::Index> free_index;  // -1 for pinned dofs
  Eigen::Index free_count = 0;
};

inline ReducedSystem reduce(const QuadraticSystem& sys, const DofConstraints& bc) {
  const Eigen::Index n = sys.size();
  if (static_cast<Eigen::Index>(bc.pinned.size()) != n || bc.value.size() != n)
    throw std::invalid_argument("equilibrium: constraint size does not match system");
  ReducedSystem r;
  r.free_index.assign(static_cast<std::size_t>(n), -1);
  for (Eigen::Index i = 0; i < n; ++i)
    if (!bc.pinned[static_cast<std::size_t>(i)]) r.free_index[static_cast<std::size_t>(i)] = r.free_count++;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(sys.stiffness.nonZeros()) + static_cast<std::size_t>(r.free_count));
  r.rhs = Eigen::VectorXd::Zero(r.free_count);
  for (Eigen::Index col = 0; col < sys.stiffness.outerSize(); ++col) {
    const Eigen::Index fc = r.free_index[static_cast<std::size_t>(col)];
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.stiffness, col); it; ++it) {
      const Eigen::Index fr = r.free_index[static_cast<std::size_t>(it.row())];
      if (fr < 0) continue;
      if (fc >= 0)
        triplets.emplace_back(fr, fc, it.value());
      else
        r.rhs[fr] -= it.value() * bc.value[col];
    }
  }
  for (Eigen::Index i = 0; i < r.free_count; ++i) triplets.emplace_back(i, i, 2.0 * sys.mass_weight);
  r.matrix.resize(r.free_count, r.free_count);
  r.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return r;
}

inline double relative_residual(const ReducedSystem& r, const Eigen::VectorXd& x) {
  const double rhs_norm = r.rhs.norm();
  return rhs_norm > 0.0 ? (r.matrix * x - r.rhs).norm() / rhs_norm : (r.matrix * x).norm();
}

inline void scatter(const ReducedSystem& r, const Eigen::VectorXd& x, Eigen::VectorXd& values) {
  for (std::size_t i = 0; i < r.free_index.size(); ++i)
    if (r.free_index[i] >= 0) values[static_cast<Eigen::Index>(i)] = x[r.free_index[i]];
}

}  // namespace detail

/// Minimizes the system energy subject to the pinned values with
/// Jacobi-preconditioned conjugate gradients. Throws SolverError when the
/// relative residual target is not reached within the iteration cap.
inline DisplacementField equilibrium(const QuadraticSystem& sys, const DofConstraints& bc,
                                     const SolverOptions& options = {},
                                     const Eigen::VectorXd* guess = nullptr) {
  if (guess && guess->size() != sys.size()) throw std::invalid_argument("equilibrium: guess size does not match system");
  const detail::ReducedSystem r = detail::reduce(sys, bc);
  DisplacementField field;
  field.values = bc.value;
  if (r.free_count == 0) return field;

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(r.free_count);
  if (guess)
    for (std::size_t i = 0; i < r.free_index.size(); ++i)
      if (r.free_index[i] >= 0) x0[r.free_index[i]] = (*guess)[static_cast<Eigen::Index>(i)];

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(options.tolerance);
  const std::size_t cap = options.max_iterations > 0 ? options.max_iterations
                                                     : 50 * static_cast<std::size_t>(r.free_count);
  cg.setMaxIterations(static_cast<Eigen::Index>(cap));
  cg.compute(r.matrix);
  const Eigen::VectorXd x = cg.solveWithGuess(r.rhs, x0);

  field.residual = detail::relative_residual(r, x);
  field.iterations = static_cast<std::size_t>(cg.iterations());
  if (cg.info() != Eigen::Success || !x.allFinite())
  {
    char msg[128];
    std::snprintf(msg, sizeof msg, "equilibrium: conjugate gradients stopped at relative residual %.3e after %zu iterations",
                  field.residual, field.iterations);
    throw SolverError(msg, field.residual);
  }
  detail::scatter(r, x, field.values);
  return field;
}

/// Constrained minimizer by sparse LDL^T factorization. Used where the
/// system is small and badly scaled (phase-field degraded stiffness).
inline DisplacementField equilibrium_direct(const QuadraticSystem& sys, const DofConstraints& bc) {
  const detail::ReducedSystem r = detail::reduce(sys, bc);
  DisplacementField field;
  field.values = bc.value;
  if (r.free_count == 0) return field;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(r.matrix);
  if (ldlt.info() != Eigen::Success) throw SolverError("equilibrium_direct: factorization failed", 1.0);
  const Eigen::VectorXd x = ldlt.solve(r.rhs);
  field.residual = detail::relative_residual(r, x);
  detail::scatter(r, x, field.values);
  return field;
}

/// Elastic energy summed triangle by triangle from the element strain.
inline double elastic_energy(const Mesh& mesh, const Connectivity& conn, const Eigen::VectorXd& u,
                             const Material& material) {
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    total += mesh.signed_area(t) * elastic_density(sym_grad(element_gradient(mesh, conn, u, t)), material);
  return total;
}

/// E = elastic + G * (length of emergent edges); pre-cracks cost nothing.
inline EnergyBreakdown total_energy(const DisplacementField& u, const CrackState& state, const Mesh& mesh,
                                    const Connectivity& conn, const Material& material) {
  if (u.values.size() != static_cast<Eigen::Index>(conn.dof_count()) ||
      conn.corner_copy.size() != mesh.triangles.size())
    throw std::invalid_argument("total_energy: field does not match connectivity");
  EnergyBreakdown e;
  e.elastic = elastic_energy(mesh, conn, u.values, material);
  e.surface = material.griffith * edge_set_length(mesh, state.emergent);
  e.total = e.elastic + e.surface;
  e.residual = u.residual;
  return e;
}

}  // namespace msfrac
