#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace msfrac {

/// Isotropic plane-strain material with Griffith constant.
struct Material {
  double lambda = 1.0;
  double mu = 1.0;
  double griffith = 1.0;

  void validate() const {
    if (!(mu > 0.0)) throw std::invalid_argument("material: mu must be positive");
    if (!(lambda + mu > 0.0)) throw std::invalid_argument("material: lambda + mu must be positive");
    if (!(griffith >= 0.0) || !std::isfinite(griffith))
      throw std::invalid_argument("material: griffith must be non-negative");
  }
};

/// Symmetric 2x2 tensor; xy holds the off-diagonal entry once.
struct StrainTensor {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;

  Eigen::Vector3d vector() const { return {xx, yy, xy}; }
};

inline StrainTensor sym_grad(const Eigen::Matrix2d& grad) {
  return {grad(0, 0), grad(1, 1), 0.5 * (grad(0, 1) + grad(1, 0))};
}

/// w(e) = mu e:e + lambda/2 (tr e)^2. The off-diagonal entry appears twice in e:e.
inline double elastic_density(const StrainTensor& e, const Material& m) {
  const double trace = e.xx + e.yy;
  return m.mu * (e.xx * e.xx + e.yy * e.yy + 2.0 * e.xy * e.xy) + 0.5 * m.lambda * trace * trace;
}

/// Q with elastic_density(e) == 0.5 * e^T Q e for e = (xx, yy, xy).
inline Eigen::Matrix3d stiffness_form(const Material& m) {
  Eigen::Matrix3d q;
  q << 2.0 * m.mu + m.lambda, m.lambda, 0.0,
       m.lambda, 2.0 * m.mu + m.lambda, 0.0,
       0.0, 0.0, 4.0 * m.mu;
  return q;
}

/// Largest c with elastic_density(e) >= c * (xx^2 + yy^2 + 2 xy^2).
inline double coercivity_constant(const Material& m) {
  // Eigenvalues of w on the Frobenius-normalized basis: mu (deviatoric), mu + lambda (volumetric).
  return std::min(m.mu, m.mu + m.lambda);
}

}  // namespace msfrac
