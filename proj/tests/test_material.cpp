#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "support.hpp"

using namespace msfrac;

namespace {
const Material unit{1.0, 1.0, 1.0};
}

TEST(SymGrad, SkewHasNoStrain) {
  const auto e = sym_grad((Mat2() << 0, 1, -1, 0).finished());
  EXPECT_EQ(e.xx, 0.0);
  EXPECT_EQ(e.yy, 0.0);
  EXPECT_EQ(e.xy, 0.0);
}

TEST(SymGrad, SymmetricIsFixed) {
  const auto e = sym_grad((Mat2() << 1, 2, 2, 3).finished());
  EXPECT_EQ(e.xx, 1.0);
  EXPECT_EQ(e.yy, 3.0);
  EXPECT_EQ(e.xy, 2.0);
}

TEST(SymGrad, OffDiagonalIsHalved) {
  const auto e = sym_grad((Mat2() << 0, 1, 0, 0).finished());
  EXPECT_EQ(e.xy, 0.5);
}

TEST(ElasticDensity, SpecValues) {
  EXPECT_DOUBLE_EQ(elastic_density({1, 1, 0}, unit), 4.0);
  EXPECT_EQ(elastic_density({0, 0, 0}, unit), 0.0);
  EXPECT_DOUBLE_EQ(elastic_density({0, 0, 0.5}, unit), 0.5);
  EXPECT_DOUBLE_EQ(elastic_density({1, 0, 0}, Material{0.0, 1.0, 1.0}), 1.0);
}

TEST(StiffnessForm, AgreesWithDensity) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const Material m : {unit, Material{0.3, 2.0, 1.0}, Material{-0.5, 1.0, 1.0}}) {
    const auto q = stiffness_form(m);
    for (int k = 0; k < 200; ++k) {
      const StrainTensor e{u(rng), u(rng), u(rng)};
      const Eigen::Vector3d v = e.vector();
      EXPECT_NEAR(0.5 * v.dot(q * v), elastic_density(e, m), 1e-12);
    }
  }
  EXPECT_DOUBLE_EQ(0.5 * Eigen::Vector3d(1, 1, 0).dot(stiffness_form(unit) * Eigen::Vector3d(1, 1, 0)), 4.0);
}

TEST(StiffnessForm, PositiveDefinite) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(stiffness_form(unit));
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
}

TEST(ElasticDensity, Coercive) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (const Material m : {unit, Material{-0.5, 1.0, 1.0}, Material{5.0, 0.2, 1.0}}) {
    const double c = coercivity_constant(m);
    ASSERT_GT(c, 0.0);
    for (int k = 0; k < 1000; ++k) {
      const StrainTensor e{u(rng), u(rng), u(rng)};
      EXPECT_GE(elastic_density(e, m), c * (e.xx * e.xx + e.yy * e.yy + 2 * e.xy * e.xy) - 1e-12);
    }
  }
}

TEST(ElasticDensity, VanishesExactlyOnSkewGradients) {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double a = u(rng);
    EXPECT_EQ(elastic_density(sym_grad((Mat2() << 0, a, -a, 0).finished()), unit), 0.0);
    Mat2 g;
    g << u(rng), u(rng), u(rng), u(rng);
    if ((g + g.transpose()).norm() > 1e-6) {
      EXPECT_GT(elastic_density(sym_grad(g), unit), 0.0);
    }
  }
}

TEST(ElasticDensity, ExactlyQuadratic) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    const StrainTensor e{u(rng), u(rng), u(rng)};
    const double t = u(rng);
    EXPECT_NEAR(elastic_density({t * e.xx, t * e.yy, t * e.xy}, unit), t * t * elastic_density(e, unit),
                1e-12 * (1.0 + elastic_density(e, unit)));
  }
}

TEST(Material, ValidateRejectsIndefiniteParameters) {
  EXPECT_THROW((Material{1.0, 0.0, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((Material{-2.0, 1.0, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((Material{1.0, 1.0, -1.0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW(unit.validate());
}
