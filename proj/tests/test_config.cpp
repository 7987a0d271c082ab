#include <gtest/gtest.h>

#include "support.hpp"

using namespace msfrac;

namespace {

std::string error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(ParseConfig, EmptyTextGivesDefaults) {
  const RunConfig c = parse_config("# nothing but a comment\n\n");
  const RunConfig d;
  EXPECT_EQ(to_text(c), to_text(d));
  EXPECT_EQ(c.epsilons, std::vector<double>{0.25});
  EXPECT_EQ(c.cell_resolution, 8);
  EXPECT_EQ(c.material.lambda, 1.0);
  EXPECT_EQ(c.material.mu, 1.0);
  EXPECT_EQ(c.solver.tolerance, 1e-8);
  EXPECT_EQ(c.solver.rho, 1e-8);
  EXPECT_EQ(c.candidate_cap, 12u);
  EXPECT_EQ(c.backend, "discrete");
  EXPECT_FALSE(c.at_eta.has_value());
  EXPECT_EQ(c.at_k_eta, 1e-6);
}

TEST(ParseConfig, ReadsEveryKind) {
  const RunConfig c = parse_config(R"(
domain_origin = [0.5, -1]
domain_width = 2
domain_height = 3/2
epsilon_list = [1/4, 0.125]
cell_resolution = 6
polyline = [0.2, 0.2, 0.5, 0.8, 0.8, 0.3]   # trailing comment
polyline = [0.3, 0.6, 0.7, 0.6]
cell_polyline = 2: [0.3, 0.3, 0.7, 0.7]
lambda = 0.5
mu = 2
griffith = 1e-3
bc_matrix = [0.1, 0, 0, -0.05]
bc_offset = [0, 0.01]
l_list = [0.5, 0.1]
backend = phasefield
policy = all
at_eta = 0.02
record_wall_time = true
workers = 3
)");
  EXPECT_EQ(c.domain.origin, Vec2(0.5, -1));
  EXPECT_EQ(c.domain.height, 1.5);
  EXPECT_EQ(c.epsilons, (std::vector<double>{0.25, 0.125}));
  ASSERT_EQ(c.pattern.polylines.size(), 2u);
  EXPECT_EQ(c.pattern.polylines[0].size(), 3u);
  ASSERT_EQ(c.overrides.count(2), 1u);
  EXPECT_EQ(c.bc.matrix(1, 1), -0.05);
  EXPECT_EQ(c.bc.offset.y(), 0.01);
  EXPECT_EQ(c.policy.kind, CandidatePolicy::Kind::All);
  EXPECT_EQ(*c.at_eta, 0.02);
  EXPECT_TRUE(c.record_wall_time);
  EXPECT_EQ(c.workers, 3u);
}

TEST(ParseConfig, NegativeGriffithNamesTheKey) { EXPECT_EQ(error_key("griffith = -1"), "griffith"); }

TEST(ParseConfig, EmptyEpsilonListIsRejected) { EXPECT_EQ(error_key("epsilon_list = []"), "epsilon_list"); }

TEST(ParseConfig, UnknownKeyIsRejected) { EXPECT_EQ(error_key("grifith = 1"), "grifith"); }

TEST(ParseConfig, TypeMismatches) {
  EXPECT_EQ(error_key("cell_resolution = eight"), "cell_resolution");
  EXPECT_EQ(error_key("cell_resolution = 8.5"), "cell_resolution");
  EXPECT_EQ(error_key("mu = 1/0"), "mu");
  EXPECT_EQ(error_key("bc_matrix = [1, 2, 3]"), "bc_matrix");
  EXPECT_EQ(error_key("record_wall_time = yes"), "record_wall_time");
  EXPECT_EQ(error_key("polyline = [0.2, 0.5, 0.7]"), "polyline");
  EXPECT_EQ(error_key("policy = nearest"), "policy");
}

TEST(ParseConfig, ConstraintViolations) {
  EXPECT_EQ(error_key("epsilon = 0"), "epsilon_list");
  EXPECT_EQ(error_key("cell_resolution = 1"), "cell_resolution");
  EXPECT_EQ(error_key("mu = 0"), "mu");
  EXPECT_EQ(error_key("lambda = -3"), "lambda");
  EXPECT_EQ(error_key("l = -0.1"), "l_list");
  EXPECT_EQ(error_key("candidate_cap = 17"), "candidate_cap");
  EXPECT_EQ(error_key("at_k_eta = 0.1"), "at_k_eta");
  EXPECT_EQ(error_key("polyline = [0, 0.5, 0.5, 0.5]"), "polyline");
  EXPECT_EQ(error_key("backend = spectral"), "backend");
  EXPECT_EQ(error_key("epsilon = 1/4\nepsilon_list = [1/8]"), "epsilon_list");
  EXPECT_EQ(error_key("mu = 1\nmu = 2"), "mu");
}

TEST(ParseConfig, CanonicalTextRoundTrips) {
  RunConfig c;
  c.epsilons = {1.0 / 3.0, 0.1, 1.0 / 7.0};
  c.pattern.polylines = {{Vec2(0.1, 0.2), Vec2(1.0 / 3.0, 0.9)}};
  c.overrides[4].polylines = {{Vec2(0.25, 0.25), Vec2(0.75, 0.75)}};
  c.material = Material{0.3, 1.7, 1e-3 / 3.0};
  c.bc = BoundaryCondition{(Mat2() << 0.1, 1e-17, -0.2, 0.3).finished(), Vec2(0.01, 2.0 / 3.0)};
  c.ls = {0.1, 0.25};
  c.solver.max_iterations = 500;
  c.policy = CandidatePolicy{CandidatePolicy::Kind::TipNeighborhood, 2};
  c.greedy_evaluation = GreedyOptions::Mode::Exact;
  c.at_eta = 0.0123;
  c.seed = 42;
  c.record_wall_time = true;
  const std::string text = to_text(c);
  const RunConfig back = parse_config(text);
  EXPECT_EQ(to_text(back), text);
  EXPECT_EQ(back.epsilons, c.epsilons);
  EXPECT_EQ(back.material.griffith, c.material.griffith);
  EXPECT_EQ(back.bc.matrix, c.bc.matrix);
  EXPECT_EQ(back.overrides.at(4).polylines[0][1], Vec2(0.75, 0.75));
}

TEST(ParseConfig, ShippedConfigsParse) {
  for (const char* name : {"standard_sweep.cfg", "single.cfg", "oracle_small.cfg", "phasefield_small.cfg"}) {
    std::ifstream f(std::string(MSFRAC_CONFIG_DIR) + "/" + name);
    ASSERT_TRUE(f) << name;
    std::stringstream ss;
    ss << f.rdbuf();
    EXPECT_NO_THROW(parse_config(ss.str())) << name;
  }
}
