#include <gtest/gtest.h>

#include "mixauto/network.hpp"

using namespace mixauto;

namespace {

DemandPattern make(std::initializer_list<std::initializer_list<double>> rows) {
  const Index n = static_cast<Index>(rows.size());
  DemandPattern p{MatrixXd(n, n), VectorXd::Ones(n)};
  Index i = 0;
  for (auto row : rows) {
    Index j = 0;
    for (double v : row) p.alpha(i, j++) = v;
    ++i;
  }
  return p;
}

}  // namespace

TEST(Network, StarOfThreeValidates) {
  const auto star = make({{0, 0.5, 0.5}, {1, 0, 0}, {1, 0, 0}});
  EXPECT_TRUE(validate(star).ok());
}

TEST(Network, SelfLoopReportsDiagonalAndConnectivity) {
  auto p = make({{1, 0, 0}, {0.5, 0, 0.5}, {0.5, 0.5, 0}});
  const auto res = validate(p);
  EXPECT_TRUE(res.has(ViolationKind::diagonal_nonzero));
  EXPECT_TRUE(res.has(ViolationKind::not_strongly_connected));
  for (const auto& v : res.violations)
    if (v.kind == ViolationKind::diagonal_nonzero) {
      EXPECT_EQ(v.row, 0);
      EXPECT_EQ(v.col, 0);
    }
}

TEST(Network, TwoLocationSwapValidates) {
  EXPECT_TRUE(validate(make({{0, 1}, {1, 0}})).ok());
}

TEST(Network, OtherViolations) {
  auto p = make({{0, 0.7}, {1, 0}});
  EXPECT_TRUE(validate(p).has(ViolationKind::row_sum));

  p = make({{0, 1}, {1, 0}});
  p.theta(1) = 0.0;
  EXPECT_TRUE(validate(p).has(ViolationKind::theta_nonpositive));

  p = make({{0, 1.5, -0.5}, {1, 0, 0}, {1, 0, 0}});
  EXPECT_TRUE(validate(p).has(ViolationKind::entry_out_of_range));

  p = make({{0, 1}, {1, 0}});
  p.theta = VectorXd::Ones(3);
  EXPECT_TRUE(validate(p).has(ViolationKind::dimension_mismatch));

  EXPECT_TRUE(validate(DemandPattern{}).has(ViolationKind::empty));
}

TEST(Network, RowSumToleranceIsTight) {
  auto p = make({{0, 0.5, 0.5}, {1, 0, 0}, {1, 0, 0}});
  p.alpha(0, 1) = 0.5 + 1e-13;
  EXPECT_TRUE(validate(p).ok());
  p.alpha(0, 1) = 0.5 + 1e-10;
  EXPECT_TRUE(validate(p).has(ViolationKind::row_sum));
}

TEST(Network, NormalizeRowsOnlyOnRequest) {
  auto p = make({{0, 2, 2}, {3, 0, 0}, {1, 1, 0}});
  EXPECT_FALSE(validate(p).ok());
  const auto q = normalize_rows(p);
  EXPECT_TRUE(validate(q).ok());
  EXPECT_DOUBLE_EQ(q.alpha(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(p.alpha(0, 1), 2.0);
}

TEST(StarToComplete, StarEndpoint) {
  const auto p = star_to_complete(3, 0.0);
  const MatrixXd expected = make({{0, 0.5, 0.5}, {1, 0, 0}, {1, 0, 0}}).alpha;
  EXPECT_EQ(p.alpha, expected);
  EXPECT_EQ(p.theta, VectorXd::Ones(3));
}

TEST(StarToComplete, CompleteEndpoint) {
  const auto p = star_to_complete(3, 1.0);
  EXPECT_EQ(p.alpha, make({{0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}}).alpha);
}

TEST(StarToComplete, Midpoint) {
  const auto p = star_to_complete(3, 0.5);
  EXPECT_NEAR(p.alpha(1, 0), 0.75, 1e-15);
  EXPECT_NEAR(p.alpha(2, 0), 0.75, 1e-15);
  EXPECT_NEAR(p.alpha(1, 2), 0.25, 1e-15);
  EXPECT_NEAR(p.alpha(2, 1), 0.25, 1e-15);
}

TEST(StarToComplete, RejectsBadArguments) {
  EXPECT_THROW(star_to_complete(2, 0.5), std::invalid_argument);
  EXPECT_THROW(star_to_complete(3, -0.1), std::invalid_argument);
  EXPECT_THROW(star_to_complete(3, 1.1), std::invalid_argument);
}

TEST(StarToComplete, GridProperties) {
  for (Index n = 3; n <= 5; ++n)
    for (int t = 0; t <= 10; ++t) {
      const double xi = 0.1 * t;
      const auto p = star_to_complete(n, xi);
      for (Index i = 0; i < n; ++i) EXPECT_NEAR(p.alpha.row(i).sum(), 1.0, 1e-12);
      EXPECT_TRUE(strongly_connected(p.alpha));
      EXPECT_TRUE(validate(p).ok()) << "n=" << n << " xi=" << xi;
      const auto back = star_to_complete_parameter(p);
      ASSERT_TRUE(back.has_value());
      EXPECT_NEAR(*back, xi, 1e-12);
    }
}

TEST(StarToComplete, ParameterRejectsOtherPatterns) {
  EXPECT_FALSE(star_to_complete_parameter(make({{0, 1}, {1, 0}})).has_value());
  auto p = star_to_complete(4, 0.3);
  p.alpha(2, 1) += 0.01;
  p.alpha(2, 3) -= 0.01;
  EXPECT_FALSE(star_to_complete_parameter(p).has_value());
  p = star_to_complete(4, 0.3);
  p.theta(0) = 2.0;
  EXPECT_FALSE(star_to_complete_parameter(p).has_value());
}

TEST(StronglyConnected, Examples) {
  EXPECT_TRUE(strongly_connected(make({{0, 0.5, 0.5}, {1, 0, 0}, {1, 0, 0}}).alpha));
  EXPECT_FALSE(strongly_connected(make({{0, 1}, {0, 0}}).alpha));
  EXPECT_TRUE(strongly_connected(make({{0, 1, 0}, {0, 0, 1}, {1, 0, 0}}).alpha));
  EXPECT_FALSE(strongly_connected(make({{0, 1, 0}, {1, 0, 0}, {0, 1, 0}}).alpha));
}
