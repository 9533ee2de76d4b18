#include <functional>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stabcert/stability.hpp"
#include "test_support.hpp"

using stabcert::ErrorCode;
using stabcert::GroupPartition;
using stabcert::Matrix;
using stabcert::Vector;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const stabcert::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

const GroupPartition kNon = GroupPartition::from_one_based(3, {{1, 2}, {3}});

}  // namespace

TEST(GroupPartition, ValidationCodes) {
  EXPECT_EQ(code_of([] { GroupPartition::from_groups(3, {{0, 1}, {1, 2}}); }), ErrorCode::OverlappingGroups);
  EXPECT_EQ(code_of([] { GroupPartition::from_groups(3, {{0, 3}, {1, 2}}); }), ErrorCode::GroupIndexOutOfRange);
  EXPECT_EQ(code_of([] { GroupPartition::from_groups(3, {{0, 1}}); }), ErrorCode::IncompletePartition);
  EXPECT_EQ(code_of([] { GroupPartition::from_groups(2, {{0, 1}, {}}); }), ErrorCode::EmptyGroup);
}

TEST(GroupNorm, HandValues) {
  EXPECT_DOUBLE_EQ(stabcert::group_norm(Vector{{3, 4}}, GroupPartition::single_group(2)), 5.0);
  EXPECT_DOUBLE_EQ(stabcert::group_norm(Vector{{3, 4}}, GroupPartition::singletons(2)), 7.0);
  EXPECT_DOUBLE_EQ(stabcert::group_norm(Vector::Zero(3), kNon), 0.0);
}

TEST(ProxGroup, BlockSoftThreshold) {
  // ‖(3,4)‖ = 5, t = 1 → scale 4/5.
  const Vector p = stabcert::prox_group(Vector{{3, 4}}, 1.0, GroupPartition::single_group(2));
  EXPECT_NEAR(p(0), 2.4, 1e-15);
  EXPECT_NEAR(p(1), 3.2, 1e-15);
  EXPECT_EQ(stabcert::prox_group(Vector{{0.3, 0.4}}, 1.0, GroupPartition::single_group(2)), Vector::Zero(2));
}

TEST(ProxGroup, SatisfiesOptimalityCondition) {
  // u = prox_t(x) iff (x - u)/t ∈ ∂‖u‖.
  testsupport::Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const GroupPartition p = testsupport::random_partition(rng, 7);
    const Vector x = testsupport::gaussian(rng, 7);
    const double t = testsupport::uniform(rng, 0.1, 2.0);
    const Vector u = stabcert::prox_group(x, t, p);
    EXPECT_LE(stabcert::subgrad_residual(u, (x - u) / t, p), 1e-12);
  }
}

TEST(ClassifyGroups, ExampleNonPair) {
  const auto a = stabcert::classify_groups(Vector{{0, 1, 0}}, Vector{{0, 1, 1}}, kNon);
  EXPECT_EQ(a.K, (std::vector<size_t>{0, 1}));
  EXPECT_TRUE(a.H.empty());
  EXPECT_EQ(a.I, (std::vector<size_t>{0}));
  EXPECT_EQ(a.gamma, 0.0);
  const stabcert::linalg::OrthonormalBasis e23(3, Matrix{{0, 0}, {1, 0}, {0, 1}});
  EXPECT_LE(stabcert::linalg::subspace_distance(a.v_basis, e23), 1e-14);
}

TEST(ClassifyGroups, InteriorBlockSetsGamma) {
  const auto a = stabcert::classify_groups(Vector{{0, 1, 0}}, Vector{{0, 1, 0.4}}, kNon);
  EXPECT_EQ(a.H, (std::vector<size_t>{1}));
  EXPECT_DOUBLE_EQ(a.gamma, 0.4);
  EXPECT_NEAR(a.classification_gap, 0.6, 1e-15);
  EXPECT_EQ(a.v_basis.dim(), 1);
}

TEST(ClassifyGroups, RejectsNonSubgradient) {
  EXPECT_EQ(code_of([] { stabcert::classify_groups(Vector{{0, 1, 0}}, Vector{{0, 1, 1.5}}, kNon); }),
            ErrorCode::NotASubgradient);
  EXPECT_EQ(code_of([] { stabcert::classify_groups(Vector{{0, 1, 0}}, Vector{{1, 0, 0}}, kNon); }),
            ErrorCode::NotASubgradient);
}

TEST(InverseSubdiffDistance, HandValues) {
  const GroupPartition one = GroupPartition::singletons(1);
  // ȳ = 1: the set is [0, ∞).
  EXPECT_DOUBLE_EQ(stabcert::inverse_subdiff_distance(Vector{{-0.5}}, Vector{{1.0}}, one), 0.5);
  EXPECT_DOUBLE_EQ(stabcert::inverse_subdiff_distance(Vector{{2.0}}, Vector{{1.0}}, one), 0.0);
  // ȳ interior: the set is {0}.
  EXPECT_DOUBLE_EQ(stabcert::inverse_subdiff_distance(Vector{{2.0}}, Vector{{0.5}}, one), 2.0);
}

TEST(InverseSubdiffDistance, MatchesRaySearch) {
  testsupport::Rng rng(17);
  for (int k = 0; k < 200; ++k) {
    const GroupPartition p = testsupport::random_partition(rng, 5);
    const auto pair = testsupport::random_group_pair(rng, p);
    const Vector x = 2.0 * testsupport::gaussian(rng, 5);
    EXPECT_NEAR(stabcert::inverse_subdiff_distance(x, pair.y, p),
                oracles::group_inverse_distance(x, pair.y, p.groups()), 1e-7);
  }
}

TEST(RelativeApprox, ScalarHandExample) {
  // Two singleton groups at x = 0: y = (0.5, 1), Kref = {both} → λ = 0.5.
  const auto ra = stabcert::relative_approx_group(Vector::Zero(2), Vector{{0.5, 1.0}},
                                                  GroupPartition::singletons(2), {0, 1});
  EXPECT_DOUBLE_EQ(ra.lambda, 0.5);
  EXPECT_EQ(ra.yhat, (Vector{{1.0, 1.0}}));
  EXPECT_EQ(ra.ytilde, (Vector{{0.0, 1.0}}));
}

TEST(RelativeApprox, AlreadyOnSphereIsIdentity) {
  const Vector y{{0, 1, 1}};
  const auto ra = stabcert::relative_approx_group(Vector{{0, 1, 0}}, y, kNon, {0, 1});
  EXPECT_EQ(ra.lambda, 1.0);
  EXPECT_EQ(ra.yhat, y);
}

TEST(RelativeApprox, ZeroBlockIsInfeasible) {
  EXPECT_EQ(code_of([] {
              stabcert::relative_approx_group(Vector::Zero(2), Vector{{0.0, 1.0}},
                                              GroupPartition::singletons(2), {0, 1});
            }),
            ErrorCode::InfeasibleApproximation);
}

TEST(RelativeApprox, RandomIdentityAndMembership) {
  testsupport::Rng rng(23);
  for (int k = 0; k < 200; ++k) {
    const GroupPartition p = testsupport::random_partition(rng, 6);
    testsupport::GroupPairOptions o;
    o.max_interior_norm = 0.999;
    auto pair = testsupport::random_group_pair(rng, p, o);
    std::vector<size_t> kref;
    for (size_t j = 0; j < p.size(); ++j) {
      if (pair.roles[j] == testsupport::BlockRole::Interior && p.block_norm(pair.y, j) < 0.05) continue;
      if (pair.roles[j] != testsupport::BlockRole::Interior || testsupport::uniform(rng, 0, 1) < 0.5)
        kref.push_back(j);
    }
    const auto ra = stabcert::relative_approx_group(pair.x, pair.y, p, kref);
    EXPECT_LE((ra.lambda * ra.yhat + (1 - ra.lambda) * ra.ytilde - pair.y).norm(), 1e-12);
    EXPECT_LE(stabcert::subgrad_residual(pair.x, ra.yhat, p), 1e-12);
    EXPECT_LE(stabcert::subgrad_residual(pair.x, ra.ytilde, p), 1e-12);
    for (size_t j : kref) EXPECT_NEAR(p.block_norm(ra.yhat, j), 1.0, 1e-12);
  }
}

TEST(ProxGroup, ThresholdExamples) {
  const GroupPartition one = GroupPartition::single_group(2);
  EXPECT_EQ(stabcert::prox_group(Vector{{3, 4}}, 5.0, one), Vector::Zero(2));
  EXPECT_LE((stabcert::prox_group(Vector{{3, 4}}, 2.5, one) - Vector{{1.5, 2.0}}).norm(), 1e-15);
  EXPECT_EQ(stabcert::prox_group(Vector::Zero(3), 1.0, kNon), Vector::Zero(3));
}

TEST(ProxGroup, NonexpansiveAndMoreau) {
  testsupport::Rng rng(31);
  for (int k = 0; k < 200; ++k) {
    const GroupPartition p = testsupport::random_partition(rng, 6);
    const Vector x = testsupport::gaussian(rng, 6), z = testsupport::gaussian(rng, 6);
    const double t = testsupport::uniform(rng, 0.1, 2.0);
    const Vector px = stabcert::prox_group(x, t, p);
    EXPECT_LE((px - stabcert::prox_group(z, t, p)).norm(), (x - z).norm() + 1e-12);
    // x - prox(x) = t·q with every ‖q_J‖ <= 1.
    const Vector q = (x - px) / t;
    for (size_t j = 0; j < p.size(); ++j) EXPECT_LE(p.block_norm(q, j), 1.0 + 1e-10);
  }
}

TEST(SubgradResidual, Examples) {
  EXPECT_EQ(stabcert::subgrad_residual(Vector{{0, 1, 0}}, Vector{{0, 1, 1}}, kNon), 0.0);
  EXPECT_EQ(stabcert::subgrad_residual(Vector::Zero(3), Vector{{0.6, 0.8, -1.0}}, kNon), 0.0);
  EXPECT_NEAR(stabcert::subgrad_residual(Vector{{1, 0}}, Vector{{0, 1}}, GroupPartition::single_group(2)),
              std::sqrt(2.0), 1e-15);
}

TEST(ClassifyGroups, ZeroPairIsAllInterior) {
  const auto a = stabcert::classify_groups(Vector::Zero(2), Vector::Zero(2), GroupPartition::single_group(2));
  EXPECT_TRUE(a.K.empty());
  EXPECT_EQ(a.H.size(), 1u);
  EXPECT_EQ(a.gamma, 0.0);
  EXPECT_TRUE(a.v_basis.is_zero());
}

TEST(ClassifyGroups, SingletonSplit) {
  const auto a = stabcert::classify_groups(Vector{{2, 0}}, Vector{{1, 0.5}}, GroupPartition::singletons(2));
  EXPECT_EQ(a.K, (std::vector<size_t>{0}));
  EXPECT_EQ(a.H, (std::vector<size_t>{1}));
  EXPECT_EQ(a.I, (std::vector<size_t>{0}));
  EXPECT_EQ(a.gamma, 0.5);
  ASSERT_EQ(a.v_basis.dim(), 1);
  EXPECT_LE((a.v_basis.vectors.col(0) - Vector{{1, 0}}).norm(), 1e-15);
}

TEST(ClassifyGroups, BasisDimensionEqualsK) {
  testsupport::Rng rng(37);
  for (int k = 0; k < 100; ++k) {
    const GroupPartition p = testsupport::random_partition(rng, 8);
    const auto pair = testsupport::random_group_pair(rng, p);
    const auto a = stabcert::classify_groups(pair.x, pair.y, p);
    EXPECT_EQ(static_cast<size_t>(a.v_basis.dim()), a.K.size());
    EXPECT_LE((a.v_basis.vectors.transpose() * a.v_basis.vectors -
               Matrix::Identity(a.v_basis.dim(), a.v_basis.dim())).norm(), 1e-12);
  }
}

TEST(InverseSubdiffDistance, Examples) {
  EXPECT_EQ(stabcert::inverse_subdiff_distance(Vector{{0, 2, 5}}, Vector{{0, 1, 1}}, kNon), 0.0);
  EXPECT_NEAR(stabcert::inverse_subdiff_distance(Vector{{1, 0}}, Vector{{0, 1}}, GroupPartition::single_group(2)),
              1.0, 1e-15);
  const Vector x{{0.3, -2, 1}};
  EXPECT_NEAR(stabcert::inverse_subdiff_distance(x, Vector{{0.1, 0.2, 0.5}}, kNon), x.norm(), 1e-15);
}

TEST(QuadraticGrowth, RandomPairsAndPoints) {
  testsupport::Rng rng(41);
  for (int k = 0; k < 300; ++k) {
    const GroupPartition p = testsupport::random_partition(rng, 6);
    const auto pair = testsupport::random_group_pair(rng, p);
    const auto a = stabcert::classify_groups(pair.x, pair.y, p);
    const Vector x = pair.x + testsupport::gaussian(rng, 6);
    EXPECT_GE(stabcert::qg_slack_group(x, pair.x, pair.y, p, a.gamma), -1e-10);
  }
}

TEST(RelativeApprox, Examples) {
  const auto a = stabcert::relative_approx_group(Vector{{2, 0}}, Vector{{1, 0.95}},
                                                 GroupPartition::singletons(2), {0, 1});
  EXPECT_DOUBLE_EQ(a.lambda, 0.95);
  EXPECT_LE((a.yhat - Vector{{1, 1}}).norm(), 1e-15);
  EXPECT_LE((a.ytilde - Vector{{1, 0}}).norm(), 1e-15);
  const auto s = stabcert::relative_approx_group(Vector{{0.0}}, Vector{{0.9}}, GroupPartition::singletons(1), {0});
  EXPECT_DOUBLE_EQ(s.lambda, 0.9);
  EXPECT_DOUBLE_EQ(s.yhat(0), 1.0);
  EXPECT_NEAR(s.ytilde(0), 0.0, 1e-15);
}

TEST(RelativeApprox, LambdaTracksReferenceDistance) {
  // y near a reference ȳ with ‖ȳ_J‖ = 1 on Kref: λ >= 1 - ‖y - ȳ‖.
  testsupport::Rng rng(43);
  for (int k = 0; k < 100; ++k) {
    const GroupPartition p = testsupport::random_partition(rng, 6);
    testsupport::GroupPairOptions o;
    o.active_prob = 0.0;
    o.boundary_prob = 1.0;
    const auto ref = testsupport::random_group_pair(rng, p, o);
    Vector y = ref.y;
    for (size_t j = 0; j < p.size(); ++j) p.set_block(y, j, testsupport::uniform(rng, 0.9, 1.0) * p.block(ref.y, j));
    std::vector<size_t> kref(p.size());
    std::iota(kref.begin(), kref.end(), size_t{0});
    const auto ra = stabcert::relative_approx_group(Vector::Zero(6), y, p, kref);
    EXPECT_GE(ra.lambda, 1.0 - (y - ref.y).norm() - 1e-12);
  }
}
