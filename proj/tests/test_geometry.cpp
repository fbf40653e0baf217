#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "uos/geometry.hpp"
#include "uos/noise.hpp"
#include "uos/rng.hpp"

using namespace uos;

namespace {

Matrix e(Eigen::Index m, std::initializer_list<Eigen::Index> idx) {
  Matrix out = Matrix::Zero(m, static_cast<Eigen::Index>(idx.size()));
  Eigen::Index j = 0;
  for (auto i : idx) out(i, j++) = 1.0;
  return out;
}

double max_abs(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& err) {
    return err.code();
  }
  return ErrorCode::IoError;  // sentinel: nothing thrown
}

}  // namespace

TEST(Orthonormalize, SpansSameSpace) {
  Matrix raw(3, 2);
  raw << 1, 1, 0, 1, 0, 0;  // e1, e1 + e2
  const auto s = orthonormalize(raw);
  EXPECT_LT(max_abs(s.basis().transpose() * s.basis() - Matrix::Identity(2, 2)), 1e-12);
  EXPECT_LT(max_abs(projector(s) - projector(SubspaceD::from_orthonormal(e(3, {0, 1})))), 1e-12);
}

TEST(Orthonormalize, OrthonormalInputIsPreserved) {
  Rng rng = make_rng(3);
  const Matrix q = random_orthogonal<double>(5, rng).leftCols(3);
  const auto s = orthonormalize(q);
  EXPECT_LT(max_abs(s.basis().transpose() * s.basis() - Matrix::Identity(3, 3)), 1e-12);
  EXPECT_LT(max_abs(projector(s) - q * q.transpose()), 1e-12);
}

TEST(Orthonormalize, DependentColumnsAreRankDeficient) {
  Matrix raw(3, 2);
  raw << 1, 2, 0, 0, 0, 0;
  EXPECT_EQ(code_of([&] { orthonormalize(raw); }), ErrorCode::RankDeficient);
}

TEST(Orthonormalize, SignsAreCanonical) {
  Matrix raw(3, 1);
  raw << -0.2, -3, 0.1;
  const auto s = orthonormalize(raw);
  EXPECT_GT(s.basis()(1, 0), 0);
}

TEST(Subspace, RejectsNonOrthonormalBasis) {
  Matrix b(2, 1);
  b << 1, 1;
  EXPECT_EQ(code_of([&] { SubspaceD::from_orthonormal(b); }), ErrorCode::NotOrthogonal);
}

TEST(Projector, AxisExample) {
  const auto s = SubspaceD::from_orthonormal(e(2, {0}));
  Matrix want(2, 2);
  want << 1, 0, 0, 0;
  EXPECT_EQ(projector(s), want);
  Matrix comp(2, 2);
  comp << 0, 0, 0, 1;
  EXPECT_EQ(complement_projector(s), comp);
}

TEST(Projector, IdentitiesOnRandomSubspaces) {
  Rng rng = make_rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index m = 3 + trial % 6;
    const Eigen::Index n = 1 + trial % m;
    const auto s = orthonormalize(standard_normal<double>(m, n, rng));
    const Matrix p = projector(s);
    const Matrix pc = complement_projector(s);
    EXPECT_LT(max_abs(p * p - p), 1e-10);
    EXPECT_LT(max_abs(p - p.transpose()), 1e-12);
    EXPECT_NEAR(p.trace(), static_cast<double>(n), 1e-10);
    EXPECT_LT(max_abs(p + pc - Matrix::Identity(m, m)), 1e-12);
    EXPECT_NEAR(pc.trace(), static_cast<double>(m - n), 1e-10);
    EXPECT_LT(max_abs(pc * pc - pc), 1e-10);
  }
}

TEST(Projector, ActsAsIdentityOnSpanAndZeroOnComplement) {
  Rng rng = make_rng(5);
  const auto s = orthonormalize(standard_normal<double>(4, 2, rng));
  const Vector v = s.basis() * Vector::Random(2);
  Eigen::JacobiSVD<Matrix> svd(complement_projector(s), Eigen::ComputeFullU);
  const Vector w = svd.matrixU().col(0);  // a unit vector in the orthogonal complement
  EXPECT_LT((projector(s) * v - v).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((projector(s) * w).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((s.basis().transpose() * w).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PrincipalAngles, Examples) {
  const auto a = SubspaceD::from_orthonormal(e(4, {0, 1}));
  const auto b = SubspaceD::from_orthonormal(e(4, {2, 3}));
  EXPECT_LT(principal_angles(a, a).angles.cwiseAbs().maxCoeff(), 1e-12);
  const auto ab = principal_angles(a, b).angles;
  EXPECT_NEAR(ab(0), std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(ab(1), std::numbers::pi / 2, 1e-12);

  Matrix v(3, 1);
  v << std::cos(0.3), std::sin(0.3), 0;
  const auto ang =
      principal_angles(SubspaceD::from_orthonormal(e(3, {0})), SubspaceD::from_orthonormal(v)).angles;
  EXPECT_NEAR(ang(0), 0.3, 1e-10);
}

TEST(PrincipalAngles, SmallAnglesStayAccurate) {
  for (double t : {1e-6, 1e-9, 1e-12}) {
    Matrix v(3, 1);
    v << std::cos(t), std::sin(t), 0;
    const auto ang =
        principal_angles(SubspaceD::from_orthonormal(e(3, {0})), SubspaceD::from_orthonormal(v)).angles;
    EXPECT_NEAR(ang(0) / t, 1.0, 1e-6);
  }
}

TEST(PrincipalAngles, InvariantsOnRandomPairs) {
  Rng rng = make_rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index m = 6, n = 1 + trial % 3;
    const auto a = orthonormalize(standard_normal<double>(m, n, rng));
    const auto b = orthonormalize(standard_normal<double>(m, n, rng));
    const auto pa = principal_angles(a, b);
    for (Eigen::Index i = 0; i < n; ++i) {
      EXPECT_GE(pa.angles(i), 0.0);
      EXPECT_LE(pa.angles(i), std::numbers::pi / 2 + 1e-12);
      if (i) EXPECT_GE(pa.angles(i), pa.angles(i - 1) - 1e-10);
      EXPECT_NEAR(std::cos(pa.angles(i)), pa.left_vectors.col(i).dot(pa.right_vectors.col(i)), 1e-8);
    }
    // symmetry
    EXPECT_LT((principal_angles(b, a).angles - pa.angles).cwiseAbs().maxCoeff(), 1e-10);
    // rotation invariance
    const Matrix u = random_orthogonal<double>(m, rng);
    const auto ra = SubspaceD::from_orthonormal(u * a.basis());
    const auto rb = SubspaceD::from_orthonormal(u * b.basis());
    EXPECT_LT((principal_angles(ra, rb).angles - pa.angles).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(PrincipalAngles, DimensionMismatch) {
  const auto a = SubspaceD::from_orthonormal(e(3, {0}));
  const auto b = SubspaceD::from_orthonormal(e(4, {0}));
  EXPECT_EQ(code_of([&] { principal_angles(a, b); }), ErrorCode::DimensionMismatch);
}

TEST(RotatedSubspace, RoundTripsRequestedAngles) {
  const auto base = SubspaceD::from_orthonormal(e(4, {0, 1}));
  const Matrix comp = e(4, {2, 3});
  Vector angles(2);
  angles << 0.2, 0.5;
  const auto s = rotated_subspace(base, angles, comp);
  const auto got = principal_angles(base, s).angles;
  EXPECT_NEAR(got(0), 0.2, 1e-8);
  EXPECT_NEAR(got(1), 0.5, 1e-8);

  angles << 0.9, 0.1;  // reported sorted
  const auto got2 = principal_angles(base, rotated_subspace(base, angles, comp)).angles;
  EXPECT_NEAR(got2(0), 0.1, 1e-8);
  EXPECT_NEAR(got2(1), 0.9, 1e-8);
}

TEST(RotatedSubspace, Extremes) {
  const auto base = SubspaceD::from_orthonormal(e(4, {0, 1}));
  const Matrix comp = e(4, {2, 3});
  const auto same = rotated_subspace(base, Vector(Vector::Zero(2)), comp);
  EXPECT_LT(principal_angles(base, same).angles.maxCoeff(), 1e-12);
  const auto orth = rotated_subspace(base, Vector(Vector::Constant(2, std::numbers::pi / 2)), comp);
  EXPECT_NEAR(principal_angles(base, orth).angles.minCoeff(), std::numbers::pi / 2, 1e-12);
}

TEST(RotatedSubspace, RandomRoundTrips) {
  Rng rng = make_rng(23);
  std::uniform_real_distribution<double> u(0.0, std::numbers::pi / 2);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix q = random_orthogonal<double>(7, rng);
    const auto base = SubspaceD::from_orthonormal(q.leftCols(3));
    Vector angles(3);
    for (int i = 0; i < 3; ++i) angles(i) = u(rng);
    const auto s = rotated_subspace(base, angles, Matrix(q.middleCols(3, 3)));
    std::sort(angles.data(), angles.data() + 3);
    EXPECT_LT((principal_angles(base, s).angles - angles).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(RotatedSubspace, PreconditionErrors) {
  const auto base = SubspaceD::from_orthonormal(e(4, {0, 1}));
  Vector angles(2);
  angles << 0.1, 0.2;
  EXPECT_EQ(code_of([&] { rotated_subspace(base, angles, e(4, {1, 2})); }), ErrorCode::NotOrthogonal);
  Matrix not_unit = e(4, {2, 3}) * 2.0;
  EXPECT_EQ(code_of([&] { rotated_subspace(base, angles, not_unit); }), ErrorCode::NotOrthogonal);
  angles << 0.1, 2.0;
  EXPECT_EQ(code_of([&] { rotated_subspace(base, angles, e(4, {2, 3})); }), ErrorCode::NotOrthogonal);
  const auto wide = SubspaceD::from_orthonormal(e(5, {0, 1, 2}));
  EXPECT_EQ(code_of([&] { rotated_subspace(wide, Vector(Vector::Zero(3)), e(5, {3, 4})); }),
            ErrorCode::InsufficientAmbientDim);
}

TEST(LearnBasisSvd, RecoversNoiselessSubspace) {
  Rng rng = make_rng(31);
  const auto truth = orthonormalize(standard_normal<double>(10, 2, rng));
  const Matrix samples = truth.basis() * standard_normal<double>(2, 20, rng);
  const auto learned = learn_basis_svd(samples, 2);
  EXPECT_LT(principal_angles(truth, learned).angles.maxCoeff(), 1e-8);
  const auto exact = learn_basis_svd(truth.basis(), 2);
  EXPECT_LT(principal_angles(truth, exact).angles.maxCoeff(), 1e-8);
}

TEST(LearnBasisSvd, TooFewSamples) {
  EXPECT_EQ(code_of([] { learn_basis_svd(Matrix(Matrix::Identity(4, 1)), 2); }), ErrorCode::RankDeficient);
  Matrix rank_one(4, 3);
  rank_one << 1, 2, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0;
  EXPECT_EQ(code_of([&] { learn_basis_svd(rank_one, 2); }), ErrorCode::RankDeficient);
}

TEST(UnionModel, ValidatesAndFlagsDuplicates) {
  const auto a = SubspaceD::from_orthonormal(e(4, {0, 1}));
  const auto b = SubspaceD::from_orthonormal(e(4, {2, 3}));
  const UnionModelD u({a, b, a});
  EXPECT_EQ(u.size(), 3u);
  EXPECT_EQ(u.ambient_dim(), 4);
  EXPECT_EQ(u.subspace_dim(), 2);
  const auto dup = u.near_duplicate_pairs();
  ASSERT_EQ(dup.size(), 1u);
  EXPECT_EQ(dup[0], std::make_pair(std::size_t{0}, std::size_t{2}));
  EXPECT_EQ(code_of([&] { UnionModelD({a, SubspaceD::from_orthonormal(e(4, {0}))}); }),
            ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([] { UnionModelD(std::vector<SubspaceD>{}); }), ErrorCode::DimensionMismatch);
}

TEST(Geometry, FloatScalarInstantiates) {
  Eigen::MatrixXf raw(3, 2);
  raw << 1, 0, 0, 1, 1, 1;
  const auto s = orthonormalize(raw);
  EXPECT_LT((projector(s) * projector(s) - projector(s)).cwiseAbs().maxCoeff(), 1e-5f);
}
