#include <gtest/gtest.h>

#include "support/instances.hpp"
#include "support/oracles.hpp"
#include "tdlab/errors.hpp"
#include "tdlab/linalg_proj.hpp"

namespace tdlab {
namespace {

Matrix random_matrix_with_rank(int m, int n, int r, SplitMix64& rng) {
  if (r == 0) return Matrix::Zero(m, n);
  Matrix L(m, r), R(r, n);
  for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < R.size(); ++i) R.data()[i] = rng.normal();
  return L * R;
}

TEST(PseudoInverse, ZeroMatrixMapsToZeroTranspose) {
  const Matrix pinv = pseudo_inverse(Matrix::Zero(3, 2));
  EXPECT_EQ(pinv.rows(), 2);
  EXPECT_EQ(pinv.cols(), 3);
  EXPECT_TRUE(pinv.isZero(0.0));
}

TEST(PseudoInverse, InvertibleMatchesInverse) {
  const Matrix M{{2.0, 1.0}, {1.0, 3.0}};
  EXPECT_LE((pseudo_inverse(M) - M.inverse()).norm(), 1e-10);
}

TEST(PseudoInverse, ColumnOfOnes) {
  const Matrix pinv = pseudo_inverse(Matrix::Ones(2, 1));
  EXPECT_NEAR(pinv(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(pinv(0, 1), 0.5, 1e-15);
}

TEST(PseudoInverse, PenroseIdentitiesAllRankProfiles) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(rng.uniform() * 8);
    const int n = 1 + static_cast<int>(rng.uniform() * 8);
    const int r = static_cast<int>(rng.uniform() * (std::min(m, n) + 1));
    const Matrix M = random_matrix_with_rank(m, n, r, rng);
    const Matrix P = pseudo_inverse(M);
    const double scale = std::max(1.0, M.norm() * P.norm());
    EXPECT_LE((M * P * M - M).norm(), 1e-10 * scale);
    EXPECT_LE((P * M * P - P).norm(), 1e-10 * scale * std::max(1.0, P.norm()));
    EXPECT_LE((M * P - (M * P).transpose()).norm(), 1e-10 * scale);
    EXPECT_LE((P * M - (P * M).transpose()).norm(), 1e-10 * scale);
    EXPECT_EQ(numerical_rank(M), r);
    // M M^+ is an orthogonal projector, so its spectral norm is at most 1.
    const double op_norm = Eigen::JacobiSVD<Matrix>(M * P).singularValues()(0);
    EXPECT_LE(op_norm, 1.0 + 1e-12);
  }
}

TEST(NullSpace, BasisIsOrthonormalAndAnnihilated) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + static_cast<int>(rng.uniform() * 6);
    const int n = 1 + static_cast<int>(rng.uniform() * 6);
    const int r = static_cast<int>(rng.uniform() * (std::min(m, n) + 1));
    const Matrix M = random_matrix_with_rank(m, n, r, rng);
    const Matrix N = null_space_basis(M);
    const Matrix R = range_basis(M);
    EXPECT_EQ(N.cols(), n - r);
    EXPECT_EQ(R.cols(), r);
    EXPECT_LE((M * N).norm(), 1e-10 * std::max(1.0, M.norm()));
    EXPECT_LE((N.transpose() * N - Matrix::Identity(N.cols(), N.cols())).norm(), 1e-12);
  }
}

TEST(DNorm, Examples) {
  EXPECT_DOUBLE_EQ(d_norm(Vector::Zero(2), Weighting(Vector::Constant(2, 0.5))), 0.0);
  EXPECT_DOUBLE_EQ(d_norm(Vector{{3.0, 4.0}}, Weighting(Vector::Ones(2))), 5.0);
  EXPECT_NEAR(d_norm(Vector{{2.0, 0.0}}, Weighting(Vector::Constant(2, 0.5))), std::sqrt(2.0),
              1e-15);
}

TEST(Weighting, RejectsNonPositive) {
  EXPECT_THROW(Weighting(Vector{{0.5, 0.0}}), InvalidStochastic);
  EXPECT_THROW(Weighting(Vector{{0.5, -0.1}}), InvalidStochastic);
}

TEST(LeastNormWeight, Examples) {
  const Weighting half(Vector::Constant(2, 0.5));
  const FeatureMap ones(Matrix::Ones(2, 2));
  const Vector w = least_norm_weight(ones, half, Vector::Constant(2, 2.0));
  EXPECT_NEAR(w(0), 1.0, 1e-12);
  EXPECT_NEAR(w(1), 1.0, 1e-12);
  EXPECT_TRUE(least_norm_weight(ones, half, Vector::Zero(2)).isZero(0.0));

  SplitMix64 rng(8);
  const Matrix X = random_matrix_with_rank(6, 3, 3, rng);
  const Vector mu = Vector::Constant(6, 1.0) + testing::random_vector(6, rng).cwiseAbs();
  const Vector v = testing::random_vector(6, rng);
  const Vector classic =
      (X.transpose() * mu.asDiagonal() * X).ldlt().solve(X.transpose() * mu.asDiagonal() * v);
  EXPECT_LE((least_norm_weight(FeatureMap(X), Weighting(mu), v) - classic).norm(), 1e-10);
}

TEST(LeastNormWeight, MatchesCompleteOrthogonalDecompositionAndIsMinimal) {
  SplitMix64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 6);
    const int d = 1 + static_cast<int>(rng.uniform() * 10);
    const int r = 1 + static_cast<int>(rng.uniform() * std::min(n, d));
    const Matrix X = random_matrix_with_rank(n, d, r, rng);
    Vector mu = testing::random_vector(n, rng).cwiseAbs() + Vector::Constant(n, 0.1);
    mu /= mu.sum();
    const Vector v = testing::random_vector(n, rng);
    const FeatureMap features(X);
    const Vector w = least_norm_weight(features, Weighting(mu), v);
    EXPECT_LE((w - oracle::cod_least_norm(X, mu, v)).norm(), 1e-9 * std::max(1.0, w.norm()));

    const Matrix N = null_space_basis(X);
    for (Eigen::Index k = 0; k < N.cols(); ++k) {
      const Vector z = N.col(k) * (0.1 + rng.uniform());
      EXPECT_GT((w + z).norm(), w.norm());
    }
  }
}

TEST(ProjectionMatrix, Examples) {
  const Projector full = projection_matrix(FeatureMap(Matrix::Identity(3, 3)),
                                           Weighting(Vector{{0.2, 0.3, 0.5}}));
  EXPECT_LE((full.Pi - Matrix::Identity(3, 3)).norm(), 1e-12);

  const Projector ones =
      projection_matrix(FeatureMap(Matrix::Ones(2, 2)), Weighting(Vector::Constant(2, 0.5)));
  EXPECT_LE((ones.Pi - Matrix::Constant(2, 2, 0.5)).norm(), 1e-12);
}

TEST(ProjectionMatrix, FullColumnRankMatchesNormalEquations) {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform() * 5);
    const int d = 1 + static_cast<int>(rng.uniform() * (n - 1));
    const Matrix X = random_matrix_with_rank(n, d, d, rng);
    Vector mu = testing::random_vector(n, rng).cwiseAbs() + Vector::Constant(n, 0.1);
    mu /= mu.sum();
    const Matrix D = mu.asDiagonal();
    const Matrix canonical = X * (X.transpose() * D * X).inverse() * X.transpose() * D;
    EXPECT_LE((projection_matrix(FeatureMap(X), Weighting(mu)).Pi - canonical).norm(), 1e-10);
  }
}

TEST(ProjectionMatrix, PropertiesOnRankDeficientFeatures) {
  SplitMix64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 7);
    const int d = 1 + static_cast<int>(rng.uniform() * 12);
    const int r = static_cast<int>(rng.uniform() * (std::min(n, d) + 1));
    const Matrix X = random_matrix_with_rank(n, d, r, rng);
    Vector mu = testing::random_vector(n, rng).cwiseAbs() + Vector::Constant(n, 0.05);
    mu /= mu.sum();
    const Weighting D(mu);
    const Projector proj = projection_matrix(FeatureMap(X), D);
    EXPECT_LE((proj.Pi * proj.Pi - proj.Pi).norm(), 1e-10);
    for (int k = 0; k < 20; ++k) {
      const Vector v = testing::random_vector(n, rng);
      const Vector pv = proj.apply(v);
      EXPECT_LE(d_norm(pv, D), d_norm(v, D) + 1e-12);
      EXPECT_LE((pv - oracle::canonical_projection(X, mu, v)).norm(), 1e-9);
      // Range lies in the column space: X times its least-norm weight recovers it.
      EXPECT_LE((X * least_norm_weight(FeatureMap(X), D, pv) - pv).norm(), 1e-9);
    }
  }
}

}  // namespace
}  // namespace tdlab
