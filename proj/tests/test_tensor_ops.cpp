#include "genderbias/tensor_ops.hpp"

#include "fixtures.hpp"
#include "naive_reference.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace genderbias;
using genderbias::testing::random_matrix;
namespace naive = genderbias::testing::naive;

namespace {

naive::Grid to_grid(const Matrix& m) {
  return naive::from_flat(std::vector<double>(m.data(), m.data() + m.size()),
                          static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
}

double max_abs_diff(const Matrix& m, const naive::Grid& g) {
  double worst = 0;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      worst = std::max(worst, std::abs(m(i, j) - g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
  return worst;
}

}  // namespace

TEST_CASE("matmul") {
  std::mt19937_64 rng(7);

  SUBCASE("identity on the left returns the operand") {
    const Matrix m = random_matrix(rng, 3, 5);
    const Matrix out = matmul(Matrix::Identity(3, 3), m);
    CHECK(out.rows() == 3);
    CHECK(out.cols() == 5);
    CHECK((out - m).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("zero operand") {
    Matrix a(2, 2);
    a << 1, 2, 3, 4;
    CHECK(matmul(a, Matrix::Zero(2, 2)).isZero(0.0));
  }

  SUBCASE("random 4x5 by 5x3 matches the triple loop") {
    const Matrix a = random_matrix(rng, 4, 5);
    const Matrix b = random_matrix(rng, 5, 3);
    CHECK(max_abs_diff(matmul(a, b), naive::matmul(to_grid(a), to_grid(b))) <= 1e-12);
  }

  SUBCASE("shape mismatch names both shapes") {
    try {
      (void)matmul(Matrix::Zero(2, 3), Matrix::Zero(4, 2));
      FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
      const std::string what = e.what();
      CHECK(what.find("(2x3)") != std::string::npos);
      CHECK(what.find("(4x2)") != std::string::npos);
    }
  }

  SUBCASE("works for float scalars") {
    MatrixX<float> a = MatrixX<float>::Ones(2, 3);
    MatrixX<float> b = MatrixX<float>::Ones(3, 1);
    CHECK(matmul(a, b)(1, 0) == doctest::Approx(3.0f));
  }
}

TEST_CASE("row_softmax") {
  SUBCASE("symmetric pair") {
    Matrix m(1, 2);
    m << 0, 0;
    const Matrix s = row_softmax(m);
    CHECK(s(0, 0) == 0.5);
    CHECK(s(0, 1) == 0.5);
  }

  SUBCASE("constant row is uniform for any constant") {
    for (double c : {-1e6, -3.0, 0.0, 42.0, 1e6}) {
      const Matrix s = row_softmax(Matrix::Constant(1, 3, c));
      for (Index j = 0; j < 3; ++j) CHECK(s(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }
  }

  SUBCASE("large logits do not overflow") {
    // Arbitrary-precision value: 1/(1+e^-1000) = 1 - 5.08e-435, e^-1000/(1+e^-1000) = 5.08e-435,
    // which is below the smallest subnormal double.
    Matrix m(1, 2);
    m << 1000, 0;
    const Matrix s = row_softmax(m);
    CHECK(s.allFinite());
    CHECK(s(0, 0) == 1.0);
    CHECK(s(0, 1) == 0.0);
  }

  SUBCASE("property: rows sum to one and are shift invariant") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> shift(-50, 50);
    for (int trial = 0; trial < 500; ++trial) {
      const Index rows = 1 + trial % 6, cols = 1 + (trial / 6) % 9;
      const Matrix m = random_matrix(rng, rows, cols, 4.0);
      const Matrix s = row_softmax(m);
      Matrix shifted = m;
      for (Index r = 0; r < rows; ++r) shifted.row(r).array() += shift(rng);
      const Matrix s2 = row_softmax(shifted);
      for (Index r = 0; r < rows; ++r) {
        CHECK(std::abs(s.row(r).sum() - 1.0) <= 1e-9);
        CHECK(s.row(r).minCoeff() > 0.0);
      }
      CHECK((s - s2).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("layer_norm") {
  const Vector ones = Vector::Ones(4);
  const Vector zeros = Vector::Zero(4);

  SUBCASE("constant row maps to zero") {
    const Matrix out = layer_norm(Matrix::Constant(2, 4, 3.5), ones, zeros, 1e-12);
    CHECK(out.isZero(0.0));
  }

  SUBCASE("zero-mean unit-variance row is unchanged") {
    Matrix m(1, 2);
    m << 1, -1;
    const Matrix out = layer_norm(m, Vector::Ones(2), Vector::Zero(2), 1e-300);
    CHECK(out(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(out(0, 1) == doctest::Approx(-1.0).epsilon(1e-15));
  }

  SUBCASE("random rows match the two-pass reference") {
    std::mt19937_64 rng(3);
    const Matrix m = random_matrix(rng, 5, 4, 3.0);
    const Matrix g = random_matrix(rng, 1, 4);
    const Matrix b = random_matrix(rng, 1, 4);
    const Matrix out = layer_norm(m, g, b, 1e-12);
    const auto ref = naive::layer_norm(to_grid(m), std::vector<double>(g.data(), g.data() + 4),
                                       std::vector<double>(b.data(), b.data() + 4), 1e-12);
    CHECK(max_abs_diff(out, ref) <= 1e-10);
  }

  SUBCASE("property: normalized rows have zero mean and unit variance") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
      const Index cols = 2 + trial % 30;
      const Matrix m = random_matrix(rng, 3, cols, 10.0);
      const Matrix out = layer_norm(m, Vector::Ones(cols), Vector::Zero(cols), 1e-12);
      for (Index r = 0; r < 3; ++r) {
        const double mean = out.row(r).mean();
        const double var = (out.row(r).array() - mean).square().mean();
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(var - 1.0) < 1e-6);
      }
    }
  }

  SUBCASE("mismatched gamma is a shape error") {
    CHECK_THROWS_AS((void)layer_norm(Matrix::Zero(2, 4), Vector::Ones(3), Vector::Zero(4), 1e-12),
                    ShapeError);
  }
}

TEST_CASE("gelu") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(std::abs(gelu(10.0) - 10.0) < 1e-6);
  // 50-digit evaluation of the tanh form.
  CHECK(std::abs(gelu(1.0) - 0.84119199060827670478) < 1e-10);
  CHECK(std::abs(gelu(-1.0) - -0.15880800939172329522) < 1e-10);
  CHECK(std::abs(gelu(0.5) - 0.34571400982514392204) < 1e-10);
  CHECK(std::abs(gelu(3.0) - 2.99636260791822698116) < 1e-10);

  Matrix m(1, 3);
  m << -1, 0, 1;
  const Matrix g = gelu(m);
  CHECK(g(0, 1) == 0.0);
  CHECK(g(0, 2) == doctest::Approx(gelu(1.0)));
  CHECK(all_finite(g));
}
