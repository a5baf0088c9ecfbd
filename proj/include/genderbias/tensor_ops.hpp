#pragma once

// Dense numerics used by the encoder and the bias detector.
//
// Every matrix is row-major so a row is one token's activation vector, the
// same layout the weight container stores.

#include <Eigen/Core>

#include <cmath>
#include <concepts>
#include <numbers>
#include <stdexcept>
#include <string>

namespace genderbias {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using RowVector = RowVectorX<double>;
using Index = Eigen::Index;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string shape_string(Index rows, Index cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

template <typename DerivedA, typename DerivedB>
auto matmul(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b)
    -> MatrixX<typename DerivedA::Scalar> {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + shape_string(a.rows(), a.cols()) + " x " +
                     shape_string(b.rows(), b.cols()));
  }
  MatrixX<typename DerivedA::Scalar> out(a.rows(), b.cols());
  out.noalias() = a * b;
  return out;
}

/// Softmax over each row, shifted by the row max so large logits do not overflow.
template <typename Derived>
auto row_softmax(const Eigen::MatrixBase<Derived>& m) -> MatrixX<typename Derived::Scalar> {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out(m.rows(), m.cols());
  for (Index r = 0; r < m.rows(); ++r) {
    const Scalar peak = m.row(r).maxCoeff();
    out.row(r) = (m.row(r).array() - peak).unaryExpr([](Scalar v) { return std::exp(v); }).matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

/// Per-row normalization with population variance, then `gamma * x + beta`.
template <typename Derived, typename DerivedG, typename DerivedB>
auto layer_norm(const Eigen::MatrixBase<Derived>& m, const Eigen::MatrixBase<DerivedG>& gamma,
                const Eigen::MatrixBase<DerivedB>& beta, typename Derived::Scalar eps)
    -> MatrixX<typename Derived::Scalar> {
  using Scalar = typename Derived::Scalar;
  if (gamma.size() != m.cols() || beta.size() != m.cols()) {
    throw ShapeError("layer_norm: gamma/beta length " + std::to_string(gamma.size()) + "/" +
                     std::to_string(beta.size()) + " does not match " +
                     shape_string(m.rows(), m.cols()));
  }
  if (!(eps > Scalar(0))) throw std::invalid_argument("layer_norm: eps must be positive");
  const Scalar n = static_cast<Scalar>(m.cols());
  MatrixX<Scalar> out(m.rows(), m.cols());
  for (Index r = 0; r < m.rows(); ++r) {
    const Scalar mean = m.row(r).sum() / n;
    auto centered = (m.row(r).array() - mean).eval();
    const Scalar var = centered.square().sum() / n;
    const Scalar inv_std = Scalar(1) / std::sqrt(var + eps);
    out.row(r) = (centered * inv_std).matrix().cwiseProduct(gamma.reshaped().transpose()) +
                 beta.reshaped().transpose();
  }
  return out;
}

template <std::floating_point Scalar>
Scalar gelu(Scalar x) {
  // 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
  const Scalar c = std::sqrt(Scalar(2) / std::numbers::pi_v<Scalar>);
  return Scalar(0.5) * x * (Scalar(1) + std::tanh(c * (x + Scalar(0.044715) * x * x * x)));
}

template <typename Derived>
auto gelu(const Eigen::MatrixBase<Derived>& m) -> MatrixX<typename Derived::Scalar> {
  using Scalar = typename Derived::Scalar;
  return m.unaryExpr([](Scalar x) { return gelu(x); });
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace genderbias
