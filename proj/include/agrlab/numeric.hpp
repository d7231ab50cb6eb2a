#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "agrlab/errors.hpp"

namespace agrlab {

// Dense types. Everything in the library runs in 64-bit floats; the aliases
// stay templated on the scalar so shapes read like Eigen code.
template <class Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixT<double>;
using Vector = VectorT<double>;
using IntMatrix = MatrixT<int>;

inline std::string shape_str(Eigen::Index rows, Eigen::Index cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

// Shape-checked matrix product.
template <class Scalar>
MatrixT<Scalar> matmul(const MatrixT<Scalar>& a, const MatrixT<Scalar>& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: dimension mismatch " + shape_str(a.rows(), a.cols()) +
                         " * " + shape_str(b.rows(), b.cols()));
    }
    return a * b;
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
    return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0);
}

// log(sigmoid(x)) = -softplus(-x); stays finite for large |x|.
inline double log_sigmoid(double x) { return -softplus(-x); }

// Elementwise sigmoid as an Eigen expression.
template <class Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
    return 1.0 / (1.0 + (-x).exp());
}

// Softmax with max-subtraction. Output entries are positive and sum to one.
template <class Scalar>
VectorT<Scalar> softmax(const VectorT<Scalar>& v) {
    if (v.size() == 0) throw ShapeError("softmax: empty input");
    VectorT<Scalar> e = (v.array() - v.maxCoeff()).exp();
    return e / e.sum();
}

// log softmax computed directly, so downstream losses never take log(0).
template <class Scalar>
VectorT<Scalar> log_softmax(const VectorT<Scalar>& v) {
    if (v.size() == 0) throw ShapeError("log_softmax: empty input");
    const Scalar m = v.maxCoeff();
    const Scalar lse = std::log((v.array() - m).exp().sum());
    return v.array() - m - lse;
}

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
    return x.derived().array().isFinite().all();
}

}  // namespace agrlab
