#include "gast/matrix.hpp"

#include <cmath>
#include <utility>

#include "gast/errors.hpp"

namespace gast {

namespace {

bool finite_all(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str());
    }
    if (!finite_all(data_)) {
        throw DomainError("matrix entries must be finite");
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw DimensionError("ragged initializer for matrix");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
    if (!finite_all(data_)) {
        throw DomainError("matrix entries must be finite");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

std::string Matrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::all_finite() const { return finite_all(data_); }

Matrix& Matrix::operator+=(const Matrix& o) {
    if (!same_shape(o)) {
        throw DimensionError("add: shape " + shape_str() + " vs " + o.shape_str());
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += o.data_[i];
    }
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    if (!same_shape(o)) {
        throw DimensionError("sub: shape " + shape_str() + " vs " + o.shape_str());
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] -= o.data_[i];
    }
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& x : data_) {
        x *= s;
    }
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) {
    a += b;
    return a;
}

Matrix operator-(Matrix a, const Matrix& b) {
    a -= b;
    return a;
}

Matrix operator*(double s, Matrix a) {
    a *= s;
    return a;
}

static void check_matmul_shapes(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: " + a.shape_str() + " * " + b.shape_str());
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b);
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Matrix c(m, n);
#pragma omp parallel for schedule(static) if (m * n * k > 32768)
    for (long long ri = 0; ri < static_cast<long long>(m); ++ri) {
        const auto r = static_cast<std::size_t>(ri);
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += a(r, p) * b(p, j);
            }
            c(r, j) = acc;
        }
    }
    return c;
}

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b);
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Matrix c(m, n);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += a(r, p) * b(p, j);
            }
            c(r, j) = acc;
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
            t(c, r) = a(r, c);
        }
    }
    return t;
}

double dot_flat(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("dot_flat: shape " + a.shape_str() + " vs " + b.shape_str());
    }
    double acc = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += pa[i] * pb[i];
    }
    return acc;
}

double frob_norm_sq(const Matrix& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a.data()[i] * a.data()[i];
    }
    return acc;
}

Vector::Vector(std::vector<double> data) : data_(std::move(data)) {
    if (!finite_all(data_)) {
        throw DomainError("vector entries must be finite");
    }
}

Vector::Vector(std::initializer_list<double> v) : data_(v) {
    if (!finite_all(data_)) {
        throw DomainError("vector entries must be finite");
    }
}

bool Vector::all_finite() const { return finite_all(data_); }

double dot(const Vector& a, const Vector& b) {
    if (a.len() != b.len()) {
        throw DimensionError("dot: length " + std::to_string(a.len()) + " vs " +
                             std::to_string(b.len()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.len(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

} // namespace gast
