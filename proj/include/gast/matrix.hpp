#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gast {

// Dense row-major double-precision matrix. Constructing from data validates
// that every entry is finite.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols); // zero-filled
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_str() const;
    bool all_finite() const;

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(double s);

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

// a[m x k] * b[k x n]. The inner summation runs left to right so results are
// deterministic; the row loop is OpenMP-parallel for large products.
Matrix matmul(const Matrix& a, const Matrix& b);
// Serial reference kept for tests and the kernel benchmark. Bit-identical to
// matmul for all inputs.
Matrix matmul_serial(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// Flattened inner product, fixed summation order.
double dot_flat(const Matrix& a, const Matrix& b);
double frob_norm_sq(const Matrix& a);

// Dense double-precision vector; finite on construction from data.
class Vector {
  public:
    Vector() = default;
    explicit Vector(std::size_t len) : data_(len, 0.0) {}
    explicit Vector(std::vector<double> data);
    Vector(std::initializer_list<double> v);

    std::size_t len() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }
    bool all_finite() const;

  private:
    std::vector<double> data_;
};

double dot(const Vector& a, const Vector& b);

} // namespace gast
