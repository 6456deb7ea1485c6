#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace grnvelo {

using Vector = std::vector<double>;

// Dense row-major matrix. Sizes in this library are small (a few hundred rows at most).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);
    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }
    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<std::vector<double>> to_rows() const;

    double min_entry() const;
    double max_entry() const;
    bool all_finite() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Vector multiply(const Matrix& m, std::span<const double> x);
Matrix multiply(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> x);
double norm_inf(std::span<const double> x);
double norm1(std::span<const double> x);

// Dense eigenvalues of a general real matrix.
std::vector<std::complex<double>> dense_eigenvalues(const Matrix& m);
double max_real_eigenvalue(const Matrix& m);
// Ascending eigenvalues of a symmetric matrix.
Vector symmetric_eigenvalues(const Matrix& m);

}  // namespace grnvelo
