#pragma once

// Dense least squares via Householder QR. Small problems only (tens of
// columns); the matrix is stored row-major and copied.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace osnrpert {

/// Thrown when a design column is (numerically) a combination of earlier ones.
class RankDeficient : public std::runtime_error {
public:
    RankDeficient(std::string what, std::size_t column, std::vector<std::size_t> depends_on)
        : std::runtime_error(std::move(what)), column_(column), depends_on_(std::move(depends_on)) {}

    std::size_t column() const noexcept { return column_; }
    const std::vector<std::size_t>& depends_on() const noexcept { return depends_on_; }

private:
    std::size_t column_;
    std::vector<std::size_t> depends_on_;
};

class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

/// Minimizes ||A x - b||_2. Column j is declared dependent when the part of
/// it orthogonal to columns 0..j-1 is below rank_tol * ||A_j||.
inline std::vector<double> solve_least_squares(Matrix a, std::vector<double> b, double rank_tol = 1e-10) {
    const std::size_t m = a.rows(), n = a.cols();
    if (b.size() != m) throw std::invalid_argument("solve_least_squares: rhs length mismatch");
    if (m < n) throw std::invalid_argument("solve_least_squares: fewer rows than unknowns");

    std::vector<double> col_norm(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) col_norm[j] += a(i, j) * a(i, j);
        col_norm[j] = std::sqrt(col_norm[j]);
    }

    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < m; ++i) norm += a(i, j) * a(i, j);
        norm = std::sqrt(norm);

        if (norm <= rank_tol * col_norm[j] || col_norm[j] == 0.0) {
            // Express column j in terms of the leading j columns to report the culprits.
            std::vector<double> c(j, 0.0);
            for (std::size_t r = j; r-- > 0;) {
                double s = a(r, j);
                for (std::size_t k = r + 1; k < j; ++k) s -= a(r, k) * c[k];
                c[r] = s / a(r, r);
            }
            std::vector<std::size_t> deps;
            for (std::size_t k = 0; k < j; ++k)
                if (std::abs(c[k]) * col_norm[k] > 1e-6 * std::max(col_norm[j], 1e-300)) deps.push_back(k);
            throw RankDeficient("design matrix is rank deficient at column " + std::to_string(j), j, deps);
        }

        const double alpha = a(j, j) > 0.0 ? -norm : norm;
        std::vector<double> v(m - j);
        v[0] = a(j, j) - alpha;
        for (std::size_t i = j + 1; i < m; ++i) v[i - j] = a(i, j);
        double vnorm2 = 0.0;
        for (double e : v) vnorm2 += e * e;

        for (std::size_t k = j; k < n; ++k) {
            double dot = 0.0;
            for (std::size_t i = j; i < m; ++i) dot += v[i - j] * a(i, k);
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = j; i < m; ++i) a(i, k) -= f * v[i - j];
        }
        double dot = 0.0;
        for (std::size_t i = j; i < m; ++i) dot += v[i - j] * b[i];
        const double f = 2.0 * dot / vnorm2;
        for (std::size_t i = j; i < m; ++i) b[i] -= f * v[i - j];
    }

    std::vector<double> x(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t k = r + 1; k < n; ++k) s -= a(r, k) * x[k];
        x[r] = s / a(r, r);
    }
    return x;
}

}  // namespace osnrpert
