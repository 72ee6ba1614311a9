#pragma once

#include <cstddef>
#include <vector>

namespace mxd {

/// Dense symmetric matrix, row-major, small (designs here keep k <= 16).
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

    std::size_t size() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    static SymMatrix identity(std::size_t n);

    /// Max |a_ij - a_ji|; 0 for exactly symmetric storage.
    double asymmetry() const;

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

/// Solves A x = b for symmetric positive definite A via Cholesky.
/// Throws std::runtime_error if A is not positive definite.
std::vector<double> cholesky_solve(const SymMatrix& a, const std::vector<double>& b);

/// Inverse of a symmetric positive definite matrix (column-wise Cholesky solves).
SymMatrix spd_inverse(const SymMatrix& a);

/// All eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
/// Relative off-diagonal tolerance 1e-12. Throws on non-symmetric input.
std::vector<double> jacobi_eigenvalues(const SymMatrix& a);

double smallest_eigenvalue(const SymMatrix& a);

double quadratic_form(const SymMatrix& a, const std::vector<double>& x);

}  // namespace mxd
