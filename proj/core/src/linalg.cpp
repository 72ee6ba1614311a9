#include "mxd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mxd {

SymMatrix SymMatrix::identity(std::size_t n) {
    SymMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

double SymMatrix::asymmetry() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i + 1; j < n_; ++j)
            worst = std::max(worst, std::abs(a_[i * n_ + j] - a_[j * n_ + i]));
    return worst;
}

namespace {

void check_symmetric(const SymMatrix& a) {
    double scale = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) scale = std::max(scale, std::abs(a(i, i)));
    if (a.asymmetry() > 1e-10 * scale)
        throw std::invalid_argument("linalg: matrix is not symmetric");
}

// Lower Cholesky factor, or throws.
std::vector<double> cholesky_factor(const SymMatrix& a) {
    const std::size_t n = a.size();
    std::vector<double> l(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s))
                    throw std::runtime_error("cholesky: matrix is not positive definite");
                l[i * n + i] = std::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    return l;
}

}  // namespace

std::vector<double> cholesky_solve(const SymMatrix& a, const std::vector<double>& b) {
    check_symmetric(a);
    const std::size_t n = a.size();
    if (b.size() != n) throw std::invalid_argument("cholesky_solve: size mismatch");
    auto l = cholesky_factor(a);
    std::vector<double> x(b);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) x[i] -= l[i * n + k] * x[k];
        x[i] /= l[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) x[ii] -= l[k * n + ii] * x[k];
        x[ii] /= l[ii * n + ii];
    }
    return x;
}

SymMatrix spd_inverse(const SymMatrix& a) {
    const std::size_t n = a.size();
    SymMatrix inv(n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        auto col = cholesky_solve(a, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    // Symmetrize to wash out factorization round-off.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = inv(j, i) = v;
        }
    return inv;
}

std::vector<double> jacobi_eigenvalues(const SymMatrix& a) {
    check_symmetric(a);
    const std::size_t n = a.size();
    SymMatrix m = a;
    if (n == 0) return {};
    if (n == 1) return {m(0, 0)};

    double frob = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) frob += m(i, j) * m(i, j);
    frob = std::sqrt(frob);
    const double tol = 1e-12 * std::max(frob, 1e-300);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * m(i, j) * m(i, j);
        if (std::sqrt(off) <= tol) break;

        for (std::size_t p = 0; p < n - 1; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = m(i, p), aiq = m(i, q);
                    m(i, p) = c * aip - s * aiq;
                    m(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = m(p, i), aqi = m(q, i);
                    m(p, i) = c * api - s * aqi;
                    m(q, i) = s * api + c * aqi;
                }
            }
        }
    }

    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = m(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

double smallest_eigenvalue(const SymMatrix& a) { return jacobi_eigenvalues(a).front(); }

double quadratic_form(const SymMatrix& a, const std::vector<double>& x) {
    const std::size_t n = a.size();
    if (x.size() != n) throw std::invalid_argument("quadratic_form: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += a(i, j) * x[j];
        s += x[i] * row;
    }
    return s;
}

}  // namespace mxd
