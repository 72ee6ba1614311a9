#pragma once

#include <functional>
#include <memory>
#include <vector>

namespace mxd {

/// Gauss-Legendre rule on [-1,1]; exact for polynomials of degree 2n-1.
struct GaussLegendreRule {
    std::vector<double> nodes;    // ascending in (-1,1)
    std::vector<double> weights;  // positive, sum to 2

    explicit GaussLegendreRule(int n);
};

/// Shared, cached rule lookup. Thread safe.
std::shared_ptr<const GaussLegendreRule> gauss_legendre(int n);

/// Integrates f over [a,b] with an n-point Gauss-Legendre rule.
double integrate(const std::function<double(double)>& f, double a, double b, int n = 512);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    double midpoint() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Sum of per-interval integrals, each with its own n-point rule.
double integrate(const std::function<double(double)>& f,
                 const std::vector<Interval>& pieces, int n = 512);

}  // namespace mxd
