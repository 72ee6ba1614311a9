#include "mxd/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace mxd {

GaussLegendreRule::GaussLegendreRule(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: node count must be >= 1");
    nodes.resize(n);
    weights.resize(n);

    // Newton iteration on P_n, one root per Chebyshev-like initial guess.
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
}

std::shared_ptr<const GaussLegendreRule> gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, std::shared_ptr<const GaussLegendreRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto rule = std::make_shared<const GaussLegendreRule>(n);
    cache.emplace(n, rule);
    return rule;
}

double integrate(const std::function<double(double)>& f, double a, double b, int n) {
    if (!(b >= a)) throw std::invalid_argument("integrate: empty interval");
    if (b == a) return 0.0;
    auto rule = gauss_legendre(n);
    const double c = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rule->weights[i] * f(c + half * rule->nodes[i]);
    return half * sum;
}

double integrate(const std::function<double(double)>& f,
                 const std::vector<Interval>& pieces, int n) {
    double sum = 0.0;
    for (const auto& iv : pieces) sum += integrate(f, iv.lo, iv.hi, n);
    return sum;
}

}  // namespace mxd
