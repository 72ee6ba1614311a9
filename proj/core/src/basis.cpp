#include "mxd/basis.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mxd/design.hpp"

namespace mxd {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

constexpr int kMaxBasisSize = 16;
constexpr double kSupportSlack = 1e-12;

void check_in_support(const Interval& s, double x, const char* who) {
    if (x < s.lo - kSupportSlack || x > s.hi + kSupportSlack) {
        std::ostringstream msg;
        msg << who << ": x=" << x << " outside support [" << s.lo << ", " << s.hi << "]";
        throw std::domain_error(msg.str());
    }
}

}  // namespace

WeightSpec WeightSpec::uniform(Interval support) {
    const double d = 1.0 / support.length();
    return {[d](double) { return d; }, "uniform"};
}

WeightSpec WeightSpec::truncated_normal(double mean, double variance, Interval support) {
    if (variance <= 0.0) throw std::invalid_argument("truncated_normal: variance must be > 0");
    const double sd = std::sqrt(variance);
    const double z = normal_cdf((support.hi - mean) / sd) - normal_cdf((support.lo - mean) / sd);
    const double c = 1.0 / (sd * std::sqrt(2.0 * M_PI) * z);
    std::ostringstream d;
    d.precision(17);
    d << "truncnormal " << mean << ' ' << variance;  // config token form
    return {[mean, sd, c](double x) {
                const double u = (x - mean) / sd;
                return c * std::exp(-0.5 * u * u);
            },
            d.str()};
}

void BasisContext::eval_basis(double x, double* out) const {
    if (degree_) {
        double p = 1.0;
        for (int j = 0; j < k_; ++j) {
            out[j] = p;
            p *= x;
        }
    } else {
        for (int j = 0; j < k_; ++j) out[j] = functions_[j](x);
    }
}

std::vector<double> BasisContext::eval_basis(double x) const {
    std::vector<double> v(k_);
    eval_basis(x, v.data());
    return v;
}

void BasisContext::assemble() {
    if (k_ < 1) throw std::invalid_argument("basis: need at least one function");
    if (k_ > kMaxBasisSize)
        throw std::invalid_argument("basis: size capped at 16 (moment matrices become too ill-conditioned)");
    if (!(support_.hi > support_.lo))
        throw std::invalid_argument("basis: support must be a nonempty interval");
    if (nodes_ < 2) throw std::invalid_argument("basis: quadrature_nodes must be >= 2");

    // Weight must be a positive density: check sign on the quadrature grid and
    // unit mass by quadrature.
    auto rule = gauss_legendre(nodes_);
    const double c = support_.midpoint(), half = 0.5 * support_.length();
    for (int i = 0; i < nodes_; ++i) {
        const double x = c + half * rule->nodes[i];
        if (!(weight_.density(x) > 0.0))
            throw std::invalid_argument("basis: weight density must be positive on the support");
    }
    const double mass =
        integrate([this](double x) { return weight_.density(x); }, support_.lo, support_.hi, nodes_);
    if (std::abs(mass - 1.0) > 1e-10)
        throw std::invalid_argument("basis: weight density must integrate to 1");

    q_ = SymMatrix(static_cast<std::size_t>(k_));
    std::vector<double> row(k_);
    for (int i = 0; i < nodes_; ++i) {
        const double x = c + half * rule->nodes[i];
        const double w = half * rule->weights[i] * weight_.density(x);
        eval_basis(x, row.data());
        for (int a = 0; a < k_; ++a)
            for (int b = a; b < k_; ++b) q_(a, b) += w * row[a] * row[b];
    }
    for (int a = 0; a < k_; ++a)
        for (int b = 0; b < a; ++b) q_(a, b) = q_(b, a);

    auto eig = jacobi_eigenvalues(q_);
    q_lambda_min_ = eig.front();
    if (!(q_lambda_min_ > 1e-14 * std::max(eig.back(), 1e-300)))
        throw std::runtime_error("basis: moment matrix is not positive definite (degenerate basis)");
    q_condition_ = eig.back() / eig.front();
    q_inv_ = spd_inverse(q_);
}

BasisContext build_basis_context(int monomial_degree, Interval support,
                                 std::optional<WeightSpec> weight, int quadrature_nodes) {
    if (monomial_degree < 0) throw std::invalid_argument("basis: monomial degree must be >= 0");
    BasisContext ctx;
    ctx.k_ = monomial_degree + 1;
    ctx.degree_ = monomial_degree;
    ctx.support_ = support;
    ctx.weight_ = weight ? std::move(*weight) : WeightSpec::uniform(support);
    ctx.nodes_ = quadrature_nodes;
    ctx.assemble();
    return ctx;
}

BasisContext build_basis_context(std::vector<ScalarFn> functions, Interval support,
                                 std::optional<WeightSpec> weight, int quadrature_nodes) {
    BasisContext ctx;
    ctx.k_ = static_cast<int>(functions.size());
    ctx.functions_ = std::move(functions);
    ctx.support_ = support;
    ctx.weight_ = weight ? std::move(*weight) : WeightSpec::uniform(support);
    ctx.nodes_ = quadrature_nodes;
    ctx.assemble();
    return ctx;
}

double BasisContext::h_at(double x) const {
    double row[kMaxBasisSize];
    eval_basis(x, row);
    double qf = 0.0;
    for (int i = 0; i < k_; ++i) {
        double acc = 0.0;
        for (int j = 0; j < k_; ++j) acc += q_inv_(i, j) * row[j];
        qf += row[i] * acc;
    }
    const double lam = weight_.density(x);
    return 4.0 * qf * lam * lam;
}

double evaluate_h(const BasisContext& ctx, double x) {
    check_in_support(ctx.support(), x, "evaluate_h");
    return ctx.h_at(x);
}

MeanFunction MeanFunction::polynomial(std::vector<double> coefficients, std::string description) {
    MeanFunction m;
    m.coeffs_ = std::move(coefficients);
    if (m.coeffs_.empty()) m.coeffs_.push_back(0.0);
    m.description_ = std::move(description);
    return m;
}

MeanFunction MeanFunction::tabulated(const ScalarFn& f, Interval support,
                                     std::string description, int grid_points) {
    if (grid_points < 2) throw std::invalid_argument("MeanFunction: need >= 2 grid points");
    MeanFunction m;
    m.grid_support_ = support;
    m.tabulated_.resize(grid_points);
    for (int i = 0; i < grid_points; ++i) {
        const double x = support.lo + support.length() * i / (grid_points - 1);
        m.tabulated_[i] = f(x);
    }
    m.description_ = std::move(description);
    return m;
}

double MeanFunction::operator()(double x) const {
    if (tabulated_.empty()) {
        double v = 0.0;
        for (std::size_t j = coeffs_.size(); j-- > 0;) v = v * x + coeffs_[j];
        return v;
    }
    const int n = static_cast<int>(tabulated_.size());
    double t = (x - grid_support_.lo) / grid_support_.length() * (n - 1);
    if (t <= 0.0) return tabulated_.front();
    if (t >= n - 1) return tabulated_.back();
    const int i = static_cast<int>(t);
    const double frac = t - i;
    return tabulated_[i] * (1.0 - frac) + tabulated_[i + 1] * frac;
}

CoefficientVector best_linear_coefficients(const MeanFunction& m, const BasisContext& ctx) {
    const int k = ctx.size();
    std::vector<double> v(k, 0.0);
    auto rule = gauss_legendre(ctx.quadrature_nodes());
    const auto s = ctx.support();
    const double c = s.midpoint(), half = 0.5 * s.length();
    std::vector<double> row(k);
    for (int i = 0; i < ctx.quadrature_nodes(); ++i) {
        const double x = c + half * rule->nodes[i];
        const double w = half * rule->weights[i] * ctx.weight_at(x) * m(x);
        ctx.eval_basis(x, row.data());
        for (int j = 0; j < k; ++j) v[j] += w * row[j];
    }
    return {cholesky_solve(ctx.q(), v)};
}

CoefficientVector best_linear_coefficients_under_design(const MeanFunction& m,
                                                        const DesignDensity& design,
                                                        const BasisContext& ctx) {
    const int k = ctx.size();
    SymMatrix q_pi(static_cast<std::size_t>(k));
    std::vector<double> v(k, 0.0);
    std::vector<double> row(k);
    auto rule = gauss_legendre(ctx.quadrature_nodes());
    for (const auto& piece : design.piece_intervals()) {
        const double c = piece.midpoint(), half = 0.5 * piece.length();
        for (int i = 0; i < ctx.quadrature_nodes(); ++i) {
            const double x = c + half * rule->nodes[i];
            const double w = half * rule->weights[i] * design.density_at(x);
            ctx.eval_basis(x, row.data());
            for (int a = 0; a < k; ++a) {
                v[a] += w * m(x) * row[a];
                for (int b = a; b < k; ++b) q_pi(a, b) += w * row[a] * row[b];
            }
        }
    }
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < a; ++b) q_pi(a, b) = q_pi(b, a);
    try {
        return {cholesky_solve(q_pi, v)};
    } catch (const std::runtime_error&) {
        throw std::runtime_error("best_linear_coefficients_under_design: degenerate design moment matrix");
    }
}

double evaluate_linear(const BasisContext& ctx, const CoefficientVector& beta, double x) {
    if (static_cast<int>(beta.beta.size()) != ctx.size())
        throw std::invalid_argument("evaluate_linear: coefficient length does not match basis");
    auto row = ctx.eval_basis(x);
    double v = 0.0;
    for (int j = 0; j < ctx.size(); ++j) v += row[j] * beta.beta[j];
    return v;
}

double deviation_norm(const MeanFunction& m, const BasisContext& ctx) {
    auto beta = best_linear_coefficients(m, ctx);
    const auto s = ctx.support();
    return integrate(
        [&](double x) {
            const double d = m(x) - evaluate_linear(ctx, beta, x);
            return 0.5 * d * d;
        },
        s.lo, s.hi, ctx.quadrature_nodes());
}

MeanFunction calibrate_leading_coefficient(const std::vector<double>& base_coefficients,
                                           int lead_degree, const BasisContext& ctx,
                                           double target) {
    if (lead_degree < 0) throw std::invalid_argument("calibrate: lead degree must be >= 0");
    if (target < 0.0) throw std::invalid_argument("calibrate: target deviation must be >= 0");

    std::vector<double> unit(lead_degree + 1, 0.0);
    unit.back() = 1.0;
    const double unit_dev = deviation_norm(MeanFunction::polynomial(unit), ctx);
    if (unit_dev <= 1e-14)
        throw std::runtime_error("calibrate: leading term lies in the basis span; deviation cannot reach target");

    const double c = std::sqrt(target / unit_dev);
    std::vector<double> coeffs(base_coefficients);
    if (static_cast<int>(coeffs.size()) < lead_degree + 1) coeffs.resize(lead_degree + 1, 0.0);
    coeffs[lead_degree] += c;

    std::ostringstream d;
    d << "calibrated poly with c=" << c << " at degree " << lead_degree;
    auto m = MeanFunction::polynomial(std::move(coeffs), d.str());

    // The sqrt formula assumes the base terms live in the basis span; verify.
    const double achieved = deviation_norm(m, ctx);
    if (std::abs(achieved - target) > 1e-8 * std::max(1.0, target))
        throw std::invalid_argument("calibrate: base terms are not in the basis span");
    return m;
}

}  // namespace mxd
