#include "mxd/risk.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace mxd {

namespace {

constexpr int kSupGrid = 4096;
constexpr double kDensityFloor = 1e-12;

double variance_at(const VarianceSpec& v, double x) {
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    return std::get<ScalarFn>(v)(x);
}

void check_design_floor(const DesignDensity& design) {
    const auto s = design.support();
    for (int i = 0; i <= kSupGrid; ++i) {
        const double x = s.lo + s.length() * i / kSupGrid;
        if (design.density_at(x) < kDensityFloor)
            throw std::runtime_error(
                "risk: design density below 1e-12; the asymptotic risk is ill posed");
    }
}

}  // namespace

double sup_h_over_pi(const BasisContext& ctx, const DesignDensity& design) {
    const auto s = design.support();
    auto ratio = [&](double x) { return evaluate_h(ctx, x) / design.density_at(x); };

    double best = -1.0, best_x = s.lo;
    const double dx = s.length() / kSupGrid;
    for (int i = 0; i <= kSupGrid; ++i) {
        const double x = s.lo + i * dx;
        const double r = ratio(x);
        if (r > best) {
            best = r;
            best_x = x;
        }
    }
    // Golden-section on the bracketing cell.
    double lo = std::max(s.lo, best_x - dx), hi = std::min(s.hi, best_x + dx);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = ratio(x1), f2 = ratio(x2);
    for (int it = 0; it < 100 && (hi - lo) > 1e-12; ++it) {
        if (f1 > f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = ratio(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = ratio(x2);
        }
    }
    return std::max(best, std::max(f1, f2));
}

RiskReport omega_trace(const BasisContext& ctx, const DesignDensity& design,
                       const MeanFunction& m, const VarianceSpec& variance) {
    check_design_floor(design);
    const auto beta = best_linear_coefficients(m, ctx);
    const auto pieces = design.piece_intervals();
    const int nodes = ctx.quadrature_nodes();

    RiskReport r;
    r.variance_term = 0.25 * integrate(
                                 [&](double x) {
                                     return evaluate_h(ctx, x) * variance_at(variance, x) /
                                            design.density_at(x);
                                 },
                                 pieces, nodes);
    r.bias_term = 0.25 * integrate(
                             [&](double x) {
                                 const double d = m(x) - evaluate_linear(ctx, beta, x);
                                 return evaluate_h(ctx, x) * d * d / design.density_at(x);
                             },
                             pieces, nodes);
    r.trace_risk = r.variance_term + r.bias_term;
    r.minimax_criterion = minimax_criterion(ctx, design, variance);
    r.worst_case = 0.5 * r.minimax_criterion;
    r.design_description = to_string(design.family());
    r.mean_description = m.description();
    return r;
}

double minimax_criterion(const BasisContext& ctx, const DesignDensity& design,
                         const VarianceSpec& variance) {
    check_design_floor(design);
    if (std::holds_alternative<double>(variance) && std::get<double>(variance) < 0.0)
        throw std::invalid_argument("minimax_criterion: sigma2 must be >= 0");
    const double integral = integrate(
        [&](double x) {
            return variance_at(variance, x) * evaluate_h(ctx, x) / design.density_at(x);
        },
        design.piece_intervals(), ctx.quadrature_nodes());
    return 0.5 * integral + sup_h_over_pi(ctx, design);
}

double worst_case_risk(const BasisContext& ctx, const DesignDensity& design,
                       const VarianceSpec& variance) {
    return 0.5 * minimax_criterion(ctx, design, variance);
}

void RiskReport::write_keyvalue(std::ostream& os) const {
    os.precision(17);
    os << "design = " << design_description << '\n'
       << "mean = " << mean_description << '\n'
       << "variance_term = " << variance_term << '\n'
       << "bias_term = " << bias_term << '\n'
       << "trace_risk = " << trace_risk << '\n'
       << "minimax_criterion = " << minimax_criterion << '\n'
       << "worst_case = " << worst_case << '\n';
}

void RiskReport::write_csv_header(std::ostream& os) {
    os << "design,mean,variance_term,bias_term,trace_risk,minimax_criterion,worst_case\n";
}

void RiskReport::write_csv_row(std::ostream& os) const {
    os.precision(17);
    os << design_description << ',' << mean_description << ',' << variance_term << ','
       << bias_term << ',' << trace_risk << ',' << minimax_criterion << ',' << worst_case
       << '\n';
}

}  // namespace mxd
