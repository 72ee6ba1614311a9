#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "mxd/basis.hpp"
#include "mxd/design.hpp"

namespace mxd {

/// Either a constant noise variance or a positive variance function of x.
using VarianceSpec = std::variant<double, ScalarFn>;

struct RiskReport {
    double variance_term = 0.0;      // (1/4) \int h sigma2(x) / pi dx
    double bias_term = 0.0;          // (1/4) \int h (m - ell)^2 / pi dx
    double trace_risk = 0.0;         // variance_term + bias_term
    double minimax_criterion = 0.0;  // R_pi
    double worst_case = 0.0;         // R_pi / 2
    std::string design_description;
    std::string mean_description;

    void write_keyvalue(std::ostream& os) const;
    void write_csv_row(std::ostream& os) const;
    static void write_csv_header(std::ostream& os);
};

/// Exact asymptotic risk tr(Q^{-1} Omega_pi) for a given mean function and
/// noise variance, decomposed into variance and bias terms.
/// Throws if the design density falls below 1e-12 anywhere on the support.
RiskReport omega_trace(const BasisContext& ctx, const DesignDensity& design,
                       const MeanFunction& m, const VarianceSpec& variance);

/// R_pi = (sigma2 / 2) \int h/pi dx + sup_x h/pi. For a variance function the
/// first term integrates sigma2(x) h / pi.
double minimax_criterion(const BasisContext& ctx, const DesignDensity& design,
                         const VarianceSpec& variance);

/// Worst risk over the unit misspecification ball: R_pi / 2.
double worst_case_risk(const BasisContext& ctx, const DesignDensity& design,
                       const VarianceSpec& variance);

/// sup_x h(x)/pi(x) by grid scan with local golden-section refinement.
double sup_h_over_pi(const BasisContext& ctx, const DesignDensity& design);

}  // namespace mxd
