#pragma once

#include <iosfwd>
#include <vector>

#include "mxd/basis.hpp"
#include "mxd/design.hpp"
#include "mxd/linalg.hpp"

namespace mxd {

struct Dataset {
    std::vector<double> xs;
    std::vector<double> ys;
};

/// CSV with columns x,y; '#' comments and an optional header row allowed.
Dataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const Dataset& data, std::ostream& os);

/// Which moment-matrix estimate stands in the solve.
/// Truncated: the weighted Gram matrix, replaced by nQ on the small-eigenvalue
/// event. KnownQ: Q^{-1} V / n. Untruncated: the weighted Gram matrix always.
enum class WlsMode { Truncated, KnownQ, Untruncated };

struct WlsFit {
    std::vector<double> beta;
    bool event_triggered = false;     // smallest eigenvalue fell below lambda_min(Q)/2
    double lambda_min_observed = 0.0; // smallest eigenvalue of (weighted Gram)/n
    int n = 0;

    void write_keyvalue(std::ostream& os) const;
};

/// Weighted least squares with weights lambda(x_i)/pi(x_i) and the truncated
/// moment-matrix fallback. Requires n >= k and a design positive at all xs.
WlsFit fit_wls(const Dataset& data, const DesignDensity& design, const BasisContext& ctx,
               WlsMode mode = WlsMode::Truncated);

/// Ordinary least squares: unit weights, no event mechanism.
WlsFit fit_ols(const Dataset& data, const BasisContext& ctx);

/// Integrated squared error of the fitted approximation against the target
/// coefficients: (beta - beta_true)^T Q (beta - beta_true), which equals
/// \int (ell_fit - ell_true)^2 lambda dx exactly.
double integrated_squared_error(const WlsFit& fit, const BasisContext& ctx,
                                const CoefficientVector& beta_true);

}  // namespace mxd
