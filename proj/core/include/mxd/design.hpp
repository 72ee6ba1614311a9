#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mxd/basis.hpp"
#include "mxd/quadrature.hpp"

namespace mxd {

/// Level sets of h at threshold h0: A = {h <= h0}, B = {h > h0}.
struct LevelSetPartition {
    double h0 = 0.0;
    std::vector<Interval> a;                // h <= h0
    std::vector<Interval> b;                // h > h0
    std::vector<double> boundary_points;    // sorted solutions of h(x) = h0
};

/// Range of h over the support, with the attaining abscissas.
struct HRange {
    double h_min = 0.0;
    double h_max = 0.0;
    double argmin = 0.0;
    double argmax = 0.0;
};

HRange h_range(const BasisContext& ctx);

/// Partition of the support by the level h0. Crossings located by a grid scan
/// refined with bisection; intervals classified by midpoint evaluation.
LevelSetPartition level_partition(const BasisContext& ctx, double h0);

/// f(h0) = \int_{B_{h0}} (h0 - h) dx / h0. Monotone increasing, <= 0,
/// f(h_max) = 0.
double f_value(const BasisContext& ctx, double h0);

/// Phase-transition noise level -2 / f(h_min). Below it the optimal design is
/// exactly proportional to h.
double sigma2_min(const BasisContext& ctx);

/// Same quantity through the closed form 2 / (\int h dx / h_min - |S|).
double sigma2_min_closed_form(const BasisContext& ctx);

/// Unique root of f(h0) = -2/sigma2 on [h_min, h_max] by bisection.
/// Returns h_min for sigma2 <= sigma2_min and h_max for sigma2 = infinity.
double solve_threshold(const BasisContext& ctx, double sigma2);

enum class DesignFamily { Uniform, PropH, SqrtH, Minimax, CustomTable };

std::string to_string(DesignFamily f);

/// Normalized design density on the support with a tabulated CDF.
/// Immutable after construction.
class DesignDensity {
public:
    DesignFamily family() const { return family_; }
    Interval support() const { return support_; }
    std::optional<double> sigma2_used() const { return sigma2_; }
    std::optional<double> threshold() const { return h0_; }
    double normalizer() const { return normalizer_; }
    const std::vector<double>& boundary_points() const { return boundaries_; }
    const std::shared_ptr<const BasisContext>& context() const { return ctx_; }

    double density_at(double x) const;
    double cdf_at(double x) const;
    double quantile(double u) const;

    /// Smooth pieces of the density; quadrature against the density should be
    /// taken piece by piece.
    std::vector<Interval> piece_intervals() const;

    /// CSV with columns x,density,cdf at the CDF grid.
    void export_csv(std::ostream& os) const;

    /// Human/machine readable descriptor (family, sigma2, h0, c, boundaries).
    void describe(std::ostream& os) const;

    friend DesignDensity build_design(const std::shared_ptr<const BasisContext>&,
                                      DesignFamily, std::optional<double>, int);
    friend DesignDensity design_from_table(const std::shared_ptr<const BasisContext>&,
                                           std::vector<double>, std::vector<double>, int);

private:
    enum class PieceForm { Constant, PropH, SqrtH0H, Table };
    struct Piece {
        Interval iv;
        PieceForm form;
    };

    DesignDensity() = default;
    double raw_at(double x) const;  // un-normalized piece evaluation
    void finalize(int cdf_points);  // normalizer + CDF table + validity checks

    DesignFamily family_ = DesignFamily::Uniform;
    Interval support_{-1.0, 1.0};
    std::shared_ptr<const BasisContext> ctx_;
    std::vector<Piece> pieces_;
    std::optional<double> sigma2_;
    std::optional<double> h0_;
    std::vector<double> boundaries_;
    double normalizer_ = 1.0;

    // table form (custom densities)
    std::vector<double> table_x_, table_d_;

    // CDF grid: uniform abscissas, trapezoid-accumulated, normalized to F(b)=1
    std::vector<double> cdf_x_, cdf_f_;
};

/// Constructs a design of the given family. Minimax requires sigma2
/// (use std::numeric_limits<double>::infinity() for the sqrt limit).
DesignDensity build_design(const std::shared_ptr<const BasisContext>& ctx,
                           DesignFamily family,
                           std::optional<double> sigma2 = std::nullopt,
                           int cdf_points = 8192);

/// Custom density from (x, density) samples; renormalized, piecewise linear.
DesignDensity design_from_table(const std::shared_ptr<const BasisContext>& ctx,
                                std::vector<double> xs, std::vector<double> densities,
                                int cdf_points = 8192);

/// Parses "uniform" | "prop-h" | "sqrt-h" | "minimax" | "table".
DesignFamily parse_design_family(const std::string& name);

}  // namespace mxd
