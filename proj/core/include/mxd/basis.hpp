#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mxd/linalg.hpp"
#include "mxd/quadrature.hpp"

namespace mxd {

using ScalarFn = std::function<double(double)>;

/// Reference weight density on the support. Must be positive and integrate to 1.
struct WeightSpec {
    ScalarFn density;
    std::string description;

    static WeightSpec uniform(Interval support);
    static WeightSpec truncated_normal(double mean, double variance, Interval support);
};

/// Approximation space: basis functions, support, reference weight, moment
/// matrix Q and its inverse. Immutable after construction; share freely.
class BasisContext {
public:
    int size() const { return k_; }                       // number of basis functions
    std::optional<int> monomial_degree() const { return degree_; }
    Interval support() const { return support_; }
    const WeightSpec& weight() const { return weight_; }
    int quadrature_nodes() const { return nodes_; }

    const SymMatrix& q() const { return q_; }
    const SymMatrix& q_inv() const { return q_inv_; }
    double q_lambda_min() const { return q_lambda_min_; }
    double q_condition() const { return q_condition_; }

    /// Basis row vector (c_1(x), ..., c_k(x)).
    std::vector<double> eval_basis(double x) const;
    void eval_basis(double x, double* out) const;

    double weight_at(double x) const { return weight_.density(x); }

    /// h(x) without the support check; hot-loop variant of evaluate_h.
    double h_at(double x) const;

    friend BasisContext build_basis_context(int, Interval, std::optional<WeightSpec>, int);
    friend BasisContext build_basis_context(std::vector<ScalarFn>, Interval,
                                            std::optional<WeightSpec>, int);

private:
    BasisContext() = default;
    void assemble();

    int k_ = 0;
    std::optional<int> degree_;           // set for monomial bases
    std::vector<ScalarFn> functions_;     // set for explicit bases
    Interval support_{-1.0, 1.0};
    WeightSpec weight_;
    int nodes_ = 512;

    SymMatrix q_, q_inv_;
    double q_lambda_min_ = 0.0;
    double q_condition_ = 0.0;
};

/// Monomial basis (1, x, ..., x^K). Weight defaults to the uniform density.
BasisContext build_basis_context(int monomial_degree, Interval support = {-1.0, 1.0},
                                 std::optional<WeightSpec> weight = std::nullopt,
                                 int quadrature_nodes = 512);

/// Explicit basis from a list of continuous functions.
BasisContext build_basis_context(std::vector<ScalarFn> functions,
                                 Interval support = {-1.0, 1.0},
                                 std::optional<WeightSpec> weight = std::nullopt,
                                 int quadrature_nodes = 512);

/// Weighted leverage h(x) = 4 x^T Q^{-1} x lambda^2(x). Reduces to
/// x^T Q^{-1} x for the uniform weight on [-1,1]. Throws std::domain_error
/// for x outside the support.
double evaluate_h(const BasisContext& ctx, double x);

/// Conditional mean specification: polynomial coefficients or a tabulated
/// callable sampled on a uniform grid with piecewise-linear evaluation.
class MeanFunction {
public:
    static MeanFunction polynomial(std::vector<double> coefficients,
                                   std::string description = {});
    static MeanFunction tabulated(const ScalarFn& f, Interval support,
                                  std::string description = {}, int grid_points = 4096);

    double operator()(double x) const;
    const std::string& description() const { return description_; }
    const std::vector<double>& poly_coefficients() const { return coeffs_; }
    bool is_polynomial() const { return tabulated_.empty(); }

private:
    std::vector<double> coeffs_;      // polynomial form
    std::vector<double> tabulated_;   // grid form
    Interval grid_support_{-1.0, 1.0};
    std::string description_;
};

struct CoefficientVector {
    std::vector<double> beta;
};

/// Coefficients of the best linear approximation under the reference weight:
/// beta = Q^{-1} \int basis^T m lambda dx.
CoefficientVector best_linear_coefficients(const MeanFunction& m, const BasisContext& ctx);

class DesignDensity;  // design.hpp

/// Best linear approximation when x is drawn from a design density instead of
/// the reference weight: beta_pi = Q_pi^{-1} \int basis^T m pi dx.
CoefficientVector best_linear_coefficients_under_design(const MeanFunction& m,
                                                        const DesignDensity& design,
                                                        const BasisContext& ctx);

double evaluate_linear(const BasisContext& ctx, const CoefficientVector& beta, double x);

/// Squared deviation from the best linear approximation,
/// (1/2) \int (m - ell)^2 dx over the support (unweighted integrand).
double deviation_norm(const MeanFunction& m, const BasisContext& ctx);

/// Chooses c so that base(x) + c x^lead_degree has deviation_norm == target.
/// Requires the base polynomial to lie in the basis span.
MeanFunction calibrate_leading_coefficient(const std::vector<double>& base_coefficients,
                                           int lead_degree, const BasisContext& ctx,
                                           double target);

}  // namespace mxd
