#include "mxd/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mxd {

namespace {

constexpr int kScanGrid = 4096;
constexpr double kRootTol = 1e-12;

double eval_h(const BasisContext& ctx, double x) { return ctx.h_at(x); }

// Golden-section refinement of an extremum bracketed in [lo, hi].
double refine_extremum(const BasisContext& ctx, double lo, double hi, bool maximize) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = eval_h(ctx, x1), f2 = eval_h(ctx, x2);
    if (maximize) {
        f1 = -f1;
        f2 = -f2;
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-14; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = eval_h(ctx, x1);
            if (maximize) f1 = -f1;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = eval_h(ctx, x2);
            if (maximize) f2 = -f2;
        }
    }
    return 0.5 * (lo + hi);
}

double bisect_crossing(const BasisContext& ctx, double h0, double lo, double hi) {
    double flo = eval_h(ctx, lo) - h0;
    for (int it = 0; it < 200 && (hi - lo) > kRootTol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = eval_h(ctx, mid) - h0;
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

HRange h_range(const BasisContext& ctx) {
    const auto s = ctx.support();
    const double dx = s.length() / kScanGrid;
    std::vector<double> hv(kScanGrid + 1);
    for (int i = 0; i <= kScanGrid; ++i) hv[i] = eval_h(ctx, s.lo + i * dx);

    HRange r;
    r.h_min = std::numeric_limits<double>::infinity();
    r.h_max = -std::numeric_limits<double>::infinity();
    auto consider = [&](double x, double h) {
        if (h < r.h_min) {
            r.h_min = h;
            r.argmin = x;
        }
        if (h > r.h_max) {
            r.h_max = h;
            r.argmax = x;
        }
    };
    consider(s.lo, hv[0]);
    consider(s.hi, hv[kScanGrid]);
    for (int i = 1; i < kScanGrid; ++i) {
        const bool loc_min = hv[i] <= hv[i - 1] && hv[i] <= hv[i + 1];
        const bool loc_max = hv[i] >= hv[i - 1] && hv[i] >= hv[i + 1];
        if (loc_min || loc_max) {
            const double x = refine_extremum(ctx, s.lo + (i - 1) * dx, s.lo + (i + 1) * dx, loc_max);
            consider(x, eval_h(ctx, x));
        }
    }
    return r;
}

LevelSetPartition level_partition(const BasisContext& ctx, double h0) {
    const auto s = ctx.support();
    const auto range = h_range(ctx);
    const double slack = 1e-9 * std::max(1.0, range.h_max);
    if (h0 < range.h_min - slack || h0 > range.h_max + slack) {
        std::ostringstream msg;
        msg << "level_partition: h0=" << h0 << " outside [" << range.h_min << ", "
            << range.h_max << "]";
        throw std::out_of_range(msg.str());
    }

    const double dx = s.length() / kScanGrid;
    LevelSetPartition part;
    part.h0 = h0;

    double prev_x = s.lo;
    double prev_f = eval_h(ctx, s.lo) - h0;
    for (int i = 1; i <= kScanGrid; ++i) {
        const double x = (i == kScanGrid) ? s.hi : s.lo + i * dx;
        const double f = eval_h(ctx, x) - h0;
        if ((prev_f <= 0.0) != (f <= 0.0))
            part.boundary_points.push_back(bisect_crossing(ctx, h0, prev_x, x));
        prev_x = x;
        prev_f = f;
    }

    std::vector<double> cuts;
    cuts.push_back(s.lo);
    cuts.insert(cuts.end(), part.boundary_points.begin(), part.boundary_points.end());
    cuts.push_back(s.hi);

    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Interval iv{cuts[i], cuts[i + 1]};
        if (iv.length() <= kRootTol) continue;  // tangency leftovers are measure zero
        const bool in_a = eval_h(ctx, iv.midpoint()) <= h0;
        auto& side = in_a ? part.a : part.b;
        if (!side.empty() && std::abs(side.back().hi - iv.lo) <= kRootTol)
            side.back().hi = iv.hi;
        else
            side.push_back(iv);
    }
    return part;
}

double f_value(const BasisContext& ctx, double h0) {
    const auto part = level_partition(ctx, h0);
    const double num = integrate([&](double x) { return h0 - eval_h(ctx, x); }, part.b,
                                 ctx.quadrature_nodes());
    return num / h0;
}

double sigma2_min(const BasisContext& ctx) {
    const auto range = h_range(ctx);
    const double f_min = f_value(ctx, range.h_min);
    // flat h (constant-only basis): prop-h is optimal at every noise level
    if (f_min >= -1e-12) return std::numeric_limits<double>::infinity();
    return -2.0 / f_min;
}

double sigma2_min_closed_form(const BasisContext& ctx) {
    const auto s = ctx.support();
    const auto range = h_range(ctx);
    const double total_h =
        integrate([&](double x) { return eval_h(ctx, x); }, s.lo, s.hi, ctx.quadrature_nodes());
    const double denom = total_h / range.h_min - s.length();
    if (denom <= 1e-12) return std::numeric_limits<double>::infinity();
    return 2.0 / denom;
}

double solve_threshold(const BasisContext& ctx, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("solve_threshold: sigma2 must be > 0");
    const auto range = h_range(ctx);
    if (std::isinf(sigma2)) return range.h_max;
    if (sigma2 <= sigma2_min(ctx)) return range.h_min;

    const double target = -2.0 / sigma2;
    double lo = range.h_min, hi = range.h_max;
    // f is monotone increasing with f(lo) < target < f(hi) = 0.
    for (int it = 0; it < 200 && (hi - lo) > kRootTol * std::max(1.0, range.h_max); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f_value(ctx, mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::string to_string(DesignFamily f) {
    switch (f) {
        case DesignFamily::Uniform: return "uniform";
        case DesignFamily::PropH: return "prop-h";
        case DesignFamily::SqrtH: return "sqrt-h";
        case DesignFamily::Minimax: return "minimax";
        case DesignFamily::CustomTable: return "table";
    }
    return "?";
}

DesignFamily parse_design_family(const std::string& name) {
    if (name == "uniform") return DesignFamily::Uniform;
    if (name == "prop-h" || name == "proph") return DesignFamily::PropH;
    if (name == "sqrt-h" || name == "sqrt") return DesignFamily::SqrtH;
    if (name == "minimax") return DesignFamily::Minimax;
    if (name == "table" || name == "custom-table") return DesignFamily::CustomTable;
    throw std::invalid_argument("unknown design family: " + name);
}

double DesignDensity::raw_at(double x) const {
    if (family_ == DesignFamily::CustomTable) {
        auto it = std::upper_bound(table_x_.begin(), table_x_.end(), x);
        if (it == table_x_.begin()) return table_d_.front();
        if (it == table_x_.end()) return table_d_.back();
        const std::size_t i = static_cast<std::size_t>(it - table_x_.begin());
        const double t = (x - table_x_[i - 1]) / (table_x_[i] - table_x_[i - 1]);
        return table_d_[i - 1] * (1.0 - t) + table_d_[i] * t;
    }
    const Piece* piece = &pieces_.back();
    for (const auto& p : pieces_) {
        if (x <= p.iv.hi) {
            piece = &p;
            break;
        }
    }
    switch (piece->form) {
        case PieceForm::Constant: return 1.0;
        case PieceForm::PropH: return eval_h(*ctx_, x);
        case PieceForm::SqrtH0H: return std::sqrt(*h0_ * eval_h(*ctx_, x));
        case PieceForm::Table: break;
    }
    throw std::logic_error("design: unreachable piece form");
}

double DesignDensity::density_at(double x) const {
    if (x < support_.lo - 1e-12 || x > support_.hi + 1e-12)
        throw std::domain_error("density_at: x outside support");
    x = std::clamp(x, support_.lo, support_.hi);
    return normalizer_ * raw_at(x);
}

double DesignDensity::cdf_at(double x) const {
    if (x < support_.lo - 1e-12 || x > support_.hi + 1e-12)
        throw std::domain_error("cdf_at: x outside support");
    x = std::clamp(x, support_.lo, support_.hi);
    const double step = support_.length() / (static_cast<double>(cdf_x_.size()) - 1.0);
    const double t = (x - support_.lo) / step;
    const std::size_t i = std::min(static_cast<std::size_t>(t), cdf_x_.size() - 2);
    const double frac = t - static_cast<double>(i);
    return cdf_f_[i] * (1.0 - frac) + cdf_f_[i + 1] * frac;
}

double DesignDensity::quantile(double u) const {
    if (u < 0.0 || u > 1.0) throw std::domain_error("quantile: u outside [0,1]");
    auto it = std::upper_bound(cdf_f_.begin(), cdf_f_.end(), u);
    if (it == cdf_f_.begin()) return support_.lo;
    if (it == cdf_f_.end()) return support_.hi;
    const std::size_t i = static_cast<std::size_t>(it - cdf_f_.begin());
    const double f0 = cdf_f_[i - 1], f1 = cdf_f_[i];
    const double t = (u - f0) / (f1 - f0);
    return cdf_x_[i - 1] * (1.0 - t) + cdf_x_[i] * t;
}

std::vector<Interval> DesignDensity::piece_intervals() const {
    if (family_ == DesignFamily::CustomTable) return {support_};
    std::vector<Interval> ivs;
    ivs.reserve(pieces_.size());
    for (const auto& p : pieces_) ivs.push_back(p.iv);
    return ivs;
}

void DesignDensity::finalize(int cdf_points) {
    if (cdf_points < 16) throw std::invalid_argument("design: cdf table too coarse");

    normalizer_ = 1.0;
    double mass = 0.0;
    if (family_ == DesignFamily::Uniform) {
        mass = support_.length();
    } else if (family_ == DesignFamily::CustomTable) {
        // Trapezoid over the table's own nodes is exact for a linear interpolant.
        for (std::size_t i = 1; i < table_x_.size(); ++i)
            mass += 0.5 * (table_d_[i - 1] + table_d_[i]) * (table_x_[i] - table_x_[i - 1]);
    } else {
        for (const auto& iv : piece_intervals())
            mass += integrate([this](double x) { return raw_at(x); }, iv.lo, iv.hi,
                              ctx_ ? ctx_->quadrature_nodes() : 512);
    }
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw std::runtime_error("design: normalization failed (non-positive mass)");
    normalizer_ = 1.0 / mass;

    // CDF grid with trapezoid accumulation, pinned to F(b) = 1.
    const int n = cdf_points;
    cdf_x_.resize(n + 1);
    cdf_f_.resize(n + 1);
    const double step = support_.length() / n;
    double prev_d = density_at(support_.lo);
    double min_density = prev_d;
    cdf_x_[0] = support_.lo;
    cdf_f_[0] = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double x = (i == n) ? support_.hi : support_.lo + i * step;
        const double d = density_at(x);
        min_density = std::min(min_density, d);
        cdf_x_[i] = x;
        cdf_f_[i] = cdf_f_[i - 1] + 0.5 * (prev_d + d) * (x - cdf_x_[i - 1]);
        prev_d = d;
    }
    if (!(min_density > 0.0))
        throw std::runtime_error("design: density is not strictly positive on the support");
    const double total = cdf_f_[n];
    for (int i = 0; i <= n; ++i) cdf_f_[i] /= total;
    cdf_f_[n] = 1.0;

    // Minimax densities must be continuous across piece boundaries.
    for (double b : boundaries_) {
        const double eps = 1e-9 * support_.length();
        const double left = density_at(std::max(support_.lo, b - eps));
        const double right = density_at(std::min(support_.hi, b + eps));
        const double scale = std::max({left, right, 1e-300});
        if (std::abs(left - right) / scale > 1e-6)
            throw std::runtime_error("design: density discontinuous at a piece boundary");
    }
}

DesignDensity build_design(const std::shared_ptr<const BasisContext>& ctx,
                           DesignFamily family, std::optional<double> sigma2,
                           int cdf_points) {
    if (!ctx) throw std::invalid_argument("build_design: null basis context");
    DesignDensity d;
    d.ctx_ = ctx;
    d.support_ = ctx->support();
    d.family_ = family;

    switch (family) {
        case DesignFamily::Uniform:
            d.pieces_.push_back({d.support_, DesignDensity::PieceForm::Constant});
            break;
        case DesignFamily::PropH:
            d.pieces_.push_back({d.support_, DesignDensity::PieceForm::PropH});
            break;
        case DesignFamily::SqrtH: {
            const auto range = h_range(*ctx);
            d.h0_ = range.h_max;  // sqrt(h_max h) differs from sqrt(h) by a constant
            d.pieces_.push_back({d.support_, DesignDensity::PieceForm::SqrtH0H});
            break;
        }
        case DesignFamily::Minimax: {
            if (!sigma2) throw std::invalid_argument("build_design: minimax requires sigma2");
            if (!(*sigma2 > 0.0))
                throw std::invalid_argument("build_design: sigma2 must be > 0");
            d.sigma2_ = *sigma2;
            const double s2min = sigma2_min(*ctx);
            if (*sigma2 <= s2min) {
                // Below the phase transition the optimum is exactly prop-h.
                d.h0_ = h_range(*ctx).h_min;
                d.pieces_.push_back({d.support_, DesignDensity::PieceForm::PropH});
                break;
            }
            const double h0 = solve_threshold(*ctx, *sigma2);
            d.h0_ = h0;
            const auto part = level_partition(*ctx, h0);
            d.boundaries_ = part.boundary_points;
            for (const auto& iv : part.a)
                d.pieces_.push_back({iv, DesignDensity::PieceForm::SqrtH0H});
            for (const auto& iv : part.b)
                d.pieces_.push_back({iv, DesignDensity::PieceForm::PropH});
            std::sort(d.pieces_.begin(), d.pieces_.end(),
                      [](const auto& p, const auto& q) { return p.iv.lo < q.iv.lo; });
            break;
        }
        case DesignFamily::CustomTable:
            throw std::invalid_argument("build_design: use design_from_table for custom densities");
    }

    d.finalize(cdf_points);
    return d;
}

DesignDensity design_from_table(const std::shared_ptr<const BasisContext>& ctx,
                                std::vector<double> xs, std::vector<double> densities,
                                int cdf_points) {
    if (!ctx) throw std::invalid_argument("design_from_table: null basis context");
    if (xs.size() != densities.size() || xs.size() < 2)
        throw std::invalid_argument("design_from_table: need >= 2 matching (x, density) samples");
    if (!std::is_sorted(xs.begin(), xs.end()))
        throw std::invalid_argument("design_from_table: x column must be sorted");
    const auto s = ctx->support();
    if (std::abs(xs.front() - s.lo) > 1e-9 || std::abs(xs.back() - s.hi) > 1e-9)
        throw std::invalid_argument("design_from_table: table must span the support");
    for (double v : densities)
        if (!(v > 0.0)) throw std::invalid_argument("design_from_table: density must be positive");

    DesignDensity d;
    d.ctx_ = ctx;
    d.support_ = s;
    d.family_ = DesignFamily::CustomTable;
    d.table_x_ = std::move(xs);
    d.table_d_ = std::move(densities);
    d.table_x_.front() = s.lo;
    d.table_x_.back() = s.hi;
    d.finalize(cdf_points);
    return d;
}

void DesignDensity::export_csv(std::ostream& os) const {
    os << "x,density,cdf\n";
    os.precision(17);
    for (std::size_t i = 0; i < cdf_x_.size(); ++i)
        os << cdf_x_[i] << ',' << density_at(cdf_x_[i]) << ',' << cdf_f_[i] << '\n';
}

void DesignDensity::describe(std::ostream& os) const {
    os.precision(17);
    os << "family = " << to_string(family_) << '\n';
    os << "support = " << support_.lo << ' ' << support_.hi << '\n';
    if (sigma2_) os << "sigma2 = " << *sigma2_ << '\n';
    if (h0_) os << "h0 = " << *h0_ << '\n';
    os << "normalizer = " << normalizer_ << '\n';
    if (ctx_) {
        os << "sigma2_min = " << sigma2_min(*ctx_) << '\n';
        const auto r = h_range(*ctx_);
        os << "h_min = " << r.h_min << '\n';
        os << "h_max = " << r.h_max << '\n';
    }
    os << "boundaries =";
    for (double b : boundaries_) os << ' ' << b;
    os << '\n';

    if (family_ == DesignFamily::Minimax) {
        // A carries the sqrt(h0 h) pieces, B the h-proportional pieces.
        std::ostringstream a_os, b_os;
        a_os.precision(6);
        b_os.precision(6);
        int a_count = 0, b_count = 0;
        for (const auto& p : pieces_) {
            if (p.form == PieceForm::SqrtH0H) {
                a_os << (a_count++ ? " u " : "") << '[' << p.iv.lo << ", " << p.iv.hi << ']';
            } else {
                b_os << (b_count++ ? " u " : "") << '[' << p.iv.lo << ", " << p.iv.hi << ']';
            }
        }
        os << "form = " << (a_count == 0 ? "prop-h (sigma2 <= sigma2_min)"
                          : b_count == 0 ? "sqrt-h (sigma2 = inf limit)"
                                         : "piecewise sqrt/prop")
           << '\n';
        os << "A = " << (a_count ? a_os.str() : "empty") << '\n';
        os << "B = " << (b_count ? b_os.str() : "empty") << '\n';
    }
}

}  // namespace mxd
