#include "mxd/wls.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mxd {

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("dataset: cannot open '" + path + "'");
    Dataset data;
    std::string line;
    bool header_skipped = false;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double x, y;
        if (!(ls >> x >> y)) {
            if (!header_skipped) {
                header_skipped = true;
                continue;
            }
            throw std::invalid_argument("dataset: malformed row '" + line + "' in " + path);
        }
        data.xs.push_back(x);
        data.ys.push_back(y);
    }
    return data;
}

void save_dataset_csv(const Dataset& data, std::ostream& os) {
    os << "x,y\n";
    os.precision(17);
    for (std::size_t i = 0; i < data.xs.size(); ++i)
        os << data.xs[i] << ',' << data.ys[i] << '\n';
}

namespace {

// Gram/moment accumulation with compensated (Kahan) sums; the 1/pi weights can
// span two orders of magnitude near density minima.
struct KahanAccumulator {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

struct WeightedMoments {
    SymMatrix gram;           // X^T W X
    std::vector<double> v;    // X^T W y
};

WeightedMoments accumulate(const Dataset& data, const BasisContext& ctx,
                           const std::function<double(double)>& weight_of) {
    const int k = ctx.size();
    const std::size_t n = data.xs.size();
    std::vector<KahanAccumulator> gram_acc(k * k);
    std::vector<KahanAccumulator> v_acc(k);
    std::vector<double> row(k);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weight_of(data.xs[i]);
        ctx.eval_basis(data.xs[i], row.data());
        for (int a = 0; a < k; ++a) {
            v_acc[a].add(w * row[a] * data.ys[i]);
            for (int b = a; b < k; ++b) gram_acc[a * k + b].add(w * row[a] * row[b]);
        }
    }
    WeightedMoments m{SymMatrix(static_cast<std::size_t>(k)), std::vector<double>(k)};
    for (int a = 0; a < k; ++a) {
        m.v[a] = v_acc[a].sum;
        for (int b = a; b < k; ++b) {
            m.gram(a, b) = gram_acc[a * k + b].sum;
            m.gram(b, a) = m.gram(a, b);
        }
    }
    return m;
}

void check_dataset(const Dataset& data, const BasisContext& ctx) {
    if (data.xs.size() != data.ys.size())
        throw std::invalid_argument("wls: xs and ys lengths differ");
    if (static_cast<int>(data.xs.size()) < ctx.size())
        throw std::invalid_argument("wls: underdetermined fit, need n >= k");
    const auto s = ctx.support();
    for (double x : data.xs)
        if (x < s.lo - 1e-12 || x > s.hi + 1e-12)
            throw std::domain_error("wls: predictor outside the support");
}

}  // namespace

WlsFit fit_wls(const Dataset& data, const DesignDensity& design, const BasisContext& ctx,
               WlsMode mode) {
    check_dataset(data, ctx);
    const int n = static_cast<int>(data.xs.size());

    auto moments = accumulate(data, ctx, [&](double x) {
        return ctx.weight_at(x) / design.density_at(x);
    });

    SymMatrix gram_over_n = moments.gram;
    for (std::size_t a = 0; a < gram_over_n.size(); ++a)
        for (std::size_t b = 0; b < gram_over_n.size(); ++b) gram_over_n(a, b) /= n;

    WlsFit fit;
    fit.n = n;
    fit.lambda_min_observed = smallest_eigenvalue(gram_over_n);
    fit.event_triggered = fit.lambda_min_observed < 0.5 * ctx.q_lambda_min();

    switch (mode) {
        case WlsMode::Truncated:
            if (fit.event_triggered) {
                SymMatrix nq = ctx.q();
                for (std::size_t a = 0; a < nq.size(); ++a)
                    for (std::size_t b = 0; b < nq.size(); ++b) nq(a, b) *= n;
                fit.beta = cholesky_solve(nq, moments.v);
            } else {
                fit.beta = cholesky_solve(moments.gram, moments.v);
            }
            break;
        case WlsMode::KnownQ: {
            std::vector<double> v_over_n = moments.v;
            for (double& v : v_over_n) v /= n;
            fit.beta = cholesky_solve(ctx.q(), v_over_n);
            break;
        }
        case WlsMode::Untruncated:
            fit.beta = cholesky_solve(moments.gram, moments.v);
            break;
    }
    return fit;
}

WlsFit fit_ols(const Dataset& data, const BasisContext& ctx) {
    check_dataset(data, ctx);
    auto moments = accumulate(data, ctx, [](double) { return 1.0; });

    SymMatrix gram_over_n = moments.gram;
    const int n = static_cast<int>(data.xs.size());
    for (std::size_t a = 0; a < gram_over_n.size(); ++a)
        for (std::size_t b = 0; b < gram_over_n.size(); ++b) gram_over_n(a, b) /= n;

    WlsFit fit;
    fit.n = n;
    fit.lambda_min_observed = smallest_eigenvalue(gram_over_n);
    fit.event_triggered = false;
    fit.beta = cholesky_solve(moments.gram, moments.v);
    return fit;
}

double integrated_squared_error(const WlsFit& fit, const BasisContext& ctx,
                                const CoefficientVector& beta_true) {
    if (fit.beta.size() != beta_true.beta.size())
        throw std::invalid_argument("integrated_squared_error: coefficient lengths differ");
    std::vector<double> d(fit.beta.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = fit.beta[i] - beta_true.beta[i];
    return quadratic_form(ctx.q(), d);
}

void WlsFit::write_keyvalue(std::ostream& os) const {
    os.precision(17);
    os << "n = " << n << '\n';
    os << "event_triggered = " << (event_triggered ? 1 : 0) << '\n';
    os << "lambda_min_observed = " << lambda_min_observed << '\n';
    os << "beta =";
    for (double b : beta) os << ' ' << b;
    os << '\n';
}

}  // namespace mxd
