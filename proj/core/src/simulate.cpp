#include "mxd/simulate.hpp"

#include <cmath>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mxd/risk.hpp"

namespace mxd {

namespace {

double kahan_mean(const std::vector<double>& v) {
    double sum = 0.0, carry = 0.0;
    for (double x : v) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0, carry = 0.0;
    for (double x : v) {
        const double d = (x - mean) * (x - mean) - carry;
        const double t = ss + d;
        carry = (t - ss) - d;
        ss = t;
    }
    const double var = ss / (static_cast<double>(v.size()) - 1.0);
    return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace

void SimConfig::validate() const {
    if (!ctx) throw std::invalid_argument("sim: missing basis context");
    if (designs.empty()) throw std::invalid_argument("sim: need at least one design");
    if (design_labels.size() != designs.size())
        throw std::invalid_argument("sim: one label per design required");
    if (replications < 1) throw std::invalid_argument("sim: replications must be >= 1");
    if (n < ctx->size()) throw std::invalid_argument("sim: n must be >= basis size");
    if (noise_variance < 0.0) throw std::invalid_argument("sim: noise variance must be >= 0");
}

SimResult run_experiment(const SimConfig& config) {
    config.validate();
    const int n = config.n;
    const int reps = config.replications;
    const std::size_t d_count = config.designs.size();
    const auto beta_true = best_linear_coefficients(config.mean, *config.ctx);
    const double sd = std::sqrt(config.noise_variance);

    // values[d][r] = n * ISE for design d on replication r
    std::vector<std::vector<double>> values(d_count, std::vector<double>(reps));
    std::vector<std::vector<std::uint8_t>> events(d_count,
                                                  std::vector<std::uint8_t>(reps, 0));

    auto run_range = [&](int r_begin, int r_end) {
        std::vector<double> us(n), zs(n);
        Dataset data;
        data.xs.resize(n);
        data.ys.resize(n);
        for (int r = r_begin; r < r_end; ++r) {
            RngStream stream(config.seed, static_cast<std::uint64_t>(r));
            if (config.coupled) {
                for (int i = 0; i < n; ++i) us[i] = stream.next_uniform();
                for (int i = 0; i < n; ++i) zs[i] = stream.next_normal();
            }
            for (std::size_t d = 0; d < d_count; ++d) {
                if (!config.coupled) {
                    for (int i = 0; i < n; ++i) us[i] = stream.next_uniform();
                    for (int i = 0; i < n; ++i) zs[i] = stream.next_normal();
                }
                const auto& design = config.designs[d];
                for (int i = 0; i < n; ++i) {
                    data.xs[i] = design.quantile(us[i]);
                    data.ys[i] = config.mean(data.xs[i]) + sd * zs[i];
                }
                const auto fit = fit_wls(data, design, *config.ctx);
                const double ise = integrated_squared_error(fit, *config.ctx, beta_true);
                if (!std::isfinite(ise)) {
                    std::ostringstream msg;
                    msg << "sim: non-finite replication (seed=" << config.seed
                        << ", stream=" << r << ", design=" << config.design_labels[d] << ")";
                    throw std::runtime_error(msg.str());
                }
                values[d][r] = static_cast<double>(n) * ise;
                events[d][r] = fit.event_triggered ? 1 : 0;
            }
        }
    };

    int workers = config.workers > 0 ? config.workers
                                     : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = std::min(workers, reps);
    if (workers == 1) {
        run_range(0, reps);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mu;
        const int chunk = (reps + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int lo = w * chunk;
            const int hi = std::min(reps, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi] {
                try {
                    run_range(lo, hi);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mu);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    SimResult result;
    result.design_labels = config.design_labels;
    result.n = n;
    result.replications = reps;
    result.seed = config.seed;
    result.coupled = config.coupled;
    result.noise_variance = config.noise_variance;

    for (std::size_t d = 0; d < d_count; ++d) {
        const double mean = kahan_mean(values[d]);
        result.means.push_back(mean);
        result.standard_errors.push_back(standard_error(values[d], mean));
        double event_count = 0.0;
        for (auto e : events[d]) event_count += e;
        result.event_frequencies.push_back(event_count / reps);
        result.trace_risks.push_back(
            omega_trace(*config.ctx, config.designs[d], config.mean, config.noise_variance)
                .trace_risk);
    }

    if (config.coupled && d_count > 1) {
        std::vector<double> diff(reps);
        for (std::size_t a = 0; a < d_count; ++a) {
            for (std::size_t b = a + 1; b < d_count; ++b) {
                for (int r = 0; r < reps; ++r) diff[r] = values[a][r] - values[b][r];
                const double mean = kahan_mean(diff);
                result.differences.push_back(
                    {a, b, mean, standard_error(diff, mean)});
            }
        }
    }
    return result;
}

std::vector<ConvergencePoint> convergence_study(const SimConfig& config,
                                                const std::vector<int>& n_grid,
                                                bool scale_replications) {
    if (n_grid.empty()) throw std::invalid_argument("convergence_study: empty n grid");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1])
            throw std::invalid_argument("convergence_study: n grid must increase");

    std::vector<ConvergencePoint> out;
    for (int n : n_grid) {
        SimConfig c = config;
        c.n = n;
        if (scale_replications) {
            const long long r = static_cast<long long>(config.replications) *
                                n_grid.front() / n;
            c.replications = static_cast<int>(std::max(r, 2LL));
        }
        const auto res = run_experiment(c);
        ConvergencePoint p;
        p.n = n;
        p.replications = c.replications;
        p.empirical_mean = res.means.front();
        p.standard_error = res.standard_errors.front();
        p.trace_risk = res.trace_risks.front();
        p.gap = std::abs(p.empirical_mean - p.trace_risk);
        p.scaled_gap = std::sqrt(static_cast<double>(n)) * p.gap;
        out.push_back(p);
    }
    return out;
}

std::vector<double> event_frequency(const SimConfig& config) {
    return run_experiment(config).event_frequencies;
}

void SimResult::write_csv(std::ostream& os) const {
    os.precision(17);
    os << "design,mean_n_ise,standard_error,event_frequency,trace_risk\n";
    for (std::size_t d = 0; d < design_labels.size(); ++d)
        os << design_labels[d] << ',' << means[d] << ',' << standard_errors[d] << ','
           << event_frequencies[d] << ',' << trace_risks[d] << '\n';
}

void SimResult::write_table(std::ostream& os) const {
    os.precision(4);
    os << "n = " << n << ", replications = " << replications
       << ", noise variance = " << noise_variance << ", seed = " << seed
       << (coupled ? ", coupled" : ", uncoupled") << "\n\n";
    os << "design            mean (se)        asymptotic   event freq\n";
    for (std::size_t d = 0; d < design_labels.size(); ++d) {
        os.width(16);
        os << std::left << design_labels[d] << "  ";
        os << means[d] << " (" << standard_errors[d] << ")   " << trace_risks[d] << "   "
           << event_frequencies[d] << '\n';
    }
    if (!differences.empty()) {
        os << "\npairwise differences (coupled):\n";
        for (const auto& p : differences)
            os << design_labels[p.first] << " - " << design_labels[p.second] << " = "
               << p.mean_difference << " (se " << p.standard_error << ")\n";
    }
}

}  // namespace mxd
