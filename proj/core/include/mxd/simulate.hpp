#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mxd/basis.hpp"
#include "mxd/design.hpp"
#include "mxd/rng.hpp"
#include "mxd/wls.hpp"

namespace mxd {

struct SimConfig {
    std::shared_ptr<const BasisContext> ctx;
    std::vector<DesignDensity> designs;
    std::vector<std::string> design_labels;
    MeanFunction mean = MeanFunction::polynomial({0.0});
    double noise_variance = 1.0;  // separate knob from any design sigma2
    int n = 50;
    int replications = 10000;
    std::uint64_t seed = 1;
    bool coupled = true;
    int workers = 0;  // 0 = hardware concurrency

    void validate() const;
};

struct PairDifference {
    std::size_t first = 0;   // indices into design_labels
    std::size_t second = 0;
    double mean_difference = 0.0;
    double standard_error = 0.0;
};

/// Replication r draws from the stream (seed, stream_id = r); aggregation runs
/// in fixed replication order, so results do not depend on the worker count.
struct SimResult {
    std::vector<std::string> design_labels;
    std::vector<double> means;           // mean of n * integrated squared error
    std::vector<double> standard_errors;
    std::vector<double> event_frequencies;
    std::vector<double> trace_risks;     // asymptotic comparison column
    std::vector<PairDifference> differences;
    int n = 0;
    int replications = 0;
    std::uint64_t seed = 0;
    bool coupled = true;
    double noise_variance = 0.0;

    void write_csv(std::ostream& os) const;
    void write_table(std::ostream& os) const;
};

SimResult run_experiment(const SimConfig& config);

struct ConvergencePoint {
    int n = 0;
    int replications = 0;
    double empirical_mean = 0.0;   // mean of n * ISE
    double standard_error = 0.0;
    double trace_risk = 0.0;
    double gap = 0.0;              // |mean - trace_risk|
    double scaled_gap = 0.0;       // sqrt(n) * gap
};

/// Sweeps n over a grid; when scale_replications is set the replication count
/// is config.replications * n_grid.front() / n (work per grid point constant).
std::vector<ConvergencePoint> convergence_study(const SimConfig& config,
                                                const std::vector<int>& n_grid,
                                                bool scale_replications = false);

/// Fractions of replications on which the small-eigenvalue event fired.
std::vector<double> event_frequency(const SimConfig& config);

}  // namespace mxd
