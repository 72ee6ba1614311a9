#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mxd/basis.hpp"
#include "mxd/design.hpp"

namespace mxd {

/// Philox4x32-10 counter block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Standard normal quantile function (Wichura's PPND16), |error| ~ 1e-15.
double normal_quantile(double p);

/// Counter-based random stream. The same (seed, stream_id) pair yields the
/// same sequence on every platform; distinct stream ids give independent
/// streams. Value semantics, cheap to copy.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_(stream_id) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    std::uint64_t next_u64();

    /// Uniform draw strictly inside (0,1): (x_53 + 0.5) * 2^-53.
    double next_uniform();

    /// Standard normal via the quantile transform; consumes one uniform.
    double next_normal();

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_ = 0;  // 32-bit words left in buffer_
};

/// Predictor draws with their underlying uniforms kept for coupling checks.
struct SampleBatch {
    std::vector<double> xs;
    std::vector<double> us;
    std::string design_description;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

/// n predictors from the design by inverse-CDF sampling.
SampleBatch sample_predictors(const DesignDensity& design, int n, RngStream& stream);

/// One uniform vector mapped through every design's quantile function
/// (common random numbers across designs).
std::vector<SampleBatch> coupled_predictors(const std::vector<const DesignDensity*>& designs,
                                            int n, RngStream& stream);

/// y_i = m(x_i) + sqrt(sigma2) z_i with z standard normal from the stream.
std::vector<double> simulate_responses(const std::vector<double>& xs, const MeanFunction& m,
                                       double sigma2, RngStream& stream);

}  // namespace mxd
