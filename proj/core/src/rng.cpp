#include "mxd/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace mxd {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

std::uint64_t RngStream::next_u64() {
    if (buffered_ < 2) {
        const std::array<std::uint32_t, 4> counter = {
            static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                                  static_cast<std::uint32_t>(seed_ >> 32)};
        buffer_ = philox4x32(counter, key);
        buffered_ = 4;
        ++block_;
    }
    const std::uint64_t hi = buffer_[4 - buffered_];
    const std::uint64_t lo = buffer_[5 - buffered_];
    buffered_ -= 2;
    return (hi << 32) | lo;
}

double RngStream::next_uniform() {
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::next_normal() { return normal_quantile(next_uniform()); }

// PPND16, algorithm AS 241.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("normal_quantile: p must lie strictly inside (0,1)");

    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                  6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
              1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
        const double den =
            (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                  3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
              4.2313330701600911252e+1) * r + 1.0);
        return q * num / den;
    }

    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
        value = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        value = num / den;
    }
    return (q < 0.0) ? -value : value;
}

SampleBatch sample_predictors(const DesignDensity& design, int n, RngStream& stream) {
    if (n < 1) throw std::invalid_argument("sample_predictors: n must be >= 1");
    SampleBatch batch;
    batch.us.resize(n);
    batch.xs.resize(n);
    for (int i = 0; i < n; ++i) {
        batch.us[i] = stream.next_uniform();
        batch.xs[i] = design.quantile(batch.us[i]);
    }
    batch.design_description = to_string(design.family());
    batch.seed = stream.seed();
    batch.stream_id = stream.stream_id();
    return batch;
}

std::vector<SampleBatch> coupled_predictors(const std::vector<const DesignDensity*>& designs,
                                            int n, RngStream& stream) {
    if (n < 1) throw std::invalid_argument("coupled_predictors: n must be >= 1");
    if (designs.empty()) return {};
    const auto s0 = designs.front()->support();
    for (const auto* d : designs)
        if (std::abs(d->support().lo - s0.lo) > 1e-12 || std::abs(d->support().hi - s0.hi) > 1e-12)
            throw std::invalid_argument("coupled_predictors: designs must share a support");

    std::vector<double> us(n);
    for (int i = 0; i < n; ++i) us[i] = stream.next_uniform();

    std::vector<SampleBatch> out;
    out.reserve(designs.size());
    for (const auto* d : designs) {
        SampleBatch batch;
        batch.us = us;
        batch.xs.resize(n);
        for (int i = 0; i < n; ++i) batch.xs[i] = d->quantile(us[i]);
        batch.design_description = to_string(d->family());
        batch.seed = stream.seed();
        batch.stream_id = stream.stream_id();
        out.push_back(std::move(batch));
    }
    return out;
}

std::vector<double> simulate_responses(const std::vector<double>& xs, const MeanFunction& m,
                                       double sigma2, RngStream& stream) {
    if (sigma2 < 0.0) throw std::invalid_argument("simulate_responses: sigma2 must be >= 0");
    const double sd = std::sqrt(sigma2);
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = m(xs[i]) + sd * stream.next_normal();
    return ys;
}

}  // namespace mxd
