#pragma once

#include "gridse/common.hpp"
#include "gridse/powerflow.hpp"

namespace gridse {

/// Noise description for one measurement channel. The observed error is the
/// convex combination  n = p * g + (1-p) * u  of independent draws
/// g ~ N(0, gaussian_std^2) and u ~ U(-halfwidth, halfwidth).
struct ChannelNoiseSpec {
    double gaussian_std = 0.02;
    double uniform_halfwidth = 0.1;
    double mix_p = 1.0;

    void check() const {
        if (gaussian_std <= 0.0) throw std::invalid_argument("gaussian_std must be > 0");
        if (uniform_halfwidth <= 0.0)
            throw std::invalid_argument("uniform_halfwidth must be > 0");
        if (mix_p < 0.0 || mix_p > 1.0) throw std::invalid_argument("mix_p outside [0,1]");
    }

    /// Variance of the combined variable: p^2 s^2 + (1-p)^2 w^2 / 3.
    double variance() const {
        const double s = mix_p * gaussian_std;
        const double w = (1.0 - mix_p) * uniform_halfwidth;
        return s * s + w * w / 3.0;
    }
};

struct NoiseModel {
    std::vector<ChannelNoiseSpec> channels;
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(channels.size()); }
};

/// Channel specs aligned with a plan: 2% std on power channels, 0.1% on
/// voltage channels, halfwidth a configurable multiple of the std.
inline NoiseModel make_noise_model(const MeasurementPlan& plan, double mix_p,
                                   std::uint64_t seed, double power_std = 0.02,
                                   double voltage_std = 0.001,
                                   double halfwidth_over_std = 5.0) {
    NoiseModel nm;
    nm.seed = seed;
    nm.channels.reserve(plan.entries.size());
    for (const auto& e : plan.entries) {
        ChannelNoiseSpec spec;
        spec.gaussian_std =
            e.kind == MeasurementKind::voltage_magnitude ? voltage_std : power_std;
        spec.uniform_halfwidth = halfwidth_over_std * spec.gaussian_std;
        spec.mix_p = mix_p;
        spec.check();
        nm.channels.push_back(spec);
    }
    return nm;
}

/// Underlying standard draws for one time step; the mixture for any p is a
/// deterministic function of these, so sweeps over p can reuse them.
struct NoiseDraws {
    Vec gaussian;  // N(0,1) per channel
    Vec uniform;   // U(-1,1) per channel
};

inline NoiseDraws sample_noise_draws(const NoiseModel& nm, std::uint64_t t) {
    Rng rng = make_rng(derive_seed(nm.seed, 0x6e6f697365ull, t));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    NoiseDraws d;
    d.gaussian.resize(nm.size());
    d.uniform.resize(nm.size());
    for (int k = 0; k < nm.size(); ++k) {
        d.gaussian[k] = gauss(rng);
        d.uniform[k] = unif(rng);
    }
    return d;
}

inline Vec combine_noise(const NoiseModel& nm, const NoiseDraws& draws) {
    Vec out(nm.size());
    for (int k = 0; k < nm.size(); ++k) {
        const auto& c = nm.channels[static_cast<size_t>(k)];
        out[k] = c.mix_p * c.gaussian_std * draws.gaussian[k] +
                 (1.0 - c.mix_p) * c.uniform_halfwidth * draws.uniform[k];
    }
    return out;
}

/// One noise vector for time step t; deterministic in (seed, t).
inline Vec sample_noise(const NoiseModel& nm, std::uint64_t t) {
    return combine_noise(nm, sample_noise_draws(nm, t));
}

namespace detail {

// log(Phi(b) - Phi(a)) for a < b, stable into the far tails.
inline double log_normal_cdf_diff(double a, double b) {
    const double inv_sqrt2 = 0.7071067811865475244;
    // reflect so the interval sits on the positive side
    if (a + b < 0.0) {
        const double tmp = -a;
        a = -b;
        b = tmp;
    }
    const double ea = std::erfc(a * inv_sqrt2);
    const double eb = std::erfc(b * inv_sqrt2);
    const double diff = 0.5 * (ea - eb);
    if (diff > 0.0) return std::log(diff);
    // both erfc values underflow: asymptotic Phi(b)-Phi(a) ~ phi(a)/a
    if (a <= 0.0) return kLogZero;
    return -0.5 * a * a - 0.5 * std::log(2.0 * M_PI) - std::log(a);
}

}  // namespace detail

/// Exact log-density of the channel noise at value v. The combined variable
/// is the convolution of N(0, (p s)^2) with U(-(1-p) w, (1-p) w), i.e. a
/// difference of Gaussian CDFs scaled by the uniform width; the endpoints
/// p = 0 and p = 1 degenerate to the pure uniform and pure Gaussian cases.
inline double channel_log_density(const ChannelNoiseSpec& c, double v) {
    const double s = c.mix_p * c.gaussian_std;
    const double w = (1.0 - c.mix_p) * c.uniform_halfwidth;
    if (w <= 0.0) return log_normal_pdf(v, 0.0, s * s);
    if (s <= 0.0) return std::abs(v) <= w ? -std::log(2.0 * w) : kLogZero;
    return detail::log_normal_cdf_diff((v - w) / s, (v + w) / s) - std::log(2.0 * w);
}

inline double noise_log_density(const NoiseModel& nm, int channel, double v) {
    if (channel < 0 || channel >= nm.size())
        throw LengthMismatch("noise channel out of range");
    return channel_log_density(nm.channels[static_cast<size_t>(channel)], v);
}

}  // namespace gridse
