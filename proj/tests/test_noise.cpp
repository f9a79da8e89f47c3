#include "gridse/noise.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace gridse;
using Catch::Approx;

namespace {

NoiseModel single_channel(double p, double std = 0.02, double halfwidth = 0.1,
                          std::uint64_t seed = 11) {
    NoiseModel nm;
    nm.seed = seed;
    ChannelNoiseSpec c;
    c.gaussian_std = std;
    c.uniform_halfwidth = halfwidth;
    c.mix_p = p;
    nm.channels.push_back(c);
    return nm;
}

std::vector<double> draw_many(const NoiseModel& nm, int count) {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(count));
    for (int t = 0; t < count; ++t)
        out.push_back(sample_noise(nm, static_cast<std::uint64_t>(t))[0]);
    return out;
}

double sample_variance(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return var / static_cast<double>(xs.size() - 1);
}

// dense numerical convolution of the gaussian and uniform parts
double convolution_density(const ChannelNoiseSpec& c, double v) {
    const double s = c.mix_p * c.gaussian_std;
    const double w = (1.0 - c.mix_p) * c.uniform_halfwidth;
    const int n = 20001;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = -w + 2.0 * w * i / (n - 1);
        const double g = std::exp(-0.5 * (v - u) * (v - u) / (s * s)) /
                         (s * std::sqrt(2.0 * M_PI));
        const double trap = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        acc += trap * g;
    }
    return acc * (2.0 * w / (n - 1)) / (2.0 * w);
}

}  // namespace

TEST_CASE("sampling the mixture endpoints") {
    const int n = 100000;

    SECTION("p = 1 behaves like the pure gaussian") {
        const auto nm = single_channel(1.0);
        const auto xs = draw_many(nm, n);
        const double var = sample_variance(xs);
        const double se = 0.02 * 0.02 * std::sqrt(2.0 / (n - 1.0));
        CHECK(std::abs(var - 4e-4) < 3.0 * se);
    }
    SECTION("p = 0 stays inside the uniform support") {
        const auto nm = single_channel(0.0);
        for (double x : draw_many(nm, n)) REQUIRE(std::abs(x) <= 0.1);
    }
    SECTION("p = 0.5 variance matches the convex combination") {
        const auto nm = single_channel(0.5);
        const double expected = 0.25 * 4e-4 + 0.25 * 0.01 / 3.0;
        const auto xs = draw_many(nm, n);
        CHECK(sample_variance(xs) == Approx(expected).epsilon(0.05));
        CHECK(nm.channels[0].variance() == Approx(expected));
    }
    SECTION("fixed seed reproduces draws exactly") {
        const auto nm = single_channel(0.3);
        CHECK(sample_noise(nm, 5) == sample_noise(nm, 5));
        CHECK(sample_noise(nm, 5) != sample_noise(nm, 6));
    }
}

TEST_CASE("log density closed form") {
    SECTION("pure gaussian at the origin") {
        const auto nm = single_channel(1.0, 0.02);
        CHECK(noise_log_density(nm, 0, 0.0) ==
              Approx(std::log(1.0 / (0.02 * std::sqrt(2.0 * M_PI)))));
    }
    SECTION("pure uniform outside the support") {
        const auto nm = single_channel(0.0, 0.02, 0.1);
        CHECK(noise_log_density(nm, 0, 0.11) == kLogZero);
        CHECK(noise_log_density(nm, 0, 0.09) == Approx(std::log(1.0 / 0.2)));
    }
    SECTION("interior mix matches the numerical convolution") {
        const auto nm = single_channel(0.5, 0.02, 0.1);
        for (double v : {0.0, 0.01, 0.03, -0.05, 0.08}) {
            const double exact = std::log(convolution_density(nm.channels[0], v));
            CHECK(noise_log_density(nm, 0, v) == Approx(exact).margin(1e-8));
        }
    }
    SECTION("far tail stays finite and monotone for p > 0") {
        const auto nm = single_channel(0.5, 0.02, 0.1);
        double prev = noise_log_density(nm, 0, 0.2);
        for (double v : {0.4, 0.8, 1.6}) {
            const double ld = noise_log_density(nm, 0, v);
            CHECK(std::isfinite(ld));
            CHECK(ld < prev);
            prev = ld;
        }
    }
}

TEST_CASE("density integrates to one") {
    for (double p : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        const auto nm = single_channel(p, 0.02, 0.1);
        const auto& c = nm.channels[0];
        const double lo = -(1.0 - p) * 0.1 - 10.0 * p * 0.02 - 0.01;
        const double hi = -lo;
        const int n = 200001;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = lo + (hi - lo) * i / (n - 1);
            const double ld = channel_log_density(c, v);
            const double trap = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            acc += trap * (ld == kLogZero ? 0.0 : std::exp(ld));
        }
        acc *= (hi - lo) / (n - 1);
        CHECK(acc == Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("sampling agrees with the density (chi square)") {
    const auto nm = single_channel(0.5, 0.02, 0.1, 321);
    const auto& c = nm.channels[0];
    const int n = 100000;
    const auto xs = draw_many(nm, n);

    const double lo = -0.08, hi = 0.08;
    const int bins = 40;
    std::vector<double> observed(bins, 0.0);
    int inside = 0;
    for (double x : xs) {
        if (x < lo || x >= hi) continue;
        ++inside;
        ++observed[static_cast<size_t>((x - lo) / (hi - lo) * bins)];
    }
    double chi2 = 0.0;
    for (int b = 0; b < bins; ++b) {
        // expected mass by fine trapezoid over the bin
        const double a = lo + (hi - lo) * b / bins;
        const double z = lo + (hi - lo) * (b + 1) / bins;
        const int steps = 200;
        double mass = 0.0;
        for (int i = 0; i <= steps; ++i) {
            const double v = a + (z - a) * i / steps;
            const double trap = (i == 0 || i == steps) ? 0.5 : 1.0;
            mass += trap * std::exp(channel_log_density(c, v));
        }
        mass *= (z - a) / steps;
        const double expected = mass * n;
        chi2 += (observed[static_cast<size_t>(b)] - expected) *
                (observed[static_cast<size_t>(b)] - expected) / expected;
    }
    // dof ~ bins - 1 = 39; 1% critical value = 62.43
    CHECK(chi2 < 62.43);
    CHECK(inside > static_cast<int>(0.95 * n));
}

TEST_CASE("density converges pointwise to the gaussian as p -> 1") {
    const double sigma = 0.02;
    double prev_gap = std::numeric_limits<double>::infinity();
    for (double p : {0.9, 0.99, 0.999, 0.9999}) {
        const auto nm = single_channel(p, sigma, 0.1);
        double gap = 0.0;
        for (double v : {0.0, 0.005, 0.02, 0.05}) {
            const double lim = log_normal_pdf(v, 0.0, sigma * sigma);
            gap = std::max(gap, std::abs(noise_log_density(nm, 0, v) - lim));
        }
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 1e-2);
}
