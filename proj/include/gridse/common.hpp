#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Error types. Parsing and numerical routines throw; diagnostics-style
// checks return value lists instead (see netmodel::validate_network).
// ---------------------------------------------------------------------------

#define GRIDSE_DEFINE_ERROR(name)                                  \
    struct name : std::runtime_error {                             \
        explicit name(const std::string& what_arg)                 \
            : std::runtime_error(#name ": " + what_arg) {}         \
    }

GRIDSE_DEFINE_ERROR(MalformedCase);
GRIDSE_DEFINE_ERROR(InconsistentTopology);
GRIDSE_DEFINE_ERROR(NoSlackBus);
GRIDSE_DEFINE_ERROR(DuplicateBusId);
GRIDSE_DEFINE_ERROR(ZeroImpedance);
GRIDSE_DEFINE_ERROR(UnknownBus);
GRIDSE_DEFINE_ERROR(UnknownBranch);
GRIDSE_DEFINE_ERROR(NonConvergence);
GRIDSE_DEFINE_ERROR(SingularJacobian);
GRIDSE_DEFINE_ERROR(UnsupportedOrder);
GRIDSE_DEFINE_ERROR(RuleTooLarge);
GRIDSE_DEFINE_ERROR(NotPositiveDefinite);
GRIDSE_DEFINE_ERROR(SingularNormalEquations);
GRIDSE_DEFINE_ERROR(AllWeightsZero);
GRIDSE_DEFINE_ERROR(UninitializedSmoother);
GRIDSE_DEFINE_ERROR(LengthMismatch);
GRIDSE_DEFINE_ERROR(TargetUnreachable);
GRIDSE_DEFINE_ERROR(IoFailure);

#undef GRIDSE_DEFINE_ERROR

// Sentinel used where a log-density is exactly zero mass.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Seeding. All randomness flows through explicit 64-bit seeds; independent
// streams are derived by mixing the parent seed with stream tags so that
// adding a consumer never perturbs existing streams.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64(seed ^ splitmix64(tag + 0x51ed2701a9b4c36bull));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(seed, a), b);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                 std::uint64_t c) {
    return derive_seed(derive_seed(seed, a, b), c);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline Vec gaussian_vector(Rng& rng, Eigen::Index n) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

// ---------------------------------------------------------------------------
// Small numeric helpers shared by the filters.
// ---------------------------------------------------------------------------

inline double log_sum_exp(const std::vector<double>& xs) {
    double m = kLogZero;
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

inline double log_normal_pdf(double x, double mean, double variance) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * M_PI * variance) + d * d / variance);
}

/// Log-density of N(mean, cov) evaluated via a precomputed Cholesky factor.
inline double log_mvn_pdf(const Vec& x, const Vec& mean, const Eigen::LLT<Mat>& chol,
                          double log_det) {
    const Vec z = chol.matrixL().solve(x - mean);
    return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * M_PI) + log_det +
                   z.squaredNorm());
}

/// Lower-triangular factor of a symmetric matrix, with a trace-scaled jitter
/// retry ladder for factors that fail strict positive definiteness.
inline Mat robust_cholesky(const Mat& cov, double base_jitter = 1e-12) {
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    const double scale =
        std::max(cov.trace() / static_cast<double>(cov.rows()), 1.0) * base_jitter;
    Mat bumped = cov;
    double jitter = scale;
    for (int attempt = 0; attempt < 12; ++attempt) {
        bumped.diagonal().array() += jitter;
        llt.compute(bumped);
        if (llt.info() == Eigen::Success) return llt.matrixL();
        jitter *= 10.0;
    }
    throw NotPositiveDefinite("matrix not factorizable even with jitter");
}

/// Force symmetry, then clamp eigenvalues to a small positive floor.
inline Mat make_psd(const Mat& m, double floor_scale = 1e-12) {
    Mat sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    const double floor =
        std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300) * floor_scale;
    Vec vals = es.eigenvalues().cwiseMax(floor);
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace gridse
