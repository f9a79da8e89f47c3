#pragma once

#include "gridse/powerflow.hpp"

namespace gridse {

/// Two-parameter exponential smoothing constants plus the process/initial
/// covariance diagonals used when the smoother acts as the dynamic model.
struct HoltParams {
    double alpha = 0.81;
    double beta = 0.56;
    Vec process_noise_diag;  // Q diagonal
    Vec initial_cov_diag;    // P0 diagonal

    void check() const {
        if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0)
            throw std::invalid_argument("holt constants must lie in [0,1]");
        if ((process_noise_diag.array() < 0.0).any() ||
            (initial_cov_diag.array() < 0.0).any())
            throw std::invalid_argument("holt variances must be non-negative");
    }
};

inline HoltParams make_holt_params(Eigen::Index dim, double alpha = 0.81,
                                   double beta = 0.56, double q = 1e-6,
                                   double p0 = 1e-6) {
    HoltParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.process_noise_diag = Vec::Constant(dim, q);
    p.initial_cov_diag = Vec::Constant(dim, p0);
    p.check();
    return p;
}

/// Smoother state: level a_t, trend b_t, previous level a_{t-1}, and the
/// last absorbed estimate (needed to express the one-step map in affine
/// form for covariance and particle propagation).
struct HoltState {
    Vec level;
    Vec trend;
    Vec last_level;
    Vec last_filtered;

    bool initialized() const { return level.size() > 0; }
};

/// Seed the smoother from two known states; the trend starts at their
/// difference.
inline HoltState init_holt(const Vec& x1, const Vec& x2) {
    if (x1.size() != x2.size()) throw LengthMismatch("holt init states differ in size");
    HoltState hs;
    hs.level = x2;
    hs.trend = x2 - x1;
    hs.last_level = x1;
    hs.last_filtered = x2;
    return hs;
}

/// One-step-ahead prediction in affine form x- = gain * x_prev + offset.
struct HoltPrediction {
    Vec predicted;
    double gain = 1.0;  // F_t = alpha (1 + beta) I
    Vec offset;         // g_t
};

inline HoltPrediction holt_predict(const HoltState& hs, const HoltParams& p) {
    if (!hs.initialized()) throw UninitializedSmoother("holt_predict before init");
    p.check();
    HoltPrediction out;
    out.predicted = hs.level + hs.trend;
    out.gain = p.alpha * (1.0 + p.beta);
    out.offset = out.predicted - out.gain * hs.last_filtered;
    return out;
}

/// Fold a filtered estimate into the smoother:
///     a_t = alpha x_t + (1-alpha) x_t^-
///     b_t = beta (a_t - a_{t-1}) + (1-beta) b_{t-1}.
inline HoltState holt_absorb(const HoltState& hs, const Vec& filtered,
                             const HoltParams& p) {
    if (!hs.initialized()) throw UninitializedSmoother("holt_absorb before init");
    if (filtered.size() != hs.level.size())
        throw LengthMismatch("filtered state size mismatch");
    const Vec predicted = hs.level + hs.trend;
    HoltState out;
    out.level = p.alpha * filtered + (1.0 - p.alpha) * predicted;
    out.trend = p.beta * (out.level - hs.level) + (1.0 - p.beta) * hs.trend;
    out.last_level = hs.level;
    out.last_filtered = filtered;
    return out;
}

/// Covariance propagated through the affine prediction map.
inline Mat holt_predict_cov(const Mat& cov, const HoltParams& p) {
    const double f = p.alpha * (1.0 + p.beta);
    Mat out = f * f * cov;
    out.diagonal() += p.process_noise_diag;
    return out;
}

// ---------------------------------------------------------------------------
// Load scenarios driving the full-system simulation
// ---------------------------------------------------------------------------

/// Which loads move and how. Varied buses follow a linear ramp of
/// ramp_rate * nominal per step (sign drawn per bus), starting at
/// ramp_start, with a multiplicative Gaussian fluctuation on top.
struct LoadScenario {
    std::vector<int> varied_buses;  // bus ids; must be non-empty
    double ramp_rate = 0.10;        // fraction of nominal added per step
    double fluctuation = 0.03;      // fractional std of the multiplicative noise
    int horizon = 50;
    int ramp_start = 10;            // first time step (1-based) with ramp applied
    std::uint64_t seed = 0;

    void check() const {
        if (varied_buses.empty())
            throw std::invalid_argument("scenario needs a non-empty varied bus set");
        if (horizon < 2) throw std::invalid_argument("scenario horizon must be >= 2");
    }
};

/// Default varied subset: `count` seeded picks among PQ buses with positive
/// net demand.
inline std::vector<int> pick_varied_buses(const NetworkModel& model, int count,
                                          std::uint64_t seed) {
    std::vector<int> candidates;
    for (const auto& b : model.buses)
        if (b.kind == BusKind::pq && b.load_p > 0.0) candidates.push_back(b.id);
    if (candidates.empty())
        throw std::invalid_argument("no PQ buses with positive demand");
    Rng rng = make_rng(derive_seed(seed, 0x766172696564ull));
    for (size_t i = 0; i < candidates.size(); ++i) {
        std::uniform_int_distribution<size_t> pick(i, candidates.size() - 1);
        std::swap(candidates[i], candidates[pick(rng)]);
    }
    const int n = std::min<int>(count, static_cast<int>(candidates.size()));
    candidates.resize(static_cast<size_t>(n));
    std::sort(candidates.begin(), candidates.end());
    return candidates;
}

/// Per-step load tables for the scenario horizon (step t = 1..horizon).
/// Deterministic in (model, scenario): the ramp sign per bus and every
/// fluctuation draw come from the scenario seed.
inline std::vector<std::vector<BusLoad>> generate_load_trajectory(
    const NetworkModel& model, const LoadScenario& sc) {
    sc.check();
    const auto nominal = loads_from_model(model);
    std::map<int, double> ramp_sign;
    {
        Rng rng = make_rng(derive_seed(sc.seed, 0x7369676eull));
        std::uniform_int_distribution<int> coin(0, 1);
        for (int id : sc.varied_buses) {
            model.index_of(id);  // validates the id
            ramp_sign[id] = coin(rng) == 0 ? 1.0 : -1.0;
        }
    }
    std::vector<std::vector<BusLoad>> out;
    out.reserve(static_cast<size_t>(sc.horizon));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int t = 1; t <= sc.horizon; ++t) {
        std::vector<BusLoad> step = nominal;
        for (int id : sc.varied_buses) {
            const int idx = model.index_of(id);
            const int ramp_steps = std::max(0, t - sc.ramp_start + 1);
            double factor = 1.0 + ramp_sign[id] * sc.ramp_rate * ramp_steps;
            if (sc.fluctuation > 0.0) {
                Rng rng = make_rng(derive_seed(sc.seed, static_cast<std::uint64_t>(id),
                                               static_cast<std::uint64_t>(t)));
                factor *= 1.0 + sc.fluctuation * gauss(rng);
            }
            step[static_cast<size_t>(idx)].p = nominal[static_cast<size_t>(idx)].p * factor;
            step[static_cast<size_t>(idx)].q = nominal[static_cast<size_t>(idx)].q * factor;
        }
        out.push_back(std::move(step));
    }
    return out;
}

/// Solve one power flow per load table; each step warm-starts from the
/// previous solution. Throws NonConvergence carrying the failing step.
inline std::vector<StateVector> ground_truth_states(
    const NetworkModel& model, const std::vector<std::vector<BusLoad>>& trajectory) {
    std::vector<StateVector> out;
    out.reserve(trajectory.size());
    for (size_t t = 0; t < trajectory.size(); ++t) {
        PowerFlowOptions opts;
        if (!out.empty()) opts.initial = &out.back();
        try {
            out.push_back(solve_power_flow(model, trajectory[t], opts));
        } catch (const NonConvergence& e) {
            throw NonConvergence("step " + std::to_string(t + 1) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace gridse
