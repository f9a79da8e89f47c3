#pragma once

#include "gridse/dynamics.hpp"
#include "gridse/noise.hpp"
#include "gridse/quadrature.hpp"

#include <functional>
#include <memory>
#include <numeric>
#include <optional>

namespace gridse {

// ---------------------------------------------------------------------------
// Observation context
// ---------------------------------------------------------------------------

/// Everything the update step needs: the observation map h, the observed
/// vector y, and the per-channel noise description. h acts on the flat
/// state so the same filters serve the grid problem and scalar test models.
struct LikelihoodContext {
    std::function<Vec(const Vec&)> h;
    Vec y;
    NoiseModel noise;

    int channel_count() const { return static_cast<int>(y.size()); }

    /// Gaussian-equivalent variance per channel (the true mixture variance).
    Vec equivalent_variance() const {
        Vec r(noise.size());
        for (int k = 0; k < noise.size(); ++k)
            r[k] = noise.channels[static_cast<size_t>(k)].variance();
        return r;
    }
};

inline LikelihoodContext make_grid_context(const NetworkModel& model,
                                           const MeasurementPlan& plan, const Vec& y,
                                           const NoiseModel& nm) {
    check_plan(model, plan);
    if (y.size() != plan.size() || nm.size() != plan.size())
        throw LengthMismatch("context pieces disagree in length");
    LikelihoodContext ctx;
    ctx.h = [&model, plan](const Vec& x) {
        return evaluate_measurements(model, StateVector::from_flat(x), plan);
    };
    ctx.y = y;
    ctx.noise = nm;
    return ctx;
}

/// Scalar/vector test model with one noise spec shared by all channels.
inline LikelihoodContext make_context(std::function<Vec(const Vec&)> h, const Vec& y,
                                      const ChannelNoiseSpec& spec) {
    LikelihoodContext ctx;
    ctx.h = std::move(h);
    ctx.y = y;
    ctx.noise.channels.assign(static_cast<size_t>(y.size()), spec);
    return ctx;
}

/// Sum of per-channel noise log-densities of the residual y - h(x).
inline double log_likelihood(const LikelihoodContext& ctx, const Vec& x) {
    const Vec hx = ctx.h(x);
    if (hx.size() != ctx.y.size()) throw LengthMismatch("h(x) size != y size");
    double total = 0.0;
    for (int k = 0; k < ctx.channel_count(); ++k) {
        const double ld = channel_log_density(ctx.noise.channels[static_cast<size_t>(k)],
                                              ctx.y[k] - hx[k]);
        if (ld == kLogZero) return kLogZero;
        total += ld;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Beliefs and summaries
// ---------------------------------------------------------------------------

struct PredictedBelief {
    Vec mean;
    Mat cov;
};

struct PosteriorSummary {
    Vec point_estimate;
    Mat covariance;
    int iterations = 0;
    double effective_sample_size = -1.0;
    std::vector<double> kl_proxy_trace;
    bool converged = true;
    bool degenerate = false;
};

// ---------------------------------------------------------------------------
// Weighted least squares (Gauss-Newton)
// ---------------------------------------------------------------------------

/// Pure measurement fit: Gauss-Newton with step halving on the weighted
/// residual objective |W^(1/2)(y - h(x))|^2. No prior term. Stops when an
/// accepted step is shorter than tol; if iterations run out the last
/// iterate is returned with converged = false.
inline PosteriorSummary lsq_estimate(const LikelihoodContext& ctx, const Vec& x0,
                                     const Vec& weights, double tol = 1e-8,
                                     int max_iter = 25, double fd_step = 1e-6) {
    if (max_iter < 1) throw std::invalid_argument("lsq_estimate: max_iter must be >= 1");
    if (weights.size() != ctx.y.size()) throw LengthMismatch("weights length != y length");

    auto objective = [&](const Vec& x) {
        const Vec r = ctx.y - ctx.h(x);
        return (weights.array() * r.array().square()).sum();
    };

    Vec x = x0;
    double obj = objective(x);
    PosteriorSummary out;
    out.converged = false;
    Mat normal;
    for (int iter = 0; iter < max_iter; ++iter) {
        const Mat jac = fd_jacobian(ctx.h, x, fd_step);
        const Vec r = ctx.y - ctx.h(x);
        const Mat jw = jac.transpose() * weights.asDiagonal();
        normal = jw * jac;
        Eigen::FullPivLU<Mat> lu(normal);
        if (!lu.isInvertible())
            throw SingularNormalEquations("rank-deficient normal equations");
        Vec step = lu.solve(jw * r);

        double scale = 1.0;
        double trial_obj = objective(x + step);
        int halvings = 0;
        while (trial_obj > obj && halvings < 30) {
            scale *= 0.5;
            trial_obj = objective(x + scale * step);
            ++halvings;
        }
        out.iterations = iter + 1;
        if (trial_obj > obj) break;  // no descent direction left
        x += scale * step;
        obj = trial_obj;
        if ((scale * step).norm() < tol) {
            out.converged = true;
            break;
        }
    }
    out.point_estimate = x;
    Eigen::FullPivLU<Mat> lu(normal);
    out.covariance = lu.isInvertible() ? Mat(lu.inverse())
                                       : Mat::Constant(x.size(), x.size(),
                                                       std::numeric_limits<double>::quiet_NaN());
    return out;
}

// ---------------------------------------------------------------------------
// Kalman-type updates
// ---------------------------------------------------------------------------

struct UnscentedOptions {
    double alpha = 1.0;
    double beta = 2.0;
    // kappa defaults to 3 - d when left unset
    std::optional<double> kappa;
};

/// Scaled unscented update with the mixture noise replaced by its
/// Gaussian-equivalent covariance.
inline PosteriorSummary ukf_update(const PredictedBelief& belief,
                                   const LikelihoodContext& ctx,
                                   const UnscentedOptions& opts = {}) {
    const Eigen::Index d = belief.mean.size();
    const double kappa = opts.kappa.value_or(3.0 - static_cast<double>(d));
    const double lambda =
        opts.alpha * opts.alpha * (static_cast<double>(d) + kappa) - static_cast<double>(d);
    const double spread = static_cast<double>(d) + lambda;
    if (spread <= 0.0) throw std::invalid_argument("ukf: d + lambda must be positive");

    Eigen::LLT<Mat> llt(belief.cov);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("ukf: predicted covariance");
    const Mat L = llt.matrixL();

    const int ns = static_cast<int>(2 * d + 1);
    std::vector<Vec> sigma(static_cast<size_t>(ns));
    sigma[0] = belief.mean;
    const double scale = std::sqrt(spread);
    for (Eigen::Index k = 0; k < d; ++k) {
        sigma[static_cast<size_t>(1 + k)] = belief.mean + scale * L.col(k);
        sigma[static_cast<size_t>(1 + d + k)] = belief.mean - scale * L.col(k);
    }
    std::vector<double> wm(static_cast<size_t>(ns), 1.0 / (2.0 * spread));
    std::vector<double> wc = wm;
    wm[0] = lambda / spread;
    wc[0] = wm[0] + (1.0 - opts.alpha * opts.alpha + opts.beta);

    std::vector<Vec> z(sigma.size());
    for (size_t i = 0; i < sigma.size(); ++i) z[i] = ctx.h(sigma[i]);

    Vec z_mean = Vec::Zero(ctx.y.size());
    for (size_t i = 0; i < z.size(); ++i) z_mean += wm[i] * z[i];

    Mat s = Mat::Zero(ctx.y.size(), ctx.y.size());
    Mat cross = Mat::Zero(d, ctx.y.size());
    for (size_t i = 0; i < z.size(); ++i) {
        const Vec dz = z[i] - z_mean;
        const Vec dx = sigma[i] - belief.mean;
        s += wc[i] * dz * dz.transpose();
        cross += wc[i] * dx * dz.transpose();
    }
    s.diagonal() += ctx.equivalent_variance();

    Eigen::LDLT<Mat> s_fact(s);
    if (s_fact.info() != Eigen::Success || !s_fact.isPositive())
        throw NotPositiveDefinite("ukf: innovation covariance");
    const Mat gain = s_fact.solve(cross.transpose()).transpose();

    PosteriorSummary out;
    out.point_estimate = belief.mean + gain * (ctx.y - z_mean);
    out.covariance = make_psd(belief.cov - gain * s * gain.transpose());
    out.iterations = 1;
    return out;
}

/// First-order Kalman update: linearize h at the prior mean with central
/// differences, Joseph-form covariance.
inline PosteriorSummary ekf_update(const PredictedBelief& belief,
                                   const LikelihoodContext& ctx, double fd_step = 1e-6) {
    Eigen::LLT<Mat> llt(belief.cov);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("ekf: predicted covariance");
    const Mat h_jac = fd_jacobian(ctx.h, belief.mean, fd_step);
    const Vec r_diag = ctx.equivalent_variance();
    Mat s = h_jac * belief.cov * h_jac.transpose();
    s.diagonal() += r_diag;
    Eigen::LDLT<Mat> s_fact(s);
    if (s_fact.info() != Eigen::Success)
        throw NotPositiveDefinite("ekf: innovation covariance");
    const Mat gain = s_fact.solve(h_jac * belief.cov).transpose();

    PosteriorSummary out;
    out.point_estimate = belief.mean + gain * (ctx.y - ctx.h(belief.mean));
    const Mat ikh = Mat::Identity(belief.mean.size(), belief.mean.size()) - gain * h_jac;
    out.covariance =
        make_psd(ikh * belief.cov * ikh.transpose() + gain * r_diag.asDiagonal() * gain.transpose());
    out.iterations = 1;
    return out;
}

// ---------------------------------------------------------------------------
// Gaussian-mixture condensation
// ---------------------------------------------------------------------------

struct GaussianMixture {
    std::vector<double> weights;
    std::vector<Vec> means;
    std::vector<Mat> covariances;

    int count() const { return static_cast<int>(weights.size()); }
    Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }

    void check() const {
        if (weights.empty() || weights.size() != means.size() ||
            weights.size() != covariances.size())
            throw LengthMismatch("mixture pieces disagree in length");
        double sum = 0.0;
        for (double w : weights) {
            if (w <= 0.0) throw std::invalid_argument("mixture weights must be positive");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("mixture weights must sum to one");
    }

    Vec mean() const {
        Vec m = Vec::Zero(dim());
        for (int i = 0; i < count(); ++i) m += weights[static_cast<size_t>(i)] * means[static_cast<size_t>(i)];
        return m;
    }

    /// Law-of-total-covariance second moment around the mixture mean.
    Mat covariance() const {
        const Vec m = mean();
        Mat c = Mat::Zero(dim(), dim());
        for (int i = 0; i < count(); ++i) {
            const Vec d = means[static_cast<size_t>(i)] - m;
            c += weights[static_cast<size_t>(i)] * (covariances[static_cast<size_t>(i)] + d * d.transpose());
        }
        return c;
    }
};

namespace detail {

struct MixtureEval {
    std::vector<Eigen::LLT<Mat>> chols;
    std::vector<double> log_dets;
    const GaussianMixture* gm = nullptr;

    explicit MixtureEval(const GaussianMixture& mixture) : gm(&mixture) {
        chols.reserve(mixture.covariances.size());
        log_dets.reserve(mixture.covariances.size());
        for (const auto& cov : mixture.covariances) {
            Eigen::LLT<Mat> llt(cov);
            if (llt.info() != Eigen::Success) {
                llt.compute(make_psd(cov));
                if (llt.info() != Eigen::Success)
                    throw NotPositiveDefinite("mixture component covariance");
            }
            double ld = 0.0;
            const Mat l = llt.matrixL();
            for (Eigen::Index i = 0; i < l.rows(); ++i) ld += 2.0 * std::log(l(i, i));
            chols.push_back(std::move(llt));
            log_dets.push_back(ld);
        }
    }

    double log_pdf(const Vec& x) const {
        std::vector<double> terms(static_cast<size_t>(gm->count()));
        for (int i = 0; i < gm->count(); ++i) {
            const size_t si = static_cast<size_t>(i);
            terms[si] = std::log(gm->weights[si]) +
                        log_mvn_pdf(x, gm->means[si], chols[si], log_dets[si]);
        }
        return log_sum_exp(terms);
    }
};

}  // namespace detail

inline double mixture_log_pdf(const GaussianMixture& gm, const Vec& x) {
    return detail::MixtureEval(gm).log_pdf(x);
}

/// Starting mixture for the condensation recursions: equal weights, means
/// sampled from the predicted belief, covariances shrunk by m^(-2/d).
/// A single component reproduces the belief exactly.
inline GaussianMixture bcf_initialize(const PredictedBelief& belief, int m,
                                      std::uint64_t seed = 0) {
    if (m < 1) throw std::invalid_argument("bcf_initialize: m must be >= 1");
    GaussianMixture gm;
    const Eigen::Index d = belief.mean.size();
    if (m == 1) {
        gm.weights = {1.0};
        gm.means = {belief.mean};
        gm.covariances = {belief.cov};
        return gm;
    }
    const double shrink =
        std::pow(static_cast<double>(m), -2.0 / static_cast<double>(d));
    const Mat l = robust_cholesky(belief.cov);
    Rng rng = make_rng(derive_seed(seed, 0x626366696e6974ull));
    for (int i = 0; i < m; ++i) {
        gm.weights.push_back(1.0 / m);
        gm.means.push_back(belief.mean + l * gaussian_vector(rng, d));
        gm.covariances.push_back(shrink * belief.cov);
    }
    return gm;
}

struct BcfOptions {
    double weight_floor = 1e-12;
    bool diagonal_covariance = false;
};

struct BcfIterationInfo {
    int degenerate_components = 0;
    double log_mass_proxy = 0.0;  // log of the mixture-averaged target/proposal ratio
};

/// One full condensation recursion toward an arbitrary unnormalized
/// log-target. All components are refreshed simultaneously from the current
/// mixture: per component the weight picks up E[f/g], and the mean and
/// covariance are the ratio-weighted first and second moments. Expectations
/// run over the supplied quadrature rule; ratios are evaluated in log space
/// with a per-component max subtraction.
inline GaussianMixture bcf_refine(const GaussianMixture& gm,
                                  const std::function<double(const Vec&)>& log_target,
                                  const QuadratureRule& rule, const BcfOptions& opts = {},
                                  BcfIterationInfo* info = nullptr) {
    gm.check();
    if (rule.dim() != gm.dim()) throw LengthMismatch("rule dimension != mixture dimension");
    const detail::MixtureEval eval(gm);
    const int m = gm.count();
    const Eigen::Index d = gm.dim();

    GaussianMixture next = gm;
    std::vector<double> log_alpha(static_cast<size_t>(m), kLogZero);
    int degenerate = 0;

    for (int i = 0; i < m; ++i) {
        const size_t si = static_cast<size_t>(i);
        const auto nodes = transformed_nodes(rule, gm.means[si], gm.covariances[si]);
        std::vector<double> log_ratio(nodes.size(), kLogZero);
        double peak = kLogZero;
        for (size_t k = 0; k < nodes.size(); ++k) {
            const double lt = log_target(nodes[k]);
            if (lt == kLogZero) continue;
            log_ratio[k] = lt - eval.log_pdf(nodes[k]);
            peak = std::max(peak, log_ratio[k]);
        }
        if (!std::isfinite(peak)) {
            // every node fell outside the target support; keep the component
            ++degenerate;
            continue;
        }
        double s0 = 0.0;
        Vec s1 = Vec::Zero(d);
        Mat s2 = Mat::Zero(d, d);
        for (size_t k = 0; k < nodes.size(); ++k) {
            if (log_ratio[k] == kLogZero) continue;
            const double r = rule.weights[k] * std::exp(log_ratio[k] - peak);
            s0 += r;
            s1 += r * nodes[k];
            s2 += r * nodes[k] * nodes[k].transpose();
        }
        log_alpha[si] = std::log(gm.weights[si]) + peak + std::log(s0);
        const Vec mu = s1 / s0;
        Mat cov = s2 / s0 - mu * mu.transpose();
        if (opts.diagonal_covariance) cov = cov.diagonal().asDiagonal();
        next.means[si] = mu;
        next.covariances[si] = make_psd(cov);
    }

    // normalize weights in log space, then apply the floor
    const double total = log_sum_exp(log_alpha);
    if (!std::isfinite(total)) {
        if (info) {
            info->degenerate_components = degenerate;
            info->log_mass_proxy = kLogZero;
        }
        return gm;  // fully degenerate update: fall back to the prior mixture
    }
    double floor_sum = 0.0;
    for (int i = 0; i < m; ++i) {
        const size_t si = static_cast<size_t>(i);
        double w = std::isfinite(log_alpha[si]) ? std::exp(log_alpha[si] - total) : 0.0;
        next.weights[si] = std::max(w, opts.weight_floor);
        floor_sum += next.weights[si];
    }
    for (double& w : next.weights) w /= floor_sum;
    if (info) {
        info->degenerate_components = degenerate;
        info->log_mass_proxy = total;
    }
    return next;
}

/// Unnormalized log-posterior density: likelihood times predicted belief.
inline std::function<double(const Vec&)> posterior_log_target(
    const PredictedBelief& belief, const LikelihoodContext& ctx) {
    auto chol = std::make_shared<Eigen::LLT<Mat>>(belief.cov);
    if (chol->info() != Eigen::Success)
        throw NotPositiveDefinite("posterior_log_target: belief covariance");
    double log_det = 0.0;
    const Mat l = chol->matrixL();
    for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
    const Vec mean = belief.mean;
    return [&ctx, chol, log_det, mean](const Vec& x) {
        const double ll = log_likelihood(ctx, x);
        if (ll == kLogZero) return kLogZero;
        return ll + log_mvn_pdf(x, mean, *chol, log_det);
    };
}

inline GaussianMixture bcf_iterate(const GaussianMixture& gm, const PredictedBelief& belief,
                                   const LikelihoodContext& ctx, const QuadratureRule& rule,
                                   const BcfOptions& opts = {},
                                   BcfIterationInfo* info = nullptr) {
    return bcf_refine(gm, posterior_log_target(belief, ctx), rule, opts, info);
}

/// Initialize and run l_max condensation recursions; the point estimate is
/// the mixture mean.
inline std::pair<GaussianMixture, PosteriorSummary> bcf_condense(
    const PredictedBelief& belief, const LikelihoodContext& ctx, int m, int l_max,
    const QuadratureRule& rule, std::uint64_t seed = 0, const BcfOptions& opts = {}) {
    if (l_max < 1) throw std::invalid_argument("bcf_condense: l_max must be >= 1");
    GaussianMixture gm = bcf_initialize(belief, m, seed);
    PosteriorSummary summary;
    const auto target = posterior_log_target(belief, ctx);
    for (int l = 0; l < l_max; ++l) {
        BcfIterationInfo info;
        gm = bcf_refine(gm, target, rule, opts, &info);
        summary.kl_proxy_trace.push_back(info.log_mass_proxy);
        summary.degenerate |= info.degenerate_components == m;
        ++summary.iterations;
    }
    summary.point_estimate = gm.mean();
    summary.covariance = gm.covariance();
    return {gm, summary};
}

// ---------------------------------------------------------------------------
// Particle filter
// ---------------------------------------------------------------------------

struct ParticleEnsemble {
    std::vector<Vec> particles;
    Vec weights;

    int count() const { return static_cast<int>(particles.size()); }

    void check() const {
        if (particles.empty() || weights.size() != count())
            throw LengthMismatch("ensemble pieces disagree in length");
        if ((weights.array() < 0.0).any())
            throw std::invalid_argument("particle weights must be non-negative");
        if (std::abs(weights.sum() - 1.0) > 1e-12)
            throw std::invalid_argument("particle weights must sum to one");
    }

    double ess() const { return 1.0 / weights.squaredNorm(); }
};

inline ParticleEnsemble make_ensemble(const PredictedBelief& belief, int n,
                                      std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("ensemble size must be >= 1");
    ParticleEnsemble ens;
    const Mat l = robust_cholesky(belief.cov);
    Rng rng = make_rng(derive_seed(seed, 0x7061727469636cull));
    ens.particles.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        ens.particles.push_back(belief.mean + l * gaussian_vector(rng, belief.mean.size()));
    ens.weights = Vec::Constant(n, 1.0 / n);
    return ens;
}

/// Likelihood reweighting in log space with max subtraction.
inline ParticleEnsemble pf_update(const ParticleEnsemble& ens, const LikelihoodContext& ctx) {
    ens.check();
    ParticleEnsemble out = ens;
    std::vector<double> logw(static_cast<size_t>(ens.count()), kLogZero);
    double peak = kLogZero;
    for (int i = 0; i < ens.count(); ++i) {
        const size_t si = static_cast<size_t>(i);
        if (ens.weights[i] <= 0.0) continue;
        const double ll = log_likelihood(ctx, ens.particles[si]);
        if (ll == kLogZero) continue;
        logw[si] = std::log(ens.weights[i]) + ll;
        peak = std::max(peak, logw[si]);
    }
    if (!std::isfinite(peak))
        throw AllWeightsZero("every particle has zero likelihood");
    double sum = 0.0;
    for (int i = 0; i < ens.count(); ++i) {
        const size_t si = static_cast<size_t>(i);
        out.weights[i] = std::isfinite(logw[si]) ? std::exp(logw[si] - peak) : 0.0;
        sum += out.weights[i];
    }
    out.weights /= sum;
    return out;
}

/// Bootstrap proposal: push every particle through the affine dynamic map
/// and add Gaussian process noise. Weights are untouched.
inline ParticleEnsemble pf_propagate(const ParticleEnsemble& ens, const HoltPrediction& pred,
                                     const Vec& process_noise_diag, std::uint64_t seed) {
    ens.check();
    if (process_noise_diag.size() != ens.particles.front().size())
        throw LengthMismatch("process noise diagonal size mismatch");
    ParticleEnsemble out = ens;
    const Vec noise_std = process_noise_diag.cwiseSqrt();
    Rng rng = make_rng(derive_seed(seed, 0x70726f70ull));
    for (auto& p : out.particles) {
        p = pred.gain * p + pred.offset;
        if ((noise_std.array() > 0.0).any())
            p += noise_std.cwiseProduct(gaussian_vector(rng, p.size()));
    }
    return out;
}

/// Systematic resampling, triggered only when the effective sample size
/// drops below threshold_fraction * n. Post-state has uniform weights.
inline ParticleEnsemble pf_resample(const ParticleEnsemble& ens, double threshold_fraction,
                                    std::uint64_t seed) {
    if (threshold_fraction <= 0.0 || threshold_fraction > 1.0)
        throw std::invalid_argument("threshold_fraction must lie in (0, 1]");
    ens.check();
    const int n = ens.count();
    if (ens.ess() >= threshold_fraction * n) return ens;

    Rng rng = make_rng(derive_seed(seed, 0x726573616d70ull));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u0 = unif(rng);
    ParticleEnsemble out;
    out.particles.reserve(static_cast<size_t>(n));
    double cum = ens.weights[0];
    int j = 0;
    for (int i = 0; i < n; ++i) {
        const double pos = (u0 + i) / n;
        while (pos > cum && j + 1 < n) cum += ens.weights[++j];
        out.particles.push_back(ens.particles[static_cast<size_t>(j)]);
    }
    out.weights = Vec::Constant(n, 1.0 / n);
    return out;
}

inline Vec pf_mmse(const ParticleEnsemble& ens) {
    ens.check();
    Vec m = Vec::Zero(ens.particles.front().size());
    for (int i = 0; i < ens.count(); ++i)
        m += ens.weights[i] * ens.particles[static_cast<size_t>(i)];
    return m;
}

/// Highest-weight particle; ties resolve to the lowest index.
inline Vec pf_map(const ParticleEnsemble& ens) {
    ens.check();
    int best = 0;
    for (int i = 1; i < ens.count(); ++i)
        if (ens.weights[i] > ens.weights[best]) best = i;
    return ens.particles[static_cast<size_t>(best)];
}

inline PosteriorSummary pf_summary(const ParticleEnsemble& ens) {
    PosteriorSummary out;
    out.point_estimate = pf_mmse(ens);
    Mat cov = Mat::Zero(out.point_estimate.size(), out.point_estimate.size());
    for (int i = 0; i < ens.count(); ++i) {
        const Vec d = ens.particles[static_cast<size_t>(i)] - out.point_estimate;
        cov += ens.weights[i] * d * d.transpose();
    }
    out.covariance = cov;
    out.effective_sample_size = ens.ess();
    return out;
}

}  // namespace gridse
