#pragma once

#include "gridse/netmodel.hpp"

#include <complex>
#include <functional>
#include <utility>

namespace gridse {

/// Voltage magnitudes and angles for every non-slack bus, ordered as the
/// non-slack buses appear in the model. The slack phasor is pinned to the
/// model's slack record and is not part of the estimation state.
struct StateVector {
    Vec vm;
    Vec va;

    Eigen::Index dim() const { return vm.size() + va.size(); }

    Vec flat() const {
        Vec out(dim());
        out << vm, va;
        return out;
    }

    static StateVector from_flat(const Vec& x) {
        const Eigen::Index half = x.size() / 2;
        StateVector s;
        s.vm = x.head(half);
        s.va = x.tail(half);
        return s;
    }
};

/// Full per-bus voltage profile (slack included) for a model + state pair.
struct VoltageProfile {
    Vec vm;
    Vec va;

    std::complex<double> phasor(int idx) const {
        return std::polar(vm[idx], va[idx]);
    }
};

inline VoltageProfile expand_state(const NetworkModel& model, const StateVector& state) {
    const int n = model.bus_count();
    if (state.vm.size() != n - 1 || state.va.size() != n - 1)
        throw LengthMismatch("state does not match bus count");
    VoltageProfile p;
    p.vm.resize(n);
    p.va.resize(n);
    int j = 0;
    for (int i = 0; i < n; ++i) {
        if (i == model.slack_index) {
            p.vm[i] = model.buses[static_cast<size_t>(i)].base_vm;
            p.va[i] = model.buses[static_cast<size_t>(i)].base_va;
        } else {
            p.vm[i] = state.vm[j];
            p.va[i] = state.va[j];
            ++j;
        }
    }
    return p;
}

/// Flat start for the estimation state: unit magnitudes, zero angles.
inline StateVector flat_state(const NetworkModel& model) {
    StateVector s;
    s.vm = Vec::Ones(model.bus_count() - 1);
    s.va = Vec::Zero(model.bus_count() - 1);
    return s;
}

/// State holding the model's recorded (solved) operating point.
inline StateVector recorded_state(const NetworkModel& model) {
    StateVector s;
    s.vm.resize(model.bus_count() - 1);
    s.va.resize(model.bus_count() - 1);
    int j = 0;
    for (int i = 0; i < model.bus_count(); ++i) {
        if (i == model.slack_index) continue;
        s.vm[j] = model.buses[static_cast<size_t>(i)].base_vm;
        s.va[j] = model.buses[static_cast<size_t>(i)].base_va;
        ++j;
    }
    return s;
}

struct PowerPair {
    double p = 0.0;
    double q = 0.0;
};

/// Injected power observation channel at a bus: the neighbor sum over
/// incident branches with series parameters,
///     P_n = sum |V_i||V_n| (g cos(th_n - th_i) + b sin(th_n - th_i))
///     Q_n = sum |V_i||V_n| (g sin(th_n - th_i) - b cos(th_n - th_i)).
/// Note this is the observation map, not a power balance; the solver below
/// uses physical_injection.
inline PowerPair injected_power(const NetworkModel& model, const VoltageProfile& prof,
                                int bus_id) {
    const int n = model.index_of(bus_id);
    PowerPair out;
    for (const auto& [k, at_from] : model.adjacency[static_cast<size_t>(n)]) {
        const auto& br = model.branches[static_cast<size_t>(k)];
        const auto& pr = model.params[static_cast<size_t>(k)];
        const int other = model.index_of(at_from ? br.to_bus : br.from_bus);
        const double sigma = prof.va[n] - prof.va[other];
        const double vv = prof.vm[n] * prof.vm[other];
        out.p += vv * (pr.series_g * std::cos(sigma) + pr.series_b * std::sin(sigma));
        out.q += vv * (pr.series_g * std::sin(sigma) - pr.series_b * std::cos(sigma));
    }
    return out;
}

inline PowerPair injected_power(const NetworkModel& model, const StateVector& state,
                                int bus_id) {
    return injected_power(model, expand_state(model, state), bus_id);
}

/// Complex current leaving the `from` end of a branch under the pi-model:
/// I = y_series (V_f - V_t) + y_from_shunt V_f.
inline std::complex<double> branch_current_complex(const NetworkModel& model,
                                                   const VoltageProfile& prof,
                                                   int branch_idx) {
    const auto& br = model.branch_at(branch_idx);
    const auto& pr = model.params[static_cast<size_t>(branch_idx)];
    const auto vf = prof.phasor(model.index_of(br.from_bus));
    const auto vt = prof.phasor(model.index_of(br.to_bus));
    const std::complex<double> ys(pr.series_g, pr.series_b);
    const std::complex<double> yf(pr.from_g0, pr.from_b0);
    return ys * (vf - vt) + yf * vf;
}

inline std::pair<double, double> branch_current(const NetworkModel& model,
                                                const StateVector& state, int branch_idx) {
    const auto i = branch_current_complex(model, expand_state(model, state), branch_idx);
    return {i.real(), i.imag()};
}

/// Real/reactive power flowing into a branch at its from end, in the
/// expanded trigonometric form:
///     P = v_f^2 (g_f0 + g) - v_f v_t (g cos s + b sin s)
///     Q = -v_f^2 (b_f0 + b) - v_f v_t (g sin s - b cos s),  s = th_f - th_t.
/// Consistent with V_f conj(I) for the same branch, which the tests exploit
/// as an independent oracle.
inline PowerPair branch_flow(const NetworkModel& model, const VoltageProfile& prof,
                             int branch_idx) {
    const auto& br = model.branch_at(branch_idx);
    const auto& pr = model.params[static_cast<size_t>(branch_idx)];
    const int f = model.index_of(br.from_bus);
    const int t = model.index_of(br.to_bus);
    const double s = prof.va[f] - prof.va[t];
    const double vf = prof.vm[f];
    const double vv = vf * prof.vm[t];
    PowerPair out;
    out.p = vf * vf * (pr.from_g0 + pr.series_g) -
            vv * (pr.series_g * std::cos(s) + pr.series_b * std::sin(s));
    out.q = -vf * vf * (pr.from_b0 + pr.series_b) -
            vv * (pr.series_g * std::sin(s) - pr.series_b * std::cos(s));
    return out;
}

inline PowerPair branch_flow(const NetworkModel& model, const StateVector& state,
                             int branch_idx) {
    return branch_flow(model, expand_state(model, state), branch_idx);
}

/// DC simplification of the injection channel: sum b_ni (th_n - th_i).
inline double dc_injected_power(const NetworkModel& model, const VoltageProfile& prof,
                                int bus_id) {
    const int n = model.index_of(bus_id);
    double p = 0.0;
    for (const auto& [k, at_from] : model.adjacency[static_cast<size_t>(n)]) {
        const auto& br = model.branches[static_cast<size_t>(k)];
        const auto& pr = model.params[static_cast<size_t>(k)];
        const int other = model.index_of(at_from ? br.to_bus : br.from_bus);
        p += pr.series_b * (prof.va[n] - prof.va[other]);
    }
    return p;
}

inline double dc_injected_power(const NetworkModel& model, const StateVector& state,
                                int bus_id) {
    return dc_injected_power(model, expand_state(model, state), bus_id);
}

/// Physically balanced injection at a bus: the sum of complex powers leaving
/// through incident branches plus the bus shunt. This is the quantity that
/// matches scheduled generation minus load at a solved operating point.
inline PowerPair physical_injection(const NetworkModel& model, const VoltageProfile& prof,
                                    int bus_id) {
    const int n = model.index_of(bus_id);
    const auto vn = prof.phasor(n);
    std::complex<double> s(0.0, 0.0);
    for (const auto& [k, at_from] : model.adjacency[static_cast<size_t>(n)]) {
        const auto& br = model.branches[static_cast<size_t>(k)];
        const auto& pr = model.params[static_cast<size_t>(k)];
        const auto vother = prof.phasor(model.index_of(at_from ? br.to_bus : br.from_bus));
        const std::complex<double> ys(pr.series_g, pr.series_b);
        const std::complex<double> ysh =
            at_from ? std::complex<double>(pr.from_g0, pr.from_b0)
                    : std::complex<double>(pr.to_g0, pr.to_b0);
        s += vn * std::conj(ys * (vn - vother) + ysh * vn);
    }
    const auto& bus = model.buses[static_cast<size_t>(n)];
    s += vn * std::conj(std::complex<double>(bus.shunt_g, bus.shunt_b) * vn);
    return {s.real(), s.imag()};
}

inline PowerPair physical_injection(const NetworkModel& model, const StateVector& state,
                                    int bus_id) {
    return physical_injection(model, expand_state(model, state), bus_id);
}

// ---------------------------------------------------------------------------
// Measurement plans
// ---------------------------------------------------------------------------

enum class MeasurementKind {
    voltage_magnitude,
    real_injection,
    reactive_injection,
    real_flow,
    reactive_flow,
    current_re,
    current_im,
};

struct PlanEntry {
    MeasurementKind kind;
    int location;  // bus id, or branch index for flow/current kinds

    friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

struct MeasurementPlan {
    std::vector<PlanEntry> entries;

    int size() const { return static_cast<int>(entries.size()); }
};

inline void check_plan(const NetworkModel& model, const MeasurementPlan& plan) {
    for (size_t i = 0; i < plan.entries.size(); ++i) {
        const auto& e = plan.entries[i];
        switch (e.kind) {
            case MeasurementKind::voltage_magnitude:
            case MeasurementKind::real_injection:
            case MeasurementKind::reactive_injection:
                model.index_of(e.location);
                break;
            default:
                model.branch_at(e.location);
                break;
        }
        for (size_t j = i + 1; j < plan.entries.size(); ++j)
            if (plan.entries[j] == e)
                throw LengthMismatch("duplicate plan entry at positions " +
                                     std::to_string(i) + "," + std::to_string(j));
    }
}

/// The default 28-channel plan: every bus voltage magnitude followed by
/// every bus real injection.
inline MeasurementPlan make_default_plan(const NetworkModel& model) {
    MeasurementPlan plan;
    for (const auto& b : model.buses)
        plan.entries.push_back({MeasurementKind::voltage_magnitude, b.id});
    for (const auto& b : model.buses)
        plan.entries.push_back({MeasurementKind::real_injection, b.id});
    return plan;
}

/// Seeded draw of `count` distinct channels from the voltage/injection pool.
inline MeasurementPlan make_random_plan(const NetworkModel& model, int count,
                                        std::uint64_t seed) {
    std::vector<PlanEntry> pool;
    for (const auto& b : model.buses)
        pool.push_back({MeasurementKind::voltage_magnitude, b.id});
    for (const auto& b : model.buses)
        pool.push_back({MeasurementKind::real_injection, b.id});
    if (count > static_cast<int>(pool.size()))
        throw LengthMismatch("plan larger than channel pool");
    Rng rng = make_rng(derive_seed(seed, 0x706c616eull));  // "plan" stream
    for (size_t i = 0; i < pool.size(); ++i) {
        std::uniform_int_distribution<size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    MeasurementPlan plan;
    plan.entries.assign(pool.begin(), pool.begin() + count);
    return plan;
}

/// Noiseless forward evaluation of a plan at a state.
inline Vec evaluate_measurements(const NetworkModel& model, const StateVector& state,
                                 const MeasurementPlan& plan) {
    const VoltageProfile prof = expand_state(model, state);
    Vec out(plan.size());
    for (int k = 0; k < plan.size(); ++k) {
        const auto& e = plan.entries[static_cast<size_t>(k)];
        switch (e.kind) {
            case MeasurementKind::voltage_magnitude:
                out[k] = prof.vm[model.index_of(e.location)];
                break;
            case MeasurementKind::real_injection:
                out[k] = injected_power(model, prof, e.location).p;
                break;
            case MeasurementKind::reactive_injection:
                out[k] = injected_power(model, prof, e.location).q;
                break;
            case MeasurementKind::real_flow:
                out[k] = branch_flow(model, prof, e.location).p;
                break;
            case MeasurementKind::reactive_flow:
                out[k] = branch_flow(model, prof, e.location).q;
                break;
            case MeasurementKind::current_re:
                out[k] = branch_current_complex(model, prof, e.location).real();
                break;
            case MeasurementKind::current_im:
                out[k] = branch_current_complex(model, prof, e.location).imag();
                break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Numerical differentiation
// ---------------------------------------------------------------------------

/// Central-difference Jacobian of an arbitrary vector map.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x,
                       double step = 1e-6) {
    if (step <= 0.0) throw std::invalid_argument("fd_jacobian: step must be positive");
    Vec xp = x, xm = x;
    Mat jac;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        xp[j] += step;
        xm[j] -= step;
        const Vec fp = f(xp);
        const Vec fm = f(xm);
        if (jac.size() == 0) jac.resize(fp.size(), x.size());
        jac.col(j) = (fp - fm) / (2.0 * step);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    if (jac.size() == 0) jac.resize(0, x.size());
    return jac;
}

/// d(measurements)/d(flat state) at `state`, central differences.
inline Mat numerical_jacobian(const NetworkModel& model, const StateVector& state,
                              const MeasurementPlan& plan, double step = 1e-6) {
    return fd_jacobian(
        [&](const Vec& x) {
            return evaluate_measurements(model, StateVector::from_flat(x), plan);
        },
        state.flat(), step);
}

// ---------------------------------------------------------------------------
// Newton-Raphson power flow
// ---------------------------------------------------------------------------

struct BusLoad {
    double p = 0.0;  // net real demand, per-unit
    double q = 0.0;
};

inline std::vector<BusLoad> loads_from_model(const NetworkModel& model) {
    std::vector<BusLoad> loads(static_cast<size_t>(model.bus_count()));
    for (int i = 0; i < model.bus_count(); ++i) {
        loads[static_cast<size_t>(i)].p = model.buses[static_cast<size_t>(i)].load_p;
        loads[static_cast<size_t>(i)].q = model.buses[static_cast<size_t>(i)].load_q;
    }
    return loads;
}

struct PowerFlowOptions {
    double tol = 1e-10;
    int max_iter = 20;
    // optional warm start; flat start otherwise
    const StateVector* initial = nullptr;
};

/// Solve the network equations for given net loads. PV bus magnitudes stay at
/// their recorded setpoints, the slack bus absorbs the imbalance. Newton with
/// full steps on the physical injection mismatch.
inline StateVector solve_power_flow(const NetworkModel& model,
                                    const std::vector<BusLoad>& loads,
                                    const PowerFlowOptions& opts = {}) {
    if (opts.tol <= 0.0) throw std::invalid_argument("solve_power_flow: tol must be positive");
    const int n = model.bus_count();
    if (static_cast<int>(loads.size()) != n)
        throw LengthMismatch("loads length does not match bus count");

    std::vector<int> ang_idx, mag_idx;
    for (int i = 0; i < n; ++i) {
        if (i == model.slack_index) continue;
        ang_idx.push_back(i);
        if (model.buses[static_cast<size_t>(i)].kind == BusKind::pq) mag_idx.push_back(i);
    }
    const int m = static_cast<int>(ang_idx.size() + mag_idx.size());

    VoltageProfile prof;
    prof.vm.resize(n);
    prof.va = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        const auto& bus = model.buses[static_cast<size_t>(i)];
        prof.vm[i] = bus.kind == BusKind::pq ? 1.0 : bus.base_vm;
    }
    prof.va[model.slack_index] = model.buses[static_cast<size_t>(model.slack_index)].base_va;
    if (opts.initial) {
        StateVector init = *opts.initial;
        VoltageProfile warm = expand_state(model, init);
        prof = warm;
        for (int i : ang_idx)
            if (model.buses[static_cast<size_t>(i)].kind == BusKind::pv)
                prof.vm[i] = model.buses[static_cast<size_t>(i)].base_vm;
    }

    auto mismatch = [&](const VoltageProfile& pr) {
        Vec mis(m);
        int r = 0;
        for (int i : ang_idx) {
            const auto inj = physical_injection(model, pr, model.buses[static_cast<size_t>(i)].id);
            mis[r++] = -loads[static_cast<size_t>(i)].p - inj.p;
        }
        for (int i : mag_idx) {
            const auto inj = physical_injection(model, pr, model.buses[static_cast<size_t>(i)].id);
            mis[r++] = -loads[static_cast<size_t>(i)].q - inj.q;
        }
        return mis;
    };

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        const Vec mis = mismatch(prof);
        if (!mis.allFinite()) throw NonConvergence("mismatch diverged at iteration " +
                                                   std::to_string(iter));
        if (mis.cwiseAbs().maxCoeff() < opts.tol) {
            StateVector out;
            out.vm.resize(n - 1);
            out.va.resize(n - 1);
            int j = 0;
            for (int i = 0; i < n; ++i) {
                if (i == model.slack_index) continue;
                out.vm[j] = prof.vm[i];
                out.va[j] = prof.va[i];
                ++j;
            }
            return out;
        }

        const double h = 1e-7;
        Mat jac(m, m);
        VoltageProfile pert = prof;
        for (size_t c = 0; c < ang_idx.size(); ++c) {
            pert.va[ang_idx[c]] += h;
            jac.col(static_cast<Eigen::Index>(c)) = (mismatch(pert) - mis) / h;
            pert.va[ang_idx[c]] = prof.va[ang_idx[c]];
        }
        for (size_t c = 0; c < mag_idx.size(); ++c) {
            pert.vm[mag_idx[c]] += h;
            jac.col(static_cast<Eigen::Index>(ang_idx.size() + c)) = (mismatch(pert) - mis) / h;
            pert.vm[mag_idx[c]] = prof.vm[mag_idx[c]];
        }

        Eigen::FullPivLU<Mat> lu(jac);
        if (!lu.isInvertible()) throw SingularJacobian("power flow Jacobian singular");
        const Vec step = lu.solve(-mis);
        int c = 0;
        for (int i : ang_idx) prof.va[i] += step[c++];
        for (int i : mag_idx) prof.vm[i] += step[c++];
    }
    throw NonConvergence("no solution within " + std::to_string(opts.max_iter) +
                         " iterations");
}

}  // namespace gridse
