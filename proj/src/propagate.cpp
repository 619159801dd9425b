#include "qmemsim/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "qmemsim/kernels.hpp"

namespace qmemsim {
namespace {

// Dormand-Prince 5(4) tableau; the flow is autonomous (no Hamiltonian term),
// so the stage abscissae never enter the right-hand side
constexpr double kA2[] = {1.0 / 5};
constexpr double kA3[] = {3.0 / 40, 9.0 / 40};
constexpr double kA4[] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
constexpr double kA5[] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729};
constexpr double kA6[] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656};
constexpr double kB[] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84};
// b - bhat
constexpr double kE[] = {71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920,
                         -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

// PI step controller constants (order-5 exponents)
constexpr double kSafety = 0.9;
constexpr double kAlpha = 0.17;
constexpr double kBeta = 0.04;
constexpr double kMinScale = 0.2;
constexpr double kMaxScale = 10.0;

class Dopri5 {
public:
    using Rhs = std::function<void(const CVector&, CVector&)>;

    Dopri5(std::size_t n, Rhs rhs, const IntegratorConfig& cfg, double rate_max)
        : n_(n), rhs_(std::move(rhs)), cfg_(cfg) {
        cfg_.validate();
        for (auto& k : k_) k.resize(n_);
        stage_.resize(n_);
        err_.resize(n_);
        ynew_.resize(n_);
        h_default_ = cfg_.initial_step > 0.0 ? cfg_.initial_step
                                             : (rate_max > 0.0 ? 1e-3 / rate_max : 0.0);
    }

    std::int64_t accepted() const { return naccept_; }
    std::int64_t rejected() const { return nreject_; }

    // advance (t, y) to t_target, invoking on_accept(t, y) after each accepted
    // step; on_accept may return false to stop early
    void integrate_to(double& t, CVector& y, double t_target,
                      const std::function<bool(double, const CVector&)>& on_accept) {
        if (t_target <= t) return;
        const auto& K = kern::active_ops();
        double h = h_ > 0.0 ? h_ : (h_default_ > 0.0 ? h_default_ : (t_target - t) / 100.0);
        if (cfg_.max_step > 0.0) h = std::min(h, cfg_.max_step);
        h = std::min(h, t_target - t);
        if (!fsal_valid_) {
            rhs_(y, k_[0]);
            fsal_valid_ = true;
        }
        bool last_rejected = false;
        while (t < t_target) {
            if (naccept_ + nreject_ >= cfg_.max_steps)
                throw IntegrationError("step budget exhausted after " +
                                       std::to_string(naccept_) + " accepted steps");
            const double hmin = 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0);
            if (h < hmin)
                throw StiffnessError("step size underflow at t=" + std::to_string(t));
            const bool final_step = t + h >= t_target * (1.0 - 1e-16);
            if (t + h > t_target) h = t_target - t;

            stages(h, y, K);
            // error estimate: err_ = h * sum e_i k_i
            {
                const Complex* ks[7];
                double w[7];
                int nk = 0;
                for (int i = 0; i < 7; ++i) {
                    if (kE[i] == 0.0) continue;
                    ks[nk] = k_[i].data();
                    w[nk++] = kE[i];
                }
                K.stage_comb(err_.data(), nullptr, h, w, ks, nk, n_);
            }
            const double err = K.err_norm(err_.data(), y.data(), ynew_.data(), cfg_.atol, cfg_.rtol, n_);

            if (err <= 1.0) {
                t = final_step ? t_target : t + h;
                y.swap(ynew_);
                k_[0].swap(k_[6]);  // FSAL
                ++naccept_;
                double scale = kMaxScale;
                if (err > 0.0) {
                    scale = kSafety * std::pow(err, -kAlpha) * std::pow(facold_, kBeta);
                    scale = std::clamp(scale, kMinScale, kMaxScale);
                }
                if (last_rejected) scale = std::min(scale, 1.0);
                facold_ = std::max(err, 1e-4);
                h *= scale;
                if (cfg_.max_step > 0.0) h = std::min(h, cfg_.max_step);
                last_rejected = false;
                if (!on_accept(t, y)) break;
            } else {
                ++nreject_;
                last_rejected = true;
                h *= std::max(kSafety * std::pow(err, -kAlpha), kMinScale);
            }
        }
        h_ = h;
    }

private:
    void stages(double h, const CVector& y, const kern::Ops& K) {
        const Complex* ks[7] = {k_[0].data(), k_[1].data(), k_[2].data(),
                                k_[3].data(), k_[4].data(), k_[5].data(), k_[6].data()};
        K.stage_comb(stage_.data(), y.data(), h, kA2, ks, 1, n_);
        rhs_(stage_, k_[1]);
        K.stage_comb(stage_.data(), y.data(), h, kA3, ks, 2, n_);
        rhs_(stage_, k_[2]);
        K.stage_comb(stage_.data(), y.data(), h, kA4, ks, 3, n_);
        rhs_(stage_, k_[3]);
        K.stage_comb(stage_.data(), y.data(), h, kA5, ks, 4, n_);
        rhs_(stage_, k_[4]);
        K.stage_comb(stage_.data(), y.data(), h, kA6, ks, 5, n_);
        rhs_(stage_, k_[5]);
        K.stage_comb(ynew_.data(), y.data(), h, kB, ks, 6, n_);
        rhs_(ynew_, k_[6]);
    }

    std::size_t n_;
    Rhs rhs_;
    IntegratorConfig cfg_;
    CVector k_[7];
    CVector stage_, err_, ynew_;
    double h_default_ = 0.0;
    double h_ = 0.0;
    double facold_ = 1e-4;
    bool fsal_valid_ = false;
    std::int64_t naccept_ = 0;
    std::int64_t nreject_ = 0;
};

CVector flatten_pure(const StateVector& psi) {
    const std::int64_t d = psi.dim;
    CVector y(d * d);
    for (std::int64_t m = 0; m < d; ++m)
        for (std::int64_t n = 0; n < d; ++n)
            y[m * d + n] = psi.amplitudes[m] * std::conj(psi.amplitudes[n]);
    return y;
}

} // namespace

FidelityTrace evolve(const NoiseModel& model, const StateVector& psi0, double t_end,
                     const IntegratorConfig& config, const StateObserver& observer) {
    if (t_end <= 0.0) throw std::invalid_argument("evolve: t_end must be > 0");
    if (model.dim() != psi0.dim) throw std::invalid_argument("evolve: state/model dimension mismatch");
    const LindbladOperator op(model);
    const std::int64_t d = op.dim();
    CVector scratch;
    auto rhs = [&](const CVector& y, CVector& dy) {
        dy.resize(y.size());
        op.apply_raw(y.data(), dy.data(), scratch);
    };
    Dopri5 stepper(static_cast<std::size_t>(d * d), rhs, config, op.rate_max());

    FidelityTrace trace;
    trace.config = config;
    CVector y = flatten_pure(psi0);
    double t = 0.0;
    trace.samples.emplace_back(0.0, fidelity_against_pure_raw(psi0, y.data(), d));
    if (observer) observer(0.0, y.data(), d);
    try {
        stepper.integrate_to(t, y, t_end, [&](double tt, const CVector& yy) {
            trace.samples.emplace_back(tt, fidelity_against_pure_raw(psi0, yy.data(), d));
            if (observer) observer(tt, yy.data(), d);
            return true;
        });
    } catch (const StiffnessError&) {
        throw;
    } catch (const IntegrationError& e) {
        trace.accepted_steps = stepper.accepted();
        trace.rejected_steps = stepper.rejected();
        throw EvolveError(e.what(), std::move(trace));
    }
    trace.accepted_steps = stepper.accepted();
    trace.rejected_steps = stepper.rejected();
    return trace;
}

FidelityTrace evolve_nh(const NoiseModel& model, const StateVector& psi0, double t_end,
                        const IntegratorConfig& config, const std::vector<double>& grid) {
    if (t_end <= 0.0) throw std::invalid_argument("evolve_nh: t_end must be > 0");
    if (model.dim() != psi0.dim)
        throw std::invalid_argument("evolve_nh: state/model dimension mismatch");
    const LindbladOperator op(model);
    const std::int64_t d = op.dim();
    FidelityTrace trace;
    trace.config = config;
    trace.nh = true;

    if (const auto rates = op.nh_diag_rates()) {
        // |psi_j(t)| = |psi_j(0)| e^{-R_j t}; overlap is an elementwise sum
        const auto p = psi0.probabilities();
        std::vector<double> ts;
        if (!grid.empty()) {
            ts = grid;
        } else {
            const int samples = 256;
            ts.reserve(samples + 1);
            for (int i = 0; i <= samples; ++i) ts.push_back(t_end * i / samples);
        }
        for (double t : ts) {
            double overlap = 0.0;
            for (std::int64_t j = 0; j < d; ++j) overlap += p[j] * std::exp(-(*rates)[j] * t);
            trace.samples.emplace_back(t, overlap * overlap);
        }
        return trace;
    }

    // general path: integrate the wavefunction under -sum gamma/2 C^dag C
    const auto channels = compile(model);
    std::vector<std::pair<double, CsrMatrix>> gens;
    for (const auto& ch : channels)
        gens.emplace_back(0.5 * ch.rate, ch.op.form == OperatorSpec::Form::Custom
                                             ? ch.op.matrix.adjoint_times_self()
                                             : ch.op.materialize().adjoint_times_self());
    auto rhs = [&](const CVector& y, CVector& dy) {
        dy.assign(y.size(), Complex{0.0, 0.0});
        for (const auto& [hg, m] : gens)
            for (std::int64_t r = 0; r < d; ++r) {
                Complex acc{0.0, 0.0};
                for (std::int64_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
                    acc += m.val[k] * y[m.col[k]];
                dy[r] -= hg * acc;
            }
    };
    Dopri5 stepper(static_cast<std::size_t>(d), rhs, config, op.rate_max());
    CVector y = psi0.amplitudes;
    double t = 0.0;
    const auto& K = kern::active_ops();
    auto overlap2 = [&](const CVector& yy) {
        const Complex o = K.cdotc(psi0.amplitudes.data(), yy.data(), static_cast<std::size_t>(d));
        return std::norm(o);
    };
    trace.samples.emplace_back(0.0, overlap2(y));
    stepper.integrate_to(t, y, t_end, [&](double tt, const CVector& yy) {
        trace.samples.emplace_back(tt, overlap2(yy));
        return true;
    });
    trace.accepted_steps = stepper.accepted();
    trace.rejected_steps = stepper.rejected();
    return trace;
}

CrossingResult time_to_fidelity(const NoiseModel& model, const StateVector& psi0,
                                double f_target, const IntegratorConfig& config, double horizon) {
    if (!(f_target > 0.0 && f_target < 1.0))
        throw std::invalid_argument("time_to_fidelity: target must lie in (0,1)");
    if (model.dim() != psi0.dim)
        throw std::invalid_argument("time_to_fidelity: state/model dimension mismatch");
    const LindbladOperator op(model);
    const std::int64_t d = op.dim();
    if (op.rate_min_positive() == 0.0)
        throw NoCrossingError("time_to_fidelity: all rates vanish, fidelity stays at 1",
                              std::numeric_limits<double>::infinity(), 1.0);
    if (horizon <= 0.0) horizon = 1e3 / op.rate_min_positive();

    CVector scratch;
    auto rhs = [&](const CVector& y, CVector& dy) {
        dy.resize(y.size());
        op.apply_raw(y.data(), dy.data(), scratch);
    };
    Dopri5 stepper(static_cast<std::size_t>(d * d), rhs, config, op.rate_max());

    CVector y = flatten_pure(psi0);
    CVector y_lo = y;  // state at the last time fidelity was still >= target
    double t = 0.0, t_lo = 0.0;
    double f_lo = fidelity_against_pure_raw(psi0, y.data(), d);
    double t_hi = 0.0, f_hi = 0.0;
    bool crossed = false;
    bool warn = false;
    double f_prev = f_lo;

    stepper.integrate_to(t, y, horizon, [&](double tt, const CVector& yy) {
        const double f = fidelity_against_pure_raw(psi0, yy.data(), d);
        if (f > f_prev + 1e-12 && f_prev < 1.0) warn = true;
        f_prev = f;
        if (f < f_target) {
            t_hi = tt;
            f_hi = f;
            crossed = true;
            return false;
        }
        t_lo = tt;
        f_lo = f;
        y_lo = yy;
        return true;
    });

    CrossingResult res;
    res.nonmonotone_warning = warn;
    if (!crossed) {
        res.accepted_steps = stepper.accepted();
        res.rejected_steps = stepper.rejected();
        throw NoCrossingError("time_to_fidelity: F stayed above target until the horizon",
                              horizon, f_prev);
    }

    // bisect [t_lo, t_hi], re-integrating from the stored lower state
    const double bracket_lo = t_lo, bracket_hi = t_hi;
    double t_mid = t_hi, f_mid = f_hi;
    for (int it = 0; it < 200; ++it) {
        if (std::abs(f_mid - f_target) < 1e-9) break;
        if (t_hi - t_lo <= 1e-16 * std::max(1.0, t_hi)) break;
        t_mid = 0.5 * (t_lo + t_hi);
        CVector y_mid = y_lo;
        double tt = t_lo;
        Dopri5 sub(static_cast<std::size_t>(d * d), rhs, config, op.rate_max());
        sub.integrate_to(tt, y_mid, t_mid, [](double, const CVector&) { return true; });
        res.accepted_steps += sub.accepted();
        res.rejected_steps += sub.rejected();
        f_mid = fidelity_against_pure_raw(psi0, y_mid.data(), d);
        if (f_mid > f_lo + 1e-12) warn = true;
        if (f_mid >= f_target) {
            t_lo = t_mid;
            f_lo = f_mid;
            y_lo.swap(y_mid);
        } else {
            t_hi = t_mid;
            f_hi = f_mid;
        }
    }
    res.t_cross = t_mid;
    res.f_at_cross = f_mid;
    res.bracket_lo = bracket_lo;
    res.bracket_hi = bracket_hi;
    res.accepted_steps += stepper.accepted();
    res.rejected_steps += stepper.rejected();
    res.nonmonotone_warning = warn;
    return res;
}

} // namespace qmemsim
