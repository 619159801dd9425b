#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qmemsim/noise.hpp"
#include "qmemsim/states.hpp"
#include "qmemsim/types.hpp"

namespace qmemsim {

struct IntegratorConfig {
    double rtol = 1e-8;
    double atol = 1e-10;
    double initial_step = 0.0;  // 0 -> 1e-3 / gamma_max
    double max_step = 0.0;      // 0 -> unbounded
    std::int64_t max_steps = 10'000'000;

    void validate() const {
        if (rtol <= 0.0 || atol <= 0.0) throw std::invalid_argument("tolerances must be > 0");
        if (max_steps <= 0) throw std::invalid_argument("max_steps must be > 0");
    }
};

struct FidelityTrace {
    std::vector<std::pair<double, double>> samples;  // (t, F), strictly increasing t
    std::int64_t accepted_steps = 0;
    std::int64_t rejected_steps = 0;
    IntegratorConfig config;
    bool nh = false;  // produced by the non-Hermitian propagator

    double final_time() const { return samples.empty() ? 0.0 : samples.back().first; }
    double final_fidelity() const { return samples.empty() ? 1.0 : samples.back().second; }
};

struct CrossingResult {
    double t_cross = 0.0;
    double f_at_cross = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    std::int64_t accepted_steps = 0;
    std::int64_t rejected_steps = 0;
    bool nonmonotone_warning = false;  // fidelity seen rising during refinement
};

// step-budget exhaustion during evolve; carries the fidelity trace up to the
// failure point
class EvolveError : public IntegrationError {
public:
    EvolveError(const std::string& msg, FidelityTrace partial)
        : IntegrationError(msg), partial(std::move(partial)) {}
    FidelityTrace partial;
};

// diagnostic hook: called with the flat row-major density matrix after each
// accepted step (and once at t = 0)
using StateObserver = std::function<void(double t, const Complex* rho, std::int64_t dim)>;

// Lindblad propagation of rho(0) = |psi0><psi0| with an embedded Dormand-Prince
// 5(4) pair and PI step control; fidelity recorded at every accepted step.
FidelityTrace evolve(const NoiseModel& model, const StateVector& psi0, double t_end,
                     const IntegratorConfig& config = {}, const StateObserver& observer = {});

// Norm-losing wavefunction evolution d|psi>/dt = -sum_i (gamma_i/2) C_i^dag C_i |psi>.
// When every C_i^dag C_i is diagonal the solution is an elementwise exponential
// and the trace is sampled analytically on a uniform grid (or at the times in
// `grid` if nonempty); otherwise the wavefunction is integrated with the same
// RK scheme. F(t) = |<psi0|psi(t)>|^2.
FidelityTrace evolve_nh(const NoiseModel& model, const StateVector& psi0, double t_end,
                        const IntegratorConfig& config = {},
                        const std::vector<double>& grid = {});

// First time F(t) = f_target, refined by bisection with re-integration over the
// bracketing step until |F(t*) - f_target| < 1e-9. Horizon defaults to
// 1e3/gamma_min; NoCrossingError when F never reaches the target before it.
CrossingResult time_to_fidelity(const NoiseModel& model, const StateVector& psi0,
                                double f_target, const IntegratorConfig& config = {},
                                double horizon = 0.0);

} // namespace qmemsim
