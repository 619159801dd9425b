#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmemsim {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

// Thrown when a fidelity target is never reached before the integration horizon.
class NoCrossingError : public std::runtime_error {
public:
    NoCrossingError(std::string msg, double horizon, double f_final)
        : std::runtime_error(std::move(msg)), horizon(horizon), f_final(f_final) {}
    double horizon;
    double f_final;
};

// Step-count exhaustion or repeated rejection at the minimum step size.
class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StiffnessError : public IntegrationError {
public:
    using IntegrationError::IntegrationError;
};

} // namespace qmemsim
