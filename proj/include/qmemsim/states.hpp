#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qmemsim/types.hpp"

namespace qmemsim {

// |psi> = sum_j amplitudes[j] |j>, kept normalized to 1 within 1e-12.
struct StateVector {
    std::int64_t dim = 0;
    CVector amplitudes;
    std::string label;

    double norm() const;
    // squared-magnitude distribution |a_j|^2
    std::vector<double> probabilities() const;
};

// (|0...0> + |1...1>)/sqrt(2) on n_q qubits; indices 0 and 2^n_q - 1.
StateVector ghz_state(int n_q);

// equal superposition of the n_q single-excitation bit strings (powers of two)
StateVector w_state(int n_q);

StateVector equal_superposition_state(std::int64_t dim);

// one-hot |n>
StateVector fock_state(std::int64_t dim, std::int64_t n);

// truncated displacement exp(alpha (a^dag - a)) |0>, evaluated with a dense
// matrix exponential of the dim x dim generator (not the analytic Poisson
// series, which differs near the truncation edge)
StateVector coherent_state(std::int64_t dim, double alpha);

// re/im parts uniform in [-0.5, 0.5) from xoshiro256++(seed), then normalized
StateVector random_arbitrary_state(std::int64_t dim, std::uint64_t seed);

// tensor product of n_q independent random qubit states; qubit i occupies bit i
StateVector random_unentangled_state(int n_q, std::uint64_t seed);

// Amplitude file: {"dim": N, "amplitudes": [[re, im], ...], "label": "..."}.
// Renormalizes when |norm - 1| < 1e-6, rejects larger deviations.
StateVector load_state_file(const std::string& path);

struct ReorderResult {
    StateVector state;
    // permutation[k] = original index of the amplitude now at level k
    std::vector<std::int64_t> permutation;
};

// amplitudes sorted by nonincreasing magnitude (ties: ascending original
// index), phases carried along
ReorderResult reorder_descending(const StateVector& state);

} // namespace qmemsim
