#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qmemsim/layout.hpp"
#include "qmemsim/noise.hpp"
#include "qmemsim/states.hpp"

namespace qmemsim {

int hamming_weight(std::uint64_t j);

// sqrt(F) = sum_j |a_j|^2 e^{-gamma w(j) t}, squared on return (qubit register
// with amplitude damping and dephasing at equal rate gamma)
double nh_fidelity_qubit(const StateVector& state, double gamma, double t);

// sqrt(F) = sum_j |a_j|^2 e^{-(gamma/2) j t}, squared on return (single qudit
// with amplitude damping)
double nh_fidelity_qudit(const StateVector& state, double gamma, double t);

// sqrt(F) = |<psi| exp(-t sum_j (gamma_j/2) C_j^dag C_j) |psi>|, squared on
// return. Diagonal channel sets evaluate elementwise; otherwise a dense
// Hermitian eigendecomposition is used (dim <= 4096).
double nh_fidelity_general(const std::vector<CollapseChannel>& channels,
                           const StateVector& state, double t);

struct MomentSet {
    // aggregate moments of the layout's total excitation operator:
    // aggregate[k-1] = sum_j |a_j|^2 excitation(j)^k, k = 1..k_max
    std::vector<double> aggregate;
    // per-site first..k_max moments of each site's own number operator
    std::vector<std::vector<double>> per_site;

    double mean() const { return aggregate.at(0); }
    double second() const { return aggregate.at(1); }
};

MomentSet moments(const StateVector& state, const Layout& layout, int k_max = 2);

struct RatioPrediction {
    double first_order = 0.0;
    std::optional<double> second_order;
    double f_target = 0.0;  // used by the second order only
    MomentSet moments_a;
    MomentSet moments_b;
    bool nonmonotone_warning = false;
};

// t_A/t_B from the first-order truncation of the NH fidelity series:
// <R_B>/<R_A>, where R is a layout's canonical NH decay rate (the factor 2
// between damped-plus-dephased qubits and damped qudits emerges from the rates)
RatioPrediction ratio_first_order(const StateVector& state, const Layout& a, const Layout& b);

// t_A/t_B with both crossing times taken from the k<=2 truncation of the NH
// series, each solved by a bracketed bisection/secant hybrid on [0, 10 t1]
RatioPrediction ratio_second_order(const StateVector& state, const Layout& a, const Layout& b,
                                   double f_target);

// (2^n_q - 1) / (2 n_q)
double ghz_ratio_closed_form(int n_q);

// t_b/t_dis = sum_j gamma_j <n_j> / (gamma <n_b>) for a disordered qubit register
double ratio_disordered(const StateVector& state, const std::vector<double>& per_qubit_rates,
                        double uniform_rate);

} // namespace qmemsim
