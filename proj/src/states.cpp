#include "qmemsim/states.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <nlohmann/json.hpp>

#include "qmemsim/rng.hpp"

namespace qmemsim {

namespace {

void normalize(CVector& a) {
    double s = 0.0;
    for (const auto& c : a) s += std::norm(c);
    const double inv = 1.0 / std::sqrt(s);
    for (auto& c : a) c *= inv;
}

} // namespace

double StateVector::norm() const {
    double s = 0.0;
    for (const auto& c : amplitudes) s += std::norm(c);
    return std::sqrt(s);
}

std::vector<double> StateVector::probabilities() const {
    std::vector<double> p(amplitudes.size());
    for (std::size_t j = 0; j < amplitudes.size(); ++j) p[j] = std::norm(amplitudes[j]);
    return p;
}

StateVector ghz_state(int n_q) {
    if (n_q < 1) throw std::invalid_argument("ghz_state: n_q must be >= 1");
    if (n_q > 25) throw std::invalid_argument("ghz_state: n_q too large");
    const std::int64_t dim = std::int64_t{1} << n_q;
    StateVector s{dim, CVector(dim, 0.0), "ghz"};
    const double r = 1.0 / std::sqrt(2.0);
    s.amplitudes[0] = r;
    s.amplitudes[dim - 1] = r;
    return s;
}

StateVector w_state(int n_q) {
    if (n_q < 1) throw std::invalid_argument("w_state: n_q must be >= 1");
    if (n_q > 25) throw std::invalid_argument("w_state: n_q too large");
    const std::int64_t dim = std::int64_t{1} << n_q;
    StateVector s{dim, CVector(dim, 0.0), "w"};
    const double r = 1.0 / std::sqrt(static_cast<double>(n_q));
    for (int k = 0; k < n_q; ++k) s.amplitudes[std::int64_t{1} << k] = r;
    return s;
}

StateVector equal_superposition_state(std::int64_t dim) {
    if (dim < 2) throw std::invalid_argument("equal_superposition_state: dim must be >= 2");
    StateVector s{dim, CVector(dim, 1.0 / std::sqrt(static_cast<double>(dim))), "equal"};
    return s;
}

StateVector fock_state(std::int64_t dim, std::int64_t n) {
    if (dim < 2) throw std::invalid_argument("fock_state: dim must be >= 2");
    if (n < 0 || n >= dim) throw std::invalid_argument("fock_state: need 0 <= n < dim");
    StateVector s{dim, CVector(dim, 0.0), "fock"};
    s.amplitudes[n] = 1.0;
    return s;
}

StateVector coherent_state(std::int64_t dim, double alpha) {
    if (dim < 2) throw std::invalid_argument("coherent_state: dim must be >= 2");
    // alpha (a^dag - a) is real antisymmetric, so the exponential is orthogonal
    // and the displaced vacuum is its first column, exactly unit norm.
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim, dim);
    for (std::int64_t i = 0; i + 1 < dim; ++i) {
        const double v = alpha * std::sqrt(static_cast<double>(i + 1));
        g(i + 1, i) = v;
        g(i, i + 1) = -v;
    }
    const Eigen::MatrixXd e = g.exp();
    StateVector s{dim, CVector(dim), "coherent"};
    for (std::int64_t j = 0; j < dim; ++j) s.amplitudes[j] = e(j, 0);
    normalize(s.amplitudes);
    return s;
}

StateVector random_arbitrary_state(std::int64_t dim, std::uint64_t seed) {
    if (dim < 2) throw std::invalid_argument("random_arbitrary_state: dim must be >= 2");
    Xoshiro256pp rng(seed);
    StateVector s{dim, CVector(dim), "arbitrary"};
    for (auto& c : s.amplitudes) {
        const double re = rng.uniform_centered();
        const double im = rng.uniform_centered();
        c = {re, im};
    }
    normalize(s.amplitudes);
    return s;
}

StateVector random_unentangled_state(int n_q, std::uint64_t seed) {
    if (n_q < 1) throw std::invalid_argument("random_unentangled_state: n_q must be >= 1");
    if (n_q > 25) throw std::invalid_argument("random_unentangled_state: n_q too large");
    Xoshiro256pp rng(seed);
    CVector psi{1.0};
    for (int q = 0; q < n_q; ++q) {
        Complex a{rng.uniform_centered(), rng.uniform_centered()};
        Complex b{rng.uniform_centered(), rng.uniform_centered()};
        const double inv = 1.0 / std::sqrt(std::norm(a) + std::norm(b));
        a *= inv;
        b *= inv;
        // qubit q occupies bit q: new index j' = j + (bit << q)
        CVector next(psi.size() * 2);
        for (std::size_t j = 0; j < psi.size(); ++j) {
            next[j] = psi[j] * a;
            next[j + psi.size()] = psi[j] * b;
        }
        psi = std::move(next);
    }
    StateVector s{std::int64_t{1} << n_q, std::move(psi), "unentangled"};
    normalize(s.amplitudes);
    return s;
}

StateVector load_state_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_state_file: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_state_file: parse failure in '" + path + "': " + e.what());
    }
    if (!j.contains("dim") || !j.contains("amplitudes"))
        throw std::runtime_error("load_state_file: missing 'dim' or 'amplitudes' in '" + path + "'");
    const std::int64_t dim = j.at("dim").get<std::int64_t>();
    const auto& amps = j.at("amplitudes");
    if (dim < 2) throw std::runtime_error("load_state_file: dim must be >= 2");
    if (static_cast<std::int64_t>(amps.size()) != dim)
        throw std::runtime_error("load_state_file: amplitudes length does not match dim");
    StateVector s{dim, CVector(dim), "file:" + path};
    for (std::int64_t k = 0; k < dim; ++k) {
        const auto& e = amps.at(k);
        if (!e.is_array() || e.size() != 2)
            throw std::runtime_error("load_state_file: amplitude entries must be [re, im] pairs");
        s.amplitudes[k] = {e.at(0).get<double>(), e.at(1).get<double>()};
    }
    const double nrm = s.norm();
    if (std::fabs(nrm - 1.0) >= 1e-6)
        throw std::runtime_error("load_state_file: state norm " + std::to_string(nrm) +
                                 " deviates from 1 by >= 1e-6");
    normalize(s.amplitudes);
    return s;
}

ReorderResult reorder_descending(const StateVector& state) {
    std::vector<std::int64_t> order(state.dim);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        return std::abs(state.amplitudes[a]) > std::abs(state.amplitudes[b]);
    });
    ReorderResult r;
    r.state.dim = state.dim;
    r.state.label = state.label + ":sorted";
    r.state.amplitudes.resize(state.dim);
    for (std::int64_t k = 0; k < state.dim; ++k)
        r.state.amplitudes[k] = state.amplitudes[order[k]];
    r.permutation = std::move(order);
    return r;
}

} // namespace qmemsim
