#include "qmemsim/analytic.hpp"

#include <bit>
#include <cmath>

#include <Eigen/Dense>

namespace qmemsim {
namespace {

// Kahan-compensated dot of probabilities against arbitrary weights
template <typename W>
double ksum(const std::vector<double>& p, W&& weight) {
    double s = 0.0, c = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double term = p[j] * weight(static_cast<std::int64_t>(j)) - c;
        const double tmp = s + term;
        c = (tmp - s) - term;
        s = tmp;
    }
    return s;
}

bool is_power_of_two(std::int64_t d) { return d > 0 && (d & (d - 1)) == 0; }

double mean_nh_rate(const std::vector<double>& p, const Layout& layout) {
    return ksum(p, [&](std::int64_t j) { return layout.nh_rate(j); });
}

// crossing time of the k_max-truncated series sum_k (-t)^k <R^k>/k! = sqrt(F_t),
// bracketed on [0, 10 t1]; bisection with a secant-accelerated midpoint
struct SeriesCrossing {
    double t = 0.0;
    bool warning = false;
};

SeriesCrossing truncated_series_crossing(const std::vector<double>& r_moments, double f_target) {
    const double target = std::sqrt(f_target);
    const int kmax = static_cast<int>(r_moments.size());
    auto g = [&](double t) {
        double s = 1.0, fac = 1.0, tp = 1.0;
        for (int k = 1; k <= kmax; ++k) {
            fac *= k;
            tp *= -t;
            s += tp / fac * r_moments[k - 1];
        }
        return s - target;
    };
    const double t1 = (1.0 - target) / r_moments[0];
    const double hi = 10.0 * t1;
    SeriesCrossing out;
    // coarse scan for the first sign change
    const int scan = 256;
    double lo = 0.0, glo = g(0.0);
    double bhi = -1.0, ghi = 0.0;
    for (int i = 1; i <= scan; ++i) {
        const double t = hi * i / scan;
        const double gt = g(t);
        if (glo > 0.0 && gt <= 0.0) {
            bhi = t;
            ghi = gt;
            break;
        }
        lo = t;
        glo = gt;
    }
    if (bhi < 0.0) {
        // no crossing before the bracket cap: the truncation turned around;
        // report the minimizer as the nearest approach
        double best_t = 0.0, best = std::abs(g(0.0));
        for (int i = 1; i <= scan; ++i) {
            const double t = hi * i / scan;
            const double v = std::abs(g(t));
            if (v < best) {
                best = v;
                best_t = t;
            }
        }
        if (best > 1e-9) {
            out.t = best_t;
            out.warning = true;
            return out;
        }
        out.t = best_t;
        return out;
    }
    // bisection with secant proposals kept inside the bracket
    for (int it = 0; it < 200 && (bhi - lo) > 1e-12 * std::max(bhi, 1e-300); ++it) {
        double mid = 0.5 * (lo + bhi);
        if (ghi != glo) {
            const double sec = lo - glo * (bhi - lo) / (ghi - glo);
            if (sec > lo + 0.1 * (bhi - lo) && sec < bhi - 0.1 * (bhi - lo)) mid = sec;
        }
        const double gm = g(mid);
        if (gm > 0.0) {
            lo = mid;
            glo = gm;
        } else {
            bhi = mid;
            ghi = gm;
        }
    }
    out.t = 0.5 * (lo + bhi);
    return out;
}

std::vector<double> r_moments(const StateVector& state, const Layout& layout, int k_max) {
    const auto p = state.probabilities();
    std::vector<double> m(k_max);
    for (int k = 1; k <= k_max; ++k)
        m[k - 1] = ksum(p, [&](std::int64_t j) {
            double v = 1.0;
            const double r = layout.nh_rate(j);
            for (int q = 0; q < k; ++q) v *= r;
            return v;
        });
    return m;
}

} // namespace

int hamming_weight(std::uint64_t j) { return std::popcount(j); }

double nh_fidelity_qubit(const StateVector& state, double gamma, double t) {
    if (!is_power_of_two(state.dim))
        throw std::invalid_argument("nh_fidelity_qubit: dim must be a power of two");
    const auto p = state.probabilities();
    const double s = ksum(p, [&](std::int64_t j) {
        return std::exp(-gamma * t * hamming_weight(static_cast<std::uint64_t>(j)));
    });
    return s * s;
}

double nh_fidelity_qudit(const StateVector& state, double gamma, double t) {
    const auto p = state.probabilities();
    const double s =
        ksum(p, [&](std::int64_t j) { return std::exp(-0.5 * gamma * t * static_cast<double>(j)); });
    return s * s;
}

double nh_fidelity_general(const std::vector<CollapseChannel>& channels, const StateVector& state,
                           double t) {
    const std::int64_t d = state.dim;
    for (const auto& ch : channels)
        if (ch.op.dim() != d)
            throw std::invalid_argument("nh_fidelity_general: dimension mismatch");
    const LindbladOperator op(d, channels);
    if (const auto rates = op.nh_diag_rates()) {
        const auto p = state.probabilities();
        const double s = ksum(p, [&](std::int64_t j) { return std::exp(-(*rates)[j] * t); });
        return s * s;
    }
    if (d > 4096)
        throw std::invalid_argument(
            "nh_fidelity_general: non-diagonal channel set needs dim <= 4096");
    // dense M = sum (gamma_j/2) C_j^dag C_j, Hermitian PSD
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    for (const auto& ch : channels) {
        const CsrMatrix cdc = ch.op.form == OperatorSpec::Form::Custom
                                  ? ch.op.matrix.adjoint_times_self()
                                  : ch.op.materialize().adjoint_times_self();
        for (std::int64_t r = 0; r < d; ++r)
            for (std::int64_t k = cdc.row_ptr[r]; k < cdc.row_ptr[r + 1]; ++k)
                m(r, cdc.col[k]) += 0.5 * ch.rate * cdc.val[k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    Eigen::VectorXcd psi(d);
    for (std::int64_t j = 0; j < d; ++j) psi[j] = state.amplitudes[j];
    const Eigen::VectorXcd w = es.eigenvectors().adjoint() * psi;
    Complex overlap{0.0, 0.0};
    for (std::int64_t j = 0; j < d; ++j)
        overlap += std::conj(w[j]) * std::exp(-es.eigenvalues()[j] * t) * w[j];
    const double s = std::abs(overlap);
    return s * s;
}

MomentSet moments(const StateVector& state, const Layout& layout, int k_max) {
    if (layout.dim() < state.dim)
        throw std::invalid_argument("moments: layout dimension smaller than state");
    if (k_max < 1) throw std::invalid_argument("moments: k_max must be >= 1");
    const auto p = state.probabilities();
    MomentSet ms;
    ms.aggregate.resize(k_max);
    for (int k = 1; k <= k_max; ++k)
        ms.aggregate[k - 1] = ksum(p, [&](std::int64_t j) {
            double v = 1.0;
            const double e = static_cast<double>(layout.excitation(j));
            for (int q = 0; q < k; ++q) v *= e;
            return v;
        });
    ms.per_site.resize(layout.sites());
    for (int site = 0; site < layout.sites(); ++site) {
        ms.per_site[site].resize(k_max);
        for (int k = 1; k <= k_max; ++k)
            ms.per_site[site][k - 1] = ksum(p, [&](std::int64_t j) {
                double v = 1.0;
                const double e = static_cast<double>(layout.digit(j, site));
                for (int q = 0; q < k; ++q) v *= e;
                return v;
            });
    }
    return ms;
}

RatioPrediction ratio_first_order(const StateVector& state, const Layout& a, const Layout& b) {
    if (a.dim() < state.dim || b.dim() < state.dim)
        throw std::invalid_argument("ratio_first_order: layout too small for state");
    const auto p = state.probabilities();
    const double ra = mean_nh_rate(p, a);
    const double rb = mean_nh_rate(p, b);
    if (ra == 0.0)
        throw std::invalid_argument("ratio_first_order: vacuum state has no excitations");
    RatioPrediction pred;
    pred.first_order = rb / ra;
    pred.moments_a = moments(state, a);
    pred.moments_b = moments(state, b);
    return pred;
}

RatioPrediction ratio_second_order(const StateVector& state, const Layout& a, const Layout& b,
                                   double f_target) {
    if (!(f_target > 0.0 && f_target < 1.0))
        throw std::invalid_argument("ratio_second_order: target must lie in (0,1)");
    RatioPrediction pred = ratio_first_order(state, a, b);
    pred.f_target = f_target;
    const auto ra = r_moments(state, a, 2);
    const auto rb = r_moments(state, b, 2);
    const auto ta = truncated_series_crossing(ra, f_target);
    const auto tb = truncated_series_crossing(rb, f_target);
    pred.second_order = ta.t / tb.t;
    pred.nonmonotone_warning = ta.warning || tb.warning;
    return pred;
}

double ghz_ratio_closed_form(int n_q) {
    if (n_q < 1) throw std::invalid_argument("ghz_ratio_closed_form: n_q must be >= 1");
    return (std::pow(2.0, n_q) - 1.0) / (2.0 * n_q);
}

double ratio_disordered(const StateVector& state, const std::vector<double>& per_qubit_rates,
                        double uniform_rate) {
    if (!is_power_of_two(state.dim))
        throw std::invalid_argument("ratio_disordered: dim must be a power of two");
    const int n_q = static_cast<int>(std::countr_zero(static_cast<std::uint64_t>(state.dim)));
    if (static_cast<int>(per_qubit_rates.size()) != n_q)
        throw std::invalid_argument("ratio_disordered: one rate per qubit required");
    for (double g : per_qubit_rates)
        if (g < 0.0) throw std::invalid_argument("ratio_disordered: rates must be >= 0");
    if (uniform_rate <= 0.0) throw std::invalid_argument("ratio_disordered: uniform rate must be > 0");
    const Layout reg = Layout::qubit_register(n_q);
    const auto ms = moments(state, reg, 1);
    const double nb = ms.aggregate[0];
    if (nb == 0.0)
        throw std::invalid_argument("ratio_disordered: vacuum state has no excitations");
    double num = 0.0;
    for (int j = 0; j < n_q; ++j) num += per_qubit_rates[j] * ms.per_site[j][0];
    return num / (uniform_rate * nb);
}

} // namespace qmemsim
