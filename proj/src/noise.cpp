#include "qmemsim/noise.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qmemsim/kernels.hpp"

namespace qmemsim {

// ---------------------------------------------------------------- CsrMatrix

CsrMatrix CsrMatrix::from_triplets(std::int64_t rows, std::int64_t cols,
                                   std::vector<std::tuple<std::int64_t, std::int64_t, Complex>> trips) {
    std::sort(trips.begin(), trips.end(), [](const auto& a, const auto& b) {
        return std::get<0>(a) != std::get<0>(b) ? std::get<0>(a) < std::get<0>(b)
                                                : std::get<1>(a) < std::get<1>(b);
    });
    CsrMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.row_ptr.assign(rows + 1, 0);
    for (std::size_t k = 0; k < trips.size();) {
        auto [r, c, v] = trips[k];
        std::size_t j = k + 1;
        while (j < trips.size() && std::get<0>(trips[j]) == r && std::get<1>(trips[j]) == c) {
            v += std::get<2>(trips[j]);
            ++j;
        }
        if (v != Complex{0.0, 0.0}) {
            m.col.push_back(c);
            m.val.push_back(v);
            m.row_ptr[r + 1]++;
        }
        k = j;
    }
    for (std::int64_t r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    return m;
}

Complex CsrMatrix::at(std::int64_t r, std::int64_t c) const {
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
        if (col[k] == c) return val[k];
    return {0.0, 0.0};
}

bool CsrMatrix::is_diagonal() const {
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            if (col[k] != r) return false;
    return true;
}

CsrMatrix CsrMatrix::adjoint_times_self() const {
    // (C^dag C)_{ab} = sum_r conj(C_{ra}) C_{rb}
    std::map<std::pair<std::int64_t, std::int64_t>, Complex> acc;
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t k1 = row_ptr[r]; k1 < row_ptr[r + 1]; ++k1)
            for (std::int64_t k2 = row_ptr[r]; k2 < row_ptr[r + 1]; ++k2)
                acc[{col[k1], col[k2]}] += std::conj(val[k1]) * val[k2];
    std::vector<std::tuple<std::int64_t, std::int64_t, Complex>> trips;
    trips.reserve(acc.size());
    for (const auto& [rc, v] : acc) trips.emplace_back(rc.first, rc.second, v);
    return from_triplets(cols, cols, std::move(trips));
}

// -------------------------------------------------------------- OperatorSpec

CsrMatrix OperatorSpec::materialize() const {
    if (form == Form::Custom) return matrix;
    std::vector<std::tuple<std::int64_t, std::int64_t, Complex>> trips;
    for (std::int64_t m = 0; m < total_dim; ++m) {
        const std::int64_t a = (m / stride) % ldim;
        if (form == Form::SiteLowering) {
            if (a + 1 < ldim)
                trips.emplace_back(m, m + stride, Complex{std::sqrt(double(a + 1)), 0.0});
        } else {
            if (a > 0) trips.emplace_back(m, m, Complex{double(a), 0.0});
        }
    }
    return CsrMatrix::from_triplets(total_dim, total_dim, std::move(trips));
}

OperatorSpec annihilation_matrix(std::int64_t d) {
    if (d < 2) throw std::invalid_argument("annihilation_matrix: d must be >= 2");
    return OperatorSpec{OperatorSpec::Form::SiteLowering, d, 1, d, {}};
}

OperatorSpec number_matrix(std::int64_t d) {
    if (d < 2) throw std::invalid_argument("number_matrix: d must be >= 2");
    return OperatorSpec{OperatorSpec::Form::SiteNumber, d, 1, d, {}};
}

// ---------------------------------------------------------------- NoiseModel

NoiseModel NoiseModel::qubit_register(int n_q, double gamma, bool dephasing) {
    return qubit_register(n_q, std::vector<double>(n_q, gamma), dephasing);
}

NoiseModel NoiseModel::qubit_register(int n_q, std::vector<double> rates, bool dephasing) {
    if (n_q < 1 || n_q > 30) throw std::invalid_argument("qubit_register: bad n_q");
    if (static_cast<int>(rates.size()) != n_q)
        throw std::invalid_argument("qubit_register: one rate per qubit required");
    for (double g : rates)
        if (g < 0.0) throw std::invalid_argument("qubit_register: rates must be >= 0");
    NoiseModel m;
    m.variant = Variant::QubitRegister;
    m.n_q = n_q;
    m.qubit_rates = std::move(rates);
    m.dephasing = dephasing;
    return m;
}

NoiseModel NoiseModel::single_qudit(std::int64_t d, double gamma) {
    if (d < 2) throw std::invalid_argument("single_qudit: d must be >= 2");
    if (gamma < 0.0) throw std::invalid_argument("single_qudit: rate must be >= 0");
    NoiseModel m;
    m.variant = Variant::SingleQudit;
    m.d = d;
    m.gamma = gamma;
    return m;
}

NoiseModel NoiseModel::qudit_array(int count, std::int64_t d_each, double gamma) {
    if (count < 1 || d_each < 2) throw std::invalid_argument("qudit_array: bad shape");
    if (gamma < 0.0) throw std::invalid_argument("qudit_array: rate must be >= 0");
    NoiseModel m;
    m.variant = Variant::QuditArray;
    m.count = count;
    m.d = d_each;
    m.gamma = gamma;
    return m;
}

NoiseModel NoiseModel::custom_channels(std::int64_t dim, std::vector<CollapseChannel> channels) {
    for (const auto& ch : channels) {
        if (ch.rate < 0.0) throw std::invalid_argument("custom_channels: rates must be >= 0");
        if (ch.op.dim() != dim) throw std::invalid_argument("custom_channels: operator dimension mismatch");
    }
    NoiseModel m;
    m.variant = Variant::Custom;
    m.custom_dim = dim;
    m.custom = std::move(channels);
    return m;
}

std::int64_t NoiseModel::dim() const {
    switch (variant) {
        case Variant::QubitRegister: return std::int64_t{1} << n_q;
        case Variant::SingleQudit: return d;
        case Variant::QuditArray: {
            std::int64_t t = 1;
            for (int i = 0; i < count; ++i) t *= d;
            return t;
        }
        case Variant::Custom: return custom_dim;
    }
    return 0;
}

std::string NoiseModel::describe() const {
    switch (variant) {
        case Variant::QubitRegister:
            return "qubit:" + std::to_string(n_q) + (dephasing ? "" : ":nodeph");
        case Variant::SingleQudit: return "qudit:" + std::to_string(d);
        case Variant::QuditArray:
            return "quditarray:" + std::to_string(count) + ":" + std::to_string(d);
        case Variant::Custom: return "custom:" + std::to_string(custom_dim);
    }
    return "?";
}

std::string NoiseModel::to_json() const {
    nlohmann::json j;
    switch (variant) {
        case Variant::QubitRegister: {
            j["variant"] = "qubit-register";
            j["n_q"] = n_q;
            const bool uniform = std::all_of(qubit_rates.begin(), qubit_rates.end(),
                                             [&](double g) { return g == qubit_rates.front(); });
            if (uniform)
                j["gamma"] = qubit_rates.front();
            else
                j["gamma"] = qubit_rates;
            j["dephasing"] = dephasing;
            break;
        }
        case Variant::SingleQudit:
            j["variant"] = "single-qudit";
            j["d"] = d;
            j["gamma"] = gamma;
            j["dephasing"] = false;
            break;
        case Variant::QuditArray:
            j["variant"] = "qudit-array";
            j["count"] = count;
            j["d_each"] = d;
            j["gamma"] = gamma;
            j["dephasing"] = false;
            break;
        case Variant::Custom:
            throw std::invalid_argument("custom noise models have no JSON form");
    }
    return j.dump();
}

NoiseModel NoiseModel::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "qubit-register") {
        const int n_q = j.at("n_q").get<int>();
        const bool deph = j.value("dephasing", true);
        if (j.at("gamma").is_array())
            return qubit_register(n_q, j.at("gamma").get<std::vector<double>>(), deph);
        return qubit_register(n_q, j.at("gamma").get<double>(), deph);
    }
    if (variant == "single-qudit")
        return single_qudit(j.at("d").get<std::int64_t>(), j.value("gamma", 1.0));
    if (variant == "qudit-array")
        return qudit_array(j.at("count").get<int>(), j.at("d_each").get<std::int64_t>(),
                           j.value("gamma", 1.0));
    throw std::invalid_argument("unknown noise model variant '" + variant + "'");
}

NoiseModel NoiseModel::scaled(double factor) const {
    if (factor < 0.0) throw std::invalid_argument("scaled: factor must be >= 0");
    NoiseModel m = *this;
    switch (variant) {
        case Variant::QubitRegister:
            for (double& g : m.qubit_rates) g *= factor;
            break;
        case Variant::SingleQudit:
        case Variant::QuditArray:
            m.gamma *= factor;
            break;
        case Variant::Custom:
            for (auto& ch : m.custom) ch.rate *= factor;
            break;
    }
    return m;
}

std::vector<CollapseChannel> compile(const NoiseModel& model) {
    std::vector<CollapseChannel> out;
    const std::int64_t dim = model.dim();
    switch (model.variant) {
        case NoiseModel::Variant::QubitRegister:
            for (int i = 0; i < model.n_q; ++i) {
                const std::int64_t s = std::int64_t{1} << i;
                out.push_back({model.qubit_rates[i],
                               OperatorSpec{OperatorSpec::Form::SiteLowering, dim, s, 2, {}}});
                if (model.dephasing)
                    out.push_back({model.qubit_rates[i],
                                   OperatorSpec{OperatorSpec::Form::SiteNumber, dim, s, 2, {}}});
            }
            break;
        case NoiseModel::Variant::SingleQudit:
            out.push_back({model.gamma,
                           OperatorSpec{OperatorSpec::Form::SiteLowering, dim, 1, dim, {}}});
            break;
        case NoiseModel::Variant::QuditArray: {
            std::int64_t s = 1;
            for (int k = 0; k < model.count; ++k) {
                out.push_back({model.gamma,
                               OperatorSpec{OperatorSpec::Form::SiteLowering, dim, s, model.d, {}}});
                s *= model.d;
            }
            break;
        }
        case NoiseModel::Variant::Custom:
            out = model.custom;
            break;
    }
    return out;
}

// ------------------------------------------------------------- DensityMatrix

DensityMatrix DensityMatrix::from_pure(const StateVector& psi) {
    DensityMatrix rho;
    rho.dim = psi.dim;
    rho.a.resize(psi.dim * psi.dim);
    for (std::int64_t m = 0; m < psi.dim; ++m) {
        const Complex am = psi.amplitudes[m];
        for (std::int64_t n = 0; n < psi.dim; ++n)
            rho.a[m * psi.dim + n] = am * std::conj(psi.amplitudes[n]);
    }
    return rho;
}

DensityMatrix DensityMatrix::zero(std::int64_t dim) {
    return DensityMatrix{dim, CVector(dim * dim, Complex{0.0, 0.0})};
}

Complex DensityMatrix::trace() const {
    Complex t{0.0, 0.0};
    for (std::int64_t m = 0; m < dim; ++m) t += a[m * dim + m];
    return t;
}

double DensityMatrix::hermiticity_error() const {
    double e = 0.0;
    for (std::int64_t m = 0; m < dim; ++m)
        for (std::int64_t n = m; n < dim; ++n)
            e = std::max(e, std::abs(a[m * dim + n] - std::conj(a[n * dim + m])));
    return e;
}

// ---------------------------------------------------------- LindbladOperator

LindbladOperator::LindbladOperator(std::int64_t dim, const std::vector<CollapseChannel>& channels)
    : dim_(dim) {
    sep_diag_.assign(dim_, 0.0);
    for (const auto& ch : channels) {
        if (ch.op.dim() != dim_)
            throw std::invalid_argument("collapse channel dimension mismatch");
        if (ch.rate < 0.0) throw std::invalid_argument("collapse rates must be >= 0");
        add_channel(ch);
    }
    finalize();
}

LindbladOperator::LindbladOperator(const NoiseModel& model)
    : LindbladOperator(model.dim(), compile(model)) {}

void LindbladOperator::add_channel(const CollapseChannel& ch) {
    const double g = ch.rate;
    switch (ch.op.form) {
        case OperatorSpec::Form::SiteLowering: {
            has_site_channels_ = true;
            const std::int64_t s = ch.op.stride, l = ch.op.ldim;
            for (std::int64_t m = 0; m < dim_; ++m)
                sep_diag_[m] += 0.5 * g * static_cast<double>((m / s) % l);
            Feed f{s, l, g, {}};
            if (s == 1) {
                // factor table over columns: 0 at the top level, else sqrt(digit+1)
                f.factors.resize(dim_, 0.0);
                for (std::int64_t n = 0; n < dim_; ++n) {
                    const std::int64_t b = n % l;
                    f.factors[n] = (b + 1 < l) ? std::sqrt(double(b + 1)) : 0.0;
                }
            } else {
                f.factors.resize(l);
                for (std::int64_t k = 0; k < l; ++k) f.factors[k] = std::sqrt(double(k + 1));
            }
            feeds_.push_back(std::move(f));
            break;
        }
        case OperatorSpec::Form::SiteNumber: {
            has_site_channels_ = true;
            const std::int64_t s = ch.op.stride, l = ch.op.ldim;
            if (l == 2) {
                if (xor_weight_.empty()) xor_weight_.assign(dim_, 0.0);
                for (std::int64_t x = 0; x < dim_; ++x)
                    xor_weight_[x] += 0.5 * g * static_cast<double>((x / s) % 2);
            } else {
                // general diagonal channel: -1/2 (D_m - D_n)^2 split into a
                // separable part and a rank-one Hadamard term
                for (std::int64_t m = 0; m < dim_; ++m) {
                    const double dgt = static_cast<double>((m / s) % l);
                    sep_diag_[m] += 0.5 * g * dgt * dgt;
                }
                DiagRank1 r1;
                r1.gamma = g;
                r1.d.resize(dim_);
                for (std::int64_t m = 0; m < dim_; ++m)
                    r1.d[m] = static_cast<double>((m / s) % l);
                diag_rank1_.push_back(std::move(r1));
            }
            break;
        }
        case OperatorSpec::Form::Custom: {
            CustomChannel cc;
            cc.gamma = g;
            cc.c = ch.op.matrix;
            cc.cdc = cc.c.adjoint_times_self();
            custom_.push_back(std::move(cc));
            break;
        }
    }
    rate_max_ = std::max(rate_max_, g);
    if (g > 0.0) rate_min_pos_ = (rate_min_pos_ == 0.0) ? g : std::min(rate_min_pos_, g);
}

void LindbladOperator::finalize() {}

void LindbladOperator::apply(const DensityMatrix& rho, DensityMatrix& out, CVector& scratch) const {
    if (rho.dim != dim_) throw std::invalid_argument("apply_lindbladian: dimension mismatch");
    out.dim = dim_;
    out.a.resize(dim_ * dim_);
    apply_raw(rho.a.data(), out.a.data(), scratch);
}

void LindbladOperator::apply_raw(const Complex* rho_a, Complex* out_a, CVector& scratch) const {
    const auto& K = kern::active_ops();
    const double* xw = xor_weight_.empty() ? nullptr : xor_weight_.data();

    if (has_site_channels_) {
        for (std::int64_t m = 0; m < dim_; ++m)
            K.diag_row(out_a + m * dim_, rho_a + m * dim_, sep_diag_.data(), xw,
                       sep_diag_[m], static_cast<std::size_t>(m), static_cast<std::size_t>(dim_));
    } else {
        std::fill(out_a, out_a + dim_ * dim_, Complex{0.0, 0.0});
    }

    for (const auto& r1 : diag_rank1_) {
        for (std::int64_t m = 0; m < dim_; ++m)
            K.fma_facs(out_a + m * dim_, rho_a + m * dim_, r1.d.data(),
                       r1.gamma * r1.d[m], static_cast<std::size_t>(dim_));
    }

    for (const auto& f : feeds_) {
        if (f.stride == 1) {
            for (std::int64_t m = 0; m + 1 < dim_; ++m) {
                const std::int64_t a = m % f.ldim;
                if (a + 1 >= f.ldim) continue;
                K.fma_facs(out_a + m * dim_, rho_a + (m + 1) * dim_ + 1,
                           f.factors.data(), f.gamma * std::sqrt(double(a + 1)),
                           static_cast<std::size_t>(dim_ - 1));
            }
        } else {
            const std::int64_t s = f.stride, l = f.ldim;
            const std::int64_t blocks = dim_ / (l * s);
            for (std::int64_t m = 0; m + s < dim_; ++m) {
                const std::int64_t a = (m / s) % l;
                if (a + 1 >= l) continue;
                const Complex* src = rho_a + (m + s) * dim_;
                Complex* dst = out_a + m * dim_;
                const double ga = f.gamma * f.factors[a];
                for (std::int64_t h = 0; h < blocks; ++h)
                    for (std::int64_t b = 0; b + 1 < l; ++b) {
                        const std::int64_t c0 = (h * l + b) * s;
                        K.axpy_re(dst + c0, src + c0 + s, ga * f.factors[b],
                                  static_cast<std::size_t>(s));
                    }
            }
        }
    }

    if (!custom_.empty()) {
        scratch.assign(dim_ * dim_, Complex{0.0, 0.0});
        for (const auto& cc : custom_) {
            // B = C rho
            std::fill(scratch.begin(), scratch.end(), Complex{0.0, 0.0});
            for (std::int64_t r = 0; r < dim_; ++r)
                for (std::int64_t k = cc.c.row_ptr[r]; k < cc.c.row_ptr[r + 1]; ++k) {
                    const Complex v = cc.c.val[k];
                    const Complex* rr = rho_a + cc.c.col[k] * dim_;
                    Complex* br = scratch.data() + r * dim_;
                    for (std::int64_t j = 0; j < dim_; ++j) br[j] += v * rr[j];
                }
            // out += gamma * B C^dag
            for (std::int64_t m = 0; m < dim_; ++m) {
                const Complex* bm = scratch.data() + m * dim_;
                Complex* om = out_a + m * dim_;
                for (std::int64_t n = 0; n < dim_; ++n) {
                    Complex acc{0.0, 0.0};
                    for (std::int64_t k = cc.c.row_ptr[n]; k < cc.c.row_ptr[n + 1]; ++k)
                        acc += bm[cc.c.col[k]] * std::conj(cc.c.val[k]);
                    om[n] += cc.gamma * acc;
                }
            }
            // out -= gamma/2 (D rho + rho D), D = C^dag C
            const double hg = 0.5 * cc.gamma;
            for (std::int64_t r = 0; r < dim_; ++r)
                for (std::int64_t k = cc.cdc.row_ptr[r]; k < cc.cdc.row_ptr[r + 1]; ++k) {
                    const Complex v = cc.cdc.val[k];
                    const std::int64_t c = cc.cdc.col[k];
                    // rows: out[r][:] -= hg * v * rho[c][:]
                    const Complex* rr = rho_a + c * dim_;
                    Complex* orow = out_a + r * dim_;
                    for (std::int64_t j = 0; j < dim_; ++j) orow[j] -= hg * v * rr[j];
                    // columns: out[:][c] -= hg * rho[:][r] * v
                    for (std::int64_t j = 0; j < dim_; ++j)
                        out_a[j * dim_ + c] -= hg * rho_a[j * dim_ + r] * v;
                }
        }
    }
}

std::optional<std::vector<double>> LindbladOperator::nh_diag_rates() const {
    std::vector<double> r(dim_, 0.0);
    for (std::int64_t m = 0; m < dim_; ++m) r[m] = sep_diag_[m];
    // sep_diag_ already carries gamma/2 D^2 for every diagonal channel, and
    // xor_weight_[j] equals the dephasing part of sum gamma/2 (C^dag C)_jj
    if (!xor_weight_.empty())
        for (std::int64_t m = 0; m < dim_; ++m) r[m] += xor_weight_[m];
    for (const auto& cc : custom_) {
        if (!cc.cdc.is_diagonal()) return std::nullopt;
        for (std::int64_t m = 0; m < dim_; ++m)
            r[m] += 0.5 * cc.gamma * cc.cdc.at(m, m).real();
    }
    return r;
}

DensityMatrix apply_lindbladian(const std::vector<CollapseChannel>& channels,
                                const DensityMatrix& rho) {
    LindbladOperator op(rho.dim, channels);
    DensityMatrix out;
    CVector scratch;
    op.apply(rho, out, scratch);
    return out;
}

double min_eigenvalue(const DensityMatrix& rho) {
    Eigen::MatrixXcd m(rho.dim, rho.dim);
    for (std::int64_t r = 0; r < rho.dim; ++r)
        for (std::int64_t c = 0; c < rho.dim; ++c) m(r, c) = rho.at(r, c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// ------------------------------------------------------------------ fidelity

double fidelity_against_pure(const StateVector& target, const DensityMatrix& rho) {
    if (target.dim != rho.dim) throw std::invalid_argument("fidelity: dimension mismatch");
    return fidelity_against_pure_raw(target, rho.a.data(), rho.dim);
}

double fidelity_against_pure_raw(const StateVector& target, const Complex* rho, std::int64_t dim) {
    if (target.dim != dim) throw std::invalid_argument("fidelity: dimension mismatch");
    std::vector<std::int64_t> nz;
    nz.reserve(dim);
    for (std::int64_t j = 0; j < dim; ++j)
        if (target.amplitudes[j] != Complex{0.0, 0.0}) nz.push_back(j);
    Complex f{0.0, 0.0};
    if (static_cast<std::int64_t>(nz.size()) * static_cast<std::int64_t>(nz.size()) < dim * 64) {
        for (std::int64_t i : nz) {
            Complex inner{0.0, 0.0};
            const Complex* row = rho + i * dim;
            for (std::int64_t j : nz) inner += row[j] * target.amplitudes[j];
            f += std::conj(target.amplitudes[i]) * inner;
        }
    } else {
        const auto& K = kern::active_ops();
        CVector conj_psi(dim);
        for (std::int64_t j = 0; j < dim; ++j) conj_psi[j] = std::conj(target.amplitudes[j]);
        for (std::int64_t i = 0; i < dim; ++i) {
            // (rho psi)_i = conj( sum_j conj(rho_ij) conj(psi_j) )
            const Complex inner = std::conj(K.cdotc(rho + i * dim, conj_psi.data(),
                                                    static_cast<std::size_t>(dim)));
            f += conj_psi[i] * inner;
        }
    }
    double v = f.real();
    if (v < 0.0 && v > -1e-10) v = 0.0;
    if (v > 1.0 && v < 1.0 + 1e-10) v = 1.0;
    return v;
}

} // namespace qmemsim
