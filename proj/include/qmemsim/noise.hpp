#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qmemsim/states.hpp"
#include "qmemsim/types.hpp"

namespace qmemsim {

// Minimal complex CSR matrix, used for custom collapse operators and for
// materializing symbolic operators in tests.
struct CsrMatrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<std::int64_t> row_ptr;  // size rows+1
    std::vector<std::int64_t> col;
    CVector val;

    static CsrMatrix from_triplets(std::int64_t rows, std::int64_t cols,
                                   std::vector<std::tuple<std::int64_t, std::int64_t, Complex>> trips);
    Complex at(std::int64_t r, std::int64_t c) const;
    std::int64_t nnz() const { return static_cast<std::int64_t>(val.size()); }
    bool is_diagonal() const;
    CsrMatrix adjoint_times_self() const;  // C^dag C
};

// Symbolic collapse operator. Site forms address one tensor factor of the
// index lattice (stride = product of lower-site dims, ldim = that factor's
// dimension); a single qudit is the degenerate site {stride 1, ldim total_dim}.
struct OperatorSpec {
    enum class Form { SiteLowering, SiteNumber, Custom };
    Form form = Form::SiteLowering;
    std::int64_t total_dim = 0;
    std::int64_t stride = 1;
    std::int64_t ldim = 2;
    CsrMatrix matrix;  // Custom only

    std::int64_t dim() const { return total_dim; }
    CsrMatrix materialize() const;  // explicit sparse matrix of this operator
};

// lowering operator of a d-level system: b[i, i+1] = sqrt(i+1), last row zero
OperatorSpec annihilation_matrix(std::int64_t d);
// number operator b^dag b = diag(0, 1, ..., d-1)
OperatorSpec number_matrix(std::int64_t d);

struct CollapseChannel {
    double rate = 0.0;
    OperatorSpec op;
};

struct NoiseModel {
    enum class Variant { QubitRegister, SingleQudit, QuditArray, Custom };
    Variant variant = Variant::SingleQudit;

    // QubitRegister
    int n_q = 0;
    std::vector<double> qubit_rates;  // size n_q
    bool dephasing = true;

    // SingleQudit / QuditArray
    std::int64_t d = 0;
    int count = 0;
    double gamma = 1.0;

    // Custom
    std::int64_t custom_dim = 0;
    std::vector<CollapseChannel> custom;

    static NoiseModel qubit_register(int n_q, double gamma = 1.0, bool dephasing = true);
    static NoiseModel qubit_register(int n_q, std::vector<double> rates, bool dephasing = true);
    static NoiseModel single_qudit(std::int64_t d, double gamma = 1.0);
    static NoiseModel qudit_array(int count, std::int64_t d_each, double gamma = 1.0);
    static NoiseModel custom_channels(std::int64_t dim, std::vector<CollapseChannel> channels);

    std::int64_t dim() const;
    std::string describe() const;
    std::string to_json() const;
    static NoiseModel from_json(const std::string& text);
    // uniform rescaling of every rate in the model
    NoiseModel scaled(double factor) const;
};

// expand a model into its collapse channels (gamma_i, C_i)
std::vector<CollapseChannel> compile(const NoiseModel& model);

struct DensityMatrix {
    std::int64_t dim = 0;
    CVector a;  // row-major dim x dim

    static DensityMatrix from_pure(const StateVector& psi);
    static DensityMatrix zero(std::int64_t dim);
    Complex& at(std::int64_t m, std::int64_t n) { return a[m * dim + n]; }
    const Complex& at(std::int64_t m, std::int64_t n) const { return a[m * dim + n]; }
    Complex trace() const;
    double hermiticity_error() const;  // max |rho - rho^dag| element
};

// Matrix-free action of sum_i gamma_i (C_i rho C_i^dag - 1/2 {C_i^dag C_i, rho}).
// Structured channels (site lowering/number) use strided kernels over the index
// lattice; custom channels fall back to CSR products with a dense scratch.
class LindbladOperator {
public:
    LindbladOperator(std::int64_t dim, const std::vector<CollapseChannel>& channels);
    explicit LindbladOperator(const NoiseModel& model);

    std::int64_t dim() const { return dim_; }
    // out = L[rho]; scratch grows on demand (only custom channels use it)
    void apply(const DensityMatrix& rho, DensityMatrix& out, CVector& scratch) const;
    // same action on dim x dim row-major buffers (the integrator's flat state)
    void apply_raw(const Complex* rho, Complex* out, CVector& scratch) const;

    // diagonal of sum_i (gamma_i/2) C_i^dag C_i when every C_i^dag C_i is
    // diagonal in the computational basis (the NH decay rates); nullopt otherwise
    std::optional<std::vector<double>> nh_diag_rates() const;

    double rate_max() const { return rate_max_; }
    double rate_min_positive() const { return rate_min_pos_; }

private:
    struct Feed {
        std::int64_t stride;
        std::int64_t ldim;
        double gamma;
        std::vector<double> factors;  // sqrt table: per column for stride 1, per digit otherwise
    };
    struct DiagRank1 {
        double gamma;
        std::vector<double> d;
    };
    struct CustomChannel {
        double gamma;
        CsrMatrix c;
        CsrMatrix cdc;
    };
    std::int64_t dim_ = 0;
    bool has_site_channels_ = false;
    std::vector<double> sep_diag_;    // separable diagonal coefficient, per index
    std::vector<double> xor_weight_;  // qubit-dephasing table, indexed by m^n (empty if unused)
    std::vector<Feed> feeds_;
    std::vector<DiagRank1> diag_rank1_;
    std::vector<CustomChannel> custom_;
    double rate_max_ = 0.0;
    double rate_min_pos_ = 0.0;

    void add_channel(const CollapseChannel& ch);
    void finalize();
};

// convenience wrapper matching the operation contract: derivative = L[rho]
DensityMatrix apply_lindbladian(const std::vector<CollapseChannel>& channels,
                                const DensityMatrix& rho);

// smallest eigenvalue of a Hermitian density matrix; integration error may
// drive it slightly negative (tolerated to -1e-8 and reported, never corrected)
double min_eigenvalue(const DensityMatrix& rho);

// <psi| rho |psi>, clamped to [0,1] when within 1e-10 of the boundary
double fidelity_against_pure(const StateVector& target, const DensityMatrix& rho);
double fidelity_against_pure_raw(const StateVector& target, const Complex* rho, std::int64_t dim);

} // namespace qmemsim
