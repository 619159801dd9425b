#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "qmemsim/noise.hpp"
#include "qmemsim/rng.hpp"
#include "qmemsim/states.hpp"

using namespace qmemsim;

namespace {

using Mat = Eigen::MatrixXcd;

Mat to_dense(const CsrMatrix& m) {
    Mat d = Mat::Zero(m.rows, m.cols);
    for (std::int64_t r = 0; r < m.rows; ++r)
        for (std::int64_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) d(r, m.col[k]) += m.val[k];
    return d;
}

Mat rho_to_dense(const DensityMatrix& rho) {
    Mat d(rho.dim, rho.dim);
    for (std::int64_t m = 0; m < rho.dim; ++m)
        for (std::int64_t n = 0; n < rho.dim; ++n) d(m, n) = rho.at(m, n);
    return d;
}

// independent dense reference: sum gamma (C rho C^dag - 1/2 {C^dag C, rho})
Mat dense_lindblad(const std::vector<CollapseChannel>& channels, const Mat& rho) {
    Mat out = Mat::Zero(rho.rows(), rho.cols());
    for (const auto& ch : channels) {
        const Mat c = to_dense(ch.op.materialize());
        const Mat cdc = c.adjoint() * c;
        out += ch.rate * (c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc));
    }
    return out;
}

DensityMatrix random_hermitian(Xoshiro256pp& rng, std::int64_t dim) {
    DensityMatrix rho = DensityMatrix::zero(dim);
    for (std::int64_t m = 0; m < dim; ++m) {
        rho.at(m, m) = Complex{rng.uniform01(), 0.0};
        for (std::int64_t n = m + 1; n < dim; ++n) {
            const Complex v{rng.uniform_centered(), rng.uniform_centered()};
            rho.at(m, n) = v;
            rho.at(n, m) = std::conj(v);
        }
    }
    // normalize the trace
    Complex tr = rho.trace();
    for (auto& c : rho.a) c /= tr;
    return rho;
}

} // namespace

TEST_CASE("annihilation_matrix entries") {
    CHECK_THROWS_AS(annihilation_matrix(1), std::invalid_argument);

    const auto b2 = annihilation_matrix(2).materialize();
    CHECK(b2.at(0, 1) == Complex{1, 0});
    CHECK(b2.at(1, 0) == Complex{0, 0});
    CHECK(b2.nnz() == 1);

    const auto b4 = annihilation_matrix(4).materialize();
    CHECK(b4.at(0, 1).real() == doctest::Approx(std::sqrt(1.0)));
    CHECK(b4.at(1, 2).real() == doctest::Approx(std::sqrt(2.0)));
    CHECK(b4.at(2, 3).real() == doctest::Approx(std::sqrt(3.0)));
    CHECK(b4.nnz() == 3);  // last row empty

    // b^dag b by direct multiplication
    const Mat num = to_dense(b4).adjoint() * to_dense(b4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(std::abs(num(i, j) - (i == j ? Complex(double(i), 0) : Complex(0, 0))) < 1e-14);

    const auto n4 = number_matrix(4).materialize();
    for (int i = 0; i < 4; ++i) CHECK(n4.at(i, i).real() == doctest::Approx(double(i)));
}

TEST_CASE("compile channel counts") {
    CHECK(compile(NoiseModel::qubit_register(3, 1.0, true)).size() == 6);
    CHECK(compile(NoiseModel::single_qudit(16, 1.0)).size() == 1);
    CHECK(compile(NoiseModel::qubit_register(2, 1.0, false)).size() == 2);
    CHECK(compile(NoiseModel::qudit_array(2, 8, 1.0)).size() == 2);
}

TEST_CASE("noise model json round trip") {
    const auto m = NoiseModel::qubit_register(3, 0.5, true);
    const auto m2 = NoiseModel::from_json(m.to_json());
    CHECK(m2.n_q == 3);
    CHECK(m2.qubit_rates[1] == 0.5);
    CHECK(m2.dephasing);
    const auto q = NoiseModel::from_json(R"({"variant": "single-qudit", "d": 16, "gamma": 2.0})");
    CHECK(q.d == 16);
    CHECK(q.gamma == 2.0);
    CHECK_THROWS_AS(NoiseModel::from_json(R"({"variant": "nope"})"), std::invalid_argument);
}

TEST_CASE("apply_lindbladian basics") {
    SUBCASE("zero rates give the zero matrix") {
        const auto model = NoiseModel::single_qudit(8, 0.0);
        const auto rho = DensityMatrix::from_pure(equal_superposition_state(8));
        const auto out = apply_lindbladian(compile(model), rho);
        for (const auto& c : out.a) CHECK(std::abs(c) == 0.0);
    }

    SUBCASE("single excited qubit under amplitude damping") {
        const auto rho = DensityMatrix::from_pure(fock_state(2, 1));
        const auto out = apply_lindbladian(compile(NoiseModel::qubit_register(1, 1.0, false)), rho);
        CHECK(out.at(0, 0).real() == doctest::Approx(1.0));
        CHECK(out.at(1, 1).real() == doctest::Approx(-1.0));
        CHECK(std::abs(out.at(0, 1)) < 1e-15);
    }

    SUBCASE("qudit top level decays at rate 3 gamma for d=4") {
        const auto rho = DensityMatrix::from_pure(fock_state(4, 3));
        const auto out = apply_lindbladian(compile(NoiseModel::single_qudit(4, 1.0)), rho);
        CHECK(out.at(3, 3).real() == doctest::Approx(-3.0));
        CHECK(out.at(2, 2).real() == doctest::Approx(3.0));  // fed from above
    }

    SUBCASE("dimension mismatch") {
        const auto rho = DensityMatrix::from_pure(fock_state(4, 1));
        CHECK_THROWS_AS(apply_lindbladian(compile(NoiseModel::single_qudit(8, 1.0)), rho),
                        std::invalid_argument);
    }
}

TEST_CASE("lindbladian output stays hermitian and traceless") {
    Xoshiro256pp rng(31);
    for (const auto& model :
         {NoiseModel::qubit_register(3, 1.0, true), NoiseModel::single_qudit(8, 1.0),
          NoiseModel::qudit_array(2, 4, 0.7)}) {
        const auto rho = random_hermitian(rng, model.dim());
        const auto out = apply_lindbladian(compile(model), rho);
        CHECK(out.hermiticity_error() < 1e-12);
        CHECK(std::abs(out.trace()) < 1e-12);
    }
}

TEST_CASE("matrix-free kernels match the dense reference") {
    Xoshiro256pp rng(17);
    const std::vector<NoiseModel> models = {
        NoiseModel::qubit_register(4, 1.0, true),
        NoiseModel::qubit_register(4, 0.3, false),
        NoiseModel::qubit_register(6, 1.0, true),
        NoiseModel::qubit_register(4, {0.1, 0.7, 1.3, 0.0}, true),
        NoiseModel::single_qudit(16, 1.0),
        NoiseModel::single_qudit(64, 0.5),
        NoiseModel::qudit_array(2, 8, 1.0),
        NoiseModel::qudit_array(3, 4, 0.9),
    };
    for (const auto& model : models) {
        CAPTURE(model.describe());
        const auto rho = random_hermitian(rng, model.dim());
        const auto channels = compile(model);
        const auto fast = apply_lindbladian(channels, rho);
        const Mat ref = dense_lindblad(channels, rho_to_dense(rho));
        double err = 0.0;
        for (std::int64_t m = 0; m < model.dim(); ++m)
            for (std::int64_t n = 0; n < model.dim(); ++n)
                err = std::max(err, std::abs(fast.at(m, n) - ref(m, n)));
        CHECK(err < 1e-12);
    }
}

TEST_CASE("custom csr channels match the dense reference") {
    Xoshiro256pp rng(23);
    const std::int64_t d = 8;
    // a two-level correlated-damping style operator plus an off-diagonal custom
    auto op1 = annihilation_matrix(d).materialize();
    std::vector<std::tuple<std::int64_t, std::int64_t, Complex>> trips;
    for (std::int64_t r = 0; r < d; ++r)
        for (std::int64_t k = op1.row_ptr[r]; k < op1.row_ptr[r + 1]; ++k)
            trips.emplace_back(r, op1.col[k], op1.val[k]);
    trips.emplace_back(0, 5, Complex{0.3, -0.4});
    trips.emplace_back(6, 1, Complex{0.0, 1.1});
    const auto custom = CsrMatrix::from_triplets(d, d, trips);

    std::vector<CollapseChannel> channels;
    channels.push_back({0.8, OperatorSpec{OperatorSpec::Form::Custom, d, 1, d, custom}});
    const auto model = NoiseModel::custom_channels(d, channels);

    const auto rho = random_hermitian(rng, d);
    const auto fast = apply_lindbladian(compile(model), rho);
    const Mat ref = dense_lindblad(channels, rho_to_dense(rho));
    double err = 0.0;
    for (std::int64_t m = 0; m < d; ++m)
        for (std::int64_t n = 0; n < d; ++n)
            err = std::max(err, std::abs(fast.at(m, n) - ref(m, n)));
    CHECK(err < 1e-12);
    CHECK(fast.hermiticity_error() < 1e-12);
    CHECK(std::abs(fast.trace()) < 1e-12);
}

TEST_CASE("qudit-size number channels match the dense reference") {
    // dephasing with a d-level number operator exercises the rank-one diagonal path
    Xoshiro256pp rng(53);
    const std::int64_t d = 12;
    std::vector<CollapseChannel> channels;
    channels.push_back({0.7, annihilation_matrix(d)});
    channels.push_back({0.4, number_matrix(d)});
    const auto rho = random_hermitian(rng, d);
    const auto fast = apply_lindbladian(channels, rho);
    const Mat ref = dense_lindblad(channels, rho_to_dense(rho));
    double err = 0.0;
    for (std::int64_t m = 0; m < d; ++m)
        for (std::int64_t n = 0; n < d; ++n)
            err = std::max(err, std::abs(fast.at(m, n) - ref(m, n)));
    CHECK(err < 1e-12);

    const LindbladOperator op(d, channels);
    const auto rates = op.nh_diag_rates();
    REQUIRE(rates.has_value());
    // R_j = 0.7/2 * j (damping) + 0.4/2 * j^2 (number-operator dephasing)
    for (std::int64_t j : {0, 3, 11})
        CHECK((*rates)[j] == doctest::Approx(0.35 * j + 0.2 * j * j).epsilon(1e-13));
}

TEST_CASE("qubit relabeling commutes with the lindbladian") {
    Xoshiro256pp rng(41);
    const int n_q = 3;
    const std::int64_t dim = 8;
    const auto model = NoiseModel::qubit_register(n_q, 1.0, true);
    const auto rho = random_hermitian(rng, dim);

    const int perm[3] = {2, 0, 1};  // bit i of the new index comes from bit perm[i]
    auto permute_index = [&](std::int64_t j) {
        std::int64_t out = 0;
        for (int i = 0; i < n_q; ++i)
            if ((j >> perm[i]) & 1) out |= std::int64_t{1} << i;
        return out;
    };
    DensityMatrix prho = DensityMatrix::zero(dim);
    for (std::int64_t m = 0; m < dim; ++m)
        for (std::int64_t n = 0; n < dim; ++n)
            prho.at(permute_index(m), permute_index(n)) = rho.at(m, n);

    const auto out = apply_lindbladian(compile(model), rho);
    const auto pout = apply_lindbladian(compile(model), prho);
    double err = 0.0;
    for (std::int64_t m = 0; m < dim; ++m)
        for (std::int64_t n = 0; n < dim; ++n)
            err = std::max(err,
                           std::abs(pout.at(permute_index(m), permute_index(n)) - out.at(m, n)));
    CHECK(err < 1e-13);
}

TEST_CASE("qudit off-diagonal decay rate is (m+n)/2 without feeding") {
    const std::int64_t d = 16;
    for (std::int64_t n : {3, 9, 15}) {
        DensityMatrix rho = DensityMatrix::zero(d);
        rho.at(0, n) = Complex{0.5, 0.25};
        rho.at(n, 0) = std::conj(rho.at(0, n));
        const auto out = apply_lindbladian(compile(NoiseModel::single_qudit(d, 1.0)), rho);
        const Complex expected = -0.5 * static_cast<double>(n) * rho.at(0, n);
        CHECK(std::abs(out.at(0, n) - expected) < 1e-13);
    }
}

TEST_CASE("fidelity_against_pure") {
    const auto psi = ghz_state(3);
    SUBCASE("pure projector gives 1") {
        CHECK(fidelity_against_pure(psi, DensityMatrix::from_pure(psi)) == doctest::Approx(1.0));
    }
    SUBCASE("maximally mixed gives 1/d") {
        DensityMatrix mixed = DensityMatrix::zero(8);
        for (int m = 0; m < 8; ++m) mixed.at(m, m) = Complex{1.0 / 8, 0};
        CHECK(fidelity_against_pure(psi, mixed) == doctest::Approx(1.0 / 8));
    }
    SUBCASE("fock population under qudit damping decays as e^{-n t}") {
        // rho(t) for an initial |n><n| has rho_nn = e^{-n t}; fidelity reads it out
        const auto f = fock_state(16, 5);
        DensityMatrix rho = DensityMatrix::zero(16);
        const double t = 0.3;
        rho.at(5, 5) = Complex{std::exp(-5.0 * t), 0};
        rho.at(4, 4) = Complex{1.0 - std::exp(-5.0 * t), 0};  // rest of the population
        CHECK(fidelity_against_pure(f, rho) == doctest::Approx(std::exp(-5.0 * t)));
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(fidelity_against_pure(ghz_state(2), DensityMatrix::zero(8)),
                        std::invalid_argument);
    }
    SUBCASE("dense path matches the sparse path") {
        const auto dense_state = random_arbitrary_state(128, 3);
        Xoshiro256pp rng(5);
        const auto rho = random_hermitian(rng, 128);
        // sparse path: force by zeroing most amplitudes
        StateVector sparse = dense_state;
        for (int j = 8; j < 128; ++j) sparse.amplitudes[j] = 0;
        double nn = sparse.norm();
        for (auto& c : sparse.amplitudes) c /= nn;
        double direct = 0.0;
        {
            Complex acc{0, 0};
            for (int i = 0; i < 128; ++i)
                for (int j = 0; j < 128; ++j)
                    acc += std::conj(sparse.amplitudes[i]) * rho.at(i, j) * sparse.amplitudes[j];
            direct = acc.real();
        }
        CHECK(fidelity_against_pure(sparse, rho) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("nh diag rates cover the standard models") {
    const auto op = LindbladOperator(NoiseModel::qubit_register(3, 1.0, true));
    const auto rates = op.nh_diag_rates();
    REQUIRE(rates.has_value());
    // R_j = gamma * w(j) with dephasing included
    CHECK((*rates)[0] == doctest::Approx(0.0));
    CHECK((*rates)[5] == doctest::Approx(2.0));
    CHECK((*rates)[7] == doctest::Approx(3.0));

    const auto opq = LindbladOperator(NoiseModel::single_qudit(8, 2.0));
    const auto rq = opq.nh_diag_rates();
    REQUIRE(rq.has_value());
    CHECK((*rq)[5] == doctest::Approx(5.0));  // gamma j / 2 = 2*5/2
}
