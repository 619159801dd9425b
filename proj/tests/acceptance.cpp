// Acceptance suite: one labelled check per criterion, PASS/FAIL lines with the
// measured values, nonzero exit when anything fails.
//
//   --profile ci     fast variants (small dimensions where the criterion allows)
//   --profile paper  full-scale runs (dim 2^10 table, ensembles, sweeps)
//
// Known-red sub-checks in the paper profile are deliberate: the reference
// values for the GHZ/Fock table rows, the arbitrary-ensemble simulated mean,
// the GHZ simulated/predicted cap, and the coherent reordering direction are
// not reachable from the stated model equations (see README); the measured
// values printed alongside are the exact-dynamics results, cross-checked
// against dense superoperator exponentials and an independent integrator.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "qmemsim/experiments.hpp"
#include "qmemsim/rng.hpp"

using namespace qmemsim;

namespace {

struct Checker {
    int passes = 0;
    int failures = 0;

    void check(const char* id, bool ok, const std::string& detail) {
        std::printf("[%s] %-8s %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
        std::fflush(stdout);
        (ok ? passes : failures)++;
    }
    void skip(const char* id, const char* why) {
        std::printf("[SKIP] %-8s %s\n", id, why);
        std::fflush(stdout);
    }
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double max_abs_deviation(const FidelityTrace& trace, double rate) {
    double dev = 0.0;
    for (const auto& [t, f] : trace.samples)
        dev = std::max(dev, std::abs(f - std::exp(-rate * t)));
    return dev;
}

// ---- criterion 1: GHZ closed form -------------------------------------------
void criterion1(Checker& ck) {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int n = 1; n <= 12; ++n) {
        const auto g = ghz_state(n);
        const auto p = ratio_first_order(g, Layout::qubit_register(n),
                                         Layout::single_qudit(std::int64_t{1} << n));
        worst = std::max(worst,
                         std::abs(p.first_order - ghz_ratio_closed_form(n)) / ghz_ratio_closed_form(n));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ck.check("C1", worst <= 1e-14 && secs < 1.0,
             fmt("ghz first-order vs closed form, n=1..12: max rel dev %.2e, %.3fs", worst, secs));
}

// ---- criterion 2: Fock exactness --------------------------------------------
void criterion2(Checker& ck, bool paper) {
    struct Case {
        std::int64_t n, d;
    };
    std::vector<Case> cases = {{8, 16}, {64, 128}};
    if (paper) cases.push_back({512, 1024});
    for (const auto& c : cases) {
        const auto model = NoiseModel::single_qudit(c.d, 1.0);
        const auto psi = fock_state(c.d, c.n);
        const double t_end = std::log(2.0) / static_cast<double>(c.n);
        const auto cmp = run_nh_comparison(psi, model, t_end);
        const double dev_lind = max_abs_deviation(cmp.lindblad, static_cast<double>(c.n));
        double dev_pair = 0.0;
        for (std::size_t i = 0; i < cmp.nh.samples.size(); ++i)
            dev_pair = std::max(dev_pair, std::abs(cmp.nh.samples[i].second -
                                                   cmp.lindblad.samples[i].second));
        ck.check("C2", dev_lind <= 1e-7 && dev_pair <= 1e-7,
                 fmt("fock n=%lld d=%lld: |F - e^{-nt}| = %.2e, |NH - Lindblad| = %.2e",
                     static_cast<long long>(c.n), static_cast<long long>(c.d), dev_lind, dev_pair));
    }
}

// ---- criterion 3: Table I deterministic rows --------------------------------
void criterion3(Checker& ck, int jobs) {
    TableOptions opt;
    opt.exponent = 10;
    opt.ensemble_count = 0;
    opt.jobs = jobs;
    const auto table = run_table(opt);
    const char* names[5] = {"GHZ", "W", "Equal", "Fock", "Coherent"};
    const double pred_expect[5] = {51.15, 51.15, 51.15, 256.0, 51.29};
    const double sim_expect[5] = {51.67, 44.62, 8.92, 366.0, 0.96};
    for (int i = 0; i < 5; ++i) {
        const auto& row = table.deterministic[i];
        const bool coherent = i == 4;
        const double ptol = coherent ? 5e-3 : 1e-12;
        const bool pred_ok = std::abs(row.predicted_first / pred_expect[i] - 1.0) <= ptol;
        ck.check("C3", pred_ok,
                 fmt("%s predicted %.6f vs %.2f (tol %s)", names[i], row.predicted_first,
                     pred_expect[i], coherent ? "0.5%" : "exact"));
        const double rel = std::abs(row.simulated / sim_expect[i] - 1.0);
        ck.check("C3", rel <= 0.05,
                 fmt("%s simulated %.4f vs %.2f +-5%% (off by %.1f%%)", names[i], row.simulated,
                     sim_expect[i], 100.0 * rel));
    }
}

// ---- criterion 4: Table I ensemble rows --------------------------------------
void criterion4(Checker& ck, int jobs) {
    TableOptions opt;
    opt.exponent = 10;
    opt.ensemble_count = 10;
    opt.seed = 20250801;
    opt.jobs = jobs;
    const auto table = run_table(opt);
    for (const auto& e : table.ensembles) {
        if (e.label == "Arbitrary") {
            const bool pred_ok = std::abs(e.pred_mean - 51.53) <= 3 * 0.38;
            const bool sim_ok = std::abs(e.sim_mean - 49.08) <= 3 * 0.42;
            ck.check("C4", pred_ok,
                     fmt("arbitrary mean predicted %.3f vs 51.53 +- %.2f", e.pred_mean, 3 * 0.38));
            ck.check("C4", sim_ok,
                     fmt("arbitrary mean simulated %.3f vs 49.08 +- %.2f", e.sim_mean, 3 * 0.42));
        } else if (e.label == "Unentangled") {
            const bool sim_ok = std::abs(e.sim_mean - 86.15) <= 3 * 20.89;
            const bool pred_ok = std::abs(e.pred_mean - 58.93) <= 3 * 9.32;
            ck.check("C4", sim_ok,
                     fmt("unentangled mean simulated %.3f vs 86.15 +- %.2f", e.sim_mean, 3 * 20.89));
            ck.check("C4", pred_ok,
                     fmt("unentangled mean predicted %.3f vs 58.93 +- %.2f", e.pred_mean, 3 * 9.32));
        }
    }
}

// ---- criterion 5: Fig. 2 trend ------------------------------------------------
void criterion5(Checker& ck, bool paper, int jobs) {
    std::vector<int> ns;
    for (int n = 2; n <= (paper ? 10 : 5); ++n) ns.push_back(n);
    const auto reports = run_ghz_sweep(ns, 0.75, {}, jobs);
    bool monotone = true, above = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (i > 0 && reports[i].simulated <= reports[i - 1].simulated) monotone = false;
        if (reports[i].simulated < reports[i].predicted_first) above = false;
    }
    ck.check("C5", monotone, fmt("ghz simulated ratio monotone over n=2..%d", ns.back()));
    ck.check("C5", above, "ghz simulated ratio >= first-order prediction everywhere");
    if (paper) {
        const double q = reports.back().simulated / reports.back().predicted_first;
        ck.check("C5", q <= 1.15,
                 fmt("ghz n=10 simulated/predicted %.4f (= %.3f / %.2f) <= 1.15", q,
                     reports.back().simulated, reports.back().predicted_first));
    }
}

// ---- criterion 6: dim-16 worked example ---------------------------------------
void criterion6(Checker& ck, int jobs) {
    // injected moments from the worked example
    const double injected = 8.16 / (2.0 * 2.08);
    ck.check("C6", std::abs(injected - 1.96) <= 0.01,
             fmt("injected moments 8.16, 2.08 -> %.4f vs 1.96 +- 0.01", injected));

    std::vector<SweepJob> sweep;
    for (int i = 0; i < 10; ++i)
        sweep.push_back({random_arbitrary_state(16, 4200 + static_cast<std::uint64_t>(i)),
                         NoiseModel::qubit_register(4, 1.0, true), NoiseModel::single_qudit(16, 1.0)});
    const auto reports = run_ftar_sweep(sweep, {0.75}, {}, jobs);
    double acc = 0.0;
    for (const auto& r : reports) acc += r.simulated / r.predicted_first;
    const double mean = acc / static_cast<double>(reports.size());
    ck.check("C6", mean >= 1.0 && mean <= 1.6,
             fmt("dim-16 ensemble mean simulated/predicted %.4f in [1.0, 1.6]", mean));
}

// ---- criterion 7: target-fidelity insensitivity --------------------------------
void criterion7(Checker& ck, bool paper, int jobs) {
    std::vector<SweepJob> sweep;
    const int n_lo = 4, n_hi = paper ? 10 : 6;
    for (int n = n_lo; n <= n_hi; ++n)
        sweep.push_back({ghz_state(n), NoiseModel::qubit_register(n, 1.0, true),
                         NoiseModel::single_qudit(std::int64_t{1} << n, 1.0)});
    const auto reports = run_ftar_sweep(sweep, {0.7, 0.75, 0.9}, {}, jobs);
    double worst = 0.0;
    for (std::size_t s = 0; s < sweep.size(); ++s) {
        const double r1 = reports[s].simulated;
        const double r2 = reports[s + sweep.size()].simulated;
        const double r3 = reports[s + 2 * sweep.size()].simulated;
        for (double a : {r1, r2, r3})
            for (double b : {r1, r2, r3})
                worst = std::max(worst, std::abs(a / b - 1.0));
    }
    ck.check("C7", worst < 0.10,
             fmt("ghz n=%d..%d ratios at F_t in {0.7,0.75,0.9}: max pairwise dev %.2f%%", n_lo,
                 n_hi, 100.0 * worst));
}

// ---- criterion 8: reordering directions ----------------------------------------
void criterion8(Checker& ck, bool paper, int jobs) {
    const int n_lo = paper ? 6 : 4;
    const int n_hi = paper ? 10 : 6;
    struct Item {
        std::string label;
        StateVector state;
        NoiseModel model;
    };
    std::vector<Item> items;
    for (int n = n_lo; n <= n_hi; ++n) {
        items.push_back({fmt("ghz n=%d", n), ghz_state(n),
                         NoiseModel::single_qudit(std::int64_t{1} << n, 1.0)});
        items.push_back({fmt("w n=%d", n), w_state(n),
                         NoiseModel::single_qudit(std::int64_t{1} << n, 1.0)});
    }
    std::vector<ReorderStudy> studies(items.size());
    {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(items.size())));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= items.size()) return;
                    studies[i] = run_reorder(items[i].state, items[i].model, 0.75);
                }
            });
        for (auto& th : pool) th.join();
    }
    bool all_gain = true, growing = true;
    double prev_ghz = 0.0, prev_w = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!studies[i].gain || *studies[i].gain <= 1.0) all_gain = false;
        if (!studies[i].gain) continue;
        double& prev = (i % 2 == 0) ? prev_ghz : prev_w;
        if (*studies[i].gain <= prev) growing = false;
        prev = *studies[i].gain;
    }
    ck.check("C8", all_gain, fmt("ghz and w reorder gains > 1 for n=%d..%d (ghz n=%d gain %.1f)",
                                 n_lo, n_hi, n_hi, prev_ghz));
    ck.check("C8", growing, "reorder gains grow with n_q");

    if (paper) {
        const std::int64_t cd = 1024;
        const auto coh = coherent_state(cd, std::sqrt(static_cast<double>(cd) / 2.0));
        const auto study = run_reorder(coh, NoiseModel::single_qudit(cd, 1.0), 0.75);
        if (study.gain)
            ck.check("C8", *study.gain < 1.0,
                     fmt("coherent d=%lld reorder gain %.4f < 1", static_cast<long long>(cd),
                         *study.gain));
        else
            ck.check("C8", false, "coherent reorder produced no crossing");
    } else {
        ck.skip("C8", "coherent reorder direction runs in the paper profile");
    }

    const auto sorted_study =
        run_reorder(equal_superposition_state(64), NoiseModel::single_qudit(64, 1.0), 0.75);
    ck.check("C8",
             sorted_study.gain && *sorted_study.gain >= 0.95 && *sorted_study.gain <= 1.05,
             fmt("already-sorted state gain %.6f in [0.95, 1.05]",
                 sorted_study.gain ? *sorted_study.gain : -1.0));
}

// ---- criterion 9: property suites ----------------------------------------------
Eigen::MatrixXcd dense_reference(const std::vector<CollapseChannel>& channels,
                                 const Eigen::MatrixXcd& rho) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
    for (const auto& ch : channels) {
        const auto m = ch.op.materialize();
        Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
        for (std::int64_t r = 0; r < m.rows; ++r)
            for (std::int64_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
                c(r, m.col[k]) = m.val[k];
        const Eigen::MatrixXcd cdc = c.adjoint() * c;
        out += ch.rate * (c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc));
    }
    return out;
}

void criterion9(Checker& ck) {
    const auto start = std::chrono::steady_clock::now();

    double trace_drift = 0.0;
    for (const auto& [model, state] :
         std::vector<std::pair<NoiseModel, StateVector>>{
             {NoiseModel::qubit_register(3, 1.0, true), w_state(3)},
             {NoiseModel::single_qudit(16, 1.0), equal_superposition_state(16)}}) {
        evolve(model, state, 1.0, {}, [&](double, const Complex* rho, std::int64_t dim) {
            Complex tr{0, 0};
            for (std::int64_t m = 0; m < dim; ++m) tr += rho[m * dim + m];
            trace_drift = std::max(trace_drift, std::abs(tr - Complex{1, 0}));
        });
    }
    ck.check("C9", trace_drift <= 1e-8, fmt("trace drift along trajectories %.2e <= 1e-8",
                                            trace_drift));

    Xoshiro256pp rng(77);
    double herm = 0.0, dense_err = 0.0;
    for (const auto& model :
         {NoiseModel::qubit_register(5, 1.0, true), NoiseModel::qubit_register(6, 0.4, false),
          NoiseModel::single_qudit(64, 1.0), NoiseModel::qudit_array(3, 4, 0.8),
          NoiseModel::qubit_register(6, {0.1, 0.9, 0.3, 1.2, 0.0, 2.0}, true)}) {
        const std::int64_t d = model.dim();
        DensityMatrix rho = DensityMatrix::zero(d);
        Eigen::MatrixXcd dref(d, d);
        for (std::int64_t m = 0; m < d; ++m)
            for (std::int64_t n = m; n < d; ++n) {
                const Complex v = m == n ? Complex{rng.uniform01(), 0}
                                         : Complex{rng.uniform_centered(), rng.uniform_centered()};
                rho.at(m, n) = v;
                rho.at(n, m) = std::conj(v);
            }
        Complex tr = rho.trace();
        for (auto& c : rho.a) c /= tr;
        for (std::int64_t m = 0; m < d; ++m)
            for (std::int64_t n = 0; n < d; ++n) dref(m, n) = rho.at(m, n);
        const auto channels = compile(model);
        const auto fast = apply_lindbladian(channels, rho);
        herm = std::max(herm, fast.hermiticity_error());
        const auto ref = dense_reference(channels, dref);
        for (std::int64_t m = 0; m < d; ++m)
            for (std::int64_t n = 0; n < d; ++n)
                dense_err = std::max(dense_err, std::abs(fast.at(m, n) - ref(m, n)));
    }
    ck.check("C9", herm <= 1e-12, fmt("lindbladian hermiticity %.2e <= 1e-12", herm));
    ck.check("C9", dense_err <= 1e-12,
             fmt("matrix-free vs dense reference (dim <= 64) %.2e <= 1e-12", dense_err));

    bool jensen = true;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto st = random_arbitrary_state(64, 5000 + s);
        const auto md = moments(st, Layout::single_qudit(64), 2);
        const auto mb = moments(st, Layout::qubit_register(6), 2);
        if (md.second() < md.mean() * md.mean() - 1e-12) jensen = false;
        if (mb.second() < mb.mean() * mb.mean() - 1e-12) jensen = false;
    }
    ck.check("C9", jensen, "moment jensen inequality on 100 random states");

    const auto st = random_arbitrary_state(16, 31);
    const auto r1 = run_ratio(st, NoiseModel::qubit_register(4, 1.0, true),
                              NoiseModel::single_qudit(16, 1.0), 0.75);
    const auto r2 = run_ratio(st, NoiseModel::qubit_register(4, 2.0, true),
                              NoiseModel::single_qudit(16, 2.0), 0.75);
    const double resc = std::abs(r2.simulated - r1.simulated) / r1.simulated;
    ck.check("C9", resc <= 1e-6, fmt("gamma-rescaling ratio invariance %.2e <= 1e-6", resc));

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ck.check("C9", secs < 120.0, fmt("property suite runtime %.1fs < 120s", secs));
}

} // namespace

int main(int argc, char** argv) {
    std::string profile = "ci";
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 2;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--profile") && i + 1 < argc)
            profile = argv[++i];
        else if (!std::strcmp(argv[i], "--jobs") && i + 1 < argc)
            jobs = std::atoi(argv[++i]);
        else {
            std::fprintf(stderr, "usage: acceptance [--profile ci|paper] [--jobs N]\n");
            return 2;
        }
    }
    const bool paper = profile == "paper";
    std::printf("acceptance profile: %s (jobs %d)\n", profile.c_str(), jobs);

    Checker ck;
    criterion1(ck);
    criterion2(ck, paper);
    if (paper)
        criterion3(ck, jobs);
    else
        ck.skip("C3", "table rows at dim 2^10 run in the paper profile");
    if (paper)
        criterion4(ck, jobs);
    else
        ck.skip("C4", "ensemble rows at dim 2^10 run in the paper profile");
    criterion5(ck, paper, jobs);
    criterion6(ck, jobs);
    criterion7(ck, paper, jobs);
    criterion8(ck, paper, jobs);
    criterion9(ck);

    std::printf("acceptance summary: %d passed, %d failed\n", ck.passes, ck.failures);
    return ck.failures == 0 ? 0 : 1;
}
