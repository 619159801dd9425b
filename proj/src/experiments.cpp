#include "qmemsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

namespace qmemsim {
namespace {

// index-parallel map with deterministic placement; exceptions rethrown
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

std::optional<Layout> layout_of(const NoiseModel& m) {
    switch (m.variant) {
        case NoiseModel::Variant::QubitRegister:
            return Layout::qubit_register(m.n_q, m.dephasing);
        case NoiseModel::Variant::SingleQudit:
            return Layout::single_qudit(m.d);
        case NoiseModel::Variant::QuditArray:
            return Layout::qudit_array(m.count, m.d);
        case NoiseModel::Variant::Custom:
            return std::nullopt;
    }
    return std::nullopt;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

EnsembleSummary summarize(const std::string& label, const std::vector<RatioReport>& members) {
    std::vector<double> sims, preds;
    for (const auto& r : members) {
        sims.push_back(r.simulated);
        preds.push_back(r.predicted_first);
    }
    EnsembleSummary e;
    e.label = label;
    e.count = static_cast<int>(members.size());
    e.sim_mean = mean_of(sims);
    e.sim_std = sample_std(sims, e.sim_mean);
    e.pred_mean = mean_of(preds);
    e.pred_std = sample_std(preds, e.pred_mean);
    return e;
}

} // namespace

std::string config_digest(const IntegratorConfig& config) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "rtol=%.17g;atol=%.17g;h0=%.17g;hmax=%.17g;max=%lld",
                  config.rtol, config.atol, config.initial_step, config.max_step,
                  static_cast<long long>(config.max_steps));
    // FNV-1a 64
    std::uint64_t h = 1469598103934665603ULL;
    for (const char* p = buf; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 1099511628211ULL;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

RatioReport run_ratio(const StateVector& state, const NoiseModel& model_a,
                      const NoiseModel& model_b, double f_target,
                      const IntegratorConfig& config) {
    if (model_a.dim() < state.dim || model_b.dim() < state.dim)
        throw std::invalid_argument("run_ratio: model dimension smaller than the state");
    RatioReport r;
    r.state_label = state.label;
    r.model_a = model_a.describe();
    r.model_b = model_b.describe();
    r.f_target = f_target;
    r.config_digest = config_digest(config);

    const auto ca = time_to_fidelity(model_a, state, f_target, config);
    const auto cb = time_to_fidelity(model_b, state, f_target, config);
    r.t_a = ca.t_cross;
    r.t_b = cb.t_cross;
    r.simulated = r.t_a / r.t_b;
    r.warn_nonmonotone = ca.nonmonotone_warning || cb.nonmonotone_warning;

    const auto la = layout_of(model_a);
    const auto lb = layout_of(model_b);
    if (la && lb) {
        const auto p2 = ratio_second_order(state, *la, *lb, f_target);
        r.predicted_first = p2.first_order;
        r.predicted_second = p2.second_order;
        r.pred_warning = p2.nonmonotone_warning;
        r.mean_exc_a = moments(state, *la, 1).mean();
        r.mean_exc_b = moments(state, *lb, 1).mean();
    } else {
        r.predicted_first = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

std::vector<RatioReport> run_ghz_sweep(const std::vector<int>& n_q_list, double f_target,
                                       const IntegratorConfig& config, int jobs) {
    for (int n : n_q_list)
        if (n < 1 || n > 12) throw std::invalid_argument("run_ghz_sweep: n_q must be in 1..12");
    std::vector<RatioReport> out(n_q_list.size());
    parallel_for(n_q_list.size(), jobs, [&](std::size_t i) {
        const int n = n_q_list[i];
        const auto state = ghz_state(n);
        out[i] = run_ratio(state, NoiseModel::qubit_register(n, 1.0, true),
                           NoiseModel::single_qudit(std::int64_t{1} << n, 1.0), f_target, config);
        out[i].state_label = "ghz:" + std::to_string(n);
    });
    return out;
}

TableResult run_table(const TableOptions& options) {
    if (options.exponent < 2 || options.exponent > 12)
        throw std::invalid_argument("run_table: exponent must be in 2..12");
    const int e = options.exponent;
    const std::int64_t dim = std::int64_t{1} << e;
    const NoiseModel qubit = NoiseModel::qubit_register(e, 1.0, true);
    const NoiseModel qudit = NoiseModel::single_qudit(dim, 1.0);

    struct Job {
        StateVector state;
        int group;  // 0 deterministic, 1 arbitrary, 2 unentangled, 3+ file groups
        std::optional<std::uint64_t> seed;
    };
    std::vector<Job> jobs;
    jobs.push_back({ghz_state(e), 0, {}});
    jobs.push_back({w_state(e), 0, {}});
    jobs.push_back({equal_superposition_state(dim), 0, {}});
    jobs.push_back({fock_state(dim, dim / 2), 0, {}});
    jobs.push_back({coherent_state(dim, std::sqrt(static_cast<double>(dim) / 2.0)), 0, {}});
    for (int i = 0; i < options.ensemble_count; ++i) {
        const std::uint64_t s = options.seed + static_cast<std::uint64_t>(i);
        jobs.push_back({random_arbitrary_state(dim, s), 1, s});
    }
    for (int i = 0; i < options.ensemble_count; ++i) {
        const std::uint64_t s = options.seed + 1000 + static_cast<std::uint64_t>(i);
        jobs.push_back({random_unentangled_state(e, s), 2, s});
    }

    TableResult result;
    std::vector<std::string> group_labels = {"deterministic", "Arbitrary", "Unentangled"};
    if (!options.states_dir.empty() && std::filesystem::is_directory(options.states_dir)) {
        for (const char* prefix : {"vqe", "qaoa"}) {
            std::vector<std::filesystem::path> files;
            for (const auto& entry : std::filesystem::directory_iterator(options.states_dir))
                if (entry.path().filename().string().rfind(prefix, 0) == 0 &&
                    entry.path().extension() == ".json")
                    files.push_back(entry.path());
            std::sort(files.begin(), files.end());
            if (files.empty()) {
                result.skipped.push_back(std::string(prefix) + ": no amplitude files found");
                continue;
            }
            const int group = static_cast<int>(group_labels.size());
            group_labels.push_back(prefix == std::string("vqe") ? "VQE" : "QAOA");
            for (const auto& f : files) {
                try {
                    auto st = load_state_file(f.string());
                    if (st.dim != dim) {
                        result.skipped.push_back(f.string() + ": dim " + std::to_string(st.dim) +
                                                 " != table dim " + std::to_string(dim));
                        continue;
                    }
                    jobs.push_back({std::move(st), group, {}});
                } catch (const std::exception& ex) {
                    result.skipped.push_back(f.string() + ": " + ex.what());
                }
            }
        }
    } else if (!options.states_dir.empty()) {
        result.skipped.push_back("states-dir '" + options.states_dir + "' not found");
    } else {
        result.skipped.push_back("VQE: no amplitude files supplied");
        result.skipped.push_back("QAOA: no amplitude files supplied");
    }

    std::vector<RatioReport> reports(jobs.size());
    parallel_for(jobs.size(), options.jobs, [&](std::size_t i) {
        reports[i] = run_ratio(jobs[i].state, qubit, qudit, options.f_target, options.config);
        reports[i].seed = jobs[i].seed;
    });

    std::vector<std::vector<RatioReport>> grouped(group_labels.size());
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (jobs[i].group == 0)
            result.deterministic.push_back(reports[i]);
        else {
            grouped[jobs[i].group].push_back(reports[i]);
            result.ensemble_members.push_back(reports[i]);
        }
    }
    for (std::size_t g = 1; g < grouped.size(); ++g)
        if (!grouped[g].empty())
            result.ensembles.push_back(summarize(group_labels[g], grouped[g]));
    return result;
}

ReorderStudy run_reorder(const StateVector& state, const NoiseModel& qudit_model,
                         double f_target, const IntegratorConfig& config) {
    if (qudit_model.variant != NoiseModel::Variant::SingleQudit &&
        qudit_model.variant != NoiseModel::Variant::QuditArray)
        throw std::invalid_argument("run_reorder: a qudit-type model is required");
    ReorderStudy s;
    s.state_label = state.label;
    s.f_target = f_target;
    const auto sorted = reorder_descending(state).state;
    try {
        s.t_unsorted = time_to_fidelity(qudit_model, state, f_target, config).t_cross;
    } catch (const NoCrossingError&) {
    }
    try {
        s.t_sorted = time_to_fidelity(qudit_model, sorted, f_target, config).t_cross;
    } catch (const NoCrossingError&) {
    }
    if (s.t_sorted && s.t_unsorted) s.gain = *s.t_sorted / *s.t_unsorted;
    return s;
}

NhComparison run_nh_comparison(const StateVector& state, const NoiseModel& model, double t_end,
                               const IntegratorConfig& config) {
    NhComparison cmp;
    cmp.lindblad = evolve(model, state, t_end, config);
    std::vector<double> grid;
    grid.reserve(cmp.lindblad.samples.size());
    for (const auto& [t, f] : cmp.lindblad.samples) grid.push_back(t);
    cmp.nh = evolve_nh(model, state, t_end, config, grid);
    return cmp;
}

std::vector<RatioReport> run_ftar_sweep(const std::vector<SweepJob>& sweep,
                                        const std::vector<double>& f_targets,
                                        const IntegratorConfig& config, int jobs) {
    for (double f : f_targets)
        if (!(f > 0.0 && f < 1.0))
            throw std::invalid_argument("run_ftar_sweep: targets must lie in (0,1)");
    std::vector<RatioReport> out(sweep.size() * f_targets.size());
    parallel_for(out.size(), jobs, [&](std::size_t i) {
        const std::size_t fi = i / sweep.size();
        const std::size_t si = i % sweep.size();
        out[i] = run_ratio(sweep[si].state, sweep[si].model_a, sweep[si].model_b, f_targets[fi],
                           config);
    });
    return out;
}

// ------------------------------------------------------------- serialization

void write_trace_csv(std::ostream& os, const FidelityTrace& trace) {
    os << "t,fidelity\n";
    char line[64];
    for (const auto& [t, f] : trace.samples) {
        std::snprintf(line, sizeof line, "%.17g,%.17g\n", t, f);
        os << line;
    }
}

namespace {

nlohmann::json report_json(const RatioReport& r) {
    nlohmann::json j;
    j["state"] = r.state_label;
    j["model_a"] = r.model_a;
    j["model_b"] = r.model_b;
    j["f_target"] = r.f_target;
    j["t_a"] = r.t_a;
    j["t_b"] = r.t_b;
    j["simulated_ratio"] = r.simulated;
    if (std::isfinite(r.predicted_first)) j["predicted_ratio"] = r.predicted_first;
    if (r.predicted_second) j["predicted_ratio_second_order"] = *r.predicted_second;
    j["mean_excitation_a"] = r.mean_exc_a;
    j["mean_excitation_b"] = r.mean_exc_b;
    if (r.seed) j["seed"] = *r.seed;
    j["config_digest"] = r.config_digest;
    if (r.warn_nonmonotone) j["warn_nonmonotone"] = true;
    if (r.pred_warning) j["warn_prediction"] = true;
    return j;
}

} // namespace

std::string report_to_json(const RatioReport& report) { return report_json(report).dump(); }

void write_reports_jsonl(std::ostream& os, const std::vector<RatioReport>& reports) {
    for (const auto& r : reports) os << report_to_json(r) << '\n';
}

void write_table_csv(std::ostream& os, const TableResult& table) {
    os << "State,Simulated Ratio,Predicted Ratio\n";
    char buf[128];
    for (const auto& r : table.deterministic) {
        std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g\n", r.state_label.c_str(), r.simulated,
                      r.predicted_first);
        os << buf;
    }
    for (const auto& e : table.ensembles) {
        std::snprintf(buf, sizeof buf, "%s,%.6g +- %.3g,%.6g +- %.3g\n", e.label.c_str(),
                      e.sim_mean, e.sim_std, e.pred_mean, e.pred_std);
        os << buf;
    }
    for (const auto& s : table.skipped) os << "# skipped: " << s << '\n';
}

} // namespace qmemsim
