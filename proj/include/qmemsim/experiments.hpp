#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qmemsim/analytic.hpp"
#include "qmemsim/noise.hpp"
#include "qmemsim/propagate.hpp"
#include "qmemsim/states.hpp"

namespace qmemsim {

struct RatioReport {
    std::string state_label;
    std::string model_a;
    std::string model_b;
    double f_target = 0.75;
    double t_a = 0.0;     // time to target under model_a
    double t_b = 0.0;     // time to target under model_b
    double simulated = 0.0;  // t_a / t_b
    double predicted_first = 0.0;
    std::optional<double> predicted_second;
    double mean_exc_a = 0.0;  // <n> under model_a's layout
    double mean_exc_b = 0.0;
    std::optional<std::uint64_t> seed;
    std::string config_digest;
    bool warn_nonmonotone = false;
    bool pred_warning = false;
};

struct EnsembleSummary {
    std::string label;
    int count = 0;
    double sim_mean = 0.0;
    double sim_std = 0.0;  // sample standard deviation (count >= 2)
    double pred_mean = 0.0;
    double pred_std = 0.0;
};

struct ReorderStudy {
    std::string state_label;
    double f_target = 0.75;
    std::optional<double> t_unsorted;  // empty on no-crossing
    std::optional<double> t_sorted;
    std::optional<double> gain;  // t_sorted / t_unsorted when both crossed
};

struct NhComparison {
    FidelityTrace lindblad;
    FidelityTrace nh;  // sampled on the Lindblad trace's time grid
};

std::string config_digest(const IntegratorConfig& config);

RatioReport run_ratio(const StateVector& state, const NoiseModel& model_a,
                      const NoiseModel& model_b, double f_target,
                      const IntegratorConfig& config = {});

// qubit register (AD+dephasing) vs single qudit (AD) per n_q, gamma = 1
std::vector<RatioReport> run_ghz_sweep(const std::vector<int>& n_q_list, double f_target,
                                       const IntegratorConfig& config = {}, int jobs = 1);

struct TableOptions {
    int exponent = 10;  // dim = 2^exponent
    double f_target = 0.75;
    int ensemble_count = 4;
    std::uint64_t seed = 1;
    std::string states_dir;  // amplitude files for file-based rows (optional)
    int jobs = 1;
    IntegratorConfig config;
};

struct TableResult {
    std::vector<RatioReport> deterministic;     // GHZ, W, Equal, Fock, Coherent
    std::vector<RatioReport> ensemble_members;  // individual random-state runs
    std::vector<EnsembleSummary> ensembles;     // Arbitrary, Unentangled, file groups
    std::vector<std::string> skipped;
};

TableResult run_table(const TableOptions& options);

ReorderStudy run_reorder(const StateVector& state, const NoiseModel& qudit_model,
                         double f_target, const IntegratorConfig& config = {});

NhComparison run_nh_comparison(const StateVector& state, const NoiseModel& model, double t_end,
                               const IntegratorConfig& config = {});

struct SweepJob {
    StateVector state;
    NoiseModel model_a;
    NoiseModel model_b;
};

// one run_ratio per (job, f_target), grouped by f_target in the output
std::vector<RatioReport> run_ftar_sweep(const std::vector<SweepJob>& sweep,
                                        const std::vector<double>& f_targets,
                                        const IntegratorConfig& config = {}, int jobs = 1);

// ---- serialization ----
void write_trace_csv(std::ostream& os, const FidelityTrace& trace);
std::string report_to_json(const RatioReport& report);
void write_reports_jsonl(std::ostream& os, const std::vector<RatioReport>& reports);
void write_table_csv(std::ostream& os, const TableResult& table);

} // namespace qmemsim
