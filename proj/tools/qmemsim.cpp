// qmemsim: quantum-memory lifetime studies from the command line.
//
// Subcommands wrap the experiments module one-to-one:
//   simulate    propagate one state under one model, write the fidelity trace
//   ratio       time-to-target ratio between two models, with predictions
//   table       deterministic + ensemble ratio table at a profile's dimension
//   reorder     sorted-vs-unsorted lifetime gain on a qudit model
//   compare-nh  Lindblad vs non-Hermitian fidelity traces on a shared grid
//   sweep       ratio grid over several target fidelities
//
// Every output file gets an adjacent <out>.manifest.json that pins the tool
// version, parameters, seeds, and integrator-config digest needed to reproduce
// it bit for bit.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qmemsim/experiments.hpp"
#include "qmemsim/version.hpp"

namespace {

using namespace qmemsim;
using nlohmann::json;

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t p = s.find(sep, start);
        if (p == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, p - start));
        start = p + 1;
    }
    return out;
}

std::int64_t to_i64(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("bad ") + what + " '" + s + "'");
    }
}

double to_f64(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("bad ") + what + " '" + s + "'");
    }
}

// ghz:N | w:N | equal:D | fock:D:N | coherent:D[:alpha] | arb:D:SEED | unent:N:SEED | file:PATH
StateVector parse_state(const std::string& spec) {
    const auto parts = split(spec, ':');
    const std::string& name = parts[0];
    const auto need = [&](std::size_t n) {
        if (parts.size() != n + 1)
            throw std::invalid_argument("state spec '" + spec + "' needs " + std::to_string(n) +
                                        " parameter(s)");
    };
    if (name == "ghz") {
        need(1);
        auto s = ghz_state(static_cast<int>(to_i64(parts[1], "qubit count")));
        s.label = spec;
        return s;
    }
    if (name == "w") {
        need(1);
        auto s = w_state(static_cast<int>(to_i64(parts[1], "qubit count")));
        s.label = spec;
        return s;
    }
    if (name == "equal") {
        need(1);
        auto s = equal_superposition_state(to_i64(parts[1], "dimension"));
        s.label = spec;
        return s;
    }
    if (name == "fock") {
        need(2);
        auto s = fock_state(to_i64(parts[1], "dimension"), to_i64(parts[2], "level"));
        s.label = spec;
        return s;
    }
    if (name == "coherent") {
        if (parts.size() == 2) {
            const std::int64_t d = to_i64(parts[1], "dimension");
            auto s = coherent_state(d, std::sqrt(static_cast<double>(d) / 2.0));
            s.label = spec;
            return s;
        }
        need(2);
        auto s = coherent_state(to_i64(parts[1], "dimension"), to_f64(parts[2], "alpha"));
        s.label = spec;
        return s;
    }
    if (name == "arb") {
        need(2);
        auto s = random_arbitrary_state(to_i64(parts[1], "dimension"),
                                        static_cast<std::uint64_t>(to_i64(parts[2], "seed")));
        s.label = spec;
        return s;
    }
    if (name == "unent") {
        need(2);
        auto s = random_unentangled_state(static_cast<int>(to_i64(parts[1], "qubit count")),
                                          static_cast<std::uint64_t>(to_i64(parts[2], "seed")));
        s.label = spec;
        return s;
    }
    if (name == "file") {
        if (parts.size() < 2) throw std::invalid_argument("file spec needs a path");
        return load_state_file(spec.substr(5));
    }
    throw std::invalid_argument("unknown state '" + name + "'");
}

// qubit:N[:nodeph] | qudit:D | quditarray:COUNT:D | json:PATH | auto (from state dim)
NoiseModel parse_model(const std::string& spec, double gamma, const StateVector* state = nullptr,
                       bool prefer_qudit = false) {
    if (spec == "auto") {
        if (!state) throw std::invalid_argument("model 'auto' needs a state");
        if (prefer_qudit) return NoiseModel::single_qudit(state->dim, gamma);
        std::int64_t d = state->dim;
        int n = 0;
        while (d > 1) {
            if (d % 2) throw std::invalid_argument("model 'auto' needs a power-of-two state dim");
            d /= 2;
            ++n;
        }
        return NoiseModel::qubit_register(n, gamma, true);
    }
    const auto parts = split(spec, ':');
    const std::string& name = parts[0];
    if (name == "qubit") {
        if (parts.size() < 2 || parts.size() > 3)
            throw std::invalid_argument("qubit model spec is qubit:N[:nodeph]");
        const bool deph = parts.size() < 3 || parts[2] != "nodeph";
        if (parts.size() == 3 && parts[2] != "nodeph")
            throw std::invalid_argument("unknown qubit model option '" + parts[2] + "'");
        return NoiseModel::qubit_register(static_cast<int>(to_i64(parts[1], "qubit count")), gamma,
                                          deph);
    }
    if (name == "qudit") {
        if (parts.size() != 2) throw std::invalid_argument("qudit model spec is qudit:D");
        return NoiseModel::single_qudit(to_i64(parts[1], "dimension"), gamma);
    }
    if (name == "quditarray") {
        if (parts.size() != 3)
            throw std::invalid_argument("qudit array model spec is quditarray:COUNT:D");
        return NoiseModel::qudit_array(static_cast<int>(to_i64(parts[1], "count")),
                                       to_i64(parts[2], "local dimension"), gamma);
    }
    if (name == "json") {
        std::ifstream in(spec.substr(5));
        if (!in) throw std::invalid_argument("cannot open model file '" + spec.substr(5) + "'");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return NoiseModel::from_json(text).scaled(gamma);
    }
    throw std::invalid_argument("unknown model '" + name + "'");
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Manifest {
    json params = json::object();
    std::string started = utc_now();

    void write(const std::string& out_prefix, const std::string& subcommand,
               const IntegratorConfig& cfg, const std::vector<std::string>& outputs) const {
        json j;
        j["tool"] = "qmemsim";
        j["version"] = kVersion;
        j["subcommand"] = subcommand;
        j["parameters"] = params;
        j["integrator"] = {{"rtol", cfg.rtol},
                           {"atol", cfg.atol},
                           {"initial_step", cfg.initial_step},
                           {"max_step", cfg.max_step},
                           {"max_steps", cfg.max_steps}};
        j["config_digest"] = config_digest(cfg);
        j["outputs"] = outputs;
        j["started_utc"] = started;
        j["finished_utc"] = utc_now();
        std::ofstream of(out_prefix + ".manifest.json");
        of << j.dump(2) << '\n';
    }
};

std::ofstream open_out(const std::string& path) {
    std::ofstream of(path);
    if (!of) throw std::runtime_error("cannot write '" + path + "'");
    return of;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum memory lifetime simulator"};
    app.require_subcommand(1);

    IntegratorConfig cfg;
    double gamma = 1.0;
    double ftarget = 0.75;
    int jobs = 1;
    std::string out_prefix;
    app.add_option("--rtol", cfg.rtol, "relative tolerance")->capture_default_str();
    app.add_option("--atol", cfg.atol, "absolute tolerance")->capture_default_str();
    app.add_option("--initial-step", cfg.initial_step, "initial step (0: 1e-3/gamma_max)");
    app.add_option("--max-step", cfg.max_step, "step ceiling (0: none)");
    app.add_option("--max-steps", cfg.max_steps, "step budget")->capture_default_str();
    app.add_option("--gamma", gamma, "noise rate in inverse time units")->capture_default_str();
    app.add_option("--jobs", jobs, "worker threads for experiment grids")->capture_default_str();

    std::string state_spec, model_spec, model_a_spec = "auto", model_b_spec = "auto";
    double t_end = 0.0;
    std::optional<double> target;

    auto* simulate = app.add_subcommand("simulate", "propagate and write a fidelity trace");
    simulate->add_option("--state", state_spec, "state spec (e.g. ghz:4, fock:1024:512)")
        ->required();
    simulate->add_option("--model", model_spec, "noise model spec (e.g. qubit:4, qudit:1024)")
        ->required();
    simulate->add_option("--t-end", t_end, "propagation horizon");
    simulate->add_option("--target", target, "stop at this fidelity and report the crossing");
    simulate->add_flag("--nh", "use the non-Hermitian propagator");
    simulate->add_option("--out", out_prefix, "output prefix")->default_val("simulate");

    auto* ratio = app.add_subcommand("ratio", "time-to-target ratio between two models");
    ratio->add_option("--state", state_spec)->required();
    ratio->add_option("--a", model_a_spec, "first model (defaults to qubit register)");
    ratio->add_option("--b", model_b_spec, "second model (defaults to single qudit)");
    ratio->add_option("--ftarget", ftarget, "target fidelity")->capture_default_str();
    ratio->add_option("--out", out_prefix)->default_val("ratio");

    std::string profile = "ci", states_dir;
    int ensemble_count = 4;
    std::uint64_t seed = 1;
    auto* table = app.add_subcommand("table", "simulated vs predicted ratio table");
    table->add_option("--profile", profile, "ci (dim 2^6) or paper (dim 2^10)")
        ->check(CLI::IsMember({"ci", "paper"}));
    table->add_option("--states-dir", states_dir, "directory with vqe_*/qaoa_* amplitude files");
    table->add_option("--count", ensemble_count, "instances per random ensemble")
        ->capture_default_str();
    table->add_option("--seed", seed, "base seed for random ensembles")->capture_default_str();
    table->add_option("--ftarget", ftarget)->capture_default_str();
    table->add_option("--out", out_prefix)->default_val("table");

    auto* reorder = app.add_subcommand("reorder", "sorted vs unsorted lifetime on a qudit model");
    reorder->add_option("--state", state_spec)->required();
    reorder->add_option("--model", model_spec, "qudit model (default: auto single qudit)")
        ->default_val("auto");
    reorder->add_option("--ftarget", ftarget)->capture_default_str();
    reorder->add_option("--out", out_prefix)->default_val("reorder");

    auto* compare = app.add_subcommand("compare-nh", "Lindblad vs NH traces on a shared grid");
    compare->add_option("--state", state_spec)->required();
    compare->add_option("--model", model_spec)->required();
    compare->add_option("--t-end", t_end)->required();
    compare->add_option("--out", out_prefix)->default_val("compare-nh");

    std::string states_csv = "ghz:4,ghz:6,ghz:8,ghz:10", ftargets_csv = "0.7,0.75,0.9";
    auto* sweep = app.add_subcommand("sweep", "ratio grid over target fidelities");
    sweep->add_option("--states", states_csv, "comma-separated state specs")
        ->capture_default_str();
    sweep->add_option("--a", model_a_spec);
    sweep->add_option("--b", model_b_spec);
    sweep->add_option("--ftargets", ftargets_csv, "comma-separated targets")
        ->capture_default_str();
    sweep->add_option("--out", out_prefix)->default_val("sweep");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (const char* env = std::getenv("QMEMSIM_PROFILE")) profile = env;

    Manifest manifest;
    try {
        if (simulate->parsed()) {
            manifest.params = {{"state", state_spec}, {"model", model_spec},  {"gamma", gamma},
                               {"t_end", t_end},      {"nh", simulate->count("--nh") > 0}};
            const auto state = parse_state(state_spec);
            const auto model = parse_model(model_spec, gamma, &state);
            const bool nh = simulate->count("--nh") > 0;
            json result;
            double horizon = t_end;
            if (target) {
                manifest.params["target"] = *target;
                try {
                    const auto cross = time_to_fidelity(model, state, *target, cfg);
                    result["t_cross"] = cross.t_cross;
                    result["f_at_cross"] = cross.f_at_cross;
                    result["bracket"] = {cross.bracket_lo, cross.bracket_hi};
                    if (cross.nonmonotone_warning) result["warn_nonmonotone"] = true;
                    horizon = cross.t_cross;
                    std::cout << "t_cross=" << cross.t_cross << '\n';
                } catch (const NoCrossingError& e) {
                    result["no_crossing"] = true;
                    result["horizon"] = e.horizon;
                    result["f_final"] = e.f_final;
                    std::cout << "no crossing before t=" << e.horizon << " (F=" << e.f_final
                              << ")\n";
                    horizon = 0.0;
                }
            }
            if (horizon <= 0.0 && t_end <= 0.0 && !target)
                throw std::invalid_argument("simulate needs --t-end or --target");
            std::vector<std::string> outputs;
            if (horizon > 0.0) {
                const auto trace = nh ? evolve_nh(model, state, horizon, cfg)
                                      : evolve(model, state, horizon, cfg);
                auto of = open_out(out_prefix + ".csv");
                write_trace_csv(of, trace);
                outputs.push_back(out_prefix + ".csv");
                result["accepted_steps"] = trace.accepted_steps;
                result["rejected_steps"] = trace.rejected_steps;
                result["f_final"] = trace.final_fidelity();
            }
            if (!result.empty()) {
                auto rf = open_out(out_prefix + ".result.json");
                rf << result.dump(2) << '\n';
                outputs.push_back(out_prefix + ".result.json");
            }
            manifest.write(out_prefix, "simulate", cfg, outputs);
        } else if (ratio->parsed()) {
            manifest.params = {{"state", state_spec}, {"a", model_a_spec}, {"b", model_b_spec},
                               {"ftarget", ftarget},  {"gamma", gamma}};
            const auto state = parse_state(state_spec);
            const auto ma = parse_model(model_a_spec, gamma, &state, false);
            const auto mb = parse_model(model_b_spec, gamma, &state, true);
            const auto report = run_ratio(state, ma, mb, ftarget, cfg);
            auto of = open_out(out_prefix + ".jsonl");
            write_reports_jsonl(of, {report});
            std::cout << report_to_json(report) << '\n';
            manifest.write(out_prefix, "ratio", cfg, {out_prefix + ".jsonl"});
        } else if (table->parsed()) {
            TableOptions opt;
            opt.exponent = (profile == "paper") ? 10 : 6;
            opt.f_target = ftarget;
            opt.ensemble_count = ensemble_count;
            opt.seed = seed;
            opt.states_dir = states_dir;
            opt.jobs = jobs;
            opt.config = cfg;
            manifest.params = {{"profile", profile},   {"dim", std::int64_t{1} << opt.exponent},
                               {"ftarget", ftarget},   {"count", ensemble_count},
                               {"seed", seed},         {"states_dir", states_dir},
                               {"jobs", jobs}};
            const auto result = run_table(opt);
            {
                auto of = open_out(out_prefix + ".csv");
                write_table_csv(of, result);
            }
            {
                auto of = open_out(out_prefix + ".members.jsonl");
                write_reports_jsonl(of, result.deterministic);
                write_reports_jsonl(of, result.ensemble_members);
            }
            for (const auto& s : result.skipped) std::cerr << "skipped: " << s << '\n';
            manifest.write(out_prefix, "table", cfg,
                           {out_prefix + ".csv", out_prefix + ".members.jsonl"});
        } else if (reorder->parsed()) {
            manifest.params = {{"state", state_spec}, {"model", model_spec},
                               {"ftarget", ftarget},  {"gamma", gamma}};
            const auto state = parse_state(state_spec);
            const auto model = parse_model(model_spec, gamma, &state, true);
            const auto study = run_reorder(state, model, ftarget, cfg);
            json j;
            j["state"] = study.state_label;
            j["f_target"] = study.f_target;
            if (study.t_unsorted) j["t_unsorted"] = *study.t_unsorted;
            if (study.t_sorted) j["t_sorted"] = *study.t_sorted;
            if (study.gain)
                j["gain"] = *study.gain;
            else
                j["no_crossing"] = true;
            auto of = open_out(out_prefix + ".json");
            of << j.dump(2) << '\n';
            std::cout << j.dump() << '\n';
            manifest.write(out_prefix, "reorder", cfg, {out_prefix + ".json"});
        } else if (compare->parsed()) {
            manifest.params = {{"state", state_spec}, {"model", model_spec},
                               {"t_end", t_end},      {"gamma", gamma}};
            const auto state = parse_state(state_spec);
            const auto model = parse_model(model_spec, gamma, &state);
            const auto cmp = run_nh_comparison(state, model, t_end, cfg);
            {
                auto of = open_out(out_prefix + ".lindblad.csv");
                write_trace_csv(of, cmp.lindblad);
            }
            {
                auto of = open_out(out_prefix + ".nh.csv");
                write_trace_csv(of, cmp.nh);
            }
            manifest.write(out_prefix, "compare-nh", cfg,
                           {out_prefix + ".lindblad.csv", out_prefix + ".nh.csv"});
        } else if (sweep->parsed()) {
            manifest.params = {{"states", states_csv},
                               {"a", model_a_spec},
                               {"b", model_b_spec},
                               {"ftargets", ftargets_csv},
                               {"gamma", gamma},
                               {"jobs", jobs}};
            std::vector<SweepJob> sweep_jobs;
            for (const auto& spec : split(states_csv, ',')) {
                SweepJob job{parse_state(spec), {}, {}};
                job.model_a = parse_model(model_a_spec, gamma, &job.state, false);
                job.model_b = parse_model(model_b_spec, gamma, &job.state, true);
                sweep_jobs.push_back(std::move(job));
            }
            std::vector<double> fts;
            for (const auto& f : split(ftargets_csv, ',')) fts.push_back(to_f64(f, "ftarget"));
            const auto reports = run_ftar_sweep(sweep_jobs, fts, cfg, jobs);
            auto of = open_out(out_prefix + ".jsonl");
            write_reports_jsonl(of, reports);
            manifest.write(out_prefix, "sweep", cfg, {out_prefix + ".jsonl"});
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        std::cerr << "run with --help for usage\n";
        return 2;
    } catch (const IntegrationError& e) {
        std::cerr << "integration failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
