#include "stepdecay/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "stepdecay/error.hpp"
#include "stepdecay/exact_oracle.hpp"
#include "stepdecay/experiments.hpp"
#include "stepdecay/format.hpp"
#include "stepdecay/parallel.hpp"
#include "stepdecay/sgd_sim.hpp"

namespace stepdecay::cli {
namespace {

using ojson = nlohmann::ordered_json;

struct Flags {
    std::string subcommand;
    std::optional<std::string> config;
    std::optional<std::string> preset;
    std::optional<double> kappa;
    std::optional<double> noise;
    std::optional<std::int64_t> dim;
    std::optional<std::string> schedule;
    std::optional<std::string> eta0;
    std::optional<double> decay;
    std::optional<double> alpha;
    std::optional<std::int64_t> horizon;
    std::optional<std::int64_t> t;
    std::optional<std::int64_t> stride;
    std::optional<std::int64_t> seeds;
    std::optional<std::uint64_t> base_seed;
    std::optional<std::int64_t> suffix_from;
    std::optional<std::string> taus;
    std::optional<std::string> kappas;
    std::optional<std::string> families;
    std::optional<std::string> objective;
    std::optional<std::size_t> threads;
    bool freeze = false;
    std::string out = "-";
};

struct Parsed {
    Flags flags;
    bool help = false;
    std::string help_text;
};

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::Config, what); }

Parsed parse(const std::vector<std::string>& args)
{
    Parsed parsed;
    auto& f = parsed.flags;
    CLI::App app{"Learning-rate schedule experiments for streaming least squares", "stepdecay"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", f.config, "JSON config file; flags override its fields");
        sub->add_option("--out", f.out, "Output path, - for stdout");
        sub->add_option("--threads", f.threads, "Worker threads (default: STEPDECAY_THREADS or all cores)");
    };
    auto add_instance = [&](CLI::App* sub) {
        sub->add_option("--preset", f.preset, "fig1_2d, lb_strongly_convex or smooth_lb");
        sub->add_option("--kappa", f.kappa, "Condition number of the preset");
        sub->add_option("--noise", f.noise, "Noise level sigma^2");
        sub->add_option("--dim", f.dim, "Dimension (lb_strongly_convex, smooth_lb)");
    };
    auto add_schedule = [&](CLI::App* sub) {
        sub->add_option("--schedule", f.schedule, "Family name, inline JSON or JSON file");
        sub->add_option("--eta0", f.eta0, "Initial rate, or auto");
        sub->add_option("--decay", f.decay, "Decay parameter (poly, exp_decay)");
        sub->add_option("--alpha", f.alpha, "Poly exponent");
        sub->add_option("--horizon", f.horizon, "Schedule horizon for step_decay / three_phase (default T)");
        sub->add_option("--T", f.t, "Number of steps");
    };

    auto* exact = app.add_subcommand("exact", "Exact risk trajectory under the additive-noise oracle");
    add_common(exact);
    add_instance(exact);
    add_schedule(exact);
    exact->add_option("--stride", f.stride, "Record every stride steps");
    exact->add_flag("--freeze", f.freeze, "Hold the last rate past the schedule horizon");

    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo SGD with one-hot covariates");
    add_common(simulate);
    add_instance(simulate);
    add_schedule(simulate);
    simulate->add_option("--stride", f.stride, "Risk trace stride (0: none)");
    simulate->add_option("--seeds", f.seeds, "Number of seeds");
    simulate->add_option("--base-seed", f.base_seed, "First seed");
    simulate->add_option("--suffix-from", f.suffix_from, "Average iterates from this step");

    auto* sweep = app.add_subcommand("sweep", "Grid-searched risk versus condition number");
    add_common(sweep);
    sweep->add_option("--kappas", f.kappas, "Comma-separated condition numbers");
    sweep->add_option("--families", f.families, "Comma-separated grid presets");
    sweep->add_option("--T", f.t, "Number of steps (default: max kappa squared)");
    sweep->add_option("--noise", f.noise, "Noise level sigma^2");
    sweep->add_option("--seeds", f.seeds, "Seeds for the baseline and mc objective");
    sweep->add_option("--base-seed", f.base_seed, "First seed");
    sweep->add_option("--objective", f.objective, "exact or mc");

    auto* certify = app.add_subcommand("certify", "Check the bound ledger");
    add_common(certify);
    certify->add_option("--noise", f.noise, "Noise level sigma^2");

    auto* census = app.add_subcommand("census", "Bad-iterate census of the normalized risk");
    add_common(census);
    add_instance(census);
    add_schedule(census);
    census->add_option("--taus", f.taus, "Comma-separated thresholds");
    census->add_flag("--freeze", f.freeze, "Hold the last rate past the schedule horizon");

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::CallForHelp&) {
        parsed.help = true;
        parsed.help_text = app.help();
        return parsed;
    } catch (const CLI::CallForAllHelp&) {
        parsed.help = true;
        parsed.help_text = app.help("", CLI::AppFormatMode::All);
        return parsed;
    } catch (const CLI::ParseError& e) {
        config_error(std::string("arguments: ") + e.what());
    }
    for (auto* sub : app.get_subcommands()) {
        f.subcommand = sub->get_name();
    }
    return parsed;
}

std::vector<double> parse_list(const std::string& field, const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            config_error(field + ": '" + item + "' is not a number");
        }
    }
    if (out.empty()) {
        config_error(field + ": empty list");
    }
    return out;
}

std::vector<std::string> split(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

ojson read_json_file(const std::string& field, const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, field + ": cannot read '" + path + "'");
    }
    try {
        return ojson::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        config_error(field + ": malformed JSON in '" + path + "': " + e.what());
    }
}

nlohmann::json plain(const ojson& j) { return nlohmann::json::parse(j.dump()); }

template <class T>
T get_field(const ojson& cfg, const char* key, T fallback)
{
    if (!cfg.contains(key)) {
        return fallback;
    }
    try {
        return cfg.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        config_error(std::string(key) + ": wrong type");
    }
}

// Instance block: a preset with all parameters spelled out, or an explicit
// {eigenvalues, noise_level, optimum, initial_point}.
ojson resolve_instance(const Flags& f, const ojson& base, std::int64_t horizon)
{
    ojson inst = base.contains("instance") ? base["instance"] : ojson::object();
    if (!inst.is_object()) {
        config_error("instance: expected an object");
    }
    if (f.preset) {
        inst = ojson{{"preset", *f.preset}};
    }
    if (!inst.contains("preset") && !inst.contains("eigenvalues")) {
        inst["preset"] = "fig1_2d";
    }
    if (inst.contains("eigenvalues")) {
        if (f.noise) {
            inst["noise_level"] = *f.noise;
        }
        return ojson::parse(to_json(instance_from_json(plain(inst))).dump());
    }
    if (!inst["preset"].is_string()) {
        config_error("instance.preset: expected a string");
    }
    const auto name = inst["preset"].get<std::string>();
    ojson out{{"preset", name}};
    auto num = [&](const char* key, double fallback) {
        if (!inst.contains(key)) {
            return fallback;
        }
        if (!inst[key].is_number()) {
            config_error(std::string("instance.") + key + ": expected a number");
        }
        return inst[key].get<double>();
    };
    const double noise = f.noise ? *f.noise : num("noise_level", 1.0);
    if (name == "fig1_2d") {
        out["kappa"] = f.kappa ? *f.kappa : num("kappa", 100.0);
    } else if (name == "lb_strongly_convex") {
        out["kappa"] = f.kappa ? *f.kappa : num("kappa", 64.0);
        out["dim"] = f.dim ? *f.dim : static_cast<std::int64_t>(num("dim", 2.0));
    } else if (name == "smooth_lb") {
        out["dim"] = f.dim ? *f.dim : static_cast<std::int64_t>(num("dim", 2.0));
        out["T"] = static_cast<std::int64_t>(num("T", static_cast<double>(horizon)));
    } else {
        config_error("instance.preset: unknown preset '" + name + "'");
    }
    out["noise_level"] = noise;
    return out;
}

ProblemInstance build_instance(const ojson& inst)
{
    if (inst.contains("preset")) {
        return presets::by_name(inst["preset"].get<std::string>(), plain(inst));
    }
    return instance_from_json(plain(inst));
}

// Schedule block: a full parameter object, or a family name plus eta0 /
// decay / alpha / horizon with "auto" rates derived from the instance.
ojson resolve_schedule(const Flags& f, const ojson& base, const ProblemInstance& instance, std::int64_t horizon,
                       OracleKind oracle)
{
    ojson spec = base.contains("schedule") ? base["schedule"] : ojson("step_decay");
    if (f.schedule) {
        const auto& s = *f.schedule;
        if (!s.empty() && s.front() == '{') {
            try {
                spec = ojson::parse(s);
            } catch (const nlohmann::json::parse_error& e) {
                config_error(std::string("schedule: malformed JSON, expected an object with a \"family\" field: ") +
                             e.what());
            }
        } else if (std::filesystem::exists(s)) {
            spec = read_json_file("schedule", s);
        } else {
            spec = s;
        }
    }
    if (spec.is_object()) {
        return ojson::parse(to_json(schedule_from_json(plain(spec))).dump());
    }
    if (!spec.is_string()) {
        config_error("schedule.family: expected a family name or an object");
    }
    const auto fam = spec.get<std::string>();
    const auto c = derive_constants(instance, oracle);

    std::optional<double> eta0;
    std::string eta_text = f.eta0 ? *f.eta0 : "";
    if (!f.eta0 && base.contains("eta0")) {
        if (base["eta0"].is_number()) {
            eta0 = base["eta0"].get<double>();
        } else {
            eta_text = get_field<std::string>(base, "eta0", "auto");
        }
    }
    if (!eta0 && !eta_text.empty() && eta_text != "auto") {
        eta0 = parse_list("eta0", eta_text).front();
    }
    const bool has_decay = f.decay || base.contains("decay");
    const double decay = f.decay ? *f.decay : get_field<double>(base, "decay", 0.0);
    const double alpha = f.alpha ? *f.alpha : get_field<double>(base, "alpha", 1.0);
    const auto sched_h = f.horizon ? *f.horizon : get_field<std::int64_t>(base, "horizon", horizon);

    Schedule out = [&] {
        if (fam == "constant") {
            return Schedule::constant(eta0.value_or(1.0 / (2.0 * c.r_squared)));
        }
        if (fam == "step_decay") {
            return Schedule::step_decay(eta0.value_or(1.0 / c.r_squared), sched_h);
        }
        if (fam == "poly" || fam == "poly_decay") {
            if (!has_decay || !(decay > 0.0)) {
                config_error("decay: schedule family poly needs decay > 0");
            }
            const double e = eta0.value_or(1.0 / (2.0 * c.r_squared));
            return Schedule::poly_decay(e / decay, 1.0 / decay, alpha);
        }
        if (fam == "exp_decay") {
            if (!has_decay) {
                config_error("decay: required for schedule family exp_decay");
            }
            return Schedule::exp_decay(eta0.value_or(1.0 / (2.0 * c.r_squared)), decay);
        }
        if (fam == "three_phase") {
            return Schedule::three_phase(c.r_squared, c.mu, c.kappa, sched_h);
        }
        config_error("schedule.family: unknown family '" + fam + "'");
    }();
    return ojson::parse(to_json(out).dump());
}

ojson resolve(const Flags& f)
{
    ojson base = ojson::object();
    if (f.config) {
        base = read_json_file("config", *f.config);
        if (!base.is_object()) {
            config_error("config: expected a JSON object");
        }
        if (base.contains("subcommand") && base["subcommand"] != f.subcommand) {
            config_error("subcommand: config is for '" + base["subcommand"].dump() + "'");
        }
    }
    const auto& sub = f.subcommand;
    ojson cfg{{"subcommand", sub}};

    if (sub == "exact" || sub == "simulate" || sub == "census") {
        const auto horizon = f.t ? *f.t : get_field<std::int64_t>(base, "T", 10000);
        if (horizon < 1) {
            config_error("T: must be >= 1");
        }
        cfg["instance"] = resolve_instance(f, base, horizon);
        const auto instance = build_instance(cfg["instance"]);
        const auto oracle = sub == "simulate" ? OracleKind::one_hot_multiplicative : OracleKind::additive;
        cfg["schedule"] = resolve_schedule(f, base, instance, horizon, oracle);
        cfg["T"] = horizon;
        if (sub == "exact") {
            cfg["stride"] = f.stride ? *f.stride : get_field<std::int64_t>(base, "stride", 1);
        }
        if (sub != "simulate") {
            const bool freeze = f.freeze || get_field<std::string>(base, "policy", "strict") == "freeze";
            cfg["policy"] = freeze ? "freeze" : "strict";
        }
        if (sub == "simulate") {
            cfg["stride"] = f.stride ? *f.stride : get_field<std::int64_t>(base, "stride", 0);
            cfg["seeds"] = f.seeds ? *f.seeds : get_field<std::int64_t>(base, "seeds", 5);
            cfg["base_seed"] = f.base_seed ? *f.base_seed : get_field<std::uint64_t>(base, "base_seed", 0);
            if (f.suffix_from || base.contains("suffix_from")) {
                cfg["suffix_from"] = f.suffix_from ? *f.suffix_from : get_field<std::int64_t>(base, "suffix_from", 1);
            }
        }
        if (sub == "census") {
            cfg["taus"] = f.taus ? parse_list("taus", *f.taus)
                                 : get_field<std::vector<double>>(base, "taus", {1.0, 2.0, 5.0, 10.0});
        }
    } else if (sub == "sweep") {
        ConditionSweepConfig d;
        cfg["kappas"] = f.kappas ? parse_list("kappas", *f.kappas) : get_field(base, "kappas", d.kappas);
        cfg["families"] = f.families ? split(*f.families) : get_field(base, "families", d.families);
        d.kappas = cfg["kappas"].get<std::vector<double>>();
        if (d.kappas.empty()) {
            config_error("kappas: must be non-empty");
        }
        d.horizon = f.t ? f.t : (base.contains("T") ? std::optional(get_field<std::int64_t>(base, "T", 0)) : std::nullopt);
        cfg["T"] = sweep_horizon(d);
        cfg["noise_level"] = f.noise ? *f.noise : get_field<double>(base, "noise_level", 1.0);
        cfg["objective"] = f.objective ? *f.objective : get_field<std::string>(base, "objective", "exact");
        if (cfg["objective"] != "exact" && cfg["objective"] != "mc") {
            config_error("objective: expected exact or mc");
        }
        cfg["seeds"] = f.seeds ? *f.seeds : get_field<std::int64_t>(base, "seeds", 5);
        cfg["base_seed"] = f.base_seed ? *f.base_seed : get_field<std::uint64_t>(base, "base_seed", 0);
        cfg["auto_extend"] = get_field<bool>(base, "auto_extend", true);
    } else if (sub == "certify") {
        cfg["noise_level"] = f.noise ? *f.noise : get_field<double>(base, "noise_level", 1.0);
    }
    return cfg;
}

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : stream_(&fallback)
    {
        if (path != "-") {
            file_.open(path);
            if (!file_) {
                throw Error(ErrorCode::Io, "out: cannot open '" + path + "' for writing");
            }
            stream_ = &file_;
        }
    }
    std::ostream& get() { return *stream_; }
    void finish(const std::string& path)
    {
        stream_->flush();
        if (!*stream_) {
            throw Error(ErrorCode::Io, "out: write to '" + path + "' failed");
        }
    }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

HorizonPolicy policy_of(const ojson& cfg)
{
    return cfg.value("policy", std::string("strict")) == "freeze" ? HorizonPolicy::freeze : HorizonPolicy::strict;
}

void configure_threads(const Flags& f)
{
    if (f.threads) {
        set_thread_count(*f.threads);
        return;
    }
    if (const char* env = std::getenv("STEPDECAY_THREADS")) {
        try {
            set_thread_count(static_cast<std::size_t>(std::stoul(env)));
        } catch (const std::exception&) {
            config_error(std::string("STEPDECAY_THREADS: '") + env + "' is not a thread count");
        }
    }
}

nlohmann::ordered_json stats_json(const EnsembleStats& s)
{
    return {{"mean", s.mean}, {"std_error", s.std_error}, {"n_seeds", s.n_seeds}};
}

int cmd_exact(const ojson& cfg, std::ostream& out)
{
    const auto instance = build_instance(cfg["instance"]);
    const auto schedule = schedule_from_json(plain(cfg["schedule"]));
    const auto traj = risk_trajectory(instance, schedule, cfg["T"].get<std::int64_t>(),
                                      cfg["stride"].get<std::int64_t>(), policy_of(cfg));
    write_trajectory_csv(out, traj);
    return 0;
}

int cmd_simulate(const ojson& cfg, std::ostream& out)
{
    const auto instance = build_instance(cfg["instance"]);
    const auto schedule = schedule_from_json(plain(cfg["schedule"]));
    const auto horizon = cfg["T"].get<std::int64_t>();
    const auto n_seeds = cfg["seeds"].get<std::int64_t>();
    const auto base_seed = cfg["base_seed"].get<std::uint64_t>();
    const auto stride = cfg["stride"].get<std::int64_t>();
    const std::optional<std::int64_t> suffix =
        cfg.contains("suffix_from") ? std::optional(cfg["suffix_from"].get<std::int64_t>()) : std::nullopt;

    if (stride > 0) {
        // Bias and variance columns come from coupled noiseless and
        // start-at-optimum runs on the same draws.
        const auto noiseless = instance.with_noise_level(0.0);
        const auto at_opt = instance.with_initial_point({instance.optimum().begin(), instance.optimum().end()});
        const RunOptions opt{std::nullopt, stride, HorizonPolicy::strict};
        std::vector<std::array<RunResult, 3>> runs(static_cast<std::size_t>(n_seeds));
        parallel_for(runs.size(), [&](std::size_t i) {
            const auto seed = base_seed + i;
            runs[i][0] = run_sgd(instance, schedule, horizon, OneHotSampler::from_instance(instance, seed), opt);
            runs[i][1] = run_sgd(noiseless, schedule, horizon, OneHotSampler::from_instance(noiseless, seed), opt);
            runs[i][2] = run_sgd(at_opt, schedule, horizon, OneHotSampler::from_instance(at_opt, seed), opt);
        });
        out << "t,bias_risk,variance_risk,total,normalized,seed\n";
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const auto& tr = *runs[i][0].risk_trace;
            for (std::size_t r = 0; r < tr.size(); ++r) {
                const auto t = tr[r].first;
                const double total = tr[r].second;
                const double norm = RiskReport::make(total, 0.0, instance.noise_level(), instance.dim(), t).normalized;
                out << t << ',' << format_double((*runs[i][1].risk_trace)[r].second) << ','
                    << format_double((*runs[i][2].risk_trace)[r].second) << ',' << format_double(total) << ','
                    << format_double(norm) << ',' << base_seed + i << '\n';
            }
        }
    }
    const auto ens = ensemble_risk(instance, schedule, horizon, n_seeds, base_seed, suffix);
    ojson summary{{"final_iterate", stats_json(ens.final_iterate)}};
    if (ens.suffix_average) {
        summary["suffix_average"] = stats_json(*ens.suffix_average);
    }
    out << "# summary: " << summary.dump() << '\n';
    return 0;
}

int cmd_sweep(const ojson& cfg, std::ostream& out)
{
    ConditionSweepConfig sc;
    sc.kappas = cfg["kappas"].get<std::vector<double>>();
    sc.families = cfg["families"].get<std::vector<std::string>>();
    sc.horizon = cfg["T"].get<std::int64_t>();
    sc.noise_level = cfg["noise_level"].get<double>();
    sc.objective = cfg["objective"] == "mc" ? Objective::mc_final_risk : Objective::exact_final_risk;
    sc.mc = {cfg["seeds"].get<std::int64_t>(), cfg["base_seed"].get<std::uint64_t>()};
    sc.auto_extend = cfg["auto_extend"].get<bool>();
    write_sweep_csv(out, condition_sweep(sc));
    return 0;
}

int cmd_certify(const ojson& cfg, std::ostream& out, std::ostream& err)
{
    const auto ledger = certify_bounds({cfg["noise_level"].get<double>()});
    write_ledger_jsonl(out, ledger);
    for (const auto& e : ledger) {
        err << (e.pass ? "PASS " : "FAIL ") << e.id << (e.gating ? "" : " (informational)") << ": "
            << format_double(e.lhs) << ' ' << e.relation << ' ' << format_double(e.rhs) << '\n';
    }
    return all_gating_pass(ledger) ? 0 : 2;
}

int cmd_census(const ojson& cfg, std::ostream& out)
{
    const auto instance = build_instance(cfg["instance"]);
    const auto schedule = schedule_from_json(plain(cfg["schedule"]));
    const auto res = bad_iterate_census(instance, schedule, cfg["T"].get<std::int64_t>(),
                                        cfg["taus"].get<std::vector<double>>(), policy_of(cfg));
    write_census_csv(out, res);
    return 0;
}

}  // namespace

nlohmann::ordered_json resolve_config(const std::vector<std::string>& args)
{
    return resolve(parse(args).flags);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    try {
        const auto parsed = parse(args);
        if (parsed.help) {
            out << parsed.help_text;
            return 0;
        }
        const auto& f = parsed.flags;
        configure_threads(f);
        const auto cfg = resolve(f);

        Output sink(f.out, out);
        auto& os = sink.get();
        if (f.subcommand == "certify") {
            os << ojson{{"config", cfg}}.dump() << '\n';
        } else {
            os << "# config: " << cfg.dump() << '\n';
        }
        int code = 0;
        if (f.subcommand == "exact") {
            code = cmd_exact(cfg, os);
        } else if (f.subcommand == "simulate") {
            code = cmd_simulate(cfg, os);
        } else if (f.subcommand == "sweep") {
            code = cmd_sweep(cfg, os);
        } else if (f.subcommand == "certify") {
            code = cmd_certify(cfg, os, err);
        } else if (f.subcommand == "census") {
            code = cmd_census(cfg, os);
        }
        sink.finish(f.out);
        return code;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const nlohmann::json::exception& e) {
        err << "error: Config: " << e.what() << '\n';
        return 1;
    }
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace stepdecay::cli
