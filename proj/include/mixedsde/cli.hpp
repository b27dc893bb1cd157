#pragma once

// Command-line frontend: subcommand dispatch, JSON config files with
// command-line flag overrides (flags win), artifact emission, and a run
// metadata record carrying the full effective configuration.

#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "core.hpp"
#include "fracalc.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "model.hpp"
#include "noise.hpp"
#include "pricing.hpp"
#include "solver.hpp"
#include "viability.hpp"

namespace mixedsde::cli {

using json = nlohmann::json;

// Exit codes: 0 success, 1 unexpected failure, 2 and up map the error codes
// one-to-one so scripts can branch on the failure class.
inline int exit_code(Errc c) { return 2 + static_cast<int>(c); }

namespace detail {

// Ties one named value to both a CLI11 option and a JSON config key, so a
// config file can fill anything a flag can and the metadata snapshot can
// echo every effective value.
class Binder {
  public:
    explicit Binder(CLI::App* cmd) : cmd_(cmd) {}

    template <typename T>
    CLI::Option* add(const std::string& name, T& var, const std::string& desc) {
        CLI::Option* opt = cmd_->add_option("--" + name, var, desc);
        record(name, opt, var);
        return opt;
    }

    CLI::Option* add_flag(const std::string& name, bool& var, const std::string& desc) {
        CLI::Option* opt = cmd_->add_flag("--" + name, var, desc);
        record(name, opt, var);
        return opt;
    }

    bool from_flag(const std::string& name) const {
        const auto it = options_.find(name);
        return it != options_.end() && it->second->count() > 0;
    }

    // Applies one config entry unless the same option was given as a flag.
    void apply(const std::string& key, const json& value) {
        const auto it = setters_.find(key);
        require(it != setters_.end(), Errc::invalid_argument, "unknown config key: " + key,
                key);
        if (from_flag(key)) return;
        try {
            it->second(value);
        } catch (const json::exception&) {
            fail(Errc::invalid_argument, "config value has the wrong type for " + key, key);
        }
    }

    json snapshot() const {
        json out = json::object();
        for (const auto& [name, getter] : getters_) out[name] = getter();
        return out;
    }

  private:
    template <typename T>
    void record(const std::string& name, CLI::Option* opt, T& var) {
        options_[name] = opt;
        setters_[name] = [&var](const json& v) { var = v.get<T>(); };
        getters_[name] = [&var]() { return json(var); };
    }

    CLI::App* cmd_;
    std::map<std::string, CLI::Option*, std::less<>> options_;
    std::map<std::string, std::function<void(const json&)>, std::less<>> setters_;
    std::map<std::string, std::function<json()>, std::less<>> getters_;
};

inline json load_config(const std::string& file) {
    if (file.empty()) return json::object();
    const std::string text = read_text_file(file);
    json cfg;
    try {
        cfg = json::parse(text);
    } catch (const json::exception& e) {
        fail(Errc::invalid_argument, std::string("config is not valid json: ") + e.what(),
             "config");
    }
    require(cfg.is_object(), Errc::invalid_argument, "config must be a json object", "config");
    return cfg;
}

// Model parameter keys accepted per model family; x0 and hurst are consumed
// by the driver setup even where the coefficient factory ignores them.
inline const std::map<std::string, std::vector<std::string>, std::less<>>& model_keys() {
    static const std::map<std::string, std::vector<std::string>, std::less<>> keys = {
        {"cir-pure", {"a", "sigma", "lambda", "x0", "hurst"}},
        {"cir-mixed", {"a", "sigma", "lambda", "x0", "hurst"}},
        {"vasicek", {"rate", "vol", "z0", "a", "sigma", "lambda", "x0", "hurst"}},
        {"linear", {"a", "b", "c", "x0", "hurst"}},
        {"custom", {"a0", "a1", "b0", "b1", "c0", "c1", "x0", "hurst"}},
    };
    return keys;
}

inline void check_param_key(const std::string& model, const std::string& key) {
    const auto it = model_keys().find(model);
    require(it != model_keys().end(), Errc::unknown_model, "unknown model name: " + model,
            "model");
    for (const auto& k : it->second)
        if (k == key) return;
    fail(Errc::invalid_argument, "unknown parameter " + key + " for model " + model, key);
}

inline void merge_config_params(const json& cfg, const std::string& section,
                                const std::string& model, ParamMap& params) {
    if (!cfg.contains(section)) return;
    const json& obj = cfg.at(section);
    require(obj.is_object(), Errc::invalid_argument, section + " must be a json object",
            section);
    for (const auto& [key, value] : obj.items()) {
        check_param_key(model, key);
        require(value.is_number(), Errc::invalid_argument,
                "parameter " + key + " must be a number", key);
        params[key] = value.get<double>();
    }
}

inline void merge_set_params(const std::vector<std::string>& sets, const std::string& model,
                             ParamMap& params) {
    for (const std::string& kv : sets) {
        const std::size_t eq = kv.find('=');
        require(eq != std::string::npos && eq > 0, Errc::invalid_argument,
                "expected key=value: " + kv, "set");
        const std::string key = kv.substr(0, eq);
        check_param_key(model, key);
        const std::string raw = kv.substr(eq + 1);
        double v = 0.0;
        const char* last = raw.data() + raw.size();
        const auto res = std::from_chars(raw.data(), last, v);
        require(res.ec == std::errc() && res.ptr == last, Errc::invalid_argument,
                "parameter " + key + " must be a number", key);
        params[key] = v;
    }
}

inline json param_json(const ParamMap& params) {
    json out = json::object();
    for (const auto& [k, v] : params) out[k] = v;
    return out;
}

inline json report_json(const ConditionReport& rep) {
    json entries = json::array();
    for (const ConditionEntry& e : rep.entries)
        entries.push_back(json{{"name", e.name},
                               {"observed", e.observed},
                               {"threshold", e.threshold},
                               {"passed", e.passed},
                               {"witness", e.witness}});
    return json{{"passed", rep.passed()}, {"note", rep.note}, {"entries", entries}};
}

// Artifact routing: a named output file frees stdout for the metadata
// record; with the artifact on stdout the metadata appears only when a
// metadata file is named.
struct Emitter {
    std::ostream& out;
    std::string output_file;
    std::string metadata_file;

    void emit(std::string_view artifact, const json& metadata) const {
        if (!output_file.empty())
            write_text_file(output_file, artifact);
        else
            out << artifact;
        const std::string meta = metadata.dump(2) + "\n";
        if (!metadata_file.empty())
            write_text_file(metadata_file, meta);
        else if (!output_file.empty())
            out << meta;
    }
};

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    using detail::Binder;

    CLI::App app{"mixed Wiener and fractional-noise equation toolkit"};
    app.require_subcommand(1);

    struct CommonArgs {
        std::string config;
        std::string output;
        std::string metadata;
    };
    struct ModelArgs {
        std::string model = "cir-mixed";
        std::vector<std::string> set;
        double a = 0.1;
        double sigma = 0.5;
        double lambda = 0.5;
        double x0 = 1.0;
        double hurst = 0.8;
    };
    struct SeedArgs {
        std::uint64_t master = 20240910;
        std::uint64_t stream = 0;
        SeedSpec spec() const { return {master, stream}; }
    };

    struct SimulateArgs : CommonArgs, ModelArgs, SeedArgs {
        double horizon = 1.0;
        std::size_t steps = 256;
    } sim;
    struct IntegrateArgs : CommonArgs {
        std::string f, g;
        double alpha = 0.35;
        double from = 0.0;
        double to = -1.0;
    } intg;
    struct NormsArgs : CommonArgs {
        std::string input;
        double alpha = 0.35;
        double at = -1.0;
    } nrm;
    struct CheckArgs : CommonArgs, ModelArgs, SeedArgs {
        std::string kind = "viability";
        std::vector<std::string> set2;
        std::size_t samples = 256;
        std::size_t dprime = 1;
        double t_min = 0.0, t_max = 1.0, x_min = 0.0, x_max = 1.0;
    } chk;
    struct CompareArgs : CommonArgs, ModelArgs, SeedArgs {
        std::vector<std::string> set2;
        std::size_t paths = 1000;
        double horizon = 1.0;
        std::size_t steps = 256;
        double tol = 1e-9;
        bool absorbing = false;
        unsigned threads = 1;
    } cmp;
    struct KernelArgs : CommonArgs {
        double hurst = 0.8;
        double horizon = 1.0;
        std::size_t steps = 256;
        double tol = 1e-3;
    } ker;
    struct PriceArgs : CommonArgs, ModelArgs, SeedArgs {
        double strike = 1.0;
        double horizon = 10.0;
        std::size_t steps = 4096;
        std::size_t paths = 10000;
        bool pure = false;
        unsigned threads = 1;
    } prc;
    struct BoundArgs : CommonArgs, ModelArgs {
        double strike = 1.0;
        double horizon = 10.0;
        bool pure = false;
    } bnd;
    struct TableArgs : CommonArgs, SeedArgs {
        std::size_t paths = 20000;
        std::size_t steps = 4096;
        double hurst = 0.8;
        unsigned threads = 1;
    } tbl;
    struct HittingArgs : CommonArgs, SeedArgs {
        double a = -0.1;
        double hurst = 0.8;
        double x0 = 1.0;
        double horizon = 500.0;
        std::size_t steps = 4096;
        std::size_t paths = 1000;
        unsigned threads = 1;
        std::string svg;
    } hit;

    std::map<std::string, Binder, std::less<>> binders;
    auto make_sub = [&](const std::string& name, const std::string& desc, CommonArgs& c)
        -> Binder& {
        CLI::App* subcmd = app.add_subcommand(name, desc);
        Binder& b = binders.emplace(name, Binder(subcmd)).first->second;
        b.add("config", c.config, "json config file; flags override its values");
        b.add("output", c.output, "artifact file (default: stdout)");
        b.add("metadata", c.metadata, "metadata json file");
        return b;
    };
    auto add_model = [](Binder& b, ModelArgs& m, bool with_name = true) {
        if (with_name)
            b.add("model", m.model, "model name: cir-pure, cir-mixed, vasicek, linear, custom");
        b.add("set", m.set, "model parameter as key=value (repeatable)");
        b.add("a", m.a, "drift rate a");
        b.add("sigma", m.sigma, "volatility sigma");
        b.add("lambda", m.lambda, "diffusion exponent lambda");
        b.add("x0", m.x0, "start value");
        b.add("hurst", m.hurst, "Hurst index of the fractional driver");
    };
    auto add_seed = [](Binder& b, SeedArgs& s) {
        b.add("seed", s.master, "master seed");
        b.add("stream", s.stream, "seed stream offset");
    };

    {
        Binder& b = make_sub("simulate", "solve one path of a named model", sim);
        add_model(b, sim);
        b.add("horizon", sim.horizon, "time horizon T");
        b.add("steps", sim.steps, "grid step count N");
        add_seed(b, sim);
    }
    {
        Binder& b = make_sub("integrate", "generalized Stieltjes integral of f against g", intg);
        b.add("f", intg.f, "integrand path csv");
        b.add("g", intg.g, "driver path csv");
        b.add("alpha", intg.alpha, "fractional order");
        b.add("from", intg.from, "lower limit");
        b.add("to", intg.to, "upper limit (default: horizon)");
    }
    {
        Binder& b = make_sub("norms", "fractional norms of a path", nrm);
        b.add("input", nrm.input, "path csv");
        b.add("alpha", nrm.alpha, "fractional order");
        b.add("at", nrm.at, "evaluation time (default: horizon)");
    }
    {
        Binder& b = make_sub("check", "viability, positivity, comparison, hypotheses checks",
                             chk);
        b.add("kind", chk.kind, "check kind: viability, positivity, comparison, hypotheses");
        add_model(b, chk);
        b.add("set2", chk.set2, "second-model override as key=value (repeatable)");
        b.add("samples", chk.samples, "sample count for the point cloud");
        b.add("dprime", chk.dprime, "leading coordinates kept nonnegative");
        b.add("t-min", chk.t_min, "sampling box time lower edge");
        b.add("t-max", chk.t_max, "sampling box time upper edge");
        b.add("x-min", chk.x_min, "sampling box state lower edge");
        b.add("x-max", chk.x_max, "sampling box state upper edge");
        add_seed(b, chk);
    }
    {
        Binder& b = make_sub("compare", "empirical path ordering of two models", cmp);
        add_model(b, cmp);
        b.add("set2", cmp.set2, "second-model override as key=value (repeatable)");
        b.add("paths", cmp.paths, "path count");
        b.add("horizon", cmp.horizon, "time horizon T");
        b.add("steps", cmp.steps, "grid step count N");
        b.add("tol", cmp.tol, "ordering violation tolerance");
        b.add_flag("absorbing", cmp.absorbing, "clamp states at zero permanently");
        b.add("threads", cmp.threads, "worker threads (never affects values)");
        add_seed(b, cmp);
    }
    {
        Binder& b = make_sub("kernel", "solve the covariance factorization kernel", ker);
        b.add("hurst", ker.hurst, "Hurst index");
        b.add("horizon", ker.horizon, "time horizon T");
        b.add("steps", ker.steps, "grid step count N");
        b.add("tol", ker.tol, "residual certificate tolerance");
    }
    {
        Binder& b = make_sub("price", "Monte Carlo call price on the short rate", prc);
        add_model(b, prc, false);
        b.add_flag("pure", prc.pure, "drop the Wiener component");
        b.add("strike", prc.strike, "strike K");
        b.add("horizon", prc.horizon, "option maturity T");
        b.add("steps", prc.steps, "grid step count N");
        b.add("paths", prc.paths, "path count");
        b.add("threads", prc.threads, "worker threads (never affects values)");
        add_seed(b, prc);
    }
    {
        Binder& b = make_sub("bound", "closed upper bound for the call price", bnd);
        add_model(b, bnd, false);
        b.add_flag("pure", bnd.pure, "drop the Wiener component");
        b.add("strike", bnd.strike, "strike K");
        b.add("horizon", bnd.horizon, "option maturity T");
    }
    {
        Binder& b = make_sub("table", "price and bound over the reference grid", tbl);
        b.add("paths", tbl.paths, "path count per row");
        b.add("steps", tbl.steps, "grid step count N");
        b.add("hurst", tbl.hurst, "Hurst index");
        b.add("threads", tbl.threads, "worker threads (never affects values)");
        add_seed(b, tbl);
    }
    {
        Binder& b = make_sub("hitting", "first hitting time of zero experiment", hit);
        b.add("a", hit.a, "drift rate a");
        b.add("hurst", hit.hurst, "Hurst index");
        b.add("x0", hit.x0, "start value");
        b.add("horizon", hit.horizon, "experiment horizon");
        b.add("steps", hit.steps, "grid step count N");
        b.add("paths", hit.paths, "path count");
        b.add("threads", hit.threads, "worker threads (never affects values)");
        b.add("svg", hit.svg, "optional histogram svg file");
        add_seed(b, hit);
    }

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("mixedsde");
    for (const std::string& s : args) argv.push_back(s.c_str());

    try {
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::ParseError& e) {
            fail(Errc::invalid_argument, std::string("argument error: ") + e.what(), "argv");
        }

        CLI::App* active = app.get_subcommands().at(0);
        const std::string sub = active->get_name();
        Binder& binder = binders.at(sub);

        // Pull the config path even when it came from the config option
        // itself being the only flag; then fill everything else.
        const std::string config_path = [&]() -> std::string {
            if (sub == "simulate") return sim.config;
            if (sub == "integrate") return intg.config;
            if (sub == "norms") return nrm.config;
            if (sub == "check") return chk.config;
            if (sub == "compare") return cmp.config;
            if (sub == "kernel") return ker.config;
            if (sub == "price") return prc.config;
            if (sub == "bound") return bnd.config;
            if (sub == "table") return tbl.config;
            return hit.config;
        }();
        const json cfg = detail::load_config(config_path);
        for (const auto& [key, value] : cfg.items()) {
            if (key == "params" || key == "params2") continue;
            binder.apply(key, value);
        }

        auto effective_params = [&](const ModelArgs& m) {
            ParamMap params;
            detail::merge_config_params(cfg, "params", m.model, params);
            if (binder.from_flag("a")) params["a"] = m.a;
            if (binder.from_flag("sigma")) params["sigma"] = m.sigma;
            if (binder.from_flag("lambda")) params["lambda"] = m.lambda;
            if (binder.from_flag("x0")) params["x0"] = m.x0;
            if (binder.from_flag("hurst")) params["hurst"] = m.hurst;
            detail::merge_set_params(m.set, m.model, params);
            return params;
        };
        auto second_params = [&](const std::string& model, const ParamMap& base,
                                 const std::vector<std::string>& set2) {
            ParamMap params = base;
            detail::merge_config_params(cfg, "params2", model, params);
            detail::merge_set_params(set2, model, params);
            return params;
        };

        json meta;
        meta["subcommand"] = sub;
        meta["config"] = binder.snapshot();

        if (sub == "simulate") {
            const ParamMap params = effective_params(sim);
            const TimeGrid grid(sim.horizon, sim.steps);
            const SeedSpec seed = sim.spec();
            const double h = param_or(params, "hurst", 0.8);
            const FbmSampler sampler(grid, HurstParam::checked(h));
            const SamplePath b = sampler.sample(fbm_stream(seed.master, seed.stream));

            SamplePath path;
            std::optional<double> nu0;
            bool absorbed = false;
            if (sim.model == "cir-pure" || sim.model == "cir-mixed") {
                const CirParams cp = cir_params_from(params, sim.model == "cir-mixed");
                SolveResult res;
                if (cp.mixed) {
                    const SamplePath w =
                        gen_wiener(grid, 1, wiener_stream(seed.master, seed.stream));
                    res = solve_cir(cp, &w, b, grid);
                } else {
                    res = solve_cir(cp, nullptr, b, grid);
                }
                path = std::move(res.path);
                nu0 = res.nu0;
                absorbed = res.absorbed;
            } else if (sim.model == "vasicek") {
                const VasicekParams vp = vasicek_params_from(params);
                const SamplePath w = gen_wiener(grid, 1, wiener_stream(seed.master, seed.stream));
                path = solve_vasicek(vp, w, b, grid);
            } else {
                const MixedModel model = make_model(sim.model, params);
                const SamplePath w =
                    gen_wiener(grid, model.m, wiener_stream(seed.master, seed.stream));
                const std::vector<double> start(model.d, param_or(params, "x0", 1.0));
                path = euler_mixed(model, start, w, b, grid);
            }

            meta["config"]["params"] = detail::param_json(params);
            meta["result"] = json{{"absorbed", absorbed},
                                  {"nu0", nu0 ? json(*nu0) : json(nullptr)},
                                  {"terminal", path.value(grid.steps)}};
            detail::Emitter{out, sim.output, sim.metadata}.emit(path_csv(path), meta);
            return 0;
        }

        if (sub == "integrate") {
            require(!intg.f.empty() && !intg.g.empty(), Errc::invalid_argument,
                    "integrate needs --f and --g path files", "f");
            const SamplePath f = read_path_csv(intg.f);
            const SamplePath g = read_path_csv(intg.g);
            const double hi = intg.to < 0.0 ? f.grid.horizon : intg.to;
            const double value = gls_integral(f, g, intg.from, hi, FracParams(intg.alpha));
            meta["result"] = json{{"integral", value}};
            detail::Emitter{out, intg.output, intg.metadata}.emit(
                json{{"integral", value}}.dump(2) + "\n", meta);
            return 0;
        }

        if (sub == "norms") {
            require(!nrm.input.empty(), Errc::invalid_argument, "norms needs --input", "input");
            const SamplePath f = read_path_csv(nrm.input);
            const double t = nrm.at < 0.0 ? f.grid.horizon : nrm.at;
            const FracParams fp(nrm.alpha);
            const json result{{"norm_inf", norm_inf(f, t, fp)},
                              {"seminorm_0", seminorm_0(f, t, fp)},
                              {"lambda", lambda_coeff(f, t, fp)}};
            meta["result"] = result;
            detail::Emitter{out, nrm.output, nrm.metadata}.emit(result.dump(2) + "\n", meta);
            return 0;
        }

        if (sub == "check") {
            const ParamMap params = effective_params(chk);
            const MixedModel model = make_model(chk.model, params);
            HypothesisBox box;
            box.t_min = chk.t_min;
            box.t_max = chk.t_max;
            box.x_min.assign(model.d, chk.x_min);
            box.x_max.assign(model.d, chk.x_max);

            ConditionReport rep;
            if (chk.kind == "viability") {
                const BoundarySpec spec = half_space(0, model.d, 0.0);
                const auto cloud = sample_domain(spec, box, chk.samples, chk.spec());
                rep = check_viability(model, spec, cloud);
            } else if (chk.kind == "positivity") {
                const std::vector<double> start(model.d, param_or(params, "x0", 1.0));
                PositivityOptions opt;
                opt.samples = chk.samples;
                opt.seed = chk.spec();
                rep = check_positivity(model, start, chk.dprime, box, opt);
            } else if (chk.kind == "comparison") {
                const ParamMap params2 = second_params(chk.model, params, chk.set2);
                const MixedModel m2 = make_model(chk.model, params2);
                const std::vector<double> start1(model.d, param_or(params, "x0", 1.0));
                const std::vector<double> start2(m2.d, param_or(params2, "x0", 1.0));
                ComparisonOptions opt;
                opt.samples = chk.samples;
                opt.seed = chk.spec();
                rep = check_comparison(model, m2, 0, start1, start2, box, opt);
                meta["config"]["params2"] = detail::param_json(params2);
            } else if (chk.kind == "hypotheses") {
                HypothesisOptions opt;
                opt.samples = chk.samples;
                opt.seed = chk.spec();
                rep = check_hypotheses(model, box, opt);
            } else {
                fail(Errc::invalid_argument, "unknown check kind: " + chk.kind, "kind");
            }
            meta["config"]["params"] = detail::param_json(params);
            meta["result"] = json{{"passed", rep.passed()}};
            detail::Emitter{out, chk.output, chk.metadata}.emit(
                detail::report_json(rep).dump(2) + "\n", meta);
            return 0;
        }

        if (sub == "compare") {
            const ParamMap params = effective_params(cmp);
            const ParamMap params2 = second_params(cmp.model, params, cmp.set2);
            const MixedModel m1 = make_model(cmp.model, params);
            const MixedModel m2 = make_model(cmp.model, params2);
            const std::vector<double> start1(m1.d, param_or(params, "x0", 1.0));
            const std::vector<double> start2(m2.d, param_or(params2, "x0", 1.0));
            const double h = param_or(params, "hurst", 0.8);
            const TimeGrid grid(cmp.horizon, cmp.steps);
            EmpiricalOptions opt;
            opt.tol = cmp.tol;
            opt.absorbing = cmp.absorbing;
            opt.threads = cmp.threads;
            const ViolationStats vs =
                empirical_comparison(m1, m2, 0, start1, start2, HurstParam::checked(h),
                                     cmp.paths, grid, cmp.spec(), opt);
            meta["config"]["params"] = detail::param_json(params);
            meta["config"]["params2"] = detail::param_json(params2);
            meta["result"] = json{{"violating_paths", vs.violating_paths},
                                  {"max_violation", vs.max_violation},
                                  {"min_margin", vs.min_margin}};
            detail::Emitter{out, cmp.output, cmp.metadata}.emit(violation_csv(vs), meta);
            return 0;
        }

        if (sub == "kernel") {
            const TimeGrid grid(ker.horizon, ker.steps);
            const KernelGrid kg = solve_kernel(grid, HurstParam::checked(ker.hurst), ker.tol);
            meta["result"] = json{{"max_residual", kg.max_residual()},
                                  {"rows", grid.steps},
                                  {"tolerance", ker.tol}};
            detail::Emitter{out, ker.output, ker.metadata}.emit(kernel_csv(kg), meta);
            return 0;
        }

        if (sub == "price" || sub == "bound") {
            const bool is_price = sub == "price";
            const ModelArgs& m = is_price ? static_cast<ModelArgs&>(prc)
                                          : static_cast<ModelArgs&>(bnd);
            CirParams cp;
            cp.a = m.a;
            cp.sigma = m.sigma;
            cp.lambda = m.lambda;
            cp.x0 = m.x0;
            cp.hurst = m.hurst;
            cp.mixed = is_price ? !prc.pure : !bnd.pure;
            json result;
            std::string output_file, metadata_file;
            if (is_price) {
                const TimeGrid grid(prc.horizon, prc.steps);
                const McPrice mc =
                    mc_price(cp, prc.strike, prc.horizon, prc.paths, grid, prc.spec(),
                             prc.threads);
                result = json{{"mc_price", mc.price}, {"mc_stderr", mc.std_err}};
                output_file = prc.output;
                metadata_file = prc.metadata;
            } else {
                result = json{{"upper_bound", upper_bound_price(cp, bnd.strike, bnd.horizon)}};
                output_file = bnd.output;
                metadata_file = bnd.metadata;
            }
            meta["result"] = result;
            detail::Emitter{out, output_file, metadata_file}.emit(result.dump(2) + "\n", meta);
            return 0;
        }

        if (sub == "table") {
            TableConfig tc;
            tc.seed = tbl.spec();
            tc.n_paths = tbl.paths;
            tc.steps = tbl.steps;
            tc.hurst = tbl.hurst;
            tc.threads = tbl.threads;
            const PriceReport rep = reproduce_table(tc);
            json cells = json::array();
            for (const PriceCell& c : rep.cells)
                cells.push_back(json{{"sigma", c.sigma},
                                     {"K", c.strike},
                                     {"mc_price", c.mc_price},
                                     {"upper_bound", c.upper_bound}});
            meta["result"] = json{{"cells", cells}};
            detail::Emitter{out, tbl.output, tbl.metadata}.emit(price_report_csv(rep), meta);
            return 0;
        }

        if (sub == "hitting") {
            const TimeGrid grid(hit.horizon, hit.steps);
            const HittingStats st =
                hitting_experiment(hit.a, HurstParam::checked(hit.hurst), hit.x0, hit.horizon,
                                   hit.paths, grid, hit.spec(), hit.threads);
            meta["result"] = json{{"censored", st.censored},
                                  {"checkpoints", st.checkpoints},
                                  {"survivors", st.survivors}};
            if (!hit.svg.empty()) write_text_file(hit.svg, histogram_svg(st));
            detail::Emitter{out, hit.output, hit.metadata}.emit(histogram_csv(st), meta);
            return 0;
        }

        fail(Errc::invalid_argument, "unknown subcommand: " + sub, "subcommand");
    } catch (const Error& e) {
        const json msg{{"error", {{"code", errc_name(e.code())},
                                  {"message", e.what()},
                                  {"field", e.field()}}}};
        err << msg.dump() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        const json msg{{"error", {{"code", "internal"}, {"message", e.what()}, {"field", ""}}}};
        err << msg.dump() << "\n";
        return 1;
    }
}

}  // namespace mixedsde::cli
