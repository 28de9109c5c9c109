#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bohrlab/bohr.hpp"
#include "bohrlab/config.hpp"
#include "bohrlab/constructions.hpp"
#include "bohrlab/croot_sisask.hpp"
#include "bohrlab/density.hpp"
#include "bohrlab/errors.hpp"
#include "bohrlab/fourier.hpp"
#include "bohrlab/group.hpp"
#include "bohrlab/kk.hpp"
#include "bohrlab/rng.hpp"
#include "bohrlab/roth.hpp"
#include "bohrlab/sets.hpp"
#include "bohrlab/spectra.hpp"

namespace bohrlab {
namespace cli {

inline constexpr const char* kVersion = "0.1.0";

// Options shared by every subcommand.  Each run prints a header object with
// the fully resolved configuration so that logs are self-describing and
// replays need nothing beyond the recorded argv.
struct CommonOpts {
    std::string config_path;
    bool json_only = false;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;

    void attach(CLI::App* cmd, bool seed_required) {
        cmd->add_option("--config", config_path, "TOML config file (missing keys keep defaults)");
        cmd->add_flag("--json", json_only, "machine output only (suppress text summaries)");
        seed_opt = cmd->add_option("--seed", seed, "RNG seed");
        if (seed_required) seed_opt->required();
    }

    RunConfig resolve() const {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config_file(config_path);
        if (seed_opt && seed_opt->count() > 0) cfg.seed = seed;
        return cfg;
    }
};

inline nlohmann::json header_json(const std::string& command, const RunConfig& cfg) {
    return nlohmann::json{{"bohrlab", kVersion}, {"command", command}, {"config", cfg.to_json()}};
}

inline void emit(std::ostream& out, const CommonOpts& common, const std::string& command,
                 const RunConfig& cfg, const nlohmann::json& result, const std::string& text) {
    out << header_json(command, cfg).dump() << "\n";
    out << result.dump() << "\n";
    if (!common.json_only && !text.empty()) out << text << "\n";
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw BadInput("cannot open for writing: " + path);
    os << j.dump(2) << "\n";
}

inline void write_jsonl(const std::string& path, const nlohmann::json& header,
                        const std::vector<nlohmann::json>& lines) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw BadInput("cannot open log for writing: " + path);
    os << header.dump() << "\n";
    for (const auto& j : lines) os << j.dump() << "\n";
}

inline APCountMode parse_mode(const std::string& s) {
    if (s == "fourier") return APCountMode::Fourier;
    if (s == "brute") return APCountMode::Brute;
    throw BadInput("unknown count mode: " + s);
}

// ---- subcommand argument bags ----

struct CountArgs {
    CommonOpts common;
    std::string group, set_path, mode = "fourier", out_path;
};

struct ConstructArgs {
    CommonOpts common;
    std::string method, out_path;
    std::int64_t n = 0;
    int dim = 0;
};

struct SpectrumArgs {
    CommonOpts common;
    std::string group, set_path, mu_path, out_path;
    double eps = 0.0;
};

struct ChangArgs {
    CommonOpts common;
    std::string group, set_path, mu_path, out_path;
    double eps = 0.0;
};

struct CsArgs {
    CommonOpts common;
    std::string group, f_path, a_path, s_path, mode = "exhaustive", out_path;
    double eps = 0.0, p = 2.0;
};

struct KkArgs {
    CommonOpts common;
    std::string group = "Z2003", log_path;
    double width = 0.8, rho_pp_base = 0.1, density_a = 0.3, density_ap = 0.4;
    int max_steps = 0;
};

struct RothArgs {
    CommonOpts common;
    std::string group, set_path, log_path;
    double density = 0.0;
};

// ---- handlers ----

inline int run_count(const CountArgs& a, std::ostream& out) {
    RunConfig cfg = a.common.resolve();
    Group g = Group::parse(a.group, cfg.size_cap);
    ElementSet set = ElementSet::load(a.set_path, &g, cfg.size_cap);
    APCount c = count_3ap(g, set, parse_mode(a.mode));
    nlohmann::json result = c.to_json();
    std::string text = "count: " + g.str() + " |A| = " + std::to_string(set.size()) +
                       " alpha = " + format_double(c.alpha) +
                       " triples = " + std::to_string(c.triple_count) +
                       " value = " + format_double(c.value);
    emit(out, a.common, "count", cfg, result, text);
    if (!a.out_path.empty()) write_json_file(a.out_path, result);
    return 0;
}

inline int run_construct(const ConstructArgs& a, std::ostream& out) {
    RunConfig cfg = a.common.resolve();
    ConstructionResult r;
    if (a.method == "ternary") {
        if (a.dim != 0) throw BadInput("--dim only applies to the behrend method");
        r = ternary_free_set(a.n);
    } else if (a.method == "behrend") {
        r = behrend_set(a.n, a.dim);
    } else {
        throw BadInput("unknown construction method: " + a.method);
    }
    std::ofstream os(a.out_path, std::ios::binary);
    if (!os) throw BadInput("cannot open for writing: " + a.out_path);
    os << "# bohrlab construct method=" << to_string(r.method) << " N=" << r.n
       << " size=" << r.size << " certified=" << (r.certified_free ? 1 : 0) << "\n";
    for (std::int64_t v : r.a) os << v << "\n";
    nlohmann::json result = r.to_json();
    result["out"] = a.out_path;
    std::string text = "construct: " + to_string(r.method) + " N = " + std::to_string(r.n) +
                       " -> " + std::to_string(r.size) + " elements" +
                       (r.certified_free ? " (certified 3AP-free)" : " (uncertified)") + " in " +
                       a.out_path;
    emit(out, a.common, "construct", cfg, result, text);
    return 0;
}

inline DensityFn load_mu(const Group& g, const std::string& mu_path, const RunConfig& cfg) {
    if (mu_path.empty()) return DensityFn(g, cplx(1.0, 0.0));
    return DensityFn::normalized_indicator(ElementSet::load(mu_path, &g, cfg.size_cap));
}

inline int run_spectrum(const SpectrumArgs& a, std::ostream& out) {
    RunConfig cfg = a.common.resolve();
    Group g = Group::parse(a.group, cfg.size_cap);
    ElementSet set = ElementSet::load(a.set_path, &g, cfg.size_cap);
    DensityFn f = DensityFn::indicator(set);
    DensityFn mu = load_mu(g, a.mu_path, cfg);
    SpectrumSet spec = spectrum(f, mu, a.eps);
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < spec.chars.size(); ++i)
        entries.push_back({{"gamma", spec.chars[i]},
                           {"abs", std::abs(spec.coeffs[i])},
                           {"re", spec.coeffs[i].real()},
                           {"im", spec.coeffs[i].imag()}});
    nlohmann::json result{{"group", g.str()},
                          {"epsilon", spec.epsilon},
                          {"l1", spec.l1},
                          {"size", spec.chars.size()},
                          {"entries", std::move(entries)}};
    std::string text = "spectrum: " + std::to_string(spec.chars.size()) + " characters at eps = " +
                       format_double(a.eps);
    emit(out, a.common, "spectrum", cfg, result, text);
    if (!a.out_path.empty()) write_json_file(a.out_path, result);
    return 0;
}

inline int run_chang(const ChangArgs& a, std::ostream& out) {
    RunConfig cfg = a.common.resolve();
    Group g = Group::parse(a.group, cfg.size_cap);
    ElementSet set = ElementSet::load(a.set_path, &g, cfg.size_cap);
    DensityFn f = DensityFn::indicator(set);
    DensityFn mu = load_mu(g, a.mu_path, cfg);
    ChangReport rep = chang_entropy_check(f, mu, a.eps, cfg.C_chang, cfg.omega_trials, cfg.seed);
    std::string text = std::string("chang-report: |Lambda| = ") + std::to_string(rep.lambda_size) +
                       " bound = " + format_double(rep.bound) +
                       " ratio = " + format_double(rep.ratio) + (rep.pass ? " PASS" : " FAIL");
    emit(out, a.common, "chang-report", cfg, rep.to_json(), text);
    if (!a.out_path.empty()) write_json_file(a.out_path, rep.to_json());
    return 0;
}

inline int run_cs(const CsArgs& a, std::ostream& out) {
    RunConfig cfg = a.common.resolve();
    Group g = Group::parse(a.group, cfg.size_cap);
    ElementSet fset = ElementSet::load(a.f_path, &g, cfg.size_cap);
    ElementSet aset = ElementSet::load(a.a_path, &g, cfg.size_cap);
    ElementSet sset = ElementSet::load(a.s_path, &g, cfg.size_cap);
    CSMode mode;
    if (a.mode == "exhaustive") mode = CSMode::Exhaustive;
    else if (a.mode == "sampled") mode = CSMode::Sampled;
    else throw BadInput("unknown cs mode: " + a.mode);
    CSInstance inst = make_cs_instance(DensityFn::indicator(fset), aset, sset, a.eps, a.p, cfg,
                                       cfg.seed);
    CSResult res = cs_translates(inst, mode);
    std::string text = "cs-verify: |T| = " + std::to_string(res.T.size()) + " of |S| = " +
                       std::to_string(sset.size()) + " mu_S(T) = " + format_double(res.mu_S_T) +
                       " bound = " + format_double(res.bound) +
                       " worst = " + format_double(res.worst_norm) +
                       " threshold = " + format_double(res.threshold);
    emit(out, a.common, "cs-verify", cfg, res.to_json(), text);
    if (!a.out_path.empty()) write_json_file(a.out_path, res.to_json());
    return 0;
}

inline ElementSet thin_set(const ElementSet& s, double density, Rng& rng) {
    ElementSet out(s.group());
    for (std::int64_t x : s.elements())
        if (rng.next_double() < density) out.add(x);
    return out;
}

inline int run_kk(const KkArgs& a, std::ostream& out) {
    RunConfig cfg = a.common.resolve();
    Group g = Group::parse(a.group, cfg.size_cap);
    BohrSet whole = BohrSet::whole_group(g);
    BohrSet base(g, {1}, {a.width});
    RegularityCertificate c1 = find_regular_dilate(base, cfg.C_regular);
    BohrSet bp = base.dilate(c1.lambda);
    BohrSet cand = bp.dilate(a.rho_pp_base);
    RegularityCertificate c2 = find_regular_dilate(cand, cfg.C_regular);
    BohrSet bpp = cand.dilate(c2.lambda);
    double rho_pp = a.rho_pp_base * c2.lambda;

    Rng rng(cfg.seed);
    ElementSet aset = thin_set(whole.members(), a.density_a, rng);
    ElementSet apset = thin_set(bp.members(), a.density_ap, rng);

    std::vector<nlohmann::json> trace;
    KKOutcome res = kk_iterate(whole, bp, bpp, aset, apset, 1.0, rho_pp, a.max_steps, cfg,
                               cfg.seed, a.log_path.empty() ? nullptr : &trace);
    nlohmann::json result = res.to_json();
    result["instance"] = {{"group", g.str()},
                          {"width", a.width},
                          {"rho_pp", rho_pp},
                          {"A_size", aset.size()},
                          {"Ap_size", apset.size()}};
    if (!a.log_path.empty()) write_jsonl(a.log_path, header_json("kk-run", cfg), trace);
    std::string text = std::string("kk-run: ") +
                       (res.tag == KKOutcome::Tag::Pair ? "pair" : "increment") + " after " +
                       std::to_string(res.steps) + " steps";
    emit(out, a.common, "kk-run", cfg, result, text);
    return 0;
}

inline int run_roth(const RothArgs& a, std::ostream& out) {
    RunConfig cfg = a.common.resolve();
    Group g = Group::parse(a.group, cfg.size_cap);
    if (a.set_path.empty() == (a.density <= 0.0))
        throw BadInput("roth-run needs exactly one of --set or --density");
    ElementSet aset(g);
    if (!a.set_path.empty()) {
        aset = ElementSet::load(a.set_path, &g, cfg.size_cap);
    } else {
        Rng rng(cfg.seed);
        aset = ElementSet::random(g, a.density, rng);
    }

    std::vector<nlohmann::json> trace;
    nlohmann::json result;
    std::string text;
    try {
        IterationLog log = run_main_iteration(g, aset, cfg, &trace);
        result = {{"outcome", "terminal"},
                  {"alpha0", log.alpha0},
                  {"budget", log.budget},
                  {"steps", log.states.size()},
                  {"final_alpha", log.states.back().alpha},
                  {"terminal_i", log.terminal.i},
                  {"claimed", log.terminal.claimed},
                  {"claimed_symbolic", log.terminal.claimed_symbolic},
                  {"count_value", log.terminal.count.value},
                  {"triple_count", log.terminal.count.triple_count}};
        text = "roth-run: terminal at i = " + std::to_string(log.terminal.i) + " claimed = " +
               format_double(log.terminal.claimed) + " <= value = " +
               format_double(log.terminal.count.value);
    } catch (const StepStalled& e) {
        result = {{"outcome", "stalled"}, {"steps", trace.size()}, {"detail", e.what()}};
        text = std::string("roth-run: stalled (") + e.what() + ")";
    } catch (const MaxStepsExceeded& e) {
        result = {{"outcome", "budget-exceeded"}, {"steps", trace.size()}, {"detail", e.what()}};
        text = std::string("roth-run: budget exceeded (") + e.what() + ")";
    }
    if (!a.log_path.empty()) {
        std::vector<nlohmann::json> lines = trace;
        lines.push_back(result);
        write_jsonl(a.log_path, header_json("roth-run", cfg), lines);
    }
    emit(out, a.common, "roth-run", cfg, result, text);
    return 0;
}

// Parses argv (without the program name) and runs one subcommand.  Exit
// codes: 0 success, 1 domain error (JSON object on `err`), 2 usage error.
// The verify-suite subcommand is dispatched by the full front end in
// acceptance.hpp; here it only appears in the usage text.
inline int run_dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"finite-group Bohr set laboratory"};
    app.name("bohrlab");
    app.require_subcommand(1);
    app.footer("environment: BOHRLAB_THREADS caps worker threads (0 = auto)");

    CountArgs count_args;
    CLI::App* count_cmd = app.add_subcommand("count", "count 3APs in a set");
    count_cmd->add_option("--group", count_args.group, "group spec, e.g. Z2003 or Z3xZ5")->required();
    count_cmd->add_option("--set", count_args.set_path, "set file (lines or BLAB)")->required();
    count_cmd->add_option("--mode", count_args.mode, "fourier | brute")
        ->check(CLI::IsMember({"fourier", "brute"}));
    count_cmd->add_option("--out", count_args.out_path, "write result JSON here");
    count_args.common.attach(count_cmd, false);

    ConstructArgs construct_args;
    CLI::App* construct_cmd = app.add_subcommand("construct", "emit a 3AP-free subset of {1..N}");
    construct_cmd->add_option("--method", construct_args.method, "ternary | behrend")
        ->required()
        ->check(CLI::IsMember({"ternary", "behrend"}));
    construct_cmd->add_option("--N", construct_args.n, "interval endpoint")->required();
    construct_cmd->add_option("--dim", construct_args.dim, "behrend dimension (0 = auto)");
    construct_cmd->add_option("--out", construct_args.out_path, "output set file")->required();
    construct_args.common.attach(construct_cmd, false);

    SpectrumArgs spectrum_args;
    CLI::App* spectrum_cmd = app.add_subcommand("spectrum", "large spectrum of a set's indicator");
    spectrum_cmd->add_option("--group", spectrum_args.group)->required();
    spectrum_cmd->add_option("--set", spectrum_args.set_path)->required();
    spectrum_cmd->add_option("--eps", spectrum_args.eps, "threshold in (0, 1]")->required();
    spectrum_cmd->add_option("--mu-set", spectrum_args.mu_path, "measure support (default uniform)");
    spectrum_cmd->add_option("--out", spectrum_args.out_path);
    spectrum_args.common.attach(spectrum_cmd, false);

    ChangArgs chang_args;
    CLI::App* chang_cmd = app.add_subcommand("chang-report", "dissociated hull vs entropy bound");
    chang_cmd->add_option("--group", chang_args.group)->required();
    chang_cmd->add_option("--set", chang_args.set_path)->required();
    chang_cmd->add_option("--eps", chang_args.eps)->required();
    chang_cmd->add_option("--mu-set", chang_args.mu_path);
    chang_cmd->add_option("--out", chang_args.out_path);
    chang_args.common.attach(chang_cmd, true);

    CsArgs cs_args;
    CLI::App* cs_cmd = app.add_subcommand("cs-verify", "almost-periodicity translate check");
    cs_cmd->add_option("--group", cs_args.group)->required();
    cs_cmd->add_option("--f", cs_args.f_path, "set file for the indicator f")->required();
    cs_cmd->add_option("--A", cs_args.a_path, "convolving set")->required();
    cs_cmd->add_option("--S", cs_args.s_path, "translate pool")->required();
    cs_cmd->add_option("--eps", cs_args.eps)->required();
    cs_cmd->add_option("--p", cs_args.p)->required();
    cs_cmd->add_option("--mode", cs_args.mode, "exhaustive | sampled")
        ->check(CLI::IsMember({"exhaustive", "sampled"}));
    cs_cmd->add_option("--out", cs_args.out_path);
    cs_args.common.attach(cs_cmd, true);

    KkArgs kk_args;
    CLI::App* kk_cmd = app.add_subcommand("kk-run", "L/S iteration on a seeded desk instance");
    kk_cmd->add_option("--group", kk_args.group, "ambient group (default Z2003)");
    kk_cmd->add_option("--width", kk_args.width, "base Bohr width");
    kk_cmd->add_option("--rho-pp-base", kk_args.rho_pp_base, "inner dilate before regularizing");
    kk_cmd->add_option("--density-a", kk_args.density_a, "density of A in G");
    kk_cmd->add_option("--density-ap", kk_args.density_ap, "density of A' in B'");
    kk_cmd->add_option("--max-steps", kk_args.max_steps, "0 = budget only");
    kk_cmd->add_option("--log", kk_args.log_path, "JSONL step log");
    kk_args.common.attach(kk_cmd, true);

    RothArgs roth_args;
    CLI::App* roth_cmd = app.add_subcommand("roth-run", "density increment main iteration");
    roth_cmd->add_option("--group", roth_args.group)->required();
    roth_cmd->add_option("--set", roth_args.set_path, "set file (omit to draw randomly)");
    roth_cmd->add_option("--density", roth_args.density, "random set density (with --seed)");
    roth_cmd->add_option("--log", roth_args.log_path, "JSONL state log");
    roth_args.common.attach(roth_cmd, true);

    CLI::App* verify_cmd =
        app.add_subcommand("verify-suite", "run the acceptance battery");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return 0;
        }
        err << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(count_cmd)) return run_count(count_args, out);
        if (app.got_subcommand(construct_cmd)) return run_construct(construct_args, out);
        if (app.got_subcommand(spectrum_cmd)) return run_spectrum(spectrum_args, out);
        if (app.got_subcommand(chang_cmd)) return run_chang(chang_args, out);
        if (app.got_subcommand(cs_cmd)) return run_cs(cs_args, out);
        if (app.got_subcommand(kk_cmd)) return run_kk(kk_args, out);
        if (app.got_subcommand(roth_cmd)) return run_roth(roth_args, out);
        if (app.got_subcommand(verify_cmd))
            throw BadInput("verify-suite is available through the bohrlab binary front end");
    } catch (const Error& e) {
        err << nlohmann::json{{"error", {{"what", e.what()}}}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << nlohmann::json{{"error", {{"what", e.what()}}}}.dump() << "\n";
        return 1;
    }
    return 2;
}

} // namespace cli
} // namespace bohrlab
