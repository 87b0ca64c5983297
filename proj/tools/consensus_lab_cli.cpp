// consensus-lab: simulate two-opinion consensus protocols on the complete
// graph, evaluate the limit-law predictions, run the exact small-n oracle,
// and compare the three against each other.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "consensus_lab/oracle.hpp"
#include "consensus_lab/sim.hpp"
#include "consensus_lab/stats.hpp"
#include "consensus_lab/theory.hpp"

namespace {

using namespace consensus_lab;

constexpr int kExitUsage = 2;
constexpr int kExitNoConvergence = 3;

void write_output(const std::string& out_path, const std::function<void(std::ostream&)>& producer) {
    if (out_path.empty()) {
        producer(std::cout);
        return;
    }
    std::ofstream os(out_path, std::ios::binary);
    if (!os) throw std::invalid_argument("cannot open output file '" + out_path + "'");
    producer(os);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct SimulateArgs {
    std::int64_t n = 0;
    std::string protocol = "kmaj:3";
    std::int64_t runs = 0;
    double d = 0.0;
    bool d_given = false;
    std::int64_t x0 = 0;
    bool x0_given = false;
    std::string adversary = "none";
    std::uint64_t seed = 0xC0FFEE;
    std::int64_t max_rounds = 0;
    std::string trajectories;
    std::string config_file;
    std::string out;
};

int cmd_simulate(const SimulateArgs& args) {
    nlohmann::json base = nlohmann::json::object();
    if (!args.config_file.empty()) {
        std::ifstream is(args.config_file);
        if (!is) throw std::invalid_argument("cannot read config file '" + args.config_file + "'");
        is >> base;
    }
    // Flags win over the config file.
    if (args.n > 0) base["n"] = args.n;
    if (args.x0_given) {
        base["x0"] = args.x0;
        base.erase("d");
    } else if (args.d_given) {
        base["d"] = args.d;
        base.erase("x0");
    }
    if (!base.contains("x0") && !base.contains("d")) base["d"] = 0.0;
    if (args.protocol != "kmaj:3" || !base.contains("protocol"))
        base["protocol"] = ProtocolSpec::parse(args.protocol).to_json();
    if (args.adversary != "none" || !base.contains("adversary"))
        base["adversary"] = sim::AdversaryPolicy::parse(args.adversary).to_json();
    if (args.max_rounds > 0) base["max_rounds"] = args.max_rounds;
    base["master_seed"] = args.seed;
    if (!args.trajectories.empty()) base["record_trajectory"] = true;

    const auto config = sim::SimConfig::from_json(base);
    const auto outcomes = sim::batch(config, args.runs, config.master_seed);
    write_output(args.out, [&](std::ostream& os) {
        sim::write_batch_csv(os, config, outcomes, config.master_seed);
    });
    if (!args.trajectories.empty()) {
        std::ofstream ts(args.trajectories, std::ios::binary);
        if (!ts) throw std::invalid_argument("cannot open trajectory file '" + args.trajectories + "'");
        sim::write_trajectory_csv(ts, outcomes);
    }
    return 0;
}

struct TheoryArgs {
    std::string protocol = "kmaj:3";
    bool emit_f_grid = false;
    bool emit_z_density = false;
    bool emit_g = false;
    bool emit_runtime_cdf = false;
    double d = 0.0;
    std::int64_t n = 0;
    double tol = 1e-4;
    int periods = 3;
    std::string out;
};

void emit_f_grid(const ProtocolSpec& spec, std::ostream& os) {
    const auto f = make_function(spec);
    os << "x f\n";
    for (int i = 0; i <= 1000; ++i) {
        const double x = static_cast<double>(i) / 1000.0;
        os << format_double(x) << ' ' << format_double(f(x)) << '\n';
    }
}

void emit_z_density(const ProtocolSpec& spec, double d, std::ostream& os) {
    const auto p = params(spec);
    const double sigma = theory::GaussianZ::for_bias(d, p.gamma).sigma();
    const double ln_gamma = std::log(p.gamma);
    const double t_lo = -(std::log(std::abs(d) + 9.0 * sigma) / ln_gamma) - 1.0;
    const double t_hi = (std::log(1.0 / sigma) + 16.2) / ln_gamma + 1.0;
    const int points = 20000;
    os << "x density\n";
    for (int i = 0; i <= points; ++i) {
        const double t = t_lo + (t_hi - t_lo) * static_cast<double>(i) / points;
        os << format_double(t) << ' ' << format_double(theory::race_transform_density(t, d, p.gamma))
           << '\n';
    }
}

void emit_g(const ProtocolSpec& spec, double tol, int periods, const std::string& out) {
    const auto tab = theory::GFunctionApprox::build(spec, tol, 1024);
    write_output(out, [&](std::ostream& os) {
        os << "x g_minus_g0\n";
        const int per_period = 256;
        for (int i = 0; i <= periods * per_period; ++i) {
            const double x = static_cast<double>(i) / per_period;
            os << format_double(x) << ' ' << format_double(tab(x) - tab.g0()) << '\n';
        }
    });
    const nlohmann::json meta = {{"protocol", tab.protocol().label()},
                                 {"g0", tab.g0()},
                                 {"g_min", tab.min_value()},
                                 {"g_max", tab.max_value()},
                                 {"g_mean", tab.mean_value()},
                                 {"tol", tab.tol()},
                                 {"a_used", tab.a_used()},
                                 {"b_used", tab.b_used()}};
    if (!out.empty()) {
        std::ofstream ms(out + ".meta.json");
        ms << meta.dump(2) << '\n';
    }
    std::cerr << meta.dump() << '\n';
}

void emit_runtime_cdf(const ProtocolSpec& spec, std::int64_t n, double d, double tol,
                      const std::string& out) {
    const auto tab = theory::GFunctionApprox::build(spec, tol, 1024);
    const theory::PredictedRuntimeLaw law(spec, n, d, tab);
    const auto samples = law.sample_range(1e-9);
    write_output(out, [&](std::ostream& os) {
        os << "s,P_R_geq_s\n";
        for (const auto& [s, p] : samples) os << s << ',' << format_double(p) << '\n';
    });
}

int cmd_theory(const TheoryArgs& args) {
    const auto spec = ProtocolSpec::parse(args.protocol);
    const int modes = static_cast<int>(args.emit_f_grid) + static_cast<int>(args.emit_z_density) +
                      static_cast<int>(args.emit_g) + static_cast<int>(args.emit_runtime_cdf);
    if (modes != 1)
        throw CLI::ValidationError("theory", "exactly one of --emit-f-grid, --emit-z-density, "
                                             "--emit-g, --emit-runtime-cdf is required");
    if (args.emit_f_grid) {
        write_output(args.out, [&](std::ostream& os) { emit_f_grid(spec, os); });
    } else if (args.emit_z_density) {
        write_output(args.out, [&](std::ostream& os) { emit_z_density(spec, args.d, os); });
    } else if (args.emit_g) {
        emit_g(spec, args.tol, args.periods, args.out);
    } else {
        if (args.n < 2) throw CLI::ValidationError("theory", "--emit-runtime-cdf requires --n");
        emit_runtime_cdf(spec, args.n, args.d, args.tol, args.out);
    }
    return 0;
}

struct OracleArgs {
    std::int64_t n = 0;
    std::string protocol = "kmaj:3";
    std::int64_t x0 = -1;
    bool dominance = false;
    double x = 0.0;
    double xprime = 0.0;
    std::string emit_kernel;
    std::string out;
};

int cmd_oracle(const OracleArgs& args) {
    const auto spec = ProtocolSpec::parse(args.protocol);
    const auto chain = oracle::ExactChain::build(args.n, spec);
    if (!args.emit_kernel.empty()) {
        std::ofstream ks(args.emit_kernel, std::ios::binary);
        if (!ks) throw std::invalid_argument("cannot open kernel file '" + args.emit_kernel + "'");
        chain.write_kernel(ks);
    }
    if (args.dominance) {
        const auto result = oracle::dominance_check(chain, args.x, args.xprime);
        write_output(args.out, [&](std::ostream& os) {
            if (result.dominated)
                os << "PASS\n";
            else
                os << "FAIL s=" << result.worst_s << '\n';
        });
        return result.dominated ? 0 : 1;
    }
    if (args.x0 < 0) throw CLI::ValidationError("oracle", "--x0 is required without --dominance");
    const auto dist = oracle::runtime_distribution(chain, args.x0);
    write_output(args.out, [&](std::ostream& os) { oracle::write_survival_csv(os, dist); });
    return 0;
}

struct CompareArgs {
    std::string simulation;
    std::string prediction;
    std::string oracle_csv;
    std::string protocol = "kmaj:3";
    double d = 0.0;
    double g_mean = 0.0;
    bool g_mean_given = false;
    double g_tol = 1e-3;
    stats::CompareTolerances tol;
    std::string out;
};

int cmd_compare(const CompareArgs& args) {
    std::ifstream sim_is(args.simulation);
    if (!sim_is) throw std::invalid_argument("cannot read simulation csv '" + args.simulation + "'");
    const auto emp = stats::EmpiricalDist::from_batch_csv(sim_is);

    std::ifstream pred_is(args.prediction);
    if (!pred_is) throw std::invalid_argument("cannot read prediction csv '" + args.prediction + "'");
    const auto prediction = stats::SurvivalCurve::from_csv(pred_is);

    std::optional<stats::SurvivalCurve> oracle_curve;
    if (!args.oracle_csv.empty()) {
        std::ifstream oracle_is(args.oracle_csv);
        if (!oracle_is) throw std::invalid_argument("cannot read oracle csv '" + args.oracle_csv + "'");
        oracle_curve = stats::SurvivalCurve::from_csv(oracle_is);
    }

    const auto spec = ProtocolSpec::parse(args.protocol);
    const auto p = params(spec);
    stats::TheoryContext ctx;
    ctx.gamma = p.gamma;
    ctx.m = p.m;
    ctx.n = emp.population();
    ctx.d = args.d;
    ctx.g_mean = args.g_mean_given
                     ? args.g_mean
                     : theory::GFunctionApprox::build(spec, args.g_tol, 128).mean_value();

    const auto report = stats::compare_report(emp, prediction, oracle_curve, ctx, args.tol);
    write_output(args.out, [&](std::ostream& os) { os << report.to_json().dump(2) << '\n'; });
    return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-opinion consensus protocols: simulator, limit laws, exact oracle"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo batches of the count chain");
    simulate->add_option("--n", sim_args.n, "population size");
    simulate->add_option("--protocol", sim_args.protocol, "protocol (shorthand or JSON)");
    simulate->add_option("--runs", sim_args.runs, "number of runs")->required();
    auto* d_opt = simulate->add_option("--d", sim_args.d, "initial bias in sqrt(n) units");
    auto* x0_opt = simulate->add_option("--x0", sim_args.x0, "initial count of opinion X");
    d_opt->excludes(x0_opt);
    x0_opt->excludes(d_opt);
    simulate->add_option("--adversary", sim_args.adversary,
                         "adversary '<direction>:<alpha|sqrtlog>' or 'none'");
    simulate->add_option("--seed", sim_args.seed, "master seed (default 0xC0FFEE)");
    simulate->add_option("--max-rounds", sim_args.max_rounds, "round cap (default 10 mu_n + 100)");
    simulate->add_option("--trajectories", sim_args.trajectories, "write trajectory CSV to this path");
    simulate->add_option("--config", sim_args.config_file, "JSON config file (flags win)");
    simulate->add_option("--out", sim_args.out, "output CSV path (default stdout)");

    TheoryArgs theory_args;
    auto* theory_cmd = app.add_subcommand("theory", "closed-form and limit-law curves");
    theory_cmd->add_option("--protocol", theory_args.protocol, "protocol (shorthand or JSON)");
    theory_cmd->add_flag("--emit-f-grid", theory_args.emit_f_grid, "update function on a grid");
    theory_cmd->add_flag("--emit-z-density", theory_args.emit_z_density,
                         "density of the transformed Gaussian race variable");
    theory_cmd->add_flag("--emit-g", theory_args.emit_g, "periodic correction g as (x, g(x)-g(0))");
    theory_cmd->add_flag("--emit-runtime-cdf", theory_args.emit_runtime_cdf,
                         "predicted survival function of the runtime");
    theory_cmd->add_option("--d", theory_args.d, "initial bias in sqrt(n) units");
    theory_cmd->add_option("--n", theory_args.n, "population size for --emit-runtime-cdf");
    theory_cmd->add_option("--tol", theory_args.tol, "g convergence tolerance");
    theory_cmd->add_option("--periods", theory_args.periods, "periods to emit with --emit-g");
    theory_cmd->add_option("--out", theory_args.out, "output path (default stdout)");

    OracleArgs oracle_args;
    auto* oracle_cmd = app.add_subcommand("oracle", "exact distributions for small n");
    oracle_cmd->add_option("--n", oracle_args.n, "population size (<= 5000)")->required();
    oracle_cmd->add_option("--protocol", oracle_args.protocol, "protocol (shorthand or JSON)");
    oracle_cmd->add_option("--x0", oracle_args.x0, "initial count of opinion X");
    oracle_cmd->add_flag("--dominance", oracle_args.dominance, "compare two starting fractions");
    oracle_cmd->add_option("--x", oracle_args.x, "smaller starting fraction (>= 0.5)");
    oracle_cmd->add_option("--xprime", oracle_args.xprime, "larger starting fraction");
    oracle_cmd->add_option("--emit-kernel", oracle_args.emit_kernel, "write the binary kernel (debug)");
    oracle_cmd->add_option("--out", oracle_args.out, "output path (default stdout)");

    CompareArgs compare_args;
    auto* compare_cmd = app.add_subcommand("compare", "verdicts for simulation vs prediction");
    compare_cmd->add_option("--simulation", compare_args.simulation, "batch CSV")->required();
    compare_cmd->add_option("--prediction", compare_args.prediction, "predicted survival CSV")
        ->required();
    compare_cmd->add_option("--oracle", compare_args.oracle_csv, "exact survival CSV");
    compare_cmd->add_option("--protocol", compare_args.protocol, "protocol (shorthand or JSON)");
    compare_cmd->add_option("--d", compare_args.d, "initial bias in sqrt(n) units");
    auto* gm = compare_cmd->add_option("--g-mean", compare_args.g_mean,
                                       "mean of g (computed from the protocol when omitted)");
    compare_cmd->add_option("--g-tol", compare_args.g_tol, "tolerance for the computed g mean");
    compare_cmd->add_option("--tol-sup", compare_args.tol.sup_cdf, "sup-CDF tolerance");
    compare_cmd->add_option("--tol-winner", compare_args.tol.winner, "winner-probability tolerance");
    compare_cmd->add_option("--tol-mean", compare_args.tol.mean_rounds, "mean-runtime tolerance");
    compare_cmd->add_option("--wilson-confidence", compare_args.tol.wilson_confidence,
                            "confidence for the Wilson band");
    compare_cmd->add_option("--out", compare_args.out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
        sim_args.d_given = d_opt->count() > 0;
        sim_args.x0_given = x0_opt->count() > 0;
        compare_args.g_mean_given = gm->count() > 0;
        if (simulate->parsed()) return cmd_simulate(sim_args);
        if (theory_cmd->parsed()) return cmd_theory(theory_args);
        if (oracle_cmd->parsed()) return cmd_oracle(oracle_args);
        if (compare_cmd->parsed()) return cmd_compare(compare_args);
        return kExitUsage;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const consensus_lab::theory::GConvergenceError& e) {
        std::cerr << "error: " << e.what() << " (a_used=" << e.a_used << ", b_used=" << e.b_used
                  << ")\n";
        return kExitNoConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}
