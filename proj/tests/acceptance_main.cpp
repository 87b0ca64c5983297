// Acceptance suite: end-to-end checks of the simulator against the exact
// oracle and the limit-law predictions, one line per criterion. Exits
// nonzero if any criterion fails. All Monte Carlo uses the documented
// default master seed.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "consensus_lab/oracle.hpp"
#include "consensus_lab/sim.hpp"
#include "consensus_lab/stats.hpp"
#include "consensus_lab/theory.hpp"

using namespace consensus_lab;

namespace {

constexpr std::uint64_t kSeed = 0xC0FFEE;

struct Outcome {
    int id;
    std::string name;
    bool pass;
    std::string detail;
    double seconds;
};

std::vector<Outcome> g_outcomes;

template <typename Fn>
void criterion(int id, const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        detail = fn(pass);
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - start)
            .count();
    g_outcomes.push_back({id, name, pass, detail, seconds});
    std::printf("[%2d] %-28s %s  (%s)  [%.1fs]\n", id, name.c_str(), pass ? "PASS" : "FAIL",
                detail.c_str(), seconds);
    std::fflush(stdout);
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

double mean_runtime(const std::vector<sim::RunOutcome>& runs) {
    double sum = 0.0;
    for (const auto& r : runs) sum += static_cast<double>(r.runtime);
    return sum / static_cast<double>(runs.size());
}

long double pascal_choose(int n, int r) {
    std::vector<std::vector<long double>> rows(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        rows[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(i) + 1, 1.0L);
        for (int j = 1; j < i; ++j)
            rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                rows[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] +
                rows[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];
    }
    return rows[static_cast<std::size_t>(n)][static_cast<std::size_t>(r)];
}

const ProtocolSpec kKMaj3 = ProtocolSpec::kmaj(3);

std::vector<ProtocolSpec> builtin_protocols() {
    return {ProtocolSpec::kmaj(3), ProtocolSpec::rand_kmaj({{3, 0.5}, {5, 0.5}}),
            ProtocolSpec::k_neighb_rand(5, {{2, 0.25}, {3, 0.5}, {4, 0.25}})};
}

const theory::GFunctionApprox& g3_table() {
    static const auto tab = theory::GFunctionApprox::build(kKMaj3, 1e-4, 1024);
    return tab;
}

double mu_n(double n, double gamma, int m) {
    return 0.5 * std::log(n) / std::log(gamma) + std::log(std::log(n)) / std::log(static_cast<double>(m));
}

}  // namespace

int main() {
    std::printf("acceptance suite (master seed 0x%llX)\n", static_cast<unsigned long long>(kSeed));

    criterion(1, "update-function correctness", [&](bool& pass) {
        double worst_cubic = 0.0;
        for (int i = 0; i <= 10000; ++i) {
            const double x = static_cast<double>(i) / 10000.0;
            worst_cubic = std::max(worst_cubic, std::abs(eval_kmaj(3, x) - (3 * x * x - 2 * x * x * x)));
        }
        double worst_param = 0.0;
        for (int k : {3, 5, 7, 9}) {
            const auto p = params(ProtocolSpec::kmaj(k));
            const double beta_ref = static_cast<double>(pascal_choose(k, k / 2));
            const double gamma_ref =
                static_cast<double>(pascal_choose(k - 1, k / 2) * std::pow(2.0L, 1 - k) * k);
            worst_param = std::max(worst_param, std::abs(p.beta - beta_ref) / beta_ref);
            worst_param = std::max(worst_param, std::abs(p.gamma - gamma_ref) / gamma_ref);
            if (p.m != (k + 1) / 2) worst_param = 1.0;
        }
        double ratio_lo = 1.0, ratio_hi = 1.0;
        for (int k : {21, 51, 101}) {
            const double ratio = params(ProtocolSpec::kmaj(k)).gamma / std::sqrt(2.0 * k / M_PI);
            ratio_lo = std::min(ratio_lo, ratio);
            ratio_hi = std::max(ratio_hi, ratio);
        }
        pass = worst_cubic <= 1e-12 && worst_param <= 1e-12 && ratio_lo >= 0.95 && ratio_hi <= 1.05;
        return fmt("|f3-cubic|<=%.1e, param err<=%.1e, gamma ratio in [%.4f, %.4f]", worst_cubic,
                   worst_param, ratio_lo, ratio_hi);
    });

    criterion(2, "oracle vs Monte Carlo (n=100)", [&](bool& pass) {
        sim::SimConfig config;
        config.n = 100;
        config.x0 = 60;
        config.protocol = kKMaj3;
        const auto runs = sim::batch(config, 100000, kSeed);
        const auto emp = stats::EmpiricalDist::from_outcomes(runs, config.n);

        const auto chain = oracle::ExactChain::build(100, kKMaj3);
        const auto exact = oracle::runtime_distribution(chain, 60);
        const stats::SurvivalCurve exact_curve(0, exact.survival, exact.residual);
        const double sup = stats::sup_cdf_distance(emp, exact_curve);

        const auto winner = oracle::winner_probability_exact(chain, 60);
        const auto band = stats::wilson_interval(emp.wins_x(), static_cast<std::int64_t>(emp.n_runs()), 0.99);
        const bool wilson_ok = winner.p_x >= band.lo && winner.p_x <= band.hi;
        pass = sup < 0.02 && wilson_ok;
        return fmt("sup-CDF=%.4f (<0.02), exact P(X)=%.5f in 99%% Wilson [%.5f, %.5f]: %s", sup,
                   winner.p_x, band.lo, band.hi, wilson_ok ? "yes" : "no");
    });

    criterion(3, "CLT moments (t=3)", [&](bool& pass) {
        const std::int64_t n = 100000;
        const int runs = 100000;
        const auto f = make_function(kKMaj3);
        const auto none = sim::AdversaryPolicy::none();
        double sum = 0.0, sum_sq = 0.0;
        for (int i = 0; i < runs; ++i) {
            Rng rng(kSeed, static_cast<std::uint64_t>(i));
            std::int64_t x = n / 2;
            for (int t = 0; t < 3; ++t) x = sim::step(f, none, n, x, rng);
            const double norm = (static_cast<double>(x) - static_cast<double>(n) / 2.0) /
                                std::sqrt(static_cast<double>(n));
            sum += norm;
            sum_sq += norm * norm;
        }
        const double mean = sum / runs;
        const double var = sum_sq / runs - mean * mean;
        const double target = 2.078125;  // (1.5^6 - 1) / 5
        const double se_mean = std::sqrt(var / runs);
        pass = std::abs(var - target) <= 0.05 * target && std::abs(mean) <= 3.0 * se_mean;
        return fmt("var=%.4f (target 2.0781 +-5%%), |mean|=%.4f <= 3se=%.4f", var, std::abs(mean),
                   3.0 * se_mean);
    });

    criterion(4, "winner law (n=1e6, d=1)", [&](bool& pass) {
        sim::SimConfig config;
        config.n = 1000000;
        config.x0 = sim::SimConfig::x0_from_bias(config.n, 1.0);
        config.protocol = kKMaj3;
        const auto runs = sim::batch(config, 10000, kSeed);
        std::int64_t wins = 0;
        for (const auto& r : runs) wins += (r.winner == sim::Winner::X) ? 1 : 0;
        const double freq = static_cast<double>(wins) / static_cast<double>(runs.size());
        const double target = theory::win_probability(1.0, 1.5);
        pass = std::abs(freq - target) <= 0.02;
        return fmt("freq=%.4f vs Phi(sqrt5)=%.4f, |diff|=%.4f (<=0.02)", freq, target,
                   std::abs(freq - target));
    });

    criterion(5, "runtime centering across n", [&](bool& pass) {
        const double g_mean = g3_table().mean_value();
        double means[3] = {0, 0, 0};
        double devs[3] = {0, 0, 0};
        const std::int64_t sizes[3] = {10000, 100000, 1000000};
        bool centered = true;
        for (int j = 0; j < 3; ++j) {
            sim::SimConfig config;
            config.n = sizes[j];
            config.x0 = sizes[j] / 2;
            config.protocol = kKMaj3;
            const auto runs = sim::batch(config, 1000, kSeed);
            means[j] = mean_runtime(runs);
            devs[j] = means[j] - (mu_n(static_cast<double>(sizes[j]), 1.5, 2) + g_mean);
            if (std::abs(devs[j]) > 3.0) centered = false;
        }
        const double slope = 0.5 * std::log(10.0) / std::log(1.5);
        bool slope_ok = true;
        double slope_errs[2] = {0, 0};
        for (int j = 0; j < 2; ++j) {
            const double llog_inc = std::log(std::log(static_cast<double>(sizes[j + 1])) /
                                             std::log(static_cast<double>(sizes[j]))) /
                                    std::log(2.0);
            slope_errs[j] = (means[j + 1] - means[j]) - (slope + llog_inc);
            if (std::abs(slope_errs[j]) > 1.0) slope_ok = false;
        }
        pass = centered && slope_ok;
        return fmt("dev vs mu+mean(g): %+.2f/%+.2f/%+.2f (|.|<=3), slope err %+.2f/%+.2f (|.|<=1)",
                   devs[0], devs[1], devs[2], slope_errs[0], slope_errs[1]);
    });

    criterion(6, "full limit-law shape (n=1e6)", [&](bool& pass) {
        sim::SimConfig config;
        config.n = 1000000;
        config.x0 = 500000;
        config.protocol = kKMaj3;
        const auto runs = sim::batch(config, 10000, kSeed);
        const auto emp = stats::EmpiricalDist::from_outcomes(runs, config.n);

        const theory::PredictedRuntimeLaw law(kKMaj3, config.n, 0.0, g3_table());
        const auto samples = law.sample_range(1e-9);
        std::vector<double> values;
        values.reserve(samples.size());
        for (const auto& [s, p] : samples) values.push_back(p);
        const stats::SurvivalCurve curve(samples.front().first, std::move(values), 0.0);
        const double sup = stats::sup_cdf_distance(emp, curve);
        pass = sup < 0.05;
        return fmt("sup-CDF=%.4f (<0.05)", sup);
    });

    criterion(7, "g-function certification", [&](bool& pass) {
        pass = true;
        std::string detail;
        for (const auto& spec : builtin_protocols()) {
            const auto f = make_function(spec);
            double worst_period = 0.0;
            for (int i = 0; i < 256; ++i) {
                const double x = static_cast<double>(i) / 256.0;
                const double lo = theory::compute_g(f, x, 1e-4).value;
                const double hi = theory::compute_g(f, x + 1.0, 1e-4).value;
                worst_period = std::max(worst_period, std::abs(hi - lo));
            }
            const auto tab = theory::GFunctionApprox::build(spec, 1e-4, 256);
            const double range = tab.max_value() - tab.min_value();
            if (worst_period >= 1e-3 || range >= 1.0) pass = false;
            detail += fmt("%s: per=%.1e rng=%.1e; ", spec.label().c_str(), worst_period, range);
        }
        const double g0 = theory::compute_g(kKMaj3, 0.0, 1e-5).value;
        const bool g0_in_window = g0 >= 0.40 && g0 <= 0.50;
        if (!g0_in_window) pass = false;
        double worst_residual = 0.0;
        const theory::KoenigsApprox koenigs(kKMaj3, 80);
        for (double x : {0.1, 0.2, 0.3, 0.4})
            worst_residual = std::max(worst_residual, koenigs.residual(x));
        if (worst_residual >= 1e-6) pass = false;
        detail += fmt("g(0)=%.4f (in [0.40,0.50]: %s); koenigs res=%.1e", g0,
                      g0_in_window ? "yes" : "NO", worst_residual);
        return detail;
    });

    criterion(8, "stochastic dominance grids", [&](bool& pass) {
        pass = true;
        int cells = 0;
        for (const auto& spec : builtin_protocols()) {
            for (std::int64_t n : {20, 50, 100}) {
                const auto chain = oracle::ExactChain::build(n, spec);
                for (int i = 0; i <= 9; ++i) {
                    for (int j = i; j <= 9; ++j) {
                        const double x = 0.5 + 0.05 * i;
                        const double xp = 0.5 + 0.05 * j;
                        if (!oracle::dominance_check(chain, x, xp).dominated) pass = false;
                        ++cells;
                    }
                }
            }
        }
        return fmt("%d (protocol, n, x<=x') cells all ordered: %s", cells, pass ? "yes" : "NO");
    });

    criterion(9, "sqrt(n) threshold", [&](bool& pass) {
        const std::int64_t n = 1000000;
        const auto f = make_function(kKMaj3);
        const auto none = sim::AdversaryPolicy::none();
        const double sqrt_n = std::sqrt(static_cast<double>(n));
        const double ln_n = std::log(static_cast<double>(n));

        const std::int64_t y_big = static_cast<std::int64_t>(std::ceil(sqrt_n * ln_n));
        const std::int64_t y_small = static_cast<std::int64_t>(std::floor(sqrt_n / ln_n));
        std::int64_t consensus_from_big = 0, consensus_from_small = 0;
        for (int i = 0; i < 10000; ++i) {
            Rng rng_big(kSeed ^ 0xB16ULL, static_cast<std::uint64_t>(i));
            if (sim::step(f, none, n, n - y_big, rng_big) == n) ++consensus_from_big;
            Rng rng_small(kSeed ^ 0x5A11ULL, static_cast<std::uint64_t>(i));
            if (sim::step(f, none, n, n - y_small, rng_small) == n) ++consensus_from_small;
        }
        const double small_rate = static_cast<double>(consensus_from_small) / 10000.0;
        pass = consensus_from_big == 0 && small_rate >= 0.99;
        return fmt("from ceil(sqrt(n)ln n)=%lld: %lld/10000 consensus (must be 0); "
                   "from floor(sqrt(n)/ln n)=%lld: rate=%.4f (>=0.99)",
                   static_cast<long long>(y_big), static_cast<long long>(consensus_from_big),
                   static_cast<long long>(y_small), small_rate);
    });

    criterion(10, "adversary robustness", [&](bool& pass) {
        sim::SimConfig plain;
        plain.n = 1000000;
        plain.x0 = 500000;
        plain.protocol = kKMaj3;
        sim::SimConfig attacked = plain;
        attacked.adversary =
            sim::AdversaryPolicy::power_budget(sim::AdversaryDirection::TowardMinority, 0.3);

        const auto base_runs = sim::batch(plain, 1000, kSeed);
        const auto adv_runs = sim::batch(attacked, 1000, kSeed ^ 0xADULL);
        std::int64_t unresolved = 0;
        for (const auto& r : adv_runs) unresolved += (r.winner == sim::Winner::Unresolved) ? 1 : 0;
        const double diff = mean_runtime(adv_runs) - mean_runtime(base_runs);
        pass = std::abs(diff) <= 3.0 && unresolved == 0;
        return fmt("mean diff=%+.3f (|.|<=3), unresolved=%lld (must be 0)", diff,
                   static_cast<long long>(unresolved));
    });

    criterion(11, "large-d concentration (d=100)", [&](bool& pass) {
        sim::SimConfig config;
        config.n = 1000000;
        config.x0 = sim::SimConfig::x0_from_bias(config.n, 100.0);
        config.protocol = kKMaj3;
        const auto runs = sim::batch(config, 1000, kSeed);

        const auto set = theory::concentration_set(kKMaj3, config.n, 100.0, g3_table());
        std::int64_t wins = 0, in_set = 0, near_set = 0;
        for (const auto& r : runs) {
            wins += (r.winner == sim::Winner::X) ? 1 : 0;
            const bool inside = r.runtime == set.values[0] || r.runtime == set.values[1];
            in_set += inside ? 1 : 0;
            near_set += (inside || r.runtime == set.values[0] - 1 || r.runtime == set.values[1] + 1)
                            ? 1
                            : 0;
        }
        const double win_rate = static_cast<double>(wins) / 1000.0;
        const double in_rate = static_cast<double>(in_set) / 1000.0;
        const double near_rate = static_cast<double>(near_set) / 1000.0;
        pass = win_rate >= 0.995 && in_rate >= 0.90 && near_rate >= 0.99;
        return fmt("S={%ld,%ld}; win=%.4f (>=0.995), in S=%.3f (>=0.90), in S+-1=%.3f (>=0.99)",
                   set.values[0], set.values[1], win_rate, in_rate, near_rate);
    });

    int failed = 0;
    for (const auto& o : g_outcomes) failed += o.pass ? 0 : 1;
    std::printf("----\n%zu criteria, %d failed\n", g_outcomes.size(), failed);
    return failed == 0 ? 0 : 1;
}
