#include "consensus_lab/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "consensus_lab/binomial.hpp"

namespace consensus_lab::sim {

namespace {

const char* direction_name(AdversaryDirection d) {
    switch (d) {
        case AdversaryDirection::None: return "none";
        case AdversaryDirection::TowardMinority: return "toward_minority";
        case AdversaryDirection::TowardMajority: return "toward_majority";
        case AdversaryDirection::Random: return "random";
    }
    return "none";
}

AdversaryDirection direction_from_name(const std::string& name) {
    if (name == "none") return AdversaryDirection::None;
    if (name == "toward_minority" || name == "minority") return AdversaryDirection::TowardMinority;
    if (name == "toward_majority" || name == "majority") return AdversaryDirection::TowardMajority;
    if (name == "random") return AdversaryDirection::Random;
    throw std::invalid_argument("unknown adversary direction '" + name + "'");
}

unsigned thread_cap() {
    unsigned cap = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CONSENSUS_LAB_THREADS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed > 0) cap = std::min<unsigned>(cap, static_cast<unsigned>(parsed));
    }
    return cap;
}

}  // namespace

AdversaryPolicy AdversaryPolicy::power_budget(AdversaryDirection direction, double alpha) {
    if (direction == AdversaryDirection::None) return none();
    if (!(alpha >= 0.0 && alpha <= 0.49))
        throw std::invalid_argument("AdversaryPolicy: alpha must lie in [0, 0.49]");
    AdversaryPolicy p;
    p.direction_ = direction;
    p.budget_kind_ = BudgetKind::Power;
    p.alpha_ = alpha;
    return p;
}

AdversaryPolicy AdversaryPolicy::sqrt_over_log(AdversaryDirection direction) {
    if (direction == AdversaryDirection::None) return none();
    AdversaryPolicy p;
    p.direction_ = direction;
    p.budget_kind_ = BudgetKind::SqrtOverLog;
    return p;
}

std::int64_t AdversaryPolicy::budget(std::int64_t n) const {
    if (n < 2) return 0;
    const double nd = static_cast<double>(n);
    double raw = 0.0;
    switch (budget_kind_) {
        case BudgetKind::Zero: return 0;
        case BudgetKind::Power: raw = std::pow(nd, alpha_); break;
        case BudgetKind::SqrtOverLog: raw = std::sqrt(nd) / std::log(nd); break;
    }
    return std::min(static_cast<std::int64_t>(raw), static_cast<std::int64_t>(std::sqrt(nd)));
}

nlohmann::json AdversaryPolicy::to_json() const {
    nlohmann::json j;
    j["direction"] = direction_name(direction_);
    switch (budget_kind_) {
        case BudgetKind::Zero: j["budget"] = "none"; break;
        case BudgetKind::Power: j["budget"] = {{"alpha", alpha_}}; break;
        case BudgetKind::SqrtOverLog: j["budget"] = "sqrt_over_log"; break;
    }
    return j;
}

AdversaryPolicy AdversaryPolicy::from_json(const nlohmann::json& j) {
    const auto direction = direction_from_name(j.value("direction", "none"));
    if (direction == AdversaryDirection::None) return none();
    if (!j.contains("budget")) throw std::invalid_argument("adversary: missing budget");
    const auto& budget = j.at("budget");
    if (budget.is_string()) {
        const std::string s = budget.get<std::string>();
        if (s == "none") return none();
        if (s == "sqrt_over_log") return sqrt_over_log(direction);
        throw std::invalid_argument("adversary: unknown budget '" + s + "'");
    }
    return power_budget(direction, budget.at("alpha").get<double>());
}

AdversaryPolicy AdversaryPolicy::parse(const std::string& text) {
    if (text == "none") return none();
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("adversary shorthand is '<direction>:<alpha|sqrtlog>'");
    const auto direction = direction_from_name(text.substr(0, colon));
    const std::string budget = text.substr(colon + 1);
    if (budget == "sqrtlog") return sqrt_over_log(direction);
    return power_budget(direction, std::stod(budget));
}

std::int64_t SimConfig::x0_from_bias(std::int64_t n, double d) {
    // nearbyint under the default rounding mode is round-half-to-even.
    const double raw = std::nearbyint(static_cast<double>(n) / 2.0 + d * std::sqrt(static_cast<double>(n)));
    return std::clamp(static_cast<std::int64_t>(raw), std::int64_t{0}, n);
}

std::int64_t SimConfig::default_max_rounds(std::int64_t n, const FunctionParams& params) {
    const double nd = static_cast<double>(n);
    const double mu = 0.5 * std::log(nd) / std::log(params.gamma) +
                      std::log(std::log(nd)) / std::log(static_cast<double>(params.m));
    return static_cast<std::int64_t>(std::ceil(10.0 * mu + 100.0));
}

std::int64_t SimConfig::effective_max_rounds() const {
    if (max_rounds > 0) return max_rounds;
    return default_max_rounds(n, params(protocol));
}

void SimConfig::check() const {
    if (n < 2) throw std::invalid_argument("SimConfig: n must be >= 2");
    if (x0 < 0 || x0 > n) throw std::invalid_argument("SimConfig: x0 must lie in [0, n]");
    if (max_rounds < 0) throw std::invalid_argument("SimConfig: max_rounds must be >= 1");
}

nlohmann::json SimConfig::to_json() const {
    return {{"n", n},
            {"x0", x0},
            {"protocol", protocol.to_json()},
            {"adversary", adversary.to_json()},
            {"max_rounds", max_rounds},
            {"master_seed", master_seed},
            {"record_trajectory", record_trajectory}};
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
    SimConfig c;
    c.n = j.at("n").get<std::int64_t>();
    if (j.contains("x0") && j.contains("d"))
        throw std::invalid_argument("SimConfig: give either x0 or d, not both");
    if (j.contains("x0"))
        c.x0 = j.at("x0").get<std::int64_t>();
    else if (j.contains("d"))
        c.x0 = x0_from_bias(c.n, j.at("d").get<double>());
    else
        throw std::invalid_argument("SimConfig: one of x0 or d is required");
    if (j.contains("protocol")) c.protocol = ProtocolSpec::from_json(j.at("protocol"));
    if (j.contains("adversary")) c.adversary = AdversaryPolicy::from_json(j.at("adversary"));
    c.max_rounds = j.value("max_rounds", std::int64_t{0});
    c.master_seed = j.value("master_seed", std::uint64_t{0xC0FFEE});
    c.record_trajectory = j.value("record_trajectory", false);
    c.check();
    return c;
}

const char* winner_name(Winner w) {
    switch (w) {
        case Winner::X: return "X";
        case Winner::Y: return "Y";
        case Winner::Unresolved: return "Unresolved";
    }
    return "Unresolved";
}

std::int64_t step(const MajorityTypeFunction& f, const AdversaryPolicy& adversary, std::int64_t n,
                  std::int64_t x_t, Rng& rng) {
    if (x_t <= 0) return 0;
    if (x_t >= n) return n;

    // Redraw through the minority side so tiny adoption probabilities keep
    // full precision near absorption.
    std::int64_t next;
    if (2 * x_t <= n) {
        const double p = f(static_cast<double>(x_t) / static_cast<double>(n));
        next = binomial_sample(rng, n, p);
    } else {
        const double p = f(static_cast<double>(n - x_t) / static_cast<double>(n));
        next = n - binomial_sample(rng, n, p);
    }
    if (next <= 0 || next >= n) return std::clamp(next, std::int64_t{0}, n);  // consensus stands

    if (!adversary.is_none()) {
        const std::int64_t b = adversary.budget(n);
        std::int64_t shift = 0;
        switch (adversary.direction()) {
            case AdversaryDirection::None: break;
            case AdversaryDirection::TowardMinority:
                if (2 * next > n) shift = -b;
                else if (2 * next < n) shift = b;
                break;
            case AdversaryDirection::TowardMajority:
                if (2 * next > n) shift = b;
                else if (2 * next < n) shift = -b;
                break;
            case AdversaryDirection::Random:
                shift = (rng.next_u64() & 1) ? b : -b;
                break;
        }
        next = std::clamp(next + shift, std::int64_t{0}, n);
    }
    return next;
}

std::int64_t agent_level_step_kmaj(std::int64_t x_t, int k, std::int64_t n, Rng& rng) {
    if (k < 3) throw std::invalid_argument("agent_level_step_kmaj: k must be >= 3");
    if (x_t < 0 || x_t > n) throw std::invalid_argument("agent_level_step_kmaj: x_t out of range");
    if (x_t == 0 || x_t == n) return x_t;
    const auto un = static_cast<std::uint64_t>(n);
    const auto ux = static_cast<std::uint64_t>(x_t);
    std::int64_t adopters = 0;
    for (std::int64_t v = 0; v < n; ++v) {
        int holders = 0;
        for (int j = 0; j < k; ++j) holders += (rng.uniform_below(un) < ux) ? 1 : 0;
        if (2 * holders > k)
            ++adopters;
        else if (2 * holders == k && (rng.next_u64() & 1))
            ++adopters;
    }
    return adopters;
}

namespace {

RunOutcome run_with_function(const MajorityTypeFunction& f, const SimConfig& config,
                             std::uint64_t master_seed, std::uint64_t run_index) {
    const std::int64_t cap = config.effective_max_rounds();
    Rng rng(master_seed, run_index);

    RunOutcome out;
    std::int64_t x = config.x0;
    if (config.record_trajectory) out.trajectory.push_back(x);
    std::int64_t t = 0;
    while (x != 0 && x != config.n && t < cap) {
        x = step(f, config.adversary, config.n, x, rng);
        ++t;
        if (config.record_trajectory) out.trajectory.push_back(x);
    }
    out.runtime = t;
    out.winner = (x == config.n) ? Winner::X : (x == 0 ? Winner::Y : Winner::Unresolved);
    return out;
}

}  // namespace

RunOutcome run_single(const SimConfig& config, std::uint64_t master_seed, std::uint64_t run_index) {
    config.check();
    return run_with_function(make_function(config.protocol), config, master_seed, run_index);
}

RunOutcome run(const SimConfig& config) { return run_single(config, config.master_seed, 0); }

std::vector<RunOutcome> batch(const SimConfig& config, std::int64_t num_runs,
                              std::uint64_t master_seed) {
    if (num_runs < 1) throw std::invalid_argument("batch: num_runs must be >= 1");
    config.check();
    const MajorityTypeFunction f = make_function(config.protocol);
    std::vector<RunOutcome> results(static_cast<std::size_t>(num_runs));
    const unsigned threads =
        std::min<unsigned>(thread_cap(), static_cast<unsigned>(std::min<std::int64_t>(num_runs, 1024)));
    if (threads <= 1) {
        for (std::int64_t i = 0; i < num_runs; ++i)
            results[static_cast<std::size_t>(i)] =
                run_with_function(f, config, master_seed, static_cast<std::uint64_t>(i));
        return results;
    }
    std::atomic<std::int64_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const std::int64_t i = cursor.fetch_add(1);
            if (i >= num_runs) return;
            results[static_cast<std::size_t>(i)] =
                run_with_function(f, config, master_seed, static_cast<std::uint64_t>(i));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return results;
}

void write_batch_csv(std::ostream& os, const SimConfig& config, const std::vector<RunOutcome>& runs,
                     std::uint64_t master_seed) {
    os << "run_index,runtime,winner,x0,n,seed\n";
    char buf[160];
    for (std::size_t i = 0; i < runs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%lld,%s,%lld,%lld,%llu\n", i,
                      static_cast<long long>(runs[i].runtime), winner_name(runs[i].winner),
                      static_cast<long long>(config.x0), static_cast<long long>(config.n),
                      static_cast<unsigned long long>(Rng::derive_stream_seed(master_seed, i)));
        os << buf;
    }
}

void write_trajectory_csv(std::ostream& os, const std::vector<RunOutcome>& runs) {
    os << "run_index,t,x_t\n";
    char buf[96];
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (std::size_t t = 0; t < runs[i].trajectory.size(); ++t) {
            std::snprintf(buf, sizeof buf, "%zu,%zu,%lld\n", i, t,
                          static_cast<long long>(runs[i].trajectory[t]));
            os << buf;
        }
    }
}

}  // namespace consensus_lab::sim
