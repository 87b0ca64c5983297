#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "consensus_lab/protocol.hpp"
#include "consensus_lab/rng.hpp"
#include "consensus_lab/update_fn.hpp"

namespace consensus_lab::sim {

enum class AdversaryDirection { None, TowardMinority, TowardMajority, Random };

/// Per-round perturbation flipping at most budget(n) opinions. Budgets are
/// o(sqrt(n))-scale presets: floor(n^alpha) with alpha <= 0.49, or
/// floor(sqrt(n)/ln n); budget(n) never exceeds sqrt(n).
class AdversaryPolicy {
public:
    AdversaryPolicy() = default;  // no adversary

    static AdversaryPolicy none() { return {}; }
    static AdversaryPolicy power_budget(AdversaryDirection direction, double alpha);
    static AdversaryPolicy sqrt_over_log(AdversaryDirection direction);

    std::int64_t budget(std::int64_t n) const;
    AdversaryDirection direction() const { return direction_; }
    bool is_none() const { return direction_ == AdversaryDirection::None; }

    nlohmann::json to_json() const;
    static AdversaryPolicy from_json(const nlohmann::json& j);
    /// "none", "minority:0.3", "majority:0.49", "random:0.3", "minority:sqrtlog"
    static AdversaryPolicy parse(const std::string& text);

private:
    enum class BudgetKind { Zero, Power, SqrtOverLog };
    AdversaryDirection direction_ = AdversaryDirection::None;
    BudgetKind budget_kind_ = BudgetKind::Zero;
    double alpha_ = 0.0;
};

struct SimConfig {
    std::int64_t n = 0;
    std::int64_t x0 = 0;
    ProtocolSpec protocol = ProtocolSpec::kmaj(3);
    AdversaryPolicy adversary;
    std::int64_t max_rounds = 0;  // 0: use default_max_rounds
    std::uint64_t master_seed = 0xC0FFEE;
    bool record_trajectory = false;

    /// floor-to-even of n/2 + d sqrt(n); shared rounding with the oracle.
    static std::int64_t x0_from_bias(std::int64_t n, double d);
    /// 10 (log_gamma(n)/2 + log_m ln n) + 100, far beyond the O_P(1) band.
    static std::int64_t default_max_rounds(std::int64_t n, const FunctionParams& params);
    std::int64_t effective_max_rounds() const;

    nlohmann::json to_json() const;
    static SimConfig from_json(const nlohmann::json& j);

    void check() const;  // throws on inconsistent fields
};

enum class Winner { X, Y, Unresolved };

const char* winner_name(Winner w);

struct RunOutcome {
    std::int64_t runtime = 0;
    Winner winner = Winner::Unresolved;
    std::vector<std::int64_t> trajectory;  // X_0..X_runtime when recorded
};

/// One synchronous round from count x_t: a Bin(n, f(x_t/n)) redraw followed
/// by the adversary shift. Absorbing states are preserved: a chain already at
/// 0 or n stays, and a redraw that reaches consensus ends the round before
/// the adversary acts.
std::int64_t step(const MajorityTypeFunction& f, const AdversaryPolicy& adversary, std::int64_t n,
                  std::int64_t x_t, Rng& rng);

/// Vertex-level k-majority round: every vertex samples k opinions uniformly
/// with replacement and adopts the majority, ties broken by a fair coin.
/// Distributionally identical to step() with the k-maj update function.
std::int64_t agent_level_step_kmaj(std::int64_t x_t, int k, std::int64_t n, Rng& rng);

/// Runs to absorption or the round cap; the rng stream is derived from
/// (master_seed, run_index), so any run of a batch can be reproduced alone.
RunOutcome run_single(const SimConfig& config, std::uint64_t master_seed, std::uint64_t run_index);
RunOutcome run(const SimConfig& config);

/// Deterministic parallel batch: run i uses the (master_seed, i) stream and
/// results are ordered by index regardless of scheduling. Thread count is
/// capped by the CONSENSUS_LAB_THREADS environment variable when set.
std::vector<RunOutcome> batch(const SimConfig& config, std::int64_t num_runs,
                              std::uint64_t master_seed);

void write_batch_csv(std::ostream& os, const SimConfig& config, const std::vector<RunOutcome>& runs,
                     std::uint64_t master_seed);
void write_trajectory_csv(std::ostream& os, const std::vector<RunOutcome>& runs);

}  // namespace consensus_lab::sim
