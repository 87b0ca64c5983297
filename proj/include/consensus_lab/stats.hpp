#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "consensus_lab/sim.hpp"

namespace consensus_lab::stats {

/// P(R >= s) on the integers: 1 below the stored range, `beyond` above it.
class SurvivalCurve {
public:
    SurvivalCurve(long s_min, std::vector<double> values, double beyond = 0.0);

    double at(long s) const;
    long s_min() const { return s_min_; }
    long s_max() const { return s_min_ + static_cast<long>(values_.size()) - 1; }
    double beyond() const { return beyond_; }

    static SurvivalCurve from_csv(std::istream& is);  // schema: s,P_R_geq_s
    void write_csv(std::ostream& os) const;

private:
    long s_min_;
    std::vector<double> values_;
    double beyond_;
};

/// Empirical runtime/winner distribution of a batch. Unresolved runs keep
/// their capped runtime in the survival counts and are reported separately.
class EmpiricalDist {
public:
    static EmpiricalDist from_outcomes(const std::vector<sim::RunOutcome>& outcomes, std::int64_t n);
    /// Reads the simulate CSV (run_index,runtime,winner,x0,n,seed).
    static EmpiricalDist from_batch_csv(std::istream& is);

    std::size_t n_runs() const { return runtimes_.size(); }
    std::int64_t population() const { return population_; }
    std::int64_t wins_x() const { return wins_x_; }
    std::int64_t wins_y() const { return wins_y_; }
    std::int64_t unresolved() const { return unresolved_; }

    double survival(long s) const;  // fraction of runs with runtime >= s
    SurvivalCurve survival_curve() const;
    double mean_runtime() const;
    std::int64_t max_runtime() const { return runtimes_.empty() ? 0 : runtimes_.back(); }

private:
    std::vector<std::int64_t> runtimes_;  // sorted
    std::int64_t wins_x_ = 0, wins_y_ = 0, unresolved_ = 0;
    std::int64_t population_ = 0;
};

/// sup over integer s of |A(s) - B(s)|.
double sup_cdf_distance(const SurvivalCurve& a, const SurvivalCurve& b);
double sup_cdf_distance(const EmpiricalDist& emp, const SurvivalCurve& law);

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval for a binomial proportion.
WilsonInterval wilson_interval(std::int64_t successes, std::int64_t trials, double confidence);

struct TheoryContext {
    double gamma = 0.0;
    int m = 0;
    std::int64_t n = 0;
    double d = 0.0;
    double g_mean = 0.0;  // mean of the periodic correction, when available
};

struct CompareTolerances {
    double sup_cdf = 0.05;
    double winner = 0.02;
    double mean_rounds = 3.0;
    double wilson_confidence = 0.99;
    double oracle_sup_cdf = 0.02;
};

struct CriterionResult {
    std::string name;
    double observed = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct CompareReport {
    std::vector<CriterionResult> criteria;
    bool all_pass() const;
    nlohmann::json to_json() const;
};

/// Assembles the standard verdicts: sup-CDF distance to the prediction,
/// winner-probability deviation (plus its Wilson band), mean-runtime
/// deviation from log_gamma(n)/2 + log_m ln n + g_mean, and the oracle
/// sup-CDF distance when an exact curve is supplied. Throws on n mismatch
/// between the empirical data and the context.
CompareReport compare_report(const EmpiricalDist& emp, const SurvivalCurve& prediction,
                             const std::optional<SurvivalCurve>& oracle, const TheoryContext& ctx,
                             const CompareTolerances& tol = {});

}  // namespace consensus_lab::stats
