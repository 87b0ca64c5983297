#include "consensus_lab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "consensus_lab/gaussian.hpp"
#include "consensus_lab/theory.hpp"

namespace consensus_lab::stats {

SurvivalCurve::SurvivalCurve(long s_min, std::vector<double> values, double beyond)
    : s_min_(s_min), values_(std::move(values)), beyond_(beyond) {
    if (values_.empty()) throw std::invalid_argument("SurvivalCurve: values must be nonempty");
}

double SurvivalCurve::at(long s) const {
    if (s < s_min_) return 1.0;
    const long idx = s - s_min_;
    if (idx >= static_cast<long>(values_.size())) return beyond_;
    return values_[static_cast<std::size_t>(idx)];
}

SurvivalCurve SurvivalCurve::from_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("survival csv: empty input");
    if (line != "s,P_R_geq_s")
        throw std::invalid_argument("survival csv: expected header 's,P_R_geq_s', got '" + line + "'");
    std::vector<std::pair<long, double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("survival csv: malformed row '" + line + "'");
        rows.emplace_back(std::stol(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    }
    if (rows.empty()) throw std::invalid_argument("survival csv: no rows");
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].first != rows[i - 1].first + 1)
            throw std::invalid_argument("survival csv: s must be consecutive integers");
    std::vector<double> values;
    values.reserve(rows.size());
    for (const auto& [s, p] : rows) {
        (void)s;
        values.push_back(p);
    }
    return SurvivalCurve(rows.front().first, std::move(values), 0.0);
}

void SurvivalCurve::write_csv(std::ostream& os) const {
    os << "s,P_R_geq_s\n";
    char buf[64];
    for (std::size_t i = 0; i < values_.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%ld,%.12g\n", s_min_ + static_cast<long>(i), values_[i]);
        os << buf;
    }
}

EmpiricalDist EmpiricalDist::from_outcomes(const std::vector<sim::RunOutcome>& outcomes,
                                           std::int64_t n) {
    if (outcomes.empty()) throw std::invalid_argument("EmpiricalDist: empty sample");
    EmpiricalDist d;
    d.population_ = n;
    d.runtimes_.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        d.runtimes_.push_back(o.runtime);
        switch (o.winner) {
            case sim::Winner::X: ++d.wins_x_; break;
            case sim::Winner::Y: ++d.wins_y_; break;
            case sim::Winner::Unresolved: ++d.unresolved_; break;
        }
    }
    std::sort(d.runtimes_.begin(), d.runtimes_.end());
    return d;
}

EmpiricalDist EmpiricalDist::from_batch_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("batch csv: empty input");
    if (line != "run_index,runtime,winner,x0,n,seed")
        throw std::invalid_argument("batch csv: unexpected header '" + line + "'");
    EmpiricalDist d;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 6) throw std::invalid_argument("batch csv: malformed row '" + line + "'");
        d.runtimes_.push_back(std::stoll(fields[1]));
        if (fields[2] == "X")
            ++d.wins_x_;
        else if (fields[2] == "Y")
            ++d.wins_y_;
        else
            ++d.unresolved_;
        const std::int64_t n = std::stoll(fields[4]);
        if (d.population_ == 0)
            d.population_ = n;
        else if (d.population_ != n)
            throw std::invalid_argument("batch csv: inconsistent n across rows");
    }
    if (d.runtimes_.empty()) throw std::invalid_argument("batch csv: no rows");
    std::sort(d.runtimes_.begin(), d.runtimes_.end());
    return d;
}

double EmpiricalDist::survival(long s) const {
    const auto it = std::lower_bound(runtimes_.begin(), runtimes_.end(), static_cast<std::int64_t>(s));
    return static_cast<double>(runtimes_.end() - it) / static_cast<double>(runtimes_.size());
}

SurvivalCurve EmpiricalDist::survival_curve() const {
    const long lo = 0;
    const long hi = static_cast<long>(runtimes_.back()) + 1;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (long s = lo; s <= hi; ++s) values.push_back(survival(s));
    return SurvivalCurve(lo, std::move(values), 0.0);
}

double EmpiricalDist::mean_runtime() const {
    double sum = 0.0;
    for (auto r : runtimes_) sum += static_cast<double>(r);
    return sum / static_cast<double>(runtimes_.size());
}

double sup_cdf_distance(const SurvivalCurve& a, const SurvivalCurve& b) {
    const long lo = std::min(a.s_min(), b.s_min()) - 1;
    const long hi = std::max(a.s_max(), b.s_max()) + 1;
    double worst = 0.0;
    for (long s = lo; s <= hi; ++s) worst = std::max(worst, std::abs(a.at(s) - b.at(s)));
    worst = std::max(worst, std::abs(a.beyond() - b.beyond()));
    return worst;
}

double sup_cdf_distance(const EmpiricalDist& emp, const SurvivalCurve& law) {
    return sup_cdf_distance(emp.survival_curve(), law);
}

WilsonInterval wilson_interval(std::int64_t successes, std::int64_t trials, double confidence) {
    if (trials <= 0) throw std::invalid_argument("wilson_interval: trials must be positive");
    if (successes < 0 || successes > trials)
        throw std::invalid_argument("wilson_interval: successes out of range");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("wilson_interval: confidence must lie in (0,1)");
    const double z = normal_quantile(0.5 * (1.0 + confidence));
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

bool CompareReport::all_pass() const {
    for (const auto& c : criteria)
        if (!c.pass) return false;
    return true;
}

nlohmann::json CompareReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : criteria)
        arr.push_back({{"name", c.name},
                       {"observed", c.observed},
                       {"expected", c.expected},
                       {"tolerance", c.tolerance},
                       {"pass", c.pass}});
    return {{"criteria", arr}, {"all_pass", all_pass()}};
}

CompareReport compare_report(const EmpiricalDist& emp, const SurvivalCurve& prediction,
                             const std::optional<SurvivalCurve>& oracle, const TheoryContext& ctx,
                             const CompareTolerances& tol) {
    if (ctx.n != emp.population())
        throw std::invalid_argument("compare_report: n mismatch between sample and context");
    if (!(ctx.gamma > 1.0) || ctx.m < 2)
        throw std::invalid_argument("compare_report: invalid theory context");

    CompareReport report;

    const double sup = sup_cdf_distance(emp, prediction);
    report.criteria.push_back({"sup_cdf_vs_prediction", sup, 0.0, tol.sup_cdf, sup <= tol.sup_cdf});

    const double expected_win = theory::win_probability(ctx.d, ctx.gamma);
    const double observed_win = static_cast<double>(emp.wins_x()) / static_cast<double>(emp.n_runs());
    report.criteria.push_back({"winner_probability", observed_win, expected_win, tol.winner,
                               std::abs(observed_win - expected_win) <= tol.winner});

    const auto band = wilson_interval(emp.wins_x(), static_cast<std::int64_t>(emp.n_runs()),
                                      tol.wilson_confidence);
    report.criteria.push_back({"winner_wilson_band", observed_win, expected_win,
                               0.5 * (band.hi - band.lo),
                               expected_win >= band.lo && expected_win <= band.hi});

    const double nd = static_cast<double>(ctx.n);
    const double center = 0.5 * std::log(nd) / std::log(ctx.gamma) +
                          std::log(std::log(nd)) / std::log(static_cast<double>(ctx.m)) + ctx.g_mean;
    const double mean = emp.mean_runtime();
    report.criteria.push_back({"mean_runtime", mean, center, tol.mean_rounds,
                               std::abs(mean - center) <= tol.mean_rounds});

    if (oracle) {
        const double sup_oracle = sup_cdf_distance(emp, *oracle);
        report.criteria.push_back({"sup_cdf_vs_oracle", sup_oracle, 0.0, tol.oracle_sup_cdf,
                                   sup_oracle <= tol.oracle_sup_cdf});
    }
    return report;
}

}  // namespace consensus_lab::stats
