#include "consensus_lab/update_fn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "consensus_lab/binomial.hpp"
#include "consensus_lab/gauss_legendre.hpp"

namespace consensus_lab {

namespace {

int odd_reduction(int k) { return (k % 2 == 0) ? k - 1 : k; }

// P(Bin(k, x) >= q) as a positive-term sum; valid on [0, 1]. Summed upward
// from i = q for x <= 1/2 and downward from i = k otherwise, so the first
// term is always representable and no tail underflows to zero.
double threshold_tail(int k, int q, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double sum;
    if (x <= 0.5) {
        double term = binomial_coefficient(k, q) * std::pow(x, q) * std::pow(1.0 - x, k - q);
        sum = term;
        const double odds = x / (1.0 - x);
        for (int i = q; i < k; ++i) {
            term *= odds * static_cast<double>(k - i) / static_cast<double>(i + 1);
            sum += term;
        }
    } else {
        double term = std::pow(x, k);
        sum = term;
        const double inv_odds = (1.0 - x) / x;
        for (int i = k; i > q; --i) {
            term *= inv_odds * static_cast<double>(i) / static_cast<double>(k - i + 1);
            sum += term;
        }
    }
    return sum;
}

// P(Bin(k, x) >= q) / x^q; equals C(k, q) at x = 0.
double threshold_tail_over_xq(int k, int q, double x) {
    if (x >= 1.0) return 1.0;
    double term = binomial_coefficient(k, q) * std::pow(1.0 - x, k - q);
    double sum = term;
    const double odds = x / (1.0 - x);
    for (int i = q; i < k; ++i) {
        term *= odds * static_cast<double>(k - i) / static_cast<double>(i + 1);
        sum += term;
    }
    return sum;
}

const std::vector<double>& validation_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g;
        const int uniform_points = 10000;
        g.reserve(uniform_points + 50);
        for (int i = 0; i <= uniform_points; ++i) g.push_back(static_cast<double>(i) / uniform_points);
        for (int j = 0; j < 20; ++j) {
            const double x = std::pow(10.0, -12.0 + 10.0 * j / 19.0);
            g.push_back(x);
            g.push_back(1.0 - x);
        }
        g.push_back(0.5);
        std::sort(g.begin(), g.end());
        g.erase(std::unique(g.begin(), g.end()), g.end());
        return g;
    }();
    return grid;
}

ValidationReport run_axiom_checks(const MajorityTypeFunction& f);

}  // namespace

MajorityTypeFunction::MajorityTypeFunction(const ProtocolSpec& spec) : spec_(spec) {
    std::map<std::pair<int, int>, double> merged;  // (k, q) -> weight
    int max_degree = 0;

    if (const auto* km = std::get_if<KMaj>(&spec.kind())) {
        const int k = odd_reduction(km->k);
        merged[{k, (k + 1) / 2}] = 1.0;
        max_degree = k;
    } else if (const auto* rm = std::get_if<RandKMaj>(&spec.kind())) {
        for (const auto& [k_raw, w] : rm->pmf) {
            const int k = odd_reduction(k_raw);
            merged[{k, (k + 1) / 2}] += w;
            max_degree = std::max(max_degree, k);
        }
    } else if (const auto* kn = std::get_if<KNeighbRand>(&spec.kind())) {
        for (const auto& [q, w] : kn->q_pmf) merged[{kn->k, q}] += w;
        max_degree = kn->k;
    } else {
        coeffs_ = std::get<CustomPolynomial>(spec.kind()).coeffs;
        while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
        max_degree = static_cast<int>(coeffs_.size()) - 1;
        deriv_coeffs_.resize(coeffs_.size() > 1 ? coeffs_.size() - 1 : 1, 0.0);
        for (std::size_t i = 1; i < coeffs_.size(); ++i)
            deriv_coeffs_[i - 1] = static_cast<double>(i) * coeffs_[i];
    }

    if (!merged.empty()) {
        int m = 0;
        for (const auto& [kq, w] : merged) {
            terms_.push_back({kq.first, kq.second, w});
            m = (m == 0) ? kq.second : std::min(m, kq.second);
        }
        double beta = 0.0;
        double gamma = 0.0;
        for (const auto& t : terms_) {
            if (t.q == m) beta += t.weight * binomial_coefficient(t.k, t.q);
            gamma += t.weight * static_cast<double>(t.k) * binomial_coefficient(t.k - 1, t.q - 1) *
                     std::pow(2.0, 1 - t.k);
        }
        params_ = {m, beta, gamma, m};
    } else {
        int m = 0;
        for (std::size_t i = 1; i < coeffs_.size(); ++i) {
            if (coeffs_[i] != 0.0) {
                m = static_cast<int>(i);
                break;
            }
        }
        // Horner for f'(1/2).
        double gamma = 0.0;
        for (std::size_t i = deriv_coeffs_.size(); i-- > 0;) gamma = gamma * 0.5 + deriv_coeffs_[i];
        const double beta = (m > 0) ? coeffs_[m] : 0.0;
        const auto& poly = std::get<CustomPolynomial>(spec.kind());
        const int smooth = poly.smoothness_order > 0 ? poly.smoothness_order : std::max(m, 2);
        params_ = {m, beta, gamma, smooth};
    }
    gl_order_ = static_cast<std::size_t>((max_degree + 1) / 2);
    if (gl_order_ == 0) gl_order_ = 1;
}

double MajorityTypeFunction::raw_threshold_sum(double x) const {
    double sum = 0.0;
    for (const auto& t : terms_) sum += t.weight * threshold_tail(t.k, t.q, x);
    return sum;
}

double MajorityTypeFunction::raw_poly(double x) const {
    double v = 0.0;
    for (std::size_t i = coeffs_.size(); i-- > 0;) v = v * x + coeffs_[i];
    return v;
}

double MajorityTypeFunction::eval_raw(double x) const {
    return terms_.empty() ? raw_poly(x) : raw_threshold_sum(x);
}

double MajorityTypeFunction::operator()(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("MajorityTypeFunction: x must be in [0,1]");
    if (x == 0.5) return 0.5;
    if (x > 0.5) return 1.0 - (*this)(1.0 - x);
    if (!terms_.empty()) return std::pow(x, params_.m) * f_over_xm(x);
    return raw_poly(x);
}

double MajorityTypeFunction::f_over_xm(double x) const {
    if (terms_.empty()) {
        double v = 0.0;
        for (std::size_t i = coeffs_.size(); i-- > static_cast<std::size_t>(params_.m);)
            v = v * x + coeffs_[i];
        return v;
    }
    if (x >= 1.0) return 1.0;
    double sum = 0.0;
    for (const auto& t : terms_)
        sum += t.weight * std::pow(x, t.q - params_.m) * threshold_tail_over_xq(t.k, t.q, x);
    return sum;
}

double MajorityTypeFunction::derivative(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("MajorityTypeFunction: x must be in [0,1]");
    const double c = std::min(x, 1.0 - x);
    if (terms_.empty()) {
        double v = 0.0;
        for (std::size_t i = deriv_coeffs_.size(); i-- > 0;) v = v * c + deriv_coeffs_[i];
        return v;
    }
    double sum = 0.0;
    for (const auto& t : terms_)
        sum += t.weight * static_cast<double>(t.k) * binomial_coefficient(t.k - 1, t.q - 1) *
               std::pow(c, t.q - 1) * std::pow(1.0 - c, t.k - t.q);
    return sum;
}

double MajorityTypeFunction::half_gap_map(double delta) const {
    if (!(delta >= 0.0 && delta <= 0.5)) throw std::domain_error("half_gap_map: delta must be in [0, 1/2]");
    if (delta == 0.0) return 0.0;
    const auto& rule = gauss_legendre(gl_order_);
    double integral = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double v = delta * (rule.nodes[i] + 1.0) * 0.5;
        integral += rule.weights[i] * derivative(0.5 - v);
    }
    // The map lands in [0, 1/2]; clamp quadrature rounding at the endpoints.
    return std::min(std::max(integral * delta * 0.5, 0.0), 0.5);
}

double eval_kmaj(int k, double x) { return MajorityTypeFunction(ProtocolSpec::kmaj(k))(x); }

double eval_kmaj_tie_form(int k, double x) {
    if (k < 3) throw std::invalid_argument("eval_kmaj_tie_form: k must be >= 3");
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("eval_kmaj_tie_form: x must be in [0,1]");
    double sum = 0.0;
    for (int i = 0; 2 * i < k; ++i)
        sum += binomial_coefficient(k, i) * std::pow(x, k - i) * std::pow(1.0 - x, i);
    if (k % 2 == 0)
        sum += 0.5 * binomial_coefficient(k, k / 2) * std::pow(x * (1.0 - x), k / 2);
    return sum;
}

double eval(const ProtocolSpec& spec, double x) { return make_function(spec)(x); }

MajorityTypeFunction make_function(const ProtocolSpec& spec) {
    MajorityTypeFunction f(spec);
    if (std::holds_alternative<CustomPolynomial>(spec.kind())) {
        const ValidationReport report = run_axiom_checks(f);
        if (!report.all_pass()) {
            std::string failed;
            for (const auto& c : report.checks)
                if (!c.pass) failed += (failed.empty() ? "" : ", ") + c.name;
            throw std::invalid_argument("custom polynomial is not a majority-type update function (failed: " +
                                        failed + ")");
        }
    }
    return f;
}

FunctionParams params(const ProtocolSpec& spec) { return make_function(spec).params(); }

double iterate(const MajorityTypeFunction& f, double x, int t) {
    if (t < 0) throw std::invalid_argument("iterate: t must be >= 0");
    for (int i = 0; i < t; ++i) x = f(x);
    return x;
}

double iterate_half_gap(const MajorityTypeFunction& f, double delta, int t) {
    if (!(delta > 0.0 && delta <= 0.5)) throw std::domain_error("iterate_half_gap: delta must be in (0, 1/2]");
    if (t < 0) throw std::invalid_argument("iterate_half_gap: t must be >= 0");
    for (int i = 0; i < t; ++i) delta = f.half_gap_map(delta);
    return delta;
}

double iterate_log(const MajorityTypeFunction& f, double ln_x, int t) {
    if (!(ln_x <= 0.0)) throw std::domain_error("iterate_log: ln_x must be <= 0");
    if (t < 0) throw std::invalid_argument("iterate_log: t must be >= 0");
    const double m = static_cast<double>(f.params().m);
    for (int i = 0; i < t; ++i) {
        const double x = std::exp(ln_x);  // underflows to 0 harmlessly; correction is then ln(beta)
        ln_x = m * ln_x + std::log(f.f_over_xm(x));
    }
    return ln_x;
}

double inverse(const MajorityTypeFunction& f, double y, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("inverse: tol must be positive");
    if (!(y >= 0.0 && y <= 1.0)) throw std::domain_error("inverse: y must be in [0,1]");
    double lo = 0.0;
    double hi = 1.0;
    double mid = 0.5;
    for (int i = 0; i < 200; ++i) {
        mid = 0.5 * (lo + hi);
        const double v = f(mid);
        if (std::abs(v - y) <= tol) return mid;
        (v < y ? lo : hi) = mid;
    }
    return mid;
}

bool ValidationReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

const AxiomCheck* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks)
        arr.push_back({{"name", c.name},
                       {"pass", c.pass},
                       {"worst_x", c.worst_x},
                       {"worst_violation", c.worst_violation}});
    return {{"checks", arr}, {"all_pass", all_pass()}};
}

namespace {

ValidationReport run_axiom_checks(const MajorityTypeFunction& f) {
    ValidationReport report;
    const auto& grid = validation_grid();
    const auto& p = f.params();

    auto push = [&](std::string name, bool pass, double worst_x, double violation) {
        report.checks.push_back({std::move(name), pass, worst_x, violation});
    };

    push("f(0)=0", std::abs(f.eval_raw(0.0)) <= 1e-12, 0.0, std::abs(f.eval_raw(0.0)));
    push("f(1)=1", std::abs(f.eval_raw(1.0) - 1.0) <= 1e-12, 1.0, std::abs(f.eval_raw(1.0) - 1.0));
    push("f(1/2)=1/2", std::abs(f.eval_raw(0.5) - 0.5) <= 1e-12, 0.5, std::abs(f.eval_raw(0.5) - 0.5));

    {
        double worst = 0.0, at = 0.0;
        for (double x : grid) {
            const double v = std::abs(1.0 - f.eval_raw(1.0 - x) - f.eval_raw(x));
            if (v > worst) worst = v, at = x;
        }
        push("symmetry", worst <= 1e-12, at, worst);
    }
    {
        double worst = 0.0, at = 0.0;
        double prev = f(grid.front());
        for (std::size_t i = 1; i < grid.size(); ++i) {
            const double cur = f(grid[i]);
            const double drop = prev - cur;
            if (drop > worst) worst = drop, at = grid[i];
            prev = cur;
        }
        push("monotone", worst <= 1e-12, at, worst);
    }
    {
        // Uniform sub-grid only: plain second differences, per the grid contract.
        const int n = 10000;
        double worst = 0.0, at = 0.0;
        double fm = f(0.0), f0 = f(1.0 / n);
        for (int j = 1; 2 * (j + 1) <= n; ++j) {
            const double fp = f(static_cast<double>(j + 1) / n);
            const double second = fp - 2.0 * f0 + fm;
            if (-second > worst) worst = -second, at = static_cast<double>(j) / n;
            fm = f0;
            f0 = fp;
        }
        push("convex_on_[0,1/2]", worst <= 1e-9, at, worst);
    }
    push("m>=2", p.m >= 2, 0.0, static_cast<double>(p.m));
    {
        bool ok = p.beta > 0.0;
        double worst = 0.0, at = 0.0;
        if (ok) {
            const double r3 = std::abs(f.f_over_xm(1e-3) / p.beta - 1.0);
            const double r4 = std::abs(f.f_over_xm(1e-4) / p.beta - 1.0);
            const double r5 = std::abs(f.f_over_xm(1e-5) / p.beta - 1.0);
            ok = r3 <= 0.5 && r4 <= std::max(r3 / 4.0, 1e-11) && r5 <= std::max(r4 / 4.0, 1e-11);
            worst = std::max({r3, r4, r5});
            at = 1e-3;
        }
        push("leading_beta_xm", ok, at, worst);
    }
    {
        bool ok = p.gamma > 0.0;
        double worst = 0.0, at = 0.0;
        if (ok) {
            const double s2 = std::abs(f.half_gap_map(1e-2) / (p.gamma * 1e-2) - 1.0);
            const double s3 = std::abs(f.half_gap_map(1e-3) / (p.gamma * 1e-3) - 1.0);
            const double s4 = std::abs(f.half_gap_map(1e-4) / (p.gamma * 1e-4) - 1.0);
            ok = s2 <= 0.5 && s3 <= std::max(s2 / 5.0, 1e-9) && s4 <= std::max(s3 / 5.0, 1e-9);
            worst = std::max({s2, s3, s4});
            at = 1e-2;
        }
        push("slope_gamma", ok, at, worst);
    }
    push("gamma>1", p.gamma > 1.0, 0.5, p.gamma);

    // Even-k specs: the tie-splitting form must agree with the reduced sum.
    std::vector<int> even_ks;
    if (const auto* km = std::get_if<KMaj>(&f.spec().kind())) {
        if (km->k % 2 == 0) even_ks.push_back(km->k);
    } else if (const auto* rm = std::get_if<RandKMaj>(&f.spec().kind())) {
        for (const auto& [k, w] : rm->pmf) {
            (void)w;
            if (k % 2 == 0) even_ks.push_back(k);
        }
    }
    for (int k : even_ks) {
        double worst = 0.0, at = 0.0;
        for (double x : grid) {
            const double v = std::abs(eval_kmaj_tie_form(k, x) - eval_kmaj(k, x));
            if (v > worst) worst = v, at = x;
        }
        push("even_tie_form_k=" + std::to_string(k), worst <= 1e-12, at, worst);
    }
    return report;
}

}  // namespace

ValidationReport validate(const ProtocolSpec& spec) {
    return run_axiom_checks(MajorityTypeFunction(spec));
}

}  // namespace consensus_lab
