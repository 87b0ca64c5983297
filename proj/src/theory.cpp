#include "consensus_lab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "consensus_lab/gaussian.hpp"

namespace consensus_lab::theory {

namespace {

constexpr double kGapSwitch = 0.1;   // half-gap map while delta < 0.1
constexpr double kLogSwitch = 1e-4;  // direct x-iteration down to here, then log space
constexpr double kLogStop = -1e6;    // adaptive b: stop once ln f^(b) below this
constexpr int kMaxA = 200;
constexpr int kAStep = 4;
constexpr int kBSlack = 60;  // b capped at a + 60

// Recursive adaptive Simpson; integrand may be discontinuous (indicator
// against a density), so depth is generous and cost concentrates at jumps.
double adaptive_simpson(const std::function<double(double)>& fn, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = fn(lm);
    const double frm = fn(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(fn, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(fn, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& fn, double a, double b, double tol) {
    if (!(b > a)) return 0.0;
    const double fa = fn(a);
    const double fb = fn(b);
    const double fm = fn(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(fn, a, b, fa, fm, fb, whole, tol, 52);
}

struct InnerResult {
    bool converged = false;
    double value = 0.0;  // lim_b [ b - log_m |ln f^(b)(1/2 - gamma^{-a-x})| ] - a
    int b_used = 0;
};

// One truncation level of the double limit. Three iteration regimes: half-gap
// coordinates while the distance to 1/2 is small, direct x once the iterate
// drops below 0.4, log space once x < 1e-4. The b-limit is closed
// analytically: once f(x)/x^m is indistinguishable from beta, the recursion
// L' = mL + ln(beta) gives
//   lim_b (b - log_m|L_b|) = b0 - log_m|L_{b0} + ln(beta)/(m-1)|.
InnerResult g_inner(const MajorityTypeFunction& f, double x, int a) {
    const auto& p = f.params();
    const double ln_gamma = std::log(p.gamma);
    const double ln_m = std::log(static_cast<double>(p.m));
    // The half-gap phase runs ~(a + x) steps, so the slack follows x along.
    const int b_cap = a + kBSlack + std::max(0, static_cast<int>(std::ceil(x)));

    InnerResult res;
    double delta = std::exp(-(static_cast<double>(a) + x) * ln_gamma);
    if (!(delta > 0.0 && delta < kGapSwitch)) return res;  // a too small for this x

    int b = 0;
    while (delta < kGapSwitch) {
        if (b >= b_cap) return res;
        delta = f.half_gap_map(delta);
        ++b;
    }
    double xv = 0.5 - delta;
    while (xv >= kLogSwitch) {
        if (b >= b_cap) return res;
        xv = f(xv);
        ++b;
    }
    if (xv <= 0.0) return res;
    double L = std::log(xv);
    while (L > kLogStop && b < b_cap) {
        L = static_cast<double>(p.m) * L + std::log(f.f_over_xm(std::exp(L)));
        ++b;
    }
    // The analytic tail needs f(x)/x^m == beta to double precision.
    if (L > -30.0) return res;
    const double tail = std::log(p.beta) / (static_cast<double>(p.m) - 1.0);
    res.value = static_cast<double>(b - a) - std::log(std::abs(L + tail)) / ln_m;
    res.b_used = b;
    res.converged = true;
    return res;
}

}  // namespace

GaussianZ GaussianZ::for_bias(double d, double gamma) {
    if (!(gamma > 1.0)) throw std::domain_error("GaussianZ: gamma must exceed 1");
    return {d, 1.0 / (4.0 * (gamma * gamma - 1.0))};
}

double GaussianZ::sigma() const { return std::sqrt(variance); }

double GaussianZ::cdf(double z) const { return normal_cdf((z - mean) / sigma()); }

double GaussianZ::abs_cdf(double z) const {
    if (z <= 0.0) return 0.0;
    const double s = sigma();
    return normal_cdf((z - mean) / s) - normal_cdf((-z - mean) / s);
}

double win_probability(double d, double gamma) {
    if (!(gamma > 1.0)) throw std::domain_error("win_probability: gamma must exceed 1");
    if (d < 0.0) return 1.0 - win_probability(-d, gamma);
    return normal_cdf(2.0 * d * std::sqrt(gamma * gamma - 1.0));
}

std::pair<double, double> clt_moments(int t, double d, double gamma) {
    if (t < 0) throw std::invalid_argument("clt_moments: t must be >= 0");
    if (!(gamma > 1.0)) throw std::domain_error("clt_moments: gamma must exceed 1");
    const double mu = std::pow(gamma, t) * d;
    const double sigma_sq = (std::pow(gamma, 2 * t) - 1.0) / (4.0 * (gamma * gamma - 1.0));
    return {mu, sigma_sq};
}

double race_transform_density(double t, double d, double gamma) {
    const auto z = GaussianZ::for_bias(d, gamma);
    const double s = z.sigma();
    const double value = std::pow(gamma, -t);
    return std::log(gamma) * value / s * (normal_pdf((value - d) / s) + normal_pdf((value + d) / s));
}

GValue compute_g(const MajorityTypeFunction& f, double x, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("compute_g: tol must be positive");
    const auto& p = f.params();
    if (!(p.gamma > 1.0)) throw std::domain_error("compute_g: gamma must exceed 1");
    if (p.m < 2) throw std::domain_error("compute_g: m must be >= 2");

    const double ln_gamma = std::log(p.gamma);
    // gamma^{-a-x} must start inside the half-gap regime.
    int a = std::max(8, static_cast<int>(std::ceil(std::log(1.0 / 0.05) / ln_gamma - x)));

    const double constant = 2.0 - std::log(2.0) / std::log(static_cast<double>(p.m)) - x;
    InnerResult prev = g_inner(f, x, a);
    while (true) {
        const int next_a = a + kAStep;
        if (next_a > kMaxA)
            throw GConvergenceError("compute_g: no convergence before a = 200", a, prev.b_used);
        const InnerResult cur = g_inner(f, x, next_a);
        if (prev.converged && cur.converged && std::abs(cur.value - prev.value) < tol)
            return {constant + cur.value, next_a, cur.b_used, std::abs(cur.value - prev.value)};
        prev = cur;
        a = next_a;
    }
}

GValue compute_g(const ProtocolSpec& spec, double x, double tol) {
    return compute_g(make_function(spec), x, tol);
}

GValue compute_h(const MajorityTypeFunction& f, double x, double tol) {
    GValue g = compute_g(f, x, tol);
    g.value += x;
    return g;
}

GValue compute_h(const ProtocolSpec& spec, double x, double tol) {
    return compute_h(make_function(spec), x, tol);
}

GFunctionApprox::GFunctionApprox(ProtocolSpec spec, std::vector<double> values, double tol, int a_used,
                                 int b_used)
    : spec_(std::move(spec)), values_(std::move(values)), tol_(tol), a_used_(a_used), b_used_(b_used) {
    min_ = values_.front();
    max_ = values_.front();
    double sum = 0.0;
    for (double v : values_) {
        min_ = std::min(min_, v);
        max_ = std::max(max_, v);
        sum += v;
    }
    mean_ = sum / static_cast<double>(values_.size());
    h_increasing_ = true;
    const double step = 1.0 / static_cast<double>(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double next = (i + 1 == values_.size()) ? values_.front() : values_[i + 1];
        if (!(step + next - values_[i] > 0.0)) h_increasing_ = false;
    }
}

GFunctionApprox GFunctionApprox::build(const ProtocolSpec& spec, double tol, std::size_t grid_size) {
    if (grid_size < 2) throw std::invalid_argument("GFunctionApprox: grid_size must be >= 2");
    const MajorityTypeFunction f = make_function(spec);
    std::vector<double> values(grid_size);
    int a_used = 0, b_used = 0;
    double worst_change = 0.0;
    for (std::size_t i = 0; i < grid_size; ++i) {
        const GValue v = compute_g(f, static_cast<double>(i) / static_cast<double>(grid_size), tol);
        values[i] = v.value;
        a_used = std::max(a_used, v.a_used);
        b_used = std::max(b_used, v.b_used);
        worst_change = std::max(worst_change, v.observed_change);
    }
    // Fold the piecewise-linear interpolation error (estimated from second
    // differences) into the certified tolerance.
    double interp = 0.0;
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double a = values[i];
        const double b = values[(i + 1) % grid_size];
        const double c = values[(i + 2) % grid_size];
        interp = std::max(interp, std::abs(c - 2.0 * b + a) / 8.0);
    }
    return GFunctionApprox(spec, std::move(values), worst_change + interp, a_used, b_used);
}

double GFunctionApprox::operator()(double x) const {
    const std::size_t n = values_.size();
    double u = x - std::floor(x);
    if (u >= 1.0) u = 0.0;  // floor rounding at negative near-integers
    const double pos = u * static_cast<double>(n);
    std::size_t i = static_cast<std::size_t>(pos);
    if (i >= n) i = n - 1;
    const double frac = pos - static_cast<double>(i);
    const double right = (i + 1 == n) ? values_.front() : values_[i + 1];
    return values_[i] + frac * (right - values_[i]);
}

double GFunctionApprox::h_inverse(double value) const {
    double lo = value - max_ - 1.0;
    double hi = value - min_ + 1.0;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) < value ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

PredictedRuntimeLaw::PredictedRuntimeLaw(const ProtocolSpec& spec, std::int64_t n, double d,
                                         GFunctionApprox g)
    : spec_(spec), n_(n), d_(d), g_(std::move(g)), params_(params(spec)) {
    if (n < 2) throw std::invalid_argument("PredictedRuntimeLaw: n must be >= 2");
    llog_ = std::log(std::log(static_cast<double>(n))) / std::log(static_cast<double>(params_.m));
}

double PredictedRuntimeLaw::survival(long s) const {
    const auto z = GaussianZ::for_bias(d_, params_.gamma);
    const double sigma = z.sigma();
    const double ln_gamma = std::log(params_.gamma);
    const double half_ln_n = 0.5 * std::log(static_cast<double>(n_));
    const double threshold = static_cast<double>(s);

    auto indicator = [&](double zv) {
        const double zn = (half_ln_n - std::log(std::abs(zv))) / ln_gamma;
        return (g_.h(zn) + llog_ >= threshold) ? 1.0 : 0.0;
    };
    auto integrand = [&](double zv) { return indicator(zv) * normal_pdf((zv - d_) / sigma) / sigma; };

    const double lo = d_ - 8.0 * sigma;
    const double hi = d_ + 8.0 * sigma;
    const double hole = 1e-12;  // excluded neighborhood of the log singularity
    double total = 0.0;
    const double tol = 2.5e-7;
    if (lo < -hole && hi > hole) {
        total += integrate(integrand, lo, -hole, tol);
        total += integrate(integrand, hole, hi, tol);
    } else {
        total += integrate(integrand, lo, hi, tol);
    }
    // Exact tail bounds beyond +-8 sigma; the event is |z| <= z*(s), so one
    // sample decides each side.
    if (indicator(hi + sigma) > 0.5) total += normal_sf(8.0);
    if (indicator(lo - sigma) > 0.5) total += normal_sf(8.0);
    return std::min(std::max(total, 0.0), 1.0);
}

long PredictedRuntimeLaw::median() const {
    long s = 0;
    while (survival(s) >= 0.5) ++s;
    return s;  // smallest s with P(R >= s) < 1/2
}

std::vector<std::pair<long, double>> PredictedRuntimeLaw::sample_range(double eps) const {
    long lo = 0;
    while (survival(lo) < 1.0 - eps && lo > -2000) --lo;
    std::vector<std::pair<long, double>> out;
    for (long s = lo;; ++s) {
        const double p = survival(s);
        out.emplace_back(s, p);
        if (p < eps || s - lo > 4000) break;
    }
    return out;
}

PredictedRuntimeLaw runtime_cdf_prediction(const ProtocolSpec& spec, std::int64_t n, double d,
                                           GFunctionApprox g) {
    return PredictedRuntimeLaw(spec, n, d, std::move(g));
}

double IntegerPmf::total() const {
    double sum = 0.0;
    for (double m : mass) sum += m;
    return sum;
}

double IntegerPmf::at(long j) const {
    const long idx = j - j_min;
    if (idx < 0 || idx >= static_cast<long>(mass.size())) return 0.0;
    return mass[static_cast<std::size_t>(idx)];
}

double IntegerPmf::survival(long s) const {
    double sum = 0.0;
    for (long j = std::max(s, j_min); j < j_min + static_cast<long>(mass.size()); ++j) sum += at(j);
    return sum;
}

double IntegerPmf::lower_cdf(long t) const {
    double sum = 0.0;
    for (long j = j_min; j <= t && j < j_min + static_cast<long>(mass.size()); ++j) sum += at(j);
    return sum;
}

IntegerPmf subsequence_limit_pmf(const ProtocolSpec& spec, double x, double y, double d,
                                 const GFunctionApprox& g) {
    if (!(x >= 0.0 && x < 1.0 && y >= 0.0 && y < 1.0))
        throw std::invalid_argument("subsequence_limit_pmf: x, y must lie in [0,1)");
    if (!g.h_strictly_increasing())
        throw std::runtime_error("subsequence_limit_pmf: h is not strictly increasing on the grid");
    const auto p = params(spec);
    const auto z = GaussianZ::for_bias(d, p.gamma);
    const double ln_gamma = std::log(p.gamma);

    // P(H >= j) = P(|Z| <= gamma^{x - h^{-1}(j - y)}).
    auto survival = [&](long j) {
        const double exponent = (x - g.h_inverse(static_cast<double>(j) - y)) * ln_gamma;
        if (exponent > 700.0) return 1.0;
        return z.abs_cdf(std::exp(exponent));
    };

    long j_lo = 0;
    while (survival(j_lo) < 1.0 - 1e-10 && j_lo > -1000) --j_lo;
    long j_hi = j_lo;
    while (survival(j_hi + 1) > 1e-10 && j_hi < 1000) ++j_hi;

    IntegerPmf pmf;
    pmf.j_min = j_lo;
    pmf.mass.resize(static_cast<std::size_t>(j_hi - j_lo + 1));
    double prev = survival(j_lo);
    for (long j = j_lo; j <= j_hi; ++j) {
        const double next = survival(j + 1);
        pmf.mass[static_cast<std::size_t>(j - j_lo)] = std::max(prev - next, 0.0);
        prev = next;
    }
    return pmf;
}

ConcentrationSet concentration_set(const ProtocolSpec& spec, std::int64_t n, double d,
                                   const GFunctionApprox& g) {
    if (!(d > 0.0)) throw std::domain_error("concentration_set: d must be positive");
    if (n < 2) throw std::invalid_argument("concentration_set: n must be >= 2");
    const auto p = params(spec);
    const double w = (std::log(static_cast<double>(n)) - 2.0 * std::log(d)) / (2.0 * std::log(p.gamma));
    const double llog = std::log(std::log(static_cast<double>(n))) / std::log(static_cast<double>(p.m));
    ConcentrationSet out;
    out.pre_ceiling = w + llog + g(w);
    out.s_star = static_cast<long>(std::ceil(out.pre_ceiling));
    out.values[0] = out.s_star - 1;
    out.values[1] = out.s_star;
    return out;
}

namespace {

// phi^{-1} for phi(delta) = 1/2 - f(1/2 - delta); bracketed by [delta/(2 gamma), delta]
// since phi lies between its tangent gamma*delta and the identity.
double half_gap_inverse(const MajorityTypeFunction& f, double delta) {
    double lo = delta / f.params().gamma * 0.5;
    double hi = delta;
    for (int i = 0; i < 90; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f.half_gap_map(mid) < delta ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

KoenigsApprox::KoenigsApprox(const ProtocolSpec& spec, int truncation)
    : f_(make_function(spec)), truncation_(truncation) {
    if (truncation < 1 || truncation > 200)
        throw std::invalid_argument("KoenigsApprox: truncation must lie in [1, 200]");
    if (!(f_.params().gamma > 1.0)) throw std::domain_error("KoenigsApprox: gamma must exceed 1");
}

double KoenigsApprox::value(double x) const {
    if (!(x > 0.0 && x < 0.5)) throw std::domain_error("KoenigsApprox: x must lie in (0, 1/2)");
    // M_0(x) = lim_J gamma^J (1/2 - f^(-J)(x)), tracked in half-gap coordinates.
    double delta = 0.5 - x;
    for (int j = 0; j < truncation_; ++j) delta = half_gap_inverse(f_, delta);
    return std::exp(static_cast<double>(truncation_) * std::log(f_.params().gamma) + std::log(delta));
}

double KoenigsApprox::residual(double x) const {
    const double m0 = value(x);
    const double m0_at_fx = value(f_(x));
    return std::abs(m0_at_fx - f_.params().gamma * m0) / m0;
}

double koenigs_m0(const ProtocolSpec& spec, double x, int truncation) {
    const KoenigsApprox approx(spec, truncation);
    if (approx.residual(x) > 1e-6)
        throw std::runtime_error("koenigs_m0: truncation too small for 1e-6 residual");
    return approx.value(x);
}

}  // namespace consensus_lab::theory
