#include "consensus_lab/binomial.hpp"

#include <cmath>
#include <stdexcept>

namespace consensus_lab {

namespace {

// Sequential search along the CDF. Expected cost O(np); callers keep np small.
std::int64_t binomial_inversion(Rng& rng, std::int64_t n, double p) {
    const double q = -std::log1p(-p);  // p = 1 - e^{-q}
    double u = rng.uniform_pos();
    double log_prob = -static_cast<double>(n) * q;
    double prob = std::exp(log_prob);
    const double odds = p / (1.0 - p);
    std::int64_t k = 0;
    while (u > prob) {
        u -= prob;
        if (k >= n) return n;  // guards accumulated rounding in the far tail
        prob *= odds * static_cast<double>(n - k) / static_cast<double>(k + 1);
        ++k;
    }
    return k;
}

}  // namespace

std::int64_t binomial_sample(Rng& rng, std::int64_t n, double p) {
    if (n < 0) throw std::invalid_argument("binomial_sample: n must be nonnegative");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_sample: p must be in [0,1]");
    // Invariant: the final variate equals acc + sign * Bin(n, p).
    std::int64_t acc = 0;
    std::int64_t sign = 1;
    for (;;) {
        if (p <= 0.0) return acc;
        if (p >= 1.0) return acc + sign * n;
        if (p > 0.5) {
            acc += sign * n;
            sign = -sign;
            p = 1.0 - p;
        }
        if (n <= 64 || static_cast<double>(n) * p <= 30.0)
            return acc + sign * binomial_inversion(rng, n, p);
        // Split at the a-th order statistic of the n underlying uniforms.
        const std::int64_t a = (n + 1) / 2;
        const double x = rng.beta(static_cast<double>(a), static_cast<double>(n + 1 - a));
        if (x <= p) {
            acc += sign * a;
            n -= a;
            p = (p - x) / (1.0 - x);
        } else {
            n = a - 1;
            p = p / x;
        }
        if (p < 0.0) p = 0.0;
        if (p > 1.0) p = 1.0;
    }
}

double binomial_log_pmf(std::int64_t n, double p, std::int64_t k) {
    if (k < 0 || k > n) return -INFINITY;
    if (p <= 0.0) return k == 0 ? 0.0 : -INFINITY;
    if (p >= 1.0) return k == n ? 0.0 : -INFINITY;
    const double nd = static_cast<double>(n);
    const double kd = static_cast<double>(k);
    const double log_choose =
        std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
    return log_choose + kd * std::log(p) + (nd - kd) * std::log1p(-p);
}

double binomial_coefficient(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    if (k > n - k) k = n - k;
    double result = 1.0;
    for (int i = 1; i <= k; ++i) result = result * static_cast<double>(n - k + i) / static_cast<double>(i);
    return result;
}

}  // namespace consensus_lab
