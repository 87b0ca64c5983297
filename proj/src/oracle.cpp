#include "consensus_lab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>
#include <stdexcept>

#include "consensus_lab/update_fn.hpp"

namespace consensus_lab::oracle {

namespace {

constexpr std::int64_t kMaxN = 5000;
constexpr double kResidualTarget = 1e-12;

std::vector<double> log_factorials(std::int64_t n) {
    std::vector<double> lf(static_cast<std::size_t>(n + 1), 0.0);
    for (std::int64_t i = 2; i <= n; ++i)
        lf[static_cast<std::size_t>(i)] = lf[static_cast<std::size_t>(i - 1)] + std::log(static_cast<double>(i));
    return lf;
}

// One propagation step v <- v K; absorbing rows are identity so absorbed
// mass stays in place.
void propagate(const ExactChain& chain, std::vector<double>& v, std::vector<double>& scratch) {
    const std::int64_t n = chain.n();
    std::fill(scratch.begin(), scratch.end(), 0.0);
    for (std::int64_t i = 0; i <= n; ++i) {
        const double mass = v[static_cast<std::size_t>(i)];
        if (mass == 0.0) continue;
        const double* row = chain.row(i);
        for (std::int64_t j = 0; j <= n; ++j) scratch[static_cast<std::size_t>(j)] += mass * row[j];
    }
    v.swap(scratch);
}

double interior_mass(const std::vector<double>& v) {
    double sum = 0.0;
    for (std::size_t j = 1; j + 1 < v.size(); ++j) sum += v[j];
    return sum;
}

}  // namespace

ExactChain ExactChain::build(std::int64_t n, const ProtocolSpec& spec) {
    if (n < 2 || n > kMaxN) throw std::invalid_argument("ExactChain: n must lie in [2, 5000]");
    const MajorityTypeFunction f = make_function(spec);
    const auto lf = log_factorials(n);
    const std::size_t width = static_cast<std::size_t>(n + 1);
    std::vector<double> kernel(width * width, 0.0);

    for (std::int64_t i = 0; i <= n; ++i) {
        double* row = kernel.data() + static_cast<std::size_t>(i) * width;
        const double p = f(static_cast<double>(i) / static_cast<double>(n));
        if (p <= 0.0) {
            row[0] = 1.0;
            continue;
        }
        if (p >= 1.0) {
            row[n] = 1.0;
            continue;
        }
        const double lp = std::log(p);
        const double lq = std::log1p(-p);
        const double lfn = lf[static_cast<std::size_t>(n)];
        for (std::int64_t j = 0; j <= n; ++j) {
            const double logpmf = lfn - lf[static_cast<std::size_t>(j)] - lf[static_cast<std::size_t>(n - j)] +
                                  static_cast<double>(j) * lp + static_cast<double>(n - j) * lq;
            row[j] = std::exp(logpmf);
        }
    }
    return ExactChain(n, spec, std::move(kernel));
}

void ExactChain::write_kernel(std::ostream& os) const {
    const char magic[8] = {'C', 'L', 'A', 'B', 'K', 'R', 'N', '1'};
    os.write(magic, 8);
    std::uint64_t size = static_cast<std::uint64_t>(n_);
    unsigned char le[8];
    for (int b = 0; b < 8; ++b) le[b] = static_cast<unsigned char>((size >> (8 * b)) & 0xFF);
    os.write(reinterpret_cast<const char*>(le), 8);
    os.write(reinterpret_cast<const char*>(kernel_.data()),
             static_cast<std::streamsize>(kernel_.size() * sizeof(double)));
}

RuntimeDistribution runtime_distribution(const ExactChain& chain, std::int64_t x0, int t_max) {
    const std::int64_t n = chain.n();
    if (x0 < 0 || x0 > n) throw std::invalid_argument("runtime_distribution: x0 must lie in [0, n]");
    if (t_max < 0) throw std::invalid_argument("runtime_distribution: t_max must be >= 0");

    std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> scratch(v.size());
    v[static_cast<std::size_t>(x0)] = 1.0;

    RuntimeDistribution out;
    out.survival.resize(static_cast<std::size_t>(t_max) + 1);
    out.survival[0] = 1.0;
    for (int s = 1; s <= t_max; ++s) {
        out.survival[static_cast<std::size_t>(s)] = interior_mass(v);  // v holds X_{s-1}
        propagate(chain, v, scratch);
    }
    out.residual = interior_mass(v);
    return out;
}

RuntimeDistribution runtime_distribution(const ExactChain& chain, std::int64_t x0) {
    const std::int64_t n = chain.n();
    if (x0 < 0 || x0 > n) throw std::invalid_argument("runtime_distribution: x0 must lie in [0, n]");
    std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> scratch(v.size());
    v[static_cast<std::size_t>(x0)] = 1.0;

    RuntimeDistribution out;
    out.survival.push_back(1.0);
    for (long s = 1;; ++s) {
        const double interior = interior_mass(v);
        out.survival.push_back(interior);
        if (interior <= kResidualTarget) {
            out.residual = interior;
            return out;
        }
        if (s >= 1000000) throw std::runtime_error("runtime_distribution: chain failed to absorb");
        propagate(chain, v, scratch);
    }
}

WinnerProbability winner_probability_exact(const ExactChain& chain, std::int64_t x0) {
    const std::int64_t n = chain.n();
    if (x0 < 0 || x0 > n) throw std::invalid_argument("winner_probability_exact: x0 out of range");
    std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> scratch(v.size());
    v[static_cast<std::size_t>(x0)] = 1.0;
    long steps = 0;
    while (interior_mass(v) > kResidualTarget) {
        if (steps >= 1000000)
            throw std::runtime_error("winner_probability_exact: residual not driven below 1e-12");
        propagate(chain, v, scratch);
        ++steps;
    }
    return {v[static_cast<std::size_t>(n)], v[0], steps};
}

namespace {

// Solves the dense absorption system (I - Q) a = r for one absorbing target.
std::vector<double> solve_absorption(const ExactChain& chain, std::int64_t target) {
    const std::int64_t n = chain.n();
    const std::int64_t dim = n - 1;  // interior states 1..n-1
    std::vector<double> a(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim), 0.0);
    std::vector<double> rhs(static_cast<std::size_t>(dim), 0.0);
    for (std::int64_t i = 1; i < n; ++i) {
        const double* row = chain.row(i);
        for (std::int64_t j = 1; j < n; ++j)
            a[static_cast<std::size_t>((i - 1) * dim + (j - 1))] = ((i == j) ? 1.0 : 0.0) - row[j];
        rhs[static_cast<std::size_t>(i - 1)] = row[target];
    }
    // Gaussian elimination with partial pivoting.
    for (std::int64_t col = 0; col < dim; ++col) {
        std::int64_t pivot = col;
        double best = std::abs(a[static_cast<std::size_t>(col * dim + col)]);
        for (std::int64_t r = col + 1; r < dim; ++r) {
            const double cand = std::abs(a[static_cast<std::size_t>(r * dim + col)]);
            if (cand > best) best = cand, pivot = r;
        }
        if (best == 0.0) throw std::runtime_error("solve_absorption: singular system");
        if (pivot != col) {
            for (std::int64_t c = 0; c < dim; ++c)
                std::swap(a[static_cast<std::size_t>(pivot * dim + c)], a[static_cast<std::size_t>(col * dim + c)]);
            std::swap(rhs[static_cast<std::size_t>(pivot)], rhs[static_cast<std::size_t>(col)]);
        }
        const double inv = 1.0 / a[static_cast<std::size_t>(col * dim + col)];
        for (std::int64_t r = col + 1; r < dim; ++r) {
            const double factor = a[static_cast<std::size_t>(r * dim + col)] * inv;
            if (factor == 0.0) continue;
            a[static_cast<std::size_t>(r * dim + col)] = 0.0;
            for (std::int64_t c = col + 1; c < dim; ++c)
                a[static_cast<std::size_t>(r * dim + c)] -= factor * a[static_cast<std::size_t>(col * dim + c)];
            rhs[static_cast<std::size_t>(r)] -= factor * rhs[static_cast<std::size_t>(col)];
        }
    }
    std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
    for (std::int64_t r = dim - 1; r >= 0; --r) {
        double sum = rhs[static_cast<std::size_t>(r)];
        for (std::int64_t c = r + 1; c < dim; ++c)
            sum -= a[static_cast<std::size_t>(r * dim + c)] * x[static_cast<std::size_t>(c)];
        x[static_cast<std::size_t>(r)] = sum / a[static_cast<std::size_t>(r * dim + r)];
    }
    return x;
}

}  // namespace

WinnerProbability winner_probability_linear_solve(const ExactChain& chain, std::int64_t x0) {
    const std::int64_t n = chain.n();
    if (x0 < 0 || x0 > n) throw std::invalid_argument("winner_probability_linear_solve: x0 out of range");
    if (x0 == 0) return {0.0, 1.0, 0};
    if (x0 == n) return {1.0, 0.0, 0};
    const auto to_x = solve_absorption(chain, n);
    const auto to_y = solve_absorption(chain, 0);
    return {to_x[static_cast<std::size_t>(x0 - 1)], to_y[static_cast<std::size_t>(x0 - 1)], 0};
}

DominanceResult dominance_check(const ExactChain& chain, double x, double x_prime) {
    if (!(x >= 0.5 && x_prime >= x && x_prime <= 1.0))
        throw std::invalid_argument("dominance_check: need 1/2 <= x <= x' <= 1");
    const std::int64_t n = chain.n();
    const std::int64_t cx = count_from_fraction(n, x);
    const std::int64_t cxp = count_from_fraction(n, x_prime);

    std::vector<double> lo(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> hi(lo), scratch(lo);
    lo[static_cast<std::size_t>(cx)] = 1.0;
    hi[static_cast<std::size_t>(cxp)] = 1.0;

    DominanceResult out;
    long s = 1;
    while (true) {
        const double lo_int = interior_mass(lo);
        const double hi_int = interior_mass(hi);
        // Monotone coupling of the majority chains: the larger initial
        // majority is stochastically faster, so the ordering asserted is
        // P(R(x' n) >= s) <= P(R(x n) >= s) + 1e-10 for all s.
        const double violation = hi_int - lo_int;
        if (violation > 1e-10 && violation > out.worst_violation) {
            out.dominated = false;
            out.worst_s = s;
            out.worst_violation = violation;
        }
        if (lo_int <= kResidualTarget && hi_int <= kResidualTarget) break;
        if (s > 1000000) throw std::runtime_error("dominance_check: chains failed to absorb");
        propagate(chain, lo, scratch);
        propagate(chain, hi, scratch);
        ++s;
    }
    return out;
}

std::int64_t count_from_fraction(std::int64_t n, double fraction) {
    const double raw = std::nearbyint(fraction * static_cast<double>(n));
    return std::clamp(static_cast<std::int64_t>(raw), std::int64_t{0}, n);
}

void write_survival_csv(std::ostream& os, const RuntimeDistribution& dist) {
    os << "s,P_R_geq_s\n";
    char buf[64];
    for (std::size_t s = 0; s < dist.survival.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%zu,%.12g\n", s, dist.survival[s]);
        os << buf;
    }
}

}  // namespace consensus_lab::oracle
