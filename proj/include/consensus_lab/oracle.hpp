#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "consensus_lab/protocol.hpp"

namespace consensus_lab::oracle {

/// Full transition kernel of the (n+1)-state count chain: row i is the
/// Bin(n, f(i/n)) pmf. Rows are computed independently (log-space binomial
/// pmf), so the i -> n-i symmetry is a checked property rather than a
/// construction artifact. Immutable once built.
class ExactChain {
public:
    static ExactChain build(std::int64_t n, const ProtocolSpec& spec);  // 2 <= n <= 5000

    std::int64_t n() const { return n_; }
    const ProtocolSpec& protocol() const { return spec_; }
    double kernel(std::int64_t i, std::int64_t j) const {
        return kernel_[static_cast<std::size_t>(i * (n_ + 1) + j)];
    }
    const double* row(std::int64_t i) const { return kernel_.data() + i * (n_ + 1); }

    /// Debug export: 8-byte magic "CLABKRN1", little-endian uint64 n, then
    /// (n+1)^2 row-major doubles.
    void write_kernel(std::ostream& os) const;

private:
    ExactChain(std::int64_t n, ProtocolSpec spec, std::vector<double> kernel)
        : n_(n), spec_(std::move(spec)), kernel_(std::move(kernel)) {}

    std::int64_t n_;
    ProtocolSpec spec_;
    std::vector<double> kernel_;
};

struct RuntimeDistribution {
    std::vector<double> survival;  // survival[s] = P(R >= s) for s = 0..t_max
    double residual = 0.0;         // interior mass left after t_max steps
};

/// Forward probability propagation from the point mass at x0.
RuntimeDistribution runtime_distribution(const ExactChain& chain, std::int64_t x0, int t_max);

/// Propagates until the unabsorbed mass drops below 1e-12 (cap 1e6 steps).
RuntimeDistribution runtime_distribution(const ExactChain& chain, std::int64_t x0);

struct WinnerProbability {
    double p_x = 0.0;
    double p_y = 0.0;
    long steps_used = 0;
};

/// Absorption probabilities by propagation until the interior mass drops
/// below 1e-12 (throws after 1e6 steps).
WinnerProbability winner_probability_exact(const ExactChain& chain, std::int64_t x0);

/// Cross-check route: dense linear absorption system solved by Gaussian
/// elimination with partial pivoting; both absorption targets are solved
/// independently so p_x + p_y = 1 is a real check.
WinnerProbability winner_probability_linear_solve(const ExactChain& chain, std::int64_t x0);

struct DominanceResult {
    bool dominated = true;
    long worst_s = -1;
    double worst_violation = 0.0;
};

/// Stochastic-dominance comparison of the exact runtime laws from the two
/// starting fractions (1/2 <= x <= x' <= 1). The coupling of the majority
/// chains makes the larger start the faster one; the check asserts
/// P(R(round(x' n)) >= s) <= P(R(round(x n)) >= s) + 1e-10 for all s and
/// reports the worst s on failure. Equal rounded counts hold trivially.
DominanceResult dominance_check(const ExactChain& chain, double x, double x_prime);

/// Round-half-to-even count for a fraction; shared with the simulator.
std::int64_t count_from_fraction(std::int64_t n, double fraction);

void write_survival_csv(std::ostream& os, const RuntimeDistribution& dist);

}  // namespace consensus_lab::oracle
