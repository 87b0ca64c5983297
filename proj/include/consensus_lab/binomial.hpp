#pragma once

#include <cstdint>

#include "consensus_lab/rng.hpp"

namespace consensus_lab {

/// Exact Bin(n, p) variate. Sequential CDF inversion when the mean is small,
/// otherwise the beta-splitting recursion (condition on an order statistic of
/// the n underlying uniforms), which halves n per level and stays exact.
/// Handles p in [0, 1]; works for n up to ~1e9, used here up to ~1e7.
std::int64_t binomial_sample(Rng& rng, std::int64_t n, double p);

/// log P(Bin(n, p) = k), computed via lgamma; stable for extreme p.
double binomial_log_pmf(std::int64_t n, double p, std::int64_t k);

/// Binomial coefficient as a double (exact for small arguments, otherwise
/// correctly rounded products); valid for n <= 1000.
double binomial_coefficient(int n, int k);

}  // namespace consensus_lab
