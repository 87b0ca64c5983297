#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "consensus_lab/update_fn.hpp"

namespace consensus_lab::theory {

/// The Gaussian race variable: N(d, 1/(4(gamma^2-1))).
struct GaussianZ {
    double mean = 0.0;
    double variance = 0.0;

    static GaussianZ for_bias(double d, double gamma);
    double sigma() const;
    double cdf(double z) const;
    /// P(|Z| <= z).
    double abs_cdf(double z) const;
};

/// P(the initially favored opinion wins) = P(Z >= 0) = Phi(2 d sqrt(gamma^2-1)).
/// Exact complement symmetry: win_probability(d) + win_probability(-d) == 1.
double win_probability(double d, double gamma);

/// (mu_t, sigma_t^2) of the normalized bias after t rounds:
/// mu_t = gamma^t d, sigma_t^2 = (gamma^{2t} - 1) / (4 (gamma^2 - 1)).
std::pair<double, double> clt_moments(int t, double d, double gamma);

/// Density of -log_gamma |Z|, the transformed Gaussian entering the runtime
/// fluctuation; integrates to 1 over the real line.
double race_transform_density(double t, double d, double gamma);

struct GValue {
    double value = 0.0;
    int a_used = 0;
    int b_used = 0;
    double observed_change = 0.0;  // change over the last truncation refinement
};

class GConvergenceError : public std::runtime_error {
public:
    GConvergenceError(const std::string& message, int a_used, int b_used)
        : std::runtime_error(message), a_used(a_used), b_used(b_used) {}
    int a_used;
    int b_used;
};

/// The 1-periodic correction term of the runtime limit law, evaluated from
/// its defining double limit over iterates of f. The truncation level a is
/// raised in steps of 4 until two successive refinements differ by less than
/// tol; the inner iterate count b is chosen adaptively (stop once
/// ln f^(b) < -1e6, capped at a + 60 steps) with the geometric tail of the
/// log recursion summed analytically. Throws GConvergenceError once a
/// exceeds 200.
GValue compute_g(const MajorityTypeFunction& f, double x, double tol);
GValue compute_g(const ProtocolSpec& spec, double x, double tol);

/// h(x) = g(x) + x; continuous and strictly increasing.
GValue compute_h(const MajorityTypeFunction& f, double x, double tol);
GValue compute_h(const ProtocolSpec& spec, double x, double tol);

/// Tolerance-certified tabulation of g on [0, 1) with periodic wrap-around
/// and piecewise-linear interpolation.
class GFunctionApprox {
public:
    static GFunctionApprox build(const ProtocolSpec& spec, double tol = 1e-4,
                                 std::size_t grid_size = 1024);

    double operator()(double x) const;            // g(x), x wrapped mod 1
    double h(double x) const { return x + (*this)(x); }
    double h_inverse(double value) const;         // bisection on the monotone h

    double g0() const { return values_.front(); }
    double min_value() const { return min_; }
    double max_value() const { return max_; }
    double mean_value() const { return mean_; }
    double tol() const { return tol_; }
    int a_used() const { return a_used_; }
    int b_used() const { return b_used_; }
    bool h_strictly_increasing() const { return h_increasing_; }
    const ProtocolSpec& protocol() const { return spec_; }
    const std::vector<double>& grid_values() const { return values_; }

private:
    GFunctionApprox(ProtocolSpec spec, std::vector<double> values, double tol, int a_used, int b_used);

    ProtocolSpec spec_;
    std::vector<double> values_;
    double tol_ = 0.0;
    int a_used_ = 0;
    int b_used_ = 0;
    double min_ = 0.0, max_ = 0.0, mean_ = 0.0;
    bool h_increasing_ = false;
};

/// The predicted runtime law:
/// P(R_n >= s) ~ P(Z_n + log_m ln n + g(Z_n) >= s), Z_n = (1/2) log_gamma (n / Z^2).
/// survival() integrates the Gaussian density against the indicator with
/// adaptive subdivision over +-8 sigma (exact tail bounds beyond) to 1e-6.
class PredictedRuntimeLaw {
public:
    PredictedRuntimeLaw(const ProtocolSpec& spec, std::int64_t n, double d, GFunctionApprox g);

    double survival(long s) const;  // P(R_n >= s)
    std::int64_t n() const { return n_; }
    double d() const { return d_; }
    const GFunctionApprox& g() const { return g_; }
    const FunctionParams& function_params() const { return params_; }

    /// Smallest s with survival(s) < 0.5.
    long median() const;
    /// Materializes s -> P(R >= s) from the first s with survival > 1 - eps
    /// down to survival < eps.
    std::vector<std::pair<long, double>> sample_range(double eps = 1e-9) const;

private:
    ProtocolSpec spec_;
    std::int64_t n_;
    double d_;
    GFunctionApprox g_;
    FunctionParams params_;
    double llog_;  // log_m ln n
};

PredictedRuntimeLaw runtime_cdf_prediction(const ProtocolSpec& spec, std::int64_t n, double d,
                                           GFunctionApprox g);

/// Lattice distribution on the integers (support [j_min, j_min + mass.size())).
struct IntegerPmf {
    long j_min = 0;
    std::vector<double> mass;

    double total() const;
    double at(long j) const;
    double survival(long s) const;  // P(H >= s)
    double lower_cdf(long t) const; // P(H <= t)
};

/// Law of floor(h(x - log_gamma |Z|) + y): the subsequence limit of the
/// centered runtime. Computed from preimage intervals of the monotone h.
IntegerPmf subsequence_limit_pmf(const ProtocolSpec& spec, double x, double y, double d,
                                 const GFunctionApprox& g);

struct ConcentrationSet {
    long s_star = 0;
    long values[2] = {0, 0};  // {s_star - 1, s_star}
    double pre_ceiling = 0.0;
};

/// s_{n,d} = ceil( (1/2) log_gamma(n/d^2) + log_m ln n + g((1/2) log_gamma(n/d^2)) )
/// and the two-point concentration set {s-1, s} for strong initial bias.
ConcentrationSet concentration_set(const ProtocolSpec& spec, std::int64_t n, double d,
                                   const GFunctionApprox& g);

/// Koenigs solution of M(f(x)) = gamma M(x) near the repelling fixed point,
/// computed as lim_J gamma^J (1/2 - f^(-J)(x)) with the inverse orbit tracked
/// in half-gap coordinates. Cross-validates g's asymptotics.
class KoenigsApprox {
public:
    KoenigsApprox(const ProtocolSpec& spec, int truncation);

    double value(double x) const;     // M_0(x), 0 < x < 1/2
    double residual(double x) const;  // |M_0(f(x)) - gamma M_0(x)| / M_0(x)
    int truncation() const { return truncation_; }

private:
    MajorityTypeFunction f_;
    int truncation_;
};

/// M_0(x) with the functional-equation residual enforced below 1e-6;
/// throws std::runtime_error if the truncation cannot reach it.
double koenigs_m0(const ProtocolSpec& spec, double x, int truncation);

}  // namespace consensus_lab::theory
