#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "consensus_lab/protocol.hpp"

namespace consensus_lab {

struct FunctionParams {
    int m = 0;                 // order of vanishing of f at 0
    double beta = 0.0;         // leading coefficient: f(x) ~ beta * x^m
    double gamma = 0.0;        // slope at 1/2: f(1/2 + x) = 1/2 + gamma * x + O(x^2)
    int smoothness_order = 0;  // informational
};

/// An evaluatable majority-type update function. All built-ins reduce to
/// weighted binomial-threshold terms P(Bin(k, x) >= q), which admit factored
/// positive-term forms for f, f', and f(x)/x^m; custom functions are plain
/// polynomials. Immutable after construction; all methods are pure.
class MajorityTypeFunction {
public:
    /// Builds the evaluator from the spec's structure alone. Use
    /// make_function() to also enforce the majority-type axioms for custom
    /// polynomials; validate() reports them without throwing.
    explicit MajorityTypeFunction(const ProtocolSpec& spec);

    /// f(x) for x in [0, 1]. Evaluated via min(x, 1-x) and the symmetry
    /// identity, so complements are exact.
    double operator()(double x) const;

    /// f'(x); symmetric around 1/2.
    double derivative(double x) const;

    /// 1/2 - f(1/2 - delta) for delta in [0, 1/2], computed as the integral
    /// of f' over [1/2 - delta, 1/2] with a Gauss-Legendre rule exact for the
    /// polynomial degree at hand. Free of the cancellation that the direct
    /// subtraction suffers for small delta.
    double half_gap_map(double delta) const;

    /// f(x) / x^m in factored form; finite and positive down to x = 0,
    /// where it equals beta.
    double f_over_xm(double x) const;

    const FunctionParams& params() const { return params_; }
    const ProtocolSpec& spec() const { return spec_; }

    /// Direct (non-canonicalized) evaluation of the defining sum; used by
    /// validation so the symmetry and fixed-point axioms are checked for
    /// real rather than holding by construction.
    double eval_raw(double x) const;

private:
    struct ThresholdTerm {
        int k;
        int q;
        double weight;
    };

    double raw_threshold_sum(double x) const;
    double raw_poly(double x) const;

    ProtocolSpec spec_;
    std::vector<ThresholdTerm> terms_;  // empty iff custom polynomial
    std::vector<double> coeffs_;        // custom polynomial only
    std::vector<double> deriv_coeffs_;
    FunctionParams params_;
    std::size_t gl_order_ = 1;
};

/// f_k(x) for the k-majority rule; the even-k case uses the reduced
/// (k-1)-term sum. Rejects k < 3.
double eval_kmaj(int k, double x);

/// Even-k tie-splitting form (half of the tie mass); equal to eval_kmaj(k, .)
/// for even k. Kept as an independent evaluation route and asserted equal in
/// validation.
double eval_kmaj_tie_form(int k, double x);

/// Mixture evaluation for an arbitrary spec.
double eval(const ProtocolSpec& spec, double x);

MajorityTypeFunction make_function(const ProtocolSpec& spec);

/// (m, beta, gamma) for a spec; rejects custom functions with m = 1.
FunctionParams params(const ProtocolSpec& spec);

/// t-fold composition f^(t)(x); f^(0) is the identity.
double iterate(const MajorityTypeFunction& f, double x, int t);

/// delta_t with delta_{s+1} = 1/2 - f(1/2 - delta_s); equals
/// 1/2 - f^(t)(1/2 - delta) without cancellation.
double iterate_half_gap(const MajorityTypeFunction& f, double delta, int t);

/// ln f^(t)(x) from ln x via ln f(x) = m ln x + ln(f(x)/x^m); valid wherever
/// x = e^{ln_x} sits in [0, 1/2]. Once x underflows the correction factor is
/// evaluated at 0 (error O(x)).
double iterate_log(const MajorityTypeFunction& f, double ln_x, int t);

/// Monotone bisection solve of f(x) = y to |f(x) - y| <= tol.
double inverse(const MajorityTypeFunction& f, double y, double tol);

struct AxiomCheck {
    std::string name;
    bool pass = false;
    double worst_x = 0.0;
    double worst_violation = 0.0;
};

struct ValidationReport {
    std::vector<AxiomCheck> checks;
    bool all_pass() const;
    const AxiomCheck* find(const std::string& name) const;
    nlohmann::json to_json() const;
};

/// Numerically checks every majority-type axiom on the standard grid
/// (1e4 uniform points plus endpoints and 20 log-spaced points near each
/// end). Failures are data, not errors.
ValidationReport validate(const ProtocolSpec& spec);

}  // namespace consensus_lab
