#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "consensus_lab/rng.hpp"
#include "consensus_lab/update_fn.hpp"

using namespace consensus_lab;

namespace {

// Brute-force oracle for k-maj: enumerate all k^... draw outcomes as bit
// patterns, weight by x^ones (1-x)^zeros, adopt on majority with uniform
// tie-breaking. Independent of the production evaluation path.
double kmaj_enumeration_oracle(int k, double x) {
    double total = 0.0;
    for (unsigned pattern = 0; pattern < (1u << k); ++pattern) {
        const int ones = __builtin_popcount(pattern);
        const double prob = std::pow(x, ones) * std::pow(1.0 - x, k - ones);
        if (2 * ones > k)
            total += prob;
        else if (2 * ones == k)
            total += 0.5 * prob;
    }
    return total;
}

long double pascal_choose(int n, int r) {
    std::vector<std::vector<long double>> rows(n + 1);
    for (int i = 0; i <= n; ++i) {
        rows[i].assign(i + 1, 1.0L);
        for (int j = 1; j < i; ++j) rows[i][j] = rows[i - 1][j - 1] + rows[i - 1][j];
    }
    return rows[n][r];
}

const ProtocolSpec kKMaj3 = ProtocolSpec::kmaj(3);

}  // namespace

TEST_CASE("eval_kmaj matches the enumeration oracle and the cubic closed form") {
    // 3-draw enumeration gives 0.648 at x = 0.6; the closed form is 3x^2 - 2x^3.
    CHECK(kmaj_enumeration_oracle(3, 0.6) == doctest::Approx(0.648).epsilon(1e-14));
    CHECK(eval_kmaj(3, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(eval_kmaj(3, 0.6) == doctest::Approx(0.648).epsilon(1e-13));
    CHECK(eval_kmaj(4, 0.6) == doctest::Approx(0.648).epsilon(1e-13));

    for (int i = 0; i <= 1000; ++i) {
        const double x = i / 1000.0;
        const double expected = 3.0 * x * x - 2.0 * x * x * x;
        CHECK(std::abs(eval_kmaj(3, x) - expected) <= 1e-12);
    }
    for (int k = 3; k <= 7; ++k) {
        for (double x : {0.05, 0.3, 0.45, 0.6, 0.93}) {
            CHECK(eval_kmaj(k, x) == doctest::Approx(kmaj_enumeration_oracle(k, x)).epsilon(1e-12));
        }
    }
    CHECK_THROWS(eval_kmaj(2, 0.5));
}

TEST_CASE("odd k and k+1 give the same update function") {
    for (int k = 3; k <= 15; k += 2) {
        double worst = 0.0;
        for (int i = 0; i <= 2000; ++i) {
            const double x = i / 2000.0;
            worst = std::max(worst, std::abs(eval_kmaj(k, x) - eval_kmaj(k + 1, x)));
            worst = std::max(worst, std::abs(eval_kmaj_tie_form(k + 1, x) - eval_kmaj(k + 1, x)));
        }
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("params: closed forms for k-maj") {
    const auto p3 = params(ProtocolSpec::kmaj(3));
    CHECK(p3.m == 2);
    CHECK(p3.beta == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(p3.gamma == doctest::Approx(1.5).epsilon(1e-14));

    const auto p5 = params(ProtocolSpec::kmaj(5));
    CHECK(p5.m == 3);
    CHECK(p5.beta == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(p5.gamma == doctest::Approx(1.875).epsilon(1e-14));

    // Independent evaluation through a Pascal triangle.
    for (int k : {3, 5, 7, 9}) {
        const auto p = params(ProtocolSpec::kmaj(k));
        const long double beta = pascal_choose(k, k / 2);
        const long double gamma = pascal_choose(k - 1, k / 2) * std::pow(2.0L, 1 - k) * k;
        CHECK(p.m == (k + 1) / 2);
        CHECK(std::abs(p.beta - static_cast<double>(beta)) <= 1e-12 * static_cast<double>(beta));
        CHECK(std::abs(p.gamma - static_cast<double>(gamma)) <= 1e-12 * static_cast<double>(gamma));
    }

    // Even k inherits from k-1.
    const auto p4 = params(ProtocolSpec::kmaj(4));
    CHECK(p4.m == 2);
    CHECK(p4.beta == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(p4.gamma == doctest::Approx(1.5).epsilon(1e-14));

    for (int k : {21, 51, 101}) {
        const auto p = params(ProtocolSpec::kmaj(k));
        const double ratio = p.gamma / std::sqrt(2.0 * k / M_PI);
        CHECK(ratio >= 0.95);
        CHECK(ratio <= 1.05);
    }
    const auto p101 = params(ProtocolSpec::kmaj(101));
    CHECK(p101.gamma == doctest::Approx(8.0385).epsilon(1e-3));
    CHECK(std::abs(p101.gamma / std::sqrt(2.0 * 101 / M_PI) - 1.0) < 0.01);
}

TEST_CASE("params: mixtures and thresholds") {
    const auto pr = params(ProtocolSpec::rand_kmaj({{3, 0.5}, {5, 0.5}}));
    CHECK(pr.m == 2);
    CHECK(pr.beta == doctest::Approx(1.5).epsilon(1e-14));       // 0.5 * C(3,1)
    CHECK(pr.gamma == doctest::Approx(1.6875).epsilon(1e-14));   // 0.5*1.5 + 0.5*1.875

    // Both k and k+1 in support at the lowest order: leading mass merges.
    const auto pm = params(ProtocolSpec::rand_kmaj({{3, 0.25}, {4, 0.25}, {5, 0.5}}));
    CHECK(pm.m == 2);
    CHECK(pm.beta == doctest::Approx(0.5 * 3.0).epsilon(1e-14));

    const auto pk = params(ProtocolSpec::k_neighb_rand(5, {{2, 1.0 / 3}, {3, 1.0 / 3}, {4, 1.0 / 3}}));
    CHECK(pk.m == 2);
    CHECK(pk.beta == doctest::Approx(10.0 / 3.0).epsilon(1e-13));
    CHECK(pk.gamma == doctest::Approx((4.0 + 6.0 + 4.0) / 3.0 * 5.0 / 16.0).epsilon(1e-13));

    // Voter-model-like custom function is outside the class.
    CHECK_THROWS(params(ProtocolSpec::polynomial({0.0, 1.0})));
}

TEST_CASE("eval handles mixtures and spec-level rejection") {
    CHECK(eval(ProtocolSpec::rand_kmaj({{3, 0.5}, {5, 0.5}}), 0.5) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(eval(ProtocolSpec::rand_kmaj({{3, 1.0}}), 0.6) == doctest::Approx(0.648).epsilon(1e-13));

    // Uniform thresholds on {2,3,4} with k=5 are symmetric, hence accepted.
    const auto spec = ProtocolSpec::k_neighb_rand(5, {{2, 0.25}, {3, 0.5}, {4, 0.25}});
    CHECK(eval(spec, 0.0) == 0.0);
    CHECK(eval(spec, 1.0) == 1.0);

    CHECK_THROWS(ProtocolSpec::k_neighb_rand(5, {{2, 0.5}, {3, 0.5}}));         // asymmetric
    CHECK_THROWS(ProtocolSpec::rand_kmaj({{3, 0.5}, {5, 0.6}}));                // unnormalized
    CHECK_THROWS(ProtocolSpec::rand_kmaj({{2, 0.5}, {5, 0.5}}));                // k < 3
    CHECK_THROWS(ProtocolSpec::k_neighb_rand(5, {{1, 0.5}, {5, 0.5}}));         // q out of range
}

TEST_CASE("iterate and its zero- and fixed-point cases") {
    const auto f = make_function(kKMaj3);
    CHECK(iterate(f, 0.5, 7) == 0.5);
    CHECK(iterate(f, 0.37, 0) == 0.37);
    // Hand composition: f(f(0.6)) = f(0.648) = 0.715516416.
    CHECK(iterate(f, 0.6, 2) == doctest::Approx(0.715516416).epsilon(1e-12));
    CHECK_THROWS(iterate(f, 0.5, -1));
}

TEST_CASE("half-gap iteration is cancellation-free and consistent") {
    const auto f = make_function(kKMaj3);
    CHECK(iterate_half_gap(f, 0.5, 1) == doctest::Approx(0.5).epsilon(1e-14));

    // Linearization at tiny delta: 1/2 - f(1/2 - d) = 1.5 d - 2 d^3.
    const double d = 1e-8;
    const long double exact = 1.5L * d - 2.0L * d * d * d;
    CHECK(iterate_half_gap(f, d, 1) == doctest::Approx(static_cast<double>(exact)).epsilon(1e-12));

    CHECK(iterate_half_gap(f, 0.1, 3) ==
          doctest::Approx(0.5 - iterate(f, 0.4, 3)).epsilon(1e-12));

    for (double delta : {1e-6, 1e-3, 0.05, 0.3}) {
        for (int t : {1, 2, 5}) {
            const double via_x = 0.5 - iterate(f, 0.5 - delta, t);
            const double via_gap = iterate_half_gap(f, delta, t);
            CHECK(std::abs(via_x - via_gap) <= 1e-9 * std::max(via_x, 1e-30));
        }
    }
    CHECK_THROWS(iterate_half_gap(f, 0.0, 1));
    CHECK_THROWS(iterate_half_gap(f, 0.6, 1));
}

TEST_CASE("log-space iteration tracks ln f^(t)") {
    const auto f = make_function(kKMaj3);
    const double lnx = std::log(1e-6);
    // ln f(1e-6) = ln 3 - 12 ln 10 + log1p(-(2/3)e-6).
    const double expected = std::log(3.0) - 12.0 * std::log(10.0) + std::log1p(-(2.0 / 3.0) * 1e-6);
    CHECK(iterate_log(f, lnx, 1) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(iterate_log(f, std::log(0.3), 0) == std::log(0.3));

    for (double x : {1e-4, 1e-5}) {
        for (int t : {1, 2}) {
            const double direct = std::log(iterate(f, x, t));
            CHECK(iterate_log(f, std::log(x), t) == doctest::Approx(direct).epsilon(1e-9));
        }
    }
    // Deep composition: no underflow, doubly-exponential decay in t.
    const double deep = iterate_log(f, std::log(1e-4), 18);
    CHECK(deep < -1e6);
    CHECK(std::isfinite(deep));
}

TEST_CASE("inverse by bisection") {
    const auto f = make_function(kKMaj3);
    CHECK(inverse(f, 0.5, 1e-12) == doctest::Approx(0.5).epsilon(1e-11));
    CHECK(inverse(f, 0.648, 1e-10) == doctest::Approx(0.6).epsilon(1e-9));
    const double at_zero = inverse(f, 0.0, 1e-9);
    CHECK(f(at_zero) <= 1e-9);
    CHECK(at_zero <= 1e-3);
    CHECK_THROWS(inverse(f, 0.5, 0.0));

    for (int i = 1; i < 40; ++i) {
        const double x = i / 40.0;
        CHECK(inverse(f, f(x), 1e-12) == doctest::Approx(x).epsilon(1e-9));
    }
}

TEST_CASE("validation: built-ins pass, violations are reported as data") {
    for (const auto& spec :
         {ProtocolSpec::kmaj(3), ProtocolSpec::kmaj(4), ProtocolSpec::kmaj(9),
          ProtocolSpec::rand_kmaj({{3, 0.5}, {5, 0.5}}),
          ProtocolSpec::k_neighb_rand(5, {{2, 0.25}, {3, 0.5}, {4, 0.25}})}) {
        const auto report = validate(spec);
        INFO(spec.label(), " -> ", report.to_json().dump());
        CHECK(report.all_pass());
    }

    const auto voter = validate(ProtocolSpec::polynomial({0.0, 1.0}));
    CHECK_FALSE(voter.all_pass());
    CHECK_FALSE(voter.find("m>=2")->pass);

    // 3-maj coefficients are a valid custom polynomial.
    CHECK(validate(ProtocolSpec::polynomial({0.0, 0.0, 3.0, -2.0})).all_pass());
    CHECK_NOTHROW(make_function(ProtocolSpec::polynomial({0.0, 0.0, 3.0, -2.0})));

    // Symmetric but non-monotone: f = x + 0.63 sin-ish bump via high-degree terms.
    // Use 10x^3 - 15x^4 + 6x^5 minus a strong middle bump that keeps symmetry:
    // g(x) = f5(x) + c (x(1-x))^2 (1-2x) has f(0.3) > f(0.4) for large c.
    std::vector<double> coeffs = {0.0, 0.0, 0.0, 10.0, -15.0, 6.0};
    {
        // (x(1-x))^2 (1-2x) = x^2 -4x^3 +5x^4 -2x^5 ... expand: (x^2-2x^3+x^4)(1-2x)
        const double c = 20.0;
        std::vector<double> bump = {0.0, 0.0, 1.0, -4.0, 5.0, -2.0};
        for (std::size_t i = 0; i < bump.size(); ++i) coeffs[i] += c * bump[i];
    }
    const auto bumpy = validate(ProtocolSpec::polynomial(coeffs));
    CHECK_FALSE(bumpy.find("monotone")->pass);
    CHECK_THROWS(make_function(ProtocolSpec::polynomial(coeffs)));

    // Symmetric thresholds can still leave the class: {3, 10} on k = 12 has
    // slope E[C(11,Q-1)] k 2^{1-k} = 0.322 < 1 at the midpoint.
    const auto flat = validate(ProtocolSpec::k_neighb_rand(12, {{3, 0.5}, {10, 0.5}}));
    CHECK_FALSE(flat.find("gamma>1")->pass);
}

TEST_CASE("random mixtures keep the symmetry and agreement invariants") {
    Rng rng(20240817ULL);
    for (int trial = 0; trial < 25; ++trial) {
        std::map<int, double> pmf;
        const int support = 2 + static_cast<int>(rng.uniform_below(3));
        double total = 0.0;
        for (int i = 0; i < support; ++i) {
            const int k = 3 + static_cast<int>(rng.uniform_below(13));
            const double w = rng.uniform_pos();
            pmf[k] += w;
            total += w;
        }
        for (auto& [k, w] : pmf) {
            (void)k;
            w /= total;
        }
        // Exact renormalization so construction accepts the pmf.
        double sum = 0.0;
        for (auto& [k, w] : pmf) {
            (void)k;
            sum += w;
        }
        pmf.begin()->second += 1.0 - sum;
        const auto spec = ProtocolSpec::rand_kmaj(pmf);
        const auto f = make_function(spec);

        for (int i = 0; i < 50; ++i) {
            const double x = rng.uniform();
            CHECK(std::abs(1.0 - f.eval_raw(1.0 - x) - f.eval_raw(x)) <= 1e-12);
            CHECK(std::abs(f(x) - f.eval_raw(x)) <= 1e-12);
        }
        const double delta = 0.4 * rng.uniform_pos();
        CHECK(std::abs((0.5 - iterate(f, 0.5 - delta, 3)) - iterate_half_gap(f, delta, 3)) <= 1e-9);
    }
}

TEST_CASE("protocol JSON and shorthand round-trips") {
    const auto specs = {
        ProtocolSpec::kmaj(3),
        ProtocolSpec::rand_kmaj({{3, 0.5}, {5, 0.5}}),
        ProtocolSpec::k_neighb_rand(5, {{2, 0.25}, {3, 0.5}, {4, 0.25}}),
        ProtocolSpec::polynomial({0.0, 0.0, 3.0, -2.0}),
    };
    for (const auto& spec : specs) {
        const auto j = spec.to_json();
        CHECK(ProtocolSpec::from_json(j).to_json() == j);
        CHECK(ProtocolSpec::parse(j.dump()).to_json() == j);
    }
    CHECK(ProtocolSpec::parse("kmaj:3").to_json() == ProtocolSpec::kmaj(3).to_json());
    CHECK(ProtocolSpec::parse("randkmaj:3=0.5,5=0.5").to_json() ==
          ProtocolSpec::rand_kmaj({{3, 0.5}, {5, 0.5}}).to_json());
    CHECK(ProtocolSpec::parse("kneighb:5;2=0.25,3=0.5,4=0.25").to_json() ==
          ProtocolSpec::k_neighb_rand(5, {{2, 0.25}, {3, 0.5}, {4, 0.25}}).to_json());
    CHECK_THROWS(ProtocolSpec::parse("bogus:1"));

    // Explicit smoothness order survives the JSON round-trip and lands in
    // the extracted parameters.
    const auto smooth = ProtocolSpec::polynomial({0.0, 0.0, 3.0, -2.0}, 5);
    const auto back = ProtocolSpec::from_json(smooth.to_json());
    CHECK(params(back).smoothness_order == 5);
    CHECK(params(ProtocolSpec::polynomial({0.0, 0.0, 3.0, -2.0})).smoothness_order == 2);
}
