#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace consensus_lab {

// The built-in protocol families. Distributions are finite pmfs held as
// ordered maps so serialization and parameter extraction are deterministic.
struct KMaj {
    int k = 3;
};

struct RandKMaj {
    std::map<int, double> pmf;  // neighborhood size -> probability
};

struct KNeighbRand {
    int k = 4;
    std::map<int, double> q_pmf;  // threshold -> probability, symmetric around (k+1)/2
};

struct CustomPolynomial {
    std::vector<double> coeffs;  // f(x) = sum coeffs[i] * x^i
    int smoothness_order = 0;    // 0: default to the vanishing order m
};

/// A validated protocol description. Construction checks the structural
/// invariants (k ranges, pmf normalization, threshold symmetry) and throws
/// std::invalid_argument on violation. Custom polynomials are structurally
/// accepted here; their majority-type axioms are checked by validate() and
/// enforced by make_function().
class ProtocolSpec {
public:
    using Kind = std::variant<KMaj, RandKMaj, KNeighbRand, CustomPolynomial>;

    static ProtocolSpec kmaj(int k);
    static ProtocolSpec rand_kmaj(std::map<int, double> pmf);
    static ProtocolSpec k_neighb_rand(int k, std::map<int, double> q_pmf);
    static ProtocolSpec polynomial(std::vector<double> coeffs, int smoothness_order = 0);

    const Kind& kind() const { return kind_; }

    nlohmann::json to_json() const;
    static ProtocolSpec from_json(const nlohmann::json& j);

    /// Accepts either the JSON form or the CLI shorthand
    /// ("kmaj:3", "randkmaj:3=0.5,5=0.5", "kneighb:5;2=0.25,3=0.5,4=0.25",
    ///  "poly:0,0,3,-2").
    static ProtocolSpec parse(const std::string& text);

    /// Short human-readable tag, e.g. "kmaj:3".
    std::string label() const;

private:
    explicit ProtocolSpec(Kind kind) : kind_(std::move(kind)) {}
    Kind kind_;
};

}  // namespace consensus_lab
