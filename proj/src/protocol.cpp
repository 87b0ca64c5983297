#include "consensus_lab/protocol.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace consensus_lab {

namespace {

constexpr int kMaxNeighborhood = 999;  // keeps binomial coefficients inside double range

void check_k_range(int k, int lo, const char* what) {
    if (k < lo) throw std::invalid_argument(std::string(what) + ": k must be >= " + std::to_string(lo));
    if (k > kMaxNeighborhood)
        throw std::invalid_argument(std::string(what) + ": k must be <= " + std::to_string(kMaxNeighborhood));
}

void check_pmf_sum(const std::map<int, double>& pmf, const char* what) {
    if (pmf.empty()) throw std::invalid_argument(std::string(what) + ": pmf must be nonempty");
    double sum = 0.0;
    for (const auto& [value, prob] : pmf) {
        (void)value;
        if (!(prob > 0.0)) throw std::invalid_argument(std::string(what) + ": pmf entries must be positive");
        sum += prob;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument(std::string(what) + ": pmf must sum to 1 (got " + std::to_string(sum) + ")");
}

std::map<int, double> parse_int_weight_list(const std::string& text, char pair_sep) {
    std::map<int, double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, pair_sep)) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("expected <int>=<weight> in '" + item + "'");
        out[std::stoi(item.substr(0, eq))] = std::stod(item.substr(eq + 1));
    }
    return out;
}

std::string format_weight(double w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", w);
    return buf;
}

}  // namespace

ProtocolSpec ProtocolSpec::kmaj(int k) {
    check_k_range(k, 3, "kmaj");
    return ProtocolSpec(KMaj{k});
}

ProtocolSpec ProtocolSpec::rand_kmaj(std::map<int, double> pmf) {
    check_pmf_sum(pmf, "rand_kmaj");
    for (const auto& [k, prob] : pmf) {
        (void)prob;
        check_k_range(k, 3, "rand_kmaj");
    }
    return ProtocolSpec(RandKMaj{std::move(pmf)});
}

ProtocolSpec ProtocolSpec::k_neighb_rand(int k, std::map<int, double> q_pmf) {
    check_k_range(k, 4, "k_neighb_rand");
    check_pmf_sum(q_pmf, "k_neighb_rand");
    for (const auto& [q, prob] : q_pmf) {
        (void)prob;
        if (q < 2 || q > k - 1)
            throw std::invalid_argument("k_neighb_rand: thresholds must lie in {2,...,k-1}");
    }
    // Symmetry pmf(q) = pmf(k+1-q) is what makes f symmetric around 1/2.
    for (const auto& [q, prob] : q_pmf) {
        const auto mirror = q_pmf.find(k + 1 - q);
        if (mirror == q_pmf.end() || std::abs(mirror->second - prob) > 1e-12)
            throw std::invalid_argument("k_neighb_rand: q_pmf must satisfy pmf(q) = pmf(k+1-q)");
    }
    return ProtocolSpec(KNeighbRand{k, std::move(q_pmf)});
}

ProtocolSpec ProtocolSpec::polynomial(std::vector<double> coeffs, int smoothness_order) {
    if (coeffs.empty()) throw std::invalid_argument("polynomial: coefficient list must be nonempty");
    return ProtocolSpec(CustomPolynomial{std::move(coeffs), smoothness_order});
}

nlohmann::json ProtocolSpec::to_json() const {
    nlohmann::json j;
    if (const auto* km = std::get_if<KMaj>(&kind_)) {
        j["kind"] = "kmaj";
        j["k"] = km->k;
    } else if (const auto* rm = std::get_if<RandKMaj>(&kind_)) {
        j["kind"] = "rand_kmaj";
        nlohmann::json pmf = nlohmann::json::object();
        for (const auto& [k, p] : rm->pmf) pmf[std::to_string(k)] = p;
        j["pmf"] = pmf;
    } else if (const auto* kn = std::get_if<KNeighbRand>(&kind_)) {
        j["kind"] = "k_neighb_rand";
        j["k"] = kn->k;
        nlohmann::json pmf = nlohmann::json::object();
        for (const auto& [q, p] : kn->q_pmf) pmf[std::to_string(q)] = p;
        j["q_pmf"] = pmf;
    } else {
        const auto& poly = std::get<CustomPolynomial>(kind_);
        j["kind"] = "poly";
        j["coeffs"] = poly.coeffs;
        if (poly.smoothness_order > 0) j["smoothness_order"] = poly.smoothness_order;
    }
    return j;
}

ProtocolSpec ProtocolSpec::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "kmaj") return ProtocolSpec::kmaj(j.at("k").get<int>());
    if (kind == "rand_kmaj") {
        std::map<int, double> pmf;
        for (const auto& [key, value] : j.at("pmf").items()) pmf[std::stoi(key)] = value.get<double>();
        return ProtocolSpec::rand_kmaj(std::move(pmf));
    }
    if (kind == "k_neighb_rand") {
        std::map<int, double> pmf;
        for (const auto& [key, value] : j.at("q_pmf").items()) pmf[std::stoi(key)] = value.get<double>();
        return ProtocolSpec::k_neighb_rand(j.at("k").get<int>(), std::move(pmf));
    }
    if (kind == "poly") {
        return ProtocolSpec::polynomial(j.at("coeffs").get<std::vector<double>>(),
                                        j.value("smoothness_order", 0));
    }
    throw std::invalid_argument("unknown protocol kind '" + kind + "'");
}

ProtocolSpec ProtocolSpec::parse(const std::string& text) {
    const auto first = text.find_first_not_of(" \t");
    if (first != std::string::npos && text[first] == '{')
        return from_json(nlohmann::json::parse(text));

    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("protocol shorthand must look like 'kmaj:3' (got '" + text + "')");
    const std::string head = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);
    if (head == "kmaj") return kmaj(std::stoi(rest));
    if (head == "randkmaj") return rand_kmaj(parse_int_weight_list(rest, ','));
    if (head == "kneighb") {
        const auto semi = rest.find(';');
        if (semi == std::string::npos)
            throw std::invalid_argument("kneighb shorthand is 'kneighb:<k>;<q>=<w>,...'");
        return k_neighb_rand(std::stoi(rest.substr(0, semi)),
                             parse_int_weight_list(rest.substr(semi + 1), ','));
    }
    if (head == "poly") {
        std::vector<double> coeffs;
        std::stringstream ss(rest);
        std::string item;
        while (std::getline(ss, item, ',')) coeffs.push_back(std::stod(item));
        return polynomial(std::move(coeffs));
    }
    throw std::invalid_argument("unknown protocol shorthand '" + head + "'");
}

std::string ProtocolSpec::label() const {
    if (const auto* km = std::get_if<KMaj>(&kind_)) return "kmaj:" + std::to_string(km->k);
    if (const auto* rm = std::get_if<RandKMaj>(&kind_)) {
        std::string s = "randkmaj:";
        bool sep = false;
        for (const auto& [k, p] : rm->pmf) {
            if (sep) s += ',';
            s += std::to_string(k) + "=" + format_weight(p);
            sep = true;
        }
        return s;
    }
    if (const auto* kn = std::get_if<KNeighbRand>(&kind_)) {
        std::string s = "kneighb:" + std::to_string(kn->k) + ";";
        bool sep = false;
        for (const auto& [q, p] : kn->q_pmf) {
            if (sep) s += ',';
            s += std::to_string(q) + "=" + format_weight(p);
            sep = true;
        }
        return s;
    }
    const auto& poly = std::get<CustomPolynomial>(kind_);
    std::string s = "poly:";
    for (std::size_t i = 0; i < poly.coeffs.size(); ++i) {
        if (i) s += ',';
        s += format_weight(poly.coeffs[i]);
    }
    return s;
}

}  // namespace consensus_lab
