#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <vector>

#include "consensus_lab/oracle.hpp"
#include "consensus_lab/sim.hpp"
#include "consensus_lab/stats.hpp"
#include "consensus_lab/theory.hpp"

namespace py = pybind11;
using namespace consensus_lab;

namespace {

sim::SimConfig build_config(std::int64_t n, const ProtocolSpec& protocol, std::optional<std::int64_t> x0,
                            std::optional<double> d, const std::string& adversary,
                            std::uint64_t seed, std::int64_t max_rounds, bool record_trajectory) {
    if (x0 && d) throw std::invalid_argument("give either x0 or d, not both");
    sim::SimConfig config;
    config.n = n;
    config.protocol = protocol;
    config.x0 = x0 ? *x0 : sim::SimConfig::x0_from_bias(n, d.value_or(0.0));
    config.adversary = sim::AdversaryPolicy::parse(adversary);
    config.max_rounds = max_rounds;
    config.master_seed = seed;
    config.record_trajectory = record_trajectory;
    config.check();
    return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Two-opinion consensus protocols on the complete graph: "
              "simulator, exact small-n oracle, and runtime limit laws.";

    py::class_<ProtocolSpec>(m, "Protocol")
        .def_static("kmaj", &ProtocolSpec::kmaj, py::arg("k"))
        .def_static("rand_kmaj", &ProtocolSpec::rand_kmaj, py::arg("pmf"))
        .def_static("k_neighb_rand", &ProtocolSpec::k_neighb_rand, py::arg("k"), py::arg("q_pmf"))
        .def_static("polynomial", &ProtocolSpec::polynomial, py::arg("coeffs"),
                    py::arg("smoothness_order") = 0)
        .def_static("parse", &ProtocolSpec::parse, py::arg("text"))
        .def("label", &ProtocolSpec::label)
        .def("to_json", [](const ProtocolSpec& spec) { return spec.to_json().dump(); })
        .def("__repr__",
             [](const ProtocolSpec& spec) { return "Protocol('" + spec.label() + "')"; });

    m.def("params", [](const ProtocolSpec& spec) {
        const auto p = params(spec);
        return py::make_tuple(p.m, p.beta, p.gamma);
    },
          py::arg("protocol"), "Returns (m, beta, gamma).");

    m.def("evaluate", [](const ProtocolSpec& spec, double x) { return eval(spec, x); },
          py::arg("protocol"), py::arg("x"));
    m.def("eval_kmaj", &eval_kmaj, py::arg("k"), py::arg("x"));
    m.def("iterate",
          [](const ProtocolSpec& spec, double x, int t) { return iterate(make_function(spec), x, t); },
          py::arg("protocol"), py::arg("x"), py::arg("t"));
    m.def("iterate_half_gap",
          [](const ProtocolSpec& spec, double delta, int t) {
              return iterate_half_gap(make_function(spec), delta, t);
          },
          py::arg("protocol"), py::arg("delta"), py::arg("t"));
    m.def("iterate_log",
          [](const ProtocolSpec& spec, double ln_x, int t) {
              return iterate_log(make_function(spec), ln_x, t);
          },
          py::arg("protocol"), py::arg("ln_x"), py::arg("t"));
    m.def("inverse",
          [](const ProtocolSpec& spec, double y, double tol) {
              return inverse(make_function(spec), y, tol);
          },
          py::arg("protocol"), py::arg("y"), py::arg("tol") = 1e-12);

    m.def("validate", [](const ProtocolSpec& spec) {
        py::list checks;
        for (const auto& c : validate(spec).checks) {
            py::dict item;
            item["name"] = c.name;
            item["pass"] = c.pass;
            item["worst_x"] = c.worst_x;
            item["worst_violation"] = c.worst_violation;
            checks.append(item);
        }
        return checks;
    },
          py::arg("protocol"));

    m.def("win_probability", &theory::win_probability, py::arg("d"), py::arg("gamma"));
    m.def("clt_moments", &theory::clt_moments, py::arg("t"), py::arg("d"), py::arg("gamma"),
          "Returns (mu_t, sigma_t_squared).");

    m.def("compute_g", [](const ProtocolSpec& spec, double x, double tol) {
        const auto g = theory::compute_g(spec, x, tol);
        py::dict out;
        out["value"] = g.value;
        out["a_used"] = g.a_used;
        out["b_used"] = g.b_used;
        out["observed_change"] = g.observed_change;
        return out;
    },
          py::arg("protocol"), py::arg("x"), py::arg("tol") = 1e-4);

    py::class_<theory::GFunctionApprox>(m, "GTable")
        .def_static("build", &theory::GFunctionApprox::build, py::arg("protocol"),
                    py::arg("tol") = 1e-4, py::arg("grid_size") = 1024)
        .def("__call__", &theory::GFunctionApprox::operator(), py::arg("x"))
        .def("h", &theory::GFunctionApprox::h, py::arg("x"))
        .def("h_inverse", &theory::GFunctionApprox::h_inverse, py::arg("value"))
        .def_property_readonly("g0", &theory::GFunctionApprox::g0)
        .def_property_readonly("min", &theory::GFunctionApprox::min_value)
        .def_property_readonly("max", &theory::GFunctionApprox::max_value)
        .def_property_readonly("mean", &theory::GFunctionApprox::mean_value)
        .def_property_readonly("tol", &theory::GFunctionApprox::tol)
        .def_property_readonly("a_used", &theory::GFunctionApprox::a_used)
        .def_property_readonly("b_used", &theory::GFunctionApprox::b_used)
        .def_property_readonly("h_strictly_increasing",
                               &theory::GFunctionApprox::h_strictly_increasing);

    py::class_<theory::PredictedRuntimeLaw>(m, "RuntimeLaw")
        .def(py::init<const ProtocolSpec&, std::int64_t, double, theory::GFunctionApprox>(),
             py::arg("protocol"), py::arg("n"), py::arg("d"), py::arg("g_table"))
        .def("survival", &theory::PredictedRuntimeLaw::survival, py::arg("s"))
        .def("median", &theory::PredictedRuntimeLaw::median)
        .def("sample_range", &theory::PredictedRuntimeLaw::sample_range, py::arg("eps") = 1e-9);

    m.def("subsequence_limit_pmf",
          [](const ProtocolSpec& spec, double x, double y, double d,
             const theory::GFunctionApprox& g) {
              const auto pmf = theory::subsequence_limit_pmf(spec, x, y, d, g);
              std::map<long, double> out;
              for (std::size_t i = 0; i < pmf.mass.size(); ++i)
                  out[pmf.j_min + static_cast<long>(i)] = pmf.mass[i];
              return out;
          },
          py::arg("protocol"), py::arg("x"), py::arg("y"), py::arg("d"), py::arg("g_table"));

    m.def("concentration_set",
          [](const ProtocolSpec& spec, std::int64_t n, double d, const theory::GFunctionApprox& g) {
              const auto set = theory::concentration_set(spec, n, d, g);
              return py::make_tuple(set.s_star, py::make_tuple(set.values[0], set.values[1]),
                                    set.pre_ceiling);
          },
          py::arg("protocol"), py::arg("n"), py::arg("d"), py::arg("g_table"));

    m.def("koenigs_m0", &theory::koenigs_m0, py::arg("protocol"), py::arg("x"),
          py::arg("truncation") = 80);
    m.def("koenigs_residual",
          [](const ProtocolSpec& spec, double x, int truncation) {
              return theory::KoenigsApprox(spec, truncation).residual(x);
          },
          py::arg("protocol"), py::arg("x"), py::arg("truncation") = 80);

    m.def("simulate",
          [](std::int64_t n, std::int64_t runs, const ProtocolSpec& protocol,
             std::optional<std::int64_t> x0, std::optional<double> d, const std::string& adversary,
             std::uint64_t seed, std::int64_t max_rounds, bool record_trajectory) {
              const auto config =
                  build_config(n, protocol, x0, d, adversary, seed, max_rounds, record_trajectory);
              std::vector<sim::RunOutcome> outcomes;
              {
                  py::gil_scoped_release release;
                  outcomes = sim::batch(config, runs, config.master_seed);
              }
              py::list runtimes, winners, trajectories;
              for (const auto& o : outcomes) {
                  runtimes.append(o.runtime);
                  winners.append(std::string(sim::winner_name(o.winner)));
                  if (record_trajectory) trajectories.append(o.trajectory);
              }
              py::dict out;
              out["runtime"] = runtimes;
              out["winner"] = winners;
              out["x0"] = config.x0;
              if (record_trajectory) out["trajectory"] = trajectories;
              return out;
          },
          py::arg("n"), py::arg("runs"), py::arg("protocol"), py::arg("x0") = std::nullopt,
          py::arg("d") = std::nullopt, py::arg("adversary") = "none",
          py::arg("seed") = std::uint64_t{0xC0FFEE}, py::arg("max_rounds") = 0,
          py::arg("record_trajectory") = false);

    m.def("x0_from_bias", &sim::SimConfig::x0_from_bias, py::arg("n"), py::arg("d"));

    m.def("oracle_survival",
          [](std::int64_t n, const ProtocolSpec& protocol, std::int64_t x0) {
              const auto chain = oracle::ExactChain::build(n, protocol);
              return oracle::runtime_distribution(chain, x0).survival;
          },
          py::arg("n"), py::arg("protocol"), py::arg("x0"));
    m.def("oracle_winner_probability",
          [](std::int64_t n, const ProtocolSpec& protocol, std::int64_t x0) {
              const auto chain = oracle::ExactChain::build(n, protocol);
              const auto w = oracle::winner_probability_exact(chain, x0);
              return py::make_tuple(w.p_x, w.p_y);
          },
          py::arg("n"), py::arg("protocol"), py::arg("x0"));
    m.def("oracle_dominance",
          [](std::int64_t n, const ProtocolSpec& protocol, double x, double x_prime) {
              const auto chain = oracle::ExactChain::build(n, protocol);
              return oracle::dominance_check(chain, x, x_prime).dominated;
          },
          py::arg("n"), py::arg("protocol"), py::arg("x"), py::arg("x_prime"));

    m.def("wilson_interval",
          [](std::int64_t successes, std::int64_t trials, double confidence) {
              const auto w = stats::wilson_interval(successes, trials, confidence);
              return py::make_tuple(w.lo, w.hi);
          },
          py::arg("successes"), py::arg("trials"), py::arg("confidence") = 0.95);

#ifdef VERSION_INFO
    m.attr("__version__") = VERSION_INFO;
#else
    m.attr("__version__") = "dev";
#endif
}
