#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "belief_divide/cli.hpp"
#include "belief_divide/io.hpp"
#include "belief_divide/likelihood.hpp"
#include "belief_divide/parallel.hpp"
#include "belief_divide/policy.hpp"

namespace py = pybind11;
using namespace belief_divide;

namespace {

// Parameters and configs cross the boundary as JSON text so the Python side
// sees the same keys as the files written by the CLI.
py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_python(const py::object& obj) {
    return Json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

ModelParams params_arg(const py::object& obj) {
    return obj.is_none() ? ModelParams::table4() : params_from_json(from_python(obj));
}

py::dict trap_to_python(const TrapEstimate& e) {
    py::dict d;
    d["label"] = e.label;
    d["point"] = e.point;
    d["ci_low"] = e.ci_low;
    d["ci_high"] = e.ci_high;
    d["n_trajectories"] = e.n_trajectories;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    py::register_exception<Error>(m, "BeliefDivideError", PyExc_ValueError);

    m.attr("__version__") = BELIEF_DIVIDE_VERSION;

    m.def("table4_params", [] { return to_python(params_to_json(ModelParams::table4())); });

    m.def("set_thread_count", &set_thread_count, py::arg("n"));

    m.def(
        "representative_utility",
        [](const py::object& profile, const py::object& params) {
            return representative_utility(profile_from_json(from_python(profile)), params_arg(params));
        },
        py::arg("profile"), py::arg("params") = py::none());

    m.def(
        "signal_variance",
        [](const py::object& profile, const py::object& params) {
            return signal_variance(profile_from_json(from_python(profile)), params_arg(params));
        },
        py::arg("profile"), py::arg("params") = py::none());

    m.def(
        "update_belief",
        [](double mean, double variance, double usage_sum, std::int64_t usage_count, double news_sum,
           std::int64_t news_count, double sigma_s_sq, double sigma_n_sq) {
            const Belief b = update_belief({mean, variance}, usage_sum, usage_count, news_sum, news_count, sigma_s_sq,
                                           sigma_n_sq);
            return py::make_tuple(b.mean, b.variance);
        },
        py::arg("mean"), py::arg("variance"), py::arg("usage_sum"), py::arg("usage_count"), py::arg("news_sum"),
        py::arg("news_count"), py::arg("sigma_s_sq"), py::arg("sigma_n_sq"));

    m.def("choice_probability", &choice_probability, py::arg("belief_mean"), py::arg("c"));

    m.def(
        "simulated_loglik",
        [](const std::string& profiles_csv, const std::string& panel_csv, const py::object& params,
           std::size_t draws, std::uint64_t seed, const std::string& mixing) {
            const Dataset data = load_panel(profiles_csv, panel_csv);
            const CrnStore crn = CrnStore::build(data, draws, seed);
            py::gil_scoped_release release;
            return total_simulated_loglik(data, params_arg(params), crn, draws, mixing_from_string(mixing));
        },
        py::arg("profiles_csv"), py::arg("panel_csv"), py::arg("params") = py::none(), py::arg("draws") = 100,
        py::arg("seed") = 0, py::arg("mixing") = "per_user");

    m.def(
        "trap_probability",
        [](const py::object& profile, const py::object& params, const py::object& config,
           std::optional<double> v_i) {
            const UserProfile p = profile_from_json(from_python(profile));
            const ModelParams mp = params_arg(params);
            const SimConfig c = config.is_none() ? SimConfig{} : sim_config_from_json(from_python(config));
            TrapEstimate e;
            {
                py::gil_scoped_release release;
                e = trap_probability(p, mp, c, {v_i, std::nullopt}, "scenario");
            }
            return trap_to_python(e);
        },
        py::arg("profile"), py::arg("params") = py::none(), py::arg("config") = py::none(),
        py::arg("v_i") = py::none());

    m.def("fast_learner", [] { return to_python(profile_to_json(fast_learner())); });
    m.def("slow_learner", [] { return to_python(profile_to_json(slow_learner())); });

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = dispatch(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
