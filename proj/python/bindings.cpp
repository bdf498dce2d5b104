#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "halftrace/density.hpp"
#include "halftrace/experiments.hpp"
#include "halftrace/extension.hpp"
#include "halftrace/fields.hpp"
#include "halftrace/simplicial.hpp"

namespace py = pybind11;
using namespace halftrace;

namespace {

experiments::ExperimentConfig config_from_dict(const py::dict& d) {
    nlohmann::json j;
    for (auto item : d) {
        const std::string key = py::cast<std::string>(item.first);
        if (py::isinstance<py::bool_>(item.second))
            j[key] = py::cast<bool>(item.second);
        else if (py::isinstance<py::int_>(item.second))
            j[key] = py::cast<long long>(item.second);
        else if (py::isinstance<py::float_>(item.second))
            j[key] = py::cast<double>(item.second);
        else if (py::isinstance<py::str>(item.second))
            j[key] = py::cast<std::string>(item.second);
        else
            j[key] = nlohmann::json::parse(
                py::cast<std::string>(py::module_::import("json").attr("dumps")(item.second)));
    }
    return experiments::ExperimentConfig::from_json(j);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "skeleton retraction, extension energies and trace experiments on the half-space";

    m.def("project_to_sphere", [](const std::vector<double>& x) {
        return fields::project_to_target(x, fields::Target{static_cast<int>(x.size()), 0.5});
    });

    m.def("winding_number", &fields::winding_number, py::arg("loop_samples"));

    m.def("retract_once", [](const std::vector<double>& x, double kappa, int ell) {
        return extension::retract_once(x, kappa, ell, kappa * 1e-9);
    });

    m.def("retract_to_skeleton",
          [](const std::vector<double>& x, double kappa, int ell_target, std::vector<double> shift) {
              shift.resize(x.size(), 0.0);
              return extension::retract_to_skeleton(x, kappa, ell_target, shift, kappa * 1e-9);
          },
          py::arg("x"), py::arg("kappa"), py::arg("ell_target"),
          py::arg("shift") = std::vector<double>{});

    m.def("chain_constant", &extension::chain_constant, py::arg("m"), py::arg("p"));

    m.def("gamma_of_complex", [](const std::string& complex_json, double lambda) {
        const auto [complex, sub] = simplicial::load_complex_json(nlohmann::json::parse(complex_json));
        return simplicial::gamma(complex, sub, {lambda, {}, 16});
    });

    m.def("grid_energy",
          [](const std::vector<std::vector<double>>& values, const std::vector<int>& shape,
             double step, double p) {
              auto dom = std::make_shared<fields::GridDomain>();
              dom->ambient_dim = static_cast<int>(shape.size());
              for (int a = 0; a < dom->ambient_dim; ++a) {
                  dom->axes.push_back(a);
                  dom->origin.push_back(0.0);
              }
              dom->fixed.assign(static_cast<std::size_t>(dom->ambient_dim), 0.0);
              dom->shape = shape;
              dom->step = step;
              fields::DiscreteMap u;
              u.grid = dom;
              u.target.ambient_dim = static_cast<int>(values.front().size());
              u.value_dim = u.target.ambient_dim;
              u.values.reserve(values.size() * values.front().size());
              for (const auto& v : values)
                  u.values.insert(u.values.end(), v.begin(), v.end());
              u.project_all();
              return fields::energy_p(u, p).value;
          },
          py::arg("values"), py::arg("shape"), py::arg("step"), py::arg("p"));

    m.def("verify_suite", [](const std::string& name, std::uint64_t seed) {
        const auto report = experiments::verify_suite(name, seed);
        py::list instances;
        for (const auto& inst : report.instances) {
            py::dict d;
            d["lhs"] = inst.lhs;
            d["rhs"] = inst.rhs;
            d["margin"] = inst.margin;
            d["note"] = inst.note;
            instances.append(d);
        }
        py::dict out;
        out["name"] = report.name;
        out["pass"] = report.pass;
        out["instances"] = instances;
        return out;
    });

    m.def("condition_iii_scan", [](const py::dict& config) {
        const auto cfg = config_from_dict(config);
        const auto scan = experiments::condition_iii_scan(cfg);
        return py::module_::import("json").attr("loads")(experiments::scan_to_json(scan).dump());
    });
}
