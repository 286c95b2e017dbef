#include "carleman/cli.hpp"
#include "carleman/config.hpp"
#include "carleman/errors.hpp"
#include "carleman/resolvent.hpp"
#include "carleman/scaling.hpp"
#include "carleman/verify.hpp"
#include "carleman/weights.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace carleman;

namespace {

py::array_t<double> to_array(std::span<const double> v) { return py::array_t<double>(v.size(), v.data()); }

py::dict params_dict(const WeightParameters& p) {
    py::dict d;
    d["delta0"] = p.delta0;
    d["E"] = p.E;
    d["delta"] = p.delta;
    d["s"] = p.s;
    d["eta"] = p.eta;
    d["h0"] = p.h0;
    d["R"] = p.R();
    d["B"] = p.B();
    d["R0"] = p.R0();
    d["r_max"] = p.radii.r_max;
    d["log1p_R"] = p.radii.log1p_R;
    d["log1p_R0"] = p.radii.log1p_R0;
    return d;
}

py::dict report_dict(const MarginReport& r) {
    py::dict d;
    d["h"] = r.h;
    d["min_margin"] = r.min_margin;
    d["argmin_r"] = r.argmin_r;
    d["min_relative_margin"] = r.min_relative_margin;
    d["tolerance"] = r.tolerance;
    d["passed"] = r.passed;
    return d;
}

py::dict norm_dict(const NormResult& r) {
    py::dict d;
    d["value"] = r.value;
    d["sector_argmax"] = r.sector_argmax;
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    d["sectors_computed"] = r.sectors_computed;
    d["sectors_skipped"] = r.sectors_skipped;
    d["r_trunc"] = r.r_trunc;
    d["N"] = r.N;
    d["truncation_change"] = r.truncation_change;
    d["truncation_converged"] = r.truncation_converged;
    d["raw_value"] = r.raw_value;
    return d;
}

py::dict fit_dict(const FitResult& f) {
    py::dict d;
    d["model"] = std::string(to_string(f.model));
    d["slope"] = f.slope;
    d["intercept"] = f.intercept;
    d["residual"] = f.residual;
    d["rows_used"] = f.rows_used;
    return d;
}

py::list rows_list(const std::vector<SweepRow>& rows) {
    py::list out;
    for (const auto& r : rows) {
        py::dict d;
        d["h"] = r.h;
        d["eps"] = r.eps;
        d["variant"] = std::string(to_string(r.variant));
        d["norm"] = r.norm;
        d["raw_norm"] = r.raw_norm;
        d["truncation_change"] = r.truncation_change;
        d["converged"] = r.converged;
        d["sector_argmax"] = r.sector_argmax;
        d["r_trunc"] = r.r_trunc;
        d["N"] = r.N;
        out.append(d);
    }
    return out;
}

SweepOptions make_options(double s, const std::string& variant, double R0_cut, double r_trunc, bool auto_double,
                          double tolerance, bool even_sector, double eps_factor, int workers) {
    SweepOptions o;
    o.request.s = s;
    o.request.variant = norm_variant_from_string(variant);
    o.request.R0_cut = R0_cut;
    o.request.include_even_sector = even_sector;
    o.truncation.r_trunc = r_trunc;
    o.truncation.auto_double = auto_double;
    o.truncation.tolerance = tolerance;
    o.eps_factor = eps_factor;
    o.workers = workers;
    return o;
}

}  // namespace

PYBIND11_MODULE(_carleman, m) {
    m.doc() = "Carleman weights and weighted resolvent norms for radial semiclassical Schrodinger operators";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InfeasibleDelta>(m, "InfeasibleDelta", base.ptr());
    py::register_exception<NoFeasibleDelta>(m, "NoFeasibleDelta", base.ptr());
    py::register_exception<GridTooCoarse>(m, "GridTooCoarse", base.ptr());
    py::register_exception<UnsupportedDimension>(m, "UnsupportedDimension", base.ptr());
    py::register_exception<WavelengthUnresolved>(m, "WavelengthUnresolved", base.ptr());
    py::register_exception<SingularSystem>(m, "SingularSystem", base.ptr());
    py::register_exception<OverflowRisk>(m, "OverflowRisk", base.ptr());
    py::register_exception<BudgetExceeded>(m, "BudgetExceeded", base.ptr());
    py::register_exception<DegenerateFit>(m, "DegenerateFit", base.ptr());
    py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
    py::register_exception<ConfigInvalid>(m, "ConfigInvalid", base.ptr());

    m.def("eval_w", &eval_w, py::arg("r"), py::arg("delta"));
    m.def("eval_wprime", &eval_wprime, py::arg("r"), py::arg("delta"));
    m.def("eval_m", &eval_m, py::arg("r"), py::arg("delta"));
    m.def("eval_G", &eval_G, py::arg("r"), py::arg("delta"), py::arg("delta0"));
    m.def("angular_eigenvalue", &angular_eigenvalue, py::arg("n"), py::arg("ell"));
    m.def(
        "compute_radii_and_level",
        [](double delta0, double E, double delta) {
            const auto r = compute_radii_and_level(delta0, E, delta);
            py::dict d;
            d["R"] = r.R;
            d["B"] = r.B;
            d["R0"] = r.R0;
            d["r_max"] = r.r_max;
            d["log1p_R"] = r.log1p_R;
            d["log1p_R0"] = r.log1p_R0;
            return d;
        },
        py::arg("delta0"), py::arg("E"), py::arg("delta"));

    py::class_<PotentialModel>(m, "Potential")
        .def_static("zero", &PotentialModel::zero, py::arg("delta0"))
        .def_static("envelope", &PotentialModel::envelope, py::arg("delta0"))
        .def_static(
            "bump_well",
            [](double A, double r_w, double b, double r_b, double sigma, double delta0, bool cap, double r_audit) {
                const BumpWellParams p{A, r_w, b, r_b, sigma};
                return cap ? cap_barrier(p, delta0, r_audit) : PotentialModel::bump_well(p, delta0);
            },
            py::arg("well_depth"), py::arg("well_center"), py::arg("barrier_height"), py::arg("barrier_center"),
            py::arg("width"), py::arg("delta0"), py::arg("cap_barrier") = true, py::arg("audit_radius") = 50.0)
        .def_static("custom_table", &PotentialModel::custom_table, py::arg("radii"), py::arg("values"),
                    py::arg("delta0"))
        .def_property_readonly("kind", [](const PotentialModel& p) { return std::string(to_string(p.kind())); })
        .def_property_readonly("delta0", &PotentialModel::delta0)
        .def_property_readonly("barrier_height", [](const PotentialModel& p) { return p.bump().barrier_height; })
        .def("value", &PotentialModel::value, py::arg("r"))
        .def("derivative", &PotentialModel::derivative, py::arg("r"))
        .def(
            "certified",
            [](const PotentialModel& p, double delta0, double r_max, double step) {
                return certify_potential(p, delta0, audit_grid(r_max, step)).certified;
            },
            py::arg("delta0"), py::arg("r_max") = 50.0, py::arg("step") = 1e-3);

    py::class_<WeightConstruction>(m, "Weight")
        .def_property_readonly("params", [](const WeightConstruction& w) { return params_dict(w.weight.params()); })
        .def_property_readonly("passed", [](const WeightConstruction& w) { return w.passed; })
        .def_property_readonly("r", [](const WeightConstruction& w) { return to_array(w.weight.grid()); })
        .def_property_readonly("phi", [](const WeightConstruction& w) { return to_array(w.weight.phi()); })
        .def_property_readonly("dphi", [](const WeightConstruction& w) { return to_array(w.weight.dphi()); })
        .def_property_readonly("ddphi", [](const WeightConstruction& w) { return to_array(w.weight.ddphi()); })
        .def("psi", [](const WeightConstruction& w, double r) { return w.weight.psi()(r); }, py::arg("r"))
        .def("phi_at", [](const WeightConstruction& w, double r) { return w.weight.phi_at(r); }, py::arg("r"))
        .def(
            "margin",
            [](const WeightConstruction& w, const PotentialModel& potential, double h) {
                const auto grid = verification_grid(w.weight.params());
                return report_dict(verify_weight_inequality(w.weight, potential, h, grid));
            },
            py::arg("potential"), py::arg("h"))
        .def("csv", [](const WeightConstruction& w) { return weight_csv(w.weight); });

    m.def("build_carleman_weight", [](double delta0, double E) { return build_carleman_weight(delta0, E); },
          py::arg("delta0"), py::arg("E"), py::call_guard<py::gil_scoped_release>());
    m.def("select_delta", [](double delta0, double E) { return select_delta(delta0, E); }, py::arg("delta0"),
          py::arg("E"), py::call_guard<py::gil_scoped_release>());

    m.def(
        "carleman_suite",
        [](const WeightConstruction& w, double E, const PotentialModel& potential, int seeds,
           std::vector<double> hs) {
            CarlemanSuiteOptions o;
            o.seeds = seeds;
            o.hs = std::move(hs);
            CarlemanSuiteResult r;
            {
                py::gil_scoped_release release;
                r = run_carleman_suite(w.weight, E, {{"potential", potential}}, o);
            }
            py::dict d;
            d["hs"] = r.hs;
            d["C_per_h"] = r.c_per_h;
            d["C_emp"] = r.c_emp;
            d["growth"] = r.growth;
            d["spread"] = r.spread;
            d["cases"] = r.cases.size();
            return d;
        },
        py::arg("weight"), py::arg("E"), py::arg("potential"), py::arg("seeds") = 100,
        py::arg("hs") = std::vector<double>{});

    m.def(
        "resolvent_norm",
        [](int n, double E, const PotentialModel& potential, double h, double eps, double s,
           const std::string& variant, double R0_cut, double r_trunc, bool auto_double, double tolerance,
           bool even_sector, double refine) {
            const auto o = make_options(s, variant, R0_cut, r_trunc, auto_double, tolerance, even_sector, 1e-6, 1);
            NormRequest req = o.request;
            req.h = h;
            req.eps = eps;
            TruncationOptions t = o.truncation;
            t.refine = refine;
            NormResult r;
            {
                py::gil_scoped_release release;
                r = adaptive_norm(req, {n, E, potential}, t);
            }
            return norm_dict(r);
        },
        py::arg("n"), py::arg("E"), py::arg("potential"), py::arg("h"), py::arg("eps"), py::arg("s") = 0.6,
        py::arg("variant") = "global_weighted", py::arg("R0_cut") = 6.0, py::arg("r_trunc") = 0.0,
        py::arg("auto_double") = true, py::arg("tolerance") = 0.05, py::arg("even_sector") = true,
        py::arg("refine") = 1.0);

    m.def(
        "h_sweep",
        [](int n, double E, const PotentialModel& potential, std::vector<double> hs, double s,
           const std::string& variant, double R0_cut, double r_trunc, bool auto_double, double eps_factor,
           std::optional<std::string> fit, int workers) {
            const auto o = make_options(s, variant, R0_cut, r_trunc, auto_double, 0.05, true, eps_factor, workers);
            std::optional<FitModel> model;
            if (fit) model = fit_model_from_string(*fit);
            SweepResult r;
            {
                py::gil_scoped_release release;
                r = h_sweep({n, E, potential}, hs, o, model);
            }
            py::dict d;
            d["rows"] = rows_list(r.rows);
            d["fit"] = r.fit ? py::object(fit_dict(*r.fit)) : py::object(py::none());
            return d;
        },
        py::arg("n"), py::arg("E"), py::arg("potential"), py::arg("hs"), py::arg("s") = 0.6,
        py::arg("variant") = "global_weighted", py::arg("R0_cut") = 6.0, py::arg("r_trunc") = 0.0,
        py::arg("auto_double") = true, py::arg("eps_factor") = 1e-6, py::arg("fit") = py::none(),
        py::arg("workers") = 1);

    m.def(
        "epsilon_sweep",
        [](int n, double E, const PotentialModel& potential, double h, std::vector<double> eps, double s,
           const std::string& variant, double R0_cut, double r_trunc) {
            const auto o = make_options(s, variant, R0_cut, r_trunc, false, 0.05, true, 1e-6, 1);
            EpsSweepResult r;
            {
                py::gil_scoped_release release;
                r = epsilon_sweep({n, E, potential}, h, eps, o);
            }
            py::dict d;
            d["rows"] = rows_list(r.rows);
            d["stabilized_value"] = r.stabilized_value;
            d["stabilized"] = r.stabilized;
            d["stable_below"] = r.stable_below ? py::object(py::float_(*r.stable_below)) : py::object(py::none());
            return d;
        },
        py::arg("n"), py::arg("E"), py::arg("potential"), py::arg("h"), py::arg("eps"), py::arg("s") = 0.6,
        py::arg("variant") = "global_weighted", py::arg("R0_cut") = 6.0, py::arg("r_trunc") = 40.0);

    m.def(
        "fit_power_law",
        [](std::vector<double> hs, std::vector<double> norms) { return fit_dict(fit_power_law(hs, norms)); },
        py::arg("hs"), py::arg("norms"));
    m.def(
        "fit_exp_inv_h",
        [](std::vector<double> hs, std::vector<double> norms) { return fit_dict(fit_exp_inv_h(hs, norms)); },
        py::arg("hs"), py::arg("norms"));
    m.def("geometric_hs", &geometric_hs, py::arg("h_max"), py::arg("h_min"), py::arg("count"));

    m.def(
        "run_config",
        [](const std::string& path, std::vector<std::string> overrides) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_main(path, overrides, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("path"), py::arg("overrides") = std::vector<std::string>{},
        "Runs a JSON config like the command-line tool; returns (exit_code, stdout, stderr).");
}
