#include "carleman/cli.hpp"

#include "carleman/csv.hpp"
#include "carleman/errors.hpp"
#include "carleman/verify.hpp"
#include "carleman/weights.hpp"

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace carleman {

using nlohmann::ordered_json;

int workers_from_environment() {
    const char* env = std::getenv("CARLEMAN_WORKERS");
    if (!env || !*env) return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 1024) throw InvalidInput("CARLEMAN_WORKERS must be an integer in [1, 1024]");
    return static_cast<int>(v);
}

namespace {

class Artifacts {
public:
    Artifacts(const OutputSpec& spec, RunOutcome& outcome) : spec_(spec), outcome_(outcome) {
        std::filesystem::create_directories(spec.directory);
    }
    void write(const std::string& format, const std::string& name, const std::string& contents) {
        if (!spec_.wants(format)) return;
        const auto path = spec_.directory / name;
        write_file_atomic(path, contents);
        outcome_.artifacts.push_back(path);
    }
    void json(const std::string& name, const ordered_json& j) { write("json", name, j.dump(2) + "\n"); }

private:
    const OutputSpec& spec_;
    RunOutcome& outcome_;
};

// Two-column plot file with a commented header.
std::string dat(const std::string& x_name, const std::string& y_name, const std::vector<double>& x,
                const std::vector<double>& y) {
    std::string out = "# " + x_name + " " + y_name + "\n";
    for (std::size_t i = 0; i < x.size(); ++i) out += format_double(x[i]) + " " + format_double(y[i]) + "\n";
    return out;
}

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

double json_number(double v) { return std::isfinite(v) ? v : (v > 0 ? 1e308 : -1e308); }

NormRequest norm_request(const RunConfig& c, double h, double eps) {
    NormRequest r;
    r.s = c.s;
    r.variant = c.sweep.variant;
    r.R0_cut = c.numerics.R0_cut;
    r.h = h;
    r.eps = eps;
    r.L_max = c.numerics.L_max.value_or(-1);
    r.power = {c.numerics.power_tol, c.numerics.max_iter, c.numerics.seed};
    r.outer = c.numerics.outer;
    r.points_per_wavelength = c.numerics.points_per_wavelength;
    r.workers = 1;
    r.include_even_sector = c.numerics.even_sector;
    return r;
}

TruncationOptions truncation(const RunConfig& c) {
    TruncationOptions t;
    t.r_trunc = c.numerics.r_trunc;
    t.auto_double = c.numerics.auto_truncation;
    t.tolerance = c.numerics.truncation_tolerance;
    t.max_doublings = c.numerics.max_doublings;
    t.max_points = c.numerics.max_points;
    t.refine = c.numerics.refine;
    t.tail_correction = c.numerics.tail_correction;
    return t;
}

SweepOptions sweep_options(const RunConfig& c, int workers) {
    SweepOptions o;
    o.request = norm_request(c, c.sweep.h, c.sweep.eps_factor * c.sweep.h);
    o.truncation = truncation(c);
    o.eps_factor = c.sweep.eps_factor;
    o.workers = workers;
    return o;
}

ordered_json margin_json(const MarginReport& r) {
    return {{"h", r.h},
            {"min_margin", r.min_margin},
            {"argmin_r", json_number(r.argmin_r)},
            {"min_relative_margin", r.min_relative_margin},
            {"argmin_relative_r", json_number(r.argmin_relative_r)},
            {"tolerance", r.tolerance},
            {"passed", r.passed}};
}

RunOutcome run_weight(const RunConfig& c) {
    RunOutcome outcome;
    const WeightConstruction wc = build_carleman_weight(c.delta0, c.E);
    const CarlemanWeight& w = wc.weight;
    const auto& p = w.params();

    std::vector<NamedPotential> pots{{"zero", PotentialModel::zero(c.delta0)},
                                     {"envelope", PotentialModel::envelope(c.delta0)}};
    if (c.potential.kind != PotentialKind::zero && c.potential.kind != PotentialKind::envelope)
        pots.push_back({std::string(to_string(c.potential.kind)), make_potential(c.potential, c.delta0)});

    const auto grid = verification_grid(p);
    bool passed = wc.passed;
    double worst = std::numeric_limits<double>::infinity();
    ordered_json reports = ordered_json::array();
    for (const auto& pot : pots) {
        const auto comps = margin_components(w, pot.potential, grid);
        std::vector<double> hs{0.0};
        for (int k = 0; k <= 6; ++k) hs.push_back(p.h0 * std::ldexp(1.0, -k));
        for (double h : hs) {
            const auto rep = evaluate_margin(comps, h, c.E, -1.0);
            passed = passed && rep.passed;
            worst = std::min(worst, rep.min_margin);
            auto j = margin_json(rep);
            j["potential"] = pot.name;
            reports.push_back(j);
        }
    }
    ordered_json summary{{"delta0", c.delta0},
                         {"E", c.E},
                         {"delta", p.delta},
                         {"s", p.s},
                         {"eta", p.eta},
                         {"h0", p.h0},
                         {"B", p.B()},
                         {"R", p.R()},
                         {"R0", json_number(p.R0())},
                         {"log1p_R0", p.radii.log1p_R0},
                         {"r_max", p.radii.r_max},
                         {"eta_halvings", wc.eta_halvings},
                         {"h0_halvings", wc.h0_halvings},
                         {"far_level_ok", check_far_level(p)},
                         {"passed", passed},
                         {"reports", reports}};
    passed = passed && summary["far_level_ok"].get<bool>();
    summary["passed"] = passed;

    Artifacts out(c.output, outcome);
    out.write("csv", "weight.csv", weight_csv(w));
    out.json("margin_report.json", summary);
    const std::vector<double> r(w.grid().begin(), w.grid().end());
    out.write("dat", "weight_phi.dat", dat("r", "phi", r, {w.phi().begin(), w.phi().end()}));
    out.write("dat", "weight_dphi.dat", dat("r", "dphi", r, {w.dphi().begin(), w.dphi().end()}));

    outcome.exit_code = passed ? kExitSuccess : kExitVerificationFailed;
    outcome.summary = std::string(passed ? "PASS" : "FAIL") + " weight delta=" + num(p.delta) + " eta=" +
                      num(p.eta) + " h0=" + num(p.h0) + " R=" + num(p.R()) +
                      " log1p(R0)=" + num(p.radii.log1p_R0) + " min_margin=" + num(worst);
    return outcome;
}

RunOutcome run_carleman(const RunConfig& c, int workers) {
    RunOutcome outcome;
    const WeightConstruction wc = build_carleman_weight(c.delta0, c.E);
    CarlemanSuiteOptions o;
    o.seeds = c.carleman.seeds;
    o.hs = c.carleman.hs;
    o.eps_factor = c.carleman.eps_factor;
    o.n = c.n;
    o.ell = c.carleman.ell;
    o.modes = c.carleman.modes;
    o.xi_max = c.carleman.xi_max;
    o.support_min = c.carleman.support_min;
    o.support_max = c.carleman.support_max;
    o.points_per_wavelength = c.numerics.points_per_wavelength;
    o.workers = workers;
    const std::vector<NamedPotential> pots{
        {std::string(to_string(c.potential.kind)), make_potential(c.potential, c.delta0)}};
    const auto res = run_carleman_suite(wc.weight, c.E, pots, o);

    bool finite = true;
    for (const auto& cs : res.cases) finite = finite && std::isfinite(cs.sides.ratio());
    const bool passed = finite && res.growth <= 2.0;

    Artifacts out(c.output, outcome);
    out.write("csv", "carleman.csv", carleman_csv(res.cases));
    out.json("carleman_summary.json", ordered_json{{"h0", wc.weight.params().h0},
                                                  {"hs", res.hs},
                                                  {"C_per_h", res.c_per_h},
                                                  {"C_emp", res.c_emp},
                                                  {"growth", res.growth},
                                                  {"spread", res.spread},
                                                  {"cases", res.cases.size()},
                                                  {"passed", passed}});
    out.write("dat", "carleman_C.dat", dat("h", "C_emp", res.hs, res.c_per_h));
    outcome.exit_code = passed ? kExitSuccess : kExitVerificationFailed;
    outcome.summary = std::string(passed ? "PASS" : "FAIL") + " carleman cases=" + std::to_string(res.cases.size()) +
                      " C_emp=" + num(res.c_emp) + " growth=" + num(res.growth) + " spread=" + num(res.spread);
    return outcome;
}

RunOutcome run_resolvent(const RunConfig& c) {
    RunOutcome outcome;
    const double h = c.sweep.h;
    const double eps = c.sweep.eps_value.value_or(c.sweep.eps_factor * h);
    const Problem problem{c.n, c.E, make_potential(c.potential, c.delta0)};
    NormRequest req = norm_request(c, h, eps);
    req.workers = workers_from_environment();
    const NormResult res = adaptive_norm(req, problem, truncation(c));
    const bool within = res.value <= (1.0 / eps) * (1.0 + 1e-6);
    const bool passed = res.converged && res.truncation_converged && within;

    Artifacts out(c.output, outcome);
    ordered_json j{{"h", h},
                   {"eps", eps},
                   {"variant", to_string(req.variant)},
                   {"norm", res.value},
                   {"raw_norm", res.raw_value},
                   {"sector_argmax", res.sector_argmax},
                   {"iterations", res.iterations},
                   {"converged", res.converged},
                   {"sectors_computed", res.sectors_computed},
                   {"sectors_skipped", res.sectors_skipped},
                   {"r_trunc", res.r_trunc},
                   {"truncation_change", std::isnan(res.truncation_change) ? ordered_json(nullptr)
                                                                           : ordered_json(res.truncation_change)},
                   {"truncation_converged", res.truncation_converged},
                   {"N", res.N},
                   {"within_1_over_eps", within}};
    if (res.unconverged_sector) j["unconverged_sector"] = *res.unconverged_sector;
    out.json("resolvent.json", j);
    outcome.exit_code = passed ? kExitSuccess : kExitVerificationFailed;
    outcome.summary = std::string(passed ? "PASS" : "FAIL") + " resolvent h=" + num(h) + " eps=" + num(eps) +
                      " norm=" + num(res.value) + " sector=" + std::to_string(res.sector_argmax) +
                      " r_trunc=" + num(res.r_trunc) + (res.converged ? "" : " (not converged)");
    return outcome;
}

void write_fit(Artifacts& out, const FitResult& fit, const std::vector<double>& hs) {
    out.write("json", "fit.json", fit_json(fit));
    std::vector<double> line;
    for (double h : hs) {
        const double x = fit.model == FitModel::exp_inv_h ? 1.0 / h : -std::log(h);
        line.push_back(std::exp(fit.slope * x + fit.intercept));
    }
    out.write("dat", "sweep_fit.dat", dat("h", "fitted_norm", hs, line));
}

RunOutcome run_sweep(const RunConfig& c, int workers) {
    RunOutcome outcome;
    const Problem problem{c.n, c.E, make_potential(c.potential, c.delta0)};
    const auto res = h_sweep(problem, c.sweep.hs, sweep_options(c, workers), c.sweep.fit);
    bool converged = true;
    std::vector<double> hs, norms;
    for (const auto& r : res.rows) {
        converged = converged && r.converged;
        hs.push_back(r.h);
        norms.push_back(r.norm);
    }
    Artifacts out(c.output, outcome);
    out.write("csv", "sweep.csv", sweep_csv(res.rows));
    out.write("dat", "sweep.dat", dat("h", "norm", hs, norms));
    std::string fit_note = " fit skipped";
    if (res.fit) {
        write_fit(out, *res.fit, hs);
        fit_note = " fit=" + std::string(to_string(res.fit->model)) + " " +
                   (res.fit->model == FitModel::exp_inv_h ? "C_est=" : "slope=") + num(res.fit->slope) +
                   " residual=" + num(res.fit->residual);
    }
    outcome.exit_code = converged ? kExitSuccess : kExitVerificationFailed;
    outcome.summary = std::string(converged ? "PASS" : "FAIL") + " sweep rows=" + std::to_string(res.rows.size()) +
                      " variant=" + std::string(to_string(c.sweep.variant)) + fit_note;
    return outcome;
}

RunOutcome run_eps_sweep(const RunConfig& c, int workers) {
    RunOutcome outcome;
    const Problem problem{c.n, c.E, make_potential(c.potential, c.delta0)};
    const auto res = epsilon_sweep(problem, c.sweep.h, c.sweep.eps, sweep_options(c, workers));
    std::vector<double> eps, norms;
    bool converged = true;
    for (const auto& r : res.rows) {
        eps.push_back(r.eps);
        norms.push_back(r.norm);
        converged = converged && r.converged;
    }
    const bool passed = converged && res.stabilized;
    Artifacts out(c.output, outcome);
    out.write("csv", "eps_sweep.csv", sweep_csv(res.rows));
    ordered_json j{{"h", c.sweep.h}, {"stabilized_value", res.stabilized_value}, {"stabilized", res.stabilized}};
    j["stable_below"] = res.stable_below ? ordered_json(*res.stable_below) : ordered_json(nullptr);
    out.json("eps_sweep.json", j);
    out.write("dat", "eps_sweep.dat", dat("eps", "norm", eps, norms));
    outcome.exit_code = passed ? kExitSuccess : kExitVerificationFailed;
    outcome.summary = std::string(passed ? "PASS" : "FAIL") + " eps-sweep h=" + num(c.sweep.h) +
                      " rows=" + std::to_string(res.rows.size()) + " stabilized_value=" + num(res.stabilized_value) +
                      (res.stable_below ? " stable_below=" + num(*res.stable_below) : " not stabilized");
    return outcome;
}

}  // namespace

RunOutcome run(const RunConfig& config) {
    const int workers = workers_from_environment();
    if (config.command == "weight") return run_weight(config);
    if (config.command == "carleman") return run_carleman(config, workers);
    if (config.command == "resolvent") return run_resolvent(config);
    if (config.command == "sweep") return run_sweep(config, workers);
    if (config.command == "eps-sweep") return run_eps_sweep(config, workers);
    throw ConfigInvalid("/command", "unknown command '" + config.command + "'");
}

int run_main(const std::filesystem::path& config_path, const std::vector<std::string>& overrides,
             std::ostream& out, std::ostream& err) {
    try {
        const RunConfig config = load_config(config_path, overrides);
        const RunOutcome outcome = run(config);
        out << outcome.summary << "\n";
        return outcome.exit_code;
    } catch (const ConfigInvalid& e) {
        err << "config error: " << e.what() << "\n";
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kExitError;
}

}  // namespace carleman
