#include "carleman/config.hpp"

#include "carleman/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace carleman {

using nlohmann::json;

bool OutputSpec::wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigInvalid("", "override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    std::string pointer;
    std::stringstream parts(key);
    for (std::string part; std::getline(parts, part, '.');) {
        if (part.empty()) throw ConfigInvalid("", "override key '" + key + "' has an empty component");
        pointer += "/" + part;
    }
    config[json::json_pointer(pointer)] = value;
}

namespace {

// Reads one JSON object and remembers which keys were consumed so that
// unknown keys can be reported.
class Section {
public:
    Section(const json& j, std::string pointer) : j_(j), ptr_(std::move(pointer)) {
        if (!j_.is_object()) throw ConfigInvalid(ptr_.empty() ? "/" : ptr_, "expected an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }
    std::string at(const std::string& key) const { return ptr_ + "/" + key; }
    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigInvalid(at(key), "expected a number");
        return v.get<double>();
    }
    double positive(const std::string& key, double fallback) {
        const double v = number(key, fallback);
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigInvalid(at(key), "must be a positive number");
        return v;
    }
    long long integer(const std::string& key, long long fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigInvalid(at(key), "expected an integer");
        return v.get<long long>();
    }
    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigInvalid(at(key), "expected true or false");
        return v.get<bool>();
    }
    std::string string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigInvalid(at(key), "expected a string");
        return v.get<std::string>();
    }
    std::vector<double> numbers(const std::string& key) {
        if (!has(key)) return {};
        const json& v = j_.at(key);
        if (!v.is_array()) throw ConfigInvalid(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigInvalid(at(key) + "/" + std::to_string(i), "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }
    Section child(const std::string& key) {
        seen_.insert(key);
        return Section(j_.at(key), at(key));
    }
    void finish() const {
        for (const auto& [key, _] : j_.items())
            if (!seen_.count(key)) throw ConfigInvalid(at(key), "unknown key");
    }

private:
    const json& j_;
    std::string ptr_;
    std::set<std::string> seen_;
};

template <class F>
auto choice(Section& s, const std::string& key, const std::string& fallback, F&& convert) {
    const std::string name = s.string(key, fallback);
    try {
        return convert(name);
    } catch (const InvalidInput& e) {
        throw ConfigInvalid(s.at(key), e.what());
    }
}

void require_decreasing(const std::vector<double>& v, const std::string& pointer) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0)) throw ConfigInvalid(pointer + "/" + std::to_string(i), "must be positive");
        if (i > 0 && !(v[i] < v[i - 1]))
            throw ConfigInvalid(pointer + "/" + std::to_string(i), "values must be strictly decreasing");
    }
}

std::vector<double> geometric_from(Section s, const std::string& lo_key, const std::string& hi_key) {
    const double hi = s.positive(hi_key, 0.1);
    const double lo = s.positive(lo_key, 0.01);
    const long long count = s.integer("count", 8);
    if (count < 1 || count > 10000) throw ConfigInvalid(s.at("count"), "must be between 1 and 10000");
    if (count > 1 && !(hi > lo)) throw ConfigInvalid(s.at(hi_key), "must exceed " + lo_key);
    s.finish();
    return geometric_hs(hi, lo, static_cast<int>(count));
}

PotentialSpec parse_potential(Section s, const std::filesystem::path& base_dir) {
    PotentialSpec spec;
    spec.kind = choice(s, "kind", "zero", [](const std::string& n) { return potential_kind_from_string(n); });
    if (s.has("delta0")) {
        const double d = s.number("delta0", 0.0);
        if (!(d > 0.0 && d < 1.0)) throw ConfigInvalid(s.at("delta0"), "must lie in (0, 1)");
        spec.delta0 = d;
    }
    if (spec.kind == PotentialKind::bump_well) {
        static const json empty = json::object();
        Section p = s.has("params") ? s.child("params") : Section(empty, s.at("params"));
        spec.bump.well_depth = p.number("well_depth", 0.2);
        spec.bump.well_center = p.number("well_center", 0.0);
        spec.bump.barrier_height = p.number("barrier_height", 1.0);
        spec.bump.barrier_center = p.number("barrier_center", 3.0);
        spec.bump.width = p.positive("width", 1.5);
        if (spec.bump.well_depth < 0.0) throw ConfigInvalid(p.at("well_depth"), "must be >= 0");
        if (spec.bump.barrier_height < 0.0) throw ConfigInvalid(p.at("barrier_height"), "must be >= 0");
        p.finish();
        spec.cap_barrier = s.boolean("cap_barrier", true);
        spec.audit_radius = s.positive("audit_radius", 50.0);
    } else if (spec.kind == PotentialKind::custom_table) {
        if (!s.has("table")) throw ConfigInvalid(s.at("table"), "custom_table needs a CSV path");
        spec.table = s.string("table", "");
        if (spec.table.is_relative() && !base_dir.empty()) spec.table = base_dir / spec.table;
    }
    s.finish();
    return spec;
}

}  // namespace

RunConfig parse_config(const json& config, const std::filesystem::path& base_dir) {
    Section root(config, "");
    RunConfig rc;
    if (!root.has("schema_version")) throw ConfigInvalid("/schema_version", "missing");
    if (root.integer("schema_version", 0) != kSchemaVersion)
        throw ConfigInvalid("/schema_version", "unsupported version (expected 1)");

    rc.command = root.string("command", "");
    static const std::set<std::string> commands{"weight", "carleman", "resolvent", "sweep", "eps-sweep"};
    if (!commands.count(rc.command))
        throw ConfigInvalid("/command", "must be one of weight, carleman, resolvent, sweep, eps-sweep");

    if (!root.has("problem")) throw ConfigInvalid("/problem", "missing");
    {
        Section p = root.child("problem");
        const long long n = p.integer("n", 1);
        if (n == 2) throw ConfigInvalid("/problem/n", "dimension n = 2 is excluded (n must be 1 or >= 3)");
        if (n < 1 || n > 64) throw ConfigInvalid("/problem/n", "must be 1 or between 3 and 64");
        rc.n = static_cast<int>(n);
        rc.E = p.positive("E", 1.0);
        rc.s = p.number("s", 0.6);
        if (!(rc.s > 0.5)) throw ConfigInvalid("/problem/s", "must exceed 1/2");
        rc.delta0 = p.number("delta0", 0.6);
        if (!(rc.delta0 < 1.0) || !(rc.delta0 > 2.0 * rc.s - 1.0) || !(rc.delta0 > 0.0))
            throw ConfigInvalid("/problem/delta0", "must lie in (2s-1, 1)");
        if (p.has("potential")) rc.potential = parse_potential(p.child("potential"), base_dir);
        if (rc.potential.delta0 && *rc.potential.delta0 < rc.delta0)
            throw ConfigInvalid("/problem/potential/delta0", "must be >= /problem/delta0 for the weight to apply");
        p.finish();
    }

    if (root.has("numerics")) {
        Section s = root.child("numerics");
        auto& nm = rc.numerics;
        nm.r_trunc = s.number("r_trunc", 0.0);
        if (nm.r_trunc < 0.0) throw ConfigInvalid("/numerics/r_trunc", "must be >= 0 (0 selects it automatically)");
        nm.auto_truncation = s.boolean("auto_truncation", true);
        nm.tail_correction = s.boolean("tail_correction", true);
        nm.truncation_tolerance = s.positive("truncation_tolerance", 0.05);
        nm.max_doublings = static_cast<int>(s.integer("max_doublings", 8));
        if (nm.max_doublings < 0) throw ConfigInvalid("/numerics/max_doublings", "must be >= 0");
        nm.points_per_wavelength = s.positive("points_per_wavelength", 10.0);
        if (s.has("L_max")) {
            const long long l = s.integer("L_max", 0);
            if (l < 0) throw ConfigInvalid("/numerics/L_max", "must be >= 0");
            nm.L_max = static_cast<int>(l);
        }
        nm.power_tol = s.positive("power_tol", 1e-6);
        nm.max_iter = static_cast<int>(s.integer("max_iter", 10000));
        if (nm.max_iter < 1) throw ConfigInvalid("/numerics/max_iter", "must be >= 1");
        const long long seed = s.integer("seed", 20241014);
        if (seed < 0) throw ConfigInvalid("/numerics/seed", "must be >= 0");
        nm.seed = static_cast<std::uint64_t>(seed);
        const long long pts = s.integer("max_points", 4000000);
        if (pts < 64) throw ConfigInvalid("/numerics/max_points", "must be >= 64");
        nm.max_points = static_cast<std::size_t>(pts);
        nm.refine = s.positive("refine", 1.0);
        nm.R0_cut = s.positive("R0_cut", 6.0);
        nm.even_sector = s.boolean("even_sector", true);
        nm.outer = choice(s, "outer_boundary", "outgoing", [](const std::string& n) {
            if (n == "outgoing") return OuterBoundary::outgoing;
            if (n == "dirichlet") return OuterBoundary::dirichlet;
            throw InvalidInput("must be outgoing or dirichlet");
        });
        s.finish();
    }

    if (root.has("sweep")) {
        Section s = root.child("sweep");
        auto& sw = rc.sweep;
        if (s.has("h") && s.has("h_geometric")) throw ConfigInvalid("/sweep/h", "give either h or h_geometric");
        std::optional<double> scalar_h;
        if (s.has("h") && s.raw("h").is_number()) {
            // a single h: the eps-sweep and resolvent point, or a one-row sweep
            scalar_h = s.positive("h", 0.05);
            sw.hs = {*scalar_h};
        } else if (s.has("h")) {
            sw.hs = s.numbers("h");
            if (sw.hs.empty()) throw ConfigInvalid("/sweep/h", "must not be empty");
            require_decreasing(sw.hs, "/sweep/h");
        } else if (s.has("h_geometric")) {
            sw.hs = geometric_from(s.child("h_geometric"), "h_min", "h_max");
        }
        if (s.has("eps_rule")) {
            Section e = s.child("eps_rule");
            sw.eps_factor = e.positive("factor", 1e-6);
            e.finish();
        }
        if (s.has("eps_factors")) {
            const auto factors = s.numbers("eps_factors");
            require_decreasing(factors, "/sweep/eps_factors");
            sw.eps = factors;  // scaled by h once h is known
        }
        sw.h = scalar_h.value_or(sw.hs.empty() ? 0.05 : sw.hs.front());
        if (s.has("eps")) sw.eps_value = s.positive("eps", 1.0);
        sw.variant = choice(s, "variant", "global_weighted",
                            [](const std::string& n) { return norm_variant_from_string(n); });
        const std::string fit = s.string("fit", "power_law");
        if (fit == "none")
            sw.fit.reset();
        else
            sw.fit = choice(s, "fit", "power_law", [](const std::string& n) { return fit_model_from_string(n); });
        s.finish();
        for (auto& e : sw.eps) e *= sw.h;
    }
    if (rc.command == "eps-sweep" && rc.sweep.eps.empty())
        for (int k = 2; k <= 8; ++k) rc.sweep.eps.push_back(rc.sweep.h * std::pow(10.0, -k));
    if (rc.command == "sweep" && rc.sweep.hs.empty()) throw ConfigInvalid("/sweep/h", "sweep needs an h list");

    if (root.has("carleman")) {
        Section s = root.child("carleman");
        auto& c = rc.carleman;
        c.seeds = static_cast<int>(s.integer("seeds", 100));
        if (c.seeds < 1) throw ConfigInvalid("/carleman/seeds", "must be >= 1");
        c.hs = s.numbers("h");
        require_decreasing(c.hs, "/carleman/h");
        if (s.has("eps_rule")) {
            Section e = s.child("eps_rule");
            c.eps_factor = e.number("factor", 1e-6);
            if (c.eps_factor < 0.0) throw ConfigInvalid("/carleman/eps_rule/factor", "must be >= 0");
            e.finish();
        }
        c.ell = static_cast<int>(s.integer("ell", 0));
        if (c.ell < 0) throw ConfigInvalid("/carleman/ell", "must be >= 0");
        c.modes = static_cast<int>(s.integer("modes", 4));
        if (c.modes < 1) throw ConfigInvalid("/carleman/modes", "must be >= 1");
        c.xi_max = s.positive("xi_max", 2.0);
        c.support_min = s.positive("support_min", 0.05);
        c.support_max = s.positive("support_max", 20.0);
        if (!(c.support_max > c.support_min + 1.0))
            throw ConfigInvalid("/carleman/support_max", "must exceed support_min + 1");
        s.finish();
    }

    if (root.has("output")) {
        Section s = root.child("output");
        rc.output.directory = s.string("directory", "out");
        if (s.has("formats")) {
            const json& f = s.raw("formats");
            if (!f.is_array()) throw ConfigInvalid("/output/formats", "expected an array of strings");
            rc.output.formats.clear();
            for (std::size_t i = 0; i < f.size(); ++i) {
                const std::string ptr = "/output/formats/" + std::to_string(i);
                if (!f[i].is_string()) throw ConfigInvalid(ptr, "expected a string");
                const auto name = f[i].get<std::string>();
                if (name != "csv" && name != "json" && name != "dat")
                    throw ConfigInvalid(ptr, "must be csv, json or dat");
                rc.output.formats.push_back(name);
            }
        }
        s.finish();
    }
    root.finish();
    return rc;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("", "cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigInvalid("", std::string("config is not valid JSON: ") + e.what());
    }
    for (const auto& o : overrides) apply_override(j, o);
    return parse_config(j, path.parent_path());
}

PotentialModel make_potential(const PotentialSpec& spec, double delta0) {
    delta0 = spec.delta0.value_or(delta0);
    switch (spec.kind) {
        case PotentialKind::zero: return PotentialModel::zero(delta0);
        case PotentialKind::envelope: return PotentialModel::envelope(delta0);
        case PotentialKind::bump_well:
            return spec.cap_barrier ? cap_barrier(spec.bump, delta0, spec.audit_radius)
                                    : PotentialModel::bump_well(spec.bump, delta0);
        case PotentialKind::custom_table: return PotentialModel::custom_table_from_csv(spec.table.string(), delta0);
    }
    throw InvalidInput("unknown potential kind");
}

}  // namespace carleman
