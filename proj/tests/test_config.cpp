#include "carleman/cli.hpp"
#include "carleman/config.hpp"
#include "carleman/csv.hpp"
#include "carleman/errors.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace carleman;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json minimal(const std::string& command) {
    return {{"schema_version", 1},
            {"command", command},
            {"problem", {{"n", 1}, {"E", 1.0}, {"s", 0.6}, {"delta0", 0.6}, {"potential", {{"kind", "zero"}}}}}};
}

std::string pointer_of(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigInvalid& e) {
        return e.pointer();
    }
    return "<accepted>";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    fs::path write(const std::string& name, const json& j) const {
        const auto p = dir / name;
        std::ofstream(p) << j.dump(2);
        return p;
    }
};

}  // namespace

TEST_CASE("minimal config parses with defaults") {
    const auto c = parse_config(minimal("weight"));
    CHECK(c.command == "weight");
    CHECK(c.n == 1);
    CHECK(c.potential.kind == PotentialKind::zero);
    CHECK(c.numerics.points_per_wavelength == 10.0);
    CHECK(c.numerics.R0_cut == 6.0);
    CHECK(c.output.directory == fs::path("out"));
}

TEST_CASE("schema violations carry a JSON pointer") {
    auto j = minimal("weight");
    j["problem"]["n"] = 2;
    CHECK(pointer_of(j) == "/problem/n");
    try {
        parse_config(j);
    } catch (const ConfigInvalid& e) {
        CHECK(std::string(e.what()).find("n = 2") != std::string::npos);
    }

    j = minimal("weight");
    j["problem"]["E"] = -1.0;
    CHECK(pointer_of(j) == "/problem/E");
    j = minimal("weight");
    j["problem"]["s"] = 0.5;
    CHECK(pointer_of(j) == "/problem/s");
    j = minimal("weight");
    j["problem"]["delta0"] = 0.1;  // below 2s - 1
    CHECK(pointer_of(j) == "/problem/delta0");
    j = minimal("weight");
    j["problem"]["potential"]["colour"] = "blue";
    CHECK(pointer_of(j) == "/problem/potential/colour");
    j = minimal("weight");
    j["schema_version"] = 2;
    CHECK(pointer_of(j) == "/schema_version");
    j = minimal("fly");
    CHECK(pointer_of(j) == "/command");
    j = minimal("sweep");
    CHECK(pointer_of(j) == "/sweep/h");
    j["sweep"] = {{"h", {0.1, 0.1}}};
    CHECK(pointer_of(j) == "/sweep/h/1");
    j = minimal("weight");
    j["problem"]["potential"]["delta0"] = 0.4;
    CHECK(pointer_of(j) == "/problem/potential/delta0");
}

TEST_CASE("sweep section") {
    auto j = minimal("sweep");
    j["sweep"] = {{"h_geometric", {{"h_max", 0.1}, {"h_min", 0.01}, {"count", 8}}},
                  {"eps_rule", {{"factor", 1e-6}}},
                  {"variant", "exterior_cutoff"},
                  {"fit", "none"}};
    const auto c = parse_config(j);
    CHECK(c.sweep.hs.size() == 8);
    CHECK(c.sweep.hs.front() == doctest::Approx(0.1));
    CHECK(c.sweep.variant == NormVariant::exterior_cutoff);
    CHECK_FALSE(c.sweep.fit.has_value());

    auto e = minimal("eps-sweep");
    e["sweep"] = {{"h", 0.05}};
    const auto ce = parse_config(e);
    REQUIRE(ce.sweep.eps.size() == 7);
    CHECK(ce.sweep.eps.front() == doctest::Approx(0.05e-2));
    CHECK(ce.sweep.eps.back() == doctest::Approx(0.05e-8));
}

TEST_CASE("overrides use dotted keys") {
    auto j = minimal("resolvent");
    apply_override(j, "sweep.h=0.05");
    apply_override(j, "problem.potential.kind=envelope");
    apply_override(j, "numerics.even_sector=false");
    const auto c = parse_config(j);
    CHECK(c.sweep.h == 0.05);
    CHECK(c.potential.kind == PotentialKind::envelope);
    CHECK_FALSE(c.numerics.even_sector);
    CHECK_THROWS_AS(apply_override(j, "novalue"), ConfigInvalid);
}

TEST_CASE("capped bump_well from the config") {
    auto j = minimal("resolvent");
    j["problem"]["potential"] = {{"kind", "bump_well"},
                                 {"params", {{"well_depth", 0.2}, {"barrier_height", 1.0}, {"barrier_center", 3.0}}}};
    const auto c = parse_config(j);
    const auto v = make_potential(c.potential, c.delta0);
    CHECK(v.bump().barrier_height < 1.0);
    CHECK(certify_potential(v, 0.6, audit_grid(50.0, 1e-2)).certified);
}

TEST_CASE("cli: n = 2 is a config error") {
    Scratch s("carleman_cli_n2");
    auto j = minimal("weight");
    j["problem"]["n"] = 2;
    std::ostringstream out, err;
    CHECK(run_main(s.write("c.json", j), {}, out, err) == kExitError);
    CHECK(err.str().find("/problem/n") != std::string::npos);
    CHECK(out.str().empty());
}

TEST_CASE("cli: single-h sweep skips the fit and its CSV round trips") {
    Scratch s("carleman_cli_sweep");
    auto j = minimal("sweep");
    j["sweep"] = {{"h", {0.1}}};
    j["numerics"] = {{"r_trunc", 20.0}, {"auto_truncation", false}};
    j["output"] = {{"directory", (s.dir / "out").string()}};
    const auto cfg = s.write("c.json", j);
    std::ostringstream out, err;
    REQUIRE(run_main(cfg, {}, out, err) == kExitSuccess);
    CHECK(out.str().rfind("PASS", 0) == 0);
    CHECK(out.str().find("fit skipped") != std::string::npos);
    CHECK(fs::exists(s.dir / "out" / "sweep.csv"));
    CHECK_FALSE(fs::exists(s.dir / "out" / "fit.json"));

    // the emitted row matches an in-process computation bit for bit
    const auto table = read_csv(s.dir / "out" / "sweep.csv");
    const auto config = load_config(cfg);
    NormRequest req;
    req.h = 0.1;
    req.eps = 1e-7;
    TruncationOptions t;
    t.r_trunc = 20.0;
    t.auto_double = false;
    const auto direct = adaptive_norm(req, {1, 1.0, PotentialModel::zero(0.6)}, t);
    CHECK(table.column("norm")[0] == direct.value);
    CHECK(table.column("h")[0] == 0.1);

    const std::string first = slurp(s.dir / "out" / "sweep.csv");
    std::ostringstream out2;
    REQUIRE(run_main(cfg, {}, out2, err) == kExitSuccess);
    CHECK(slurp(s.dir / "out" / "sweep.csv") == first);
}

TEST_CASE("cli: resolvent and eps-sweep artifacts") {
    Scratch s("carleman_cli_resolvent");
    auto j = minimal("resolvent");
    j["sweep"] = {{"h", 0.1}};
    j["numerics"] = {{"r_trunc", 20.0}, {"auto_truncation", false}};
    j["output"] = {{"directory", (s.dir / "out").string()}, {"formats", {"json"}}};
    std::ostringstream out, err;
    REQUIRE(run_main(s.write("r.json", j), {}, out, err) == kExitSuccess);
    const auto r = json::parse(slurp(s.dir / "out" / "resolvent.json"));
    CHECK(r.at("converged") == true);
    CHECK(r.at("sectors_computed") == 2);
    CHECK(r.at("norm").get<double>() > 0.0);

    j["command"] = "eps-sweep";
    j["sweep"] = {{"h", 0.1}, {"eps_factors", {1e-2, 1e-4, 1e-6}}};
    j["output"]["formats"] = {"csv", "json", "dat"};
    std::ostringstream out2;
    const int code = run_main(s.write("e.json", j), {}, out2, err);
    CHECK(code != kExitError);
    CHECK(fs::exists(s.dir / "out" / "eps_sweep.csv"));
    CHECK(slurp(s.dir / "out" / "eps_sweep.dat").rfind("# eps norm", 0) == 0);
}

TEST_CASE("cli: weight command") {
    Scratch s("carleman_cli_weight");
    auto j = minimal("weight");
    j["problem"]["delta0"] = 0.9;
    j["output"] = {{"directory", (s.dir / "out").string()}};
    std::ostringstream out, err;
    REQUIRE(run_main(s.write("w.json", j), {}, out, err) == kExitSuccess);
    CHECK(out.str().rfind("PASS weight", 0) == 0);
    const auto report = json::parse(slurp(s.dir / "out" / "margin_report.json"));
    CHECK(report.at("passed") == true);
    const auto table = read_csv(s.dir / "out" / "weight.csv");
    CHECK(table.header.front() == "r");
    CHECK(table.rows.size() > 1000);
}
