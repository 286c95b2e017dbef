#pragma once

#include "carleman/potential.hpp"
#include "carleman/resolvent.hpp"
#include "carleman/scaling.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace carleman {

inline constexpr int kSchemaVersion = 1;

struct PotentialSpec {
    PotentialKind kind = PotentialKind::zero;
    std::optional<double> delta0;  // decay exponent of the potential; defaults to the problem's
    BumpWellParams bump{};
    bool cap_barrier = true;    // bump_well: lower the barrier until certified
    double audit_radius = 50.0;
    std::filesystem::path table;  // custom_table: CSV with header r,V
};

struct NumericsSpec {
    double r_trunc = 0.0;       // 0: automatic
    bool auto_truncation = true;
    bool tail_correction = true;
    double truncation_tolerance = 0.05;
    int max_doublings = 8;
    double points_per_wavelength = 10.0;
    std::optional<int> L_max;
    double power_tol = 1e-6;
    int max_iter = 10000;
    std::uint64_t seed = 20241014;
    std::size_t max_points = 4000000;
    double refine = 1.0;
    double R0_cut = 6.0;
    OuterBoundary outer = OuterBoundary::outgoing;
    bool even_sector = true;    // n = 1: include the even sector
};

struct SweepSpec {
    std::vector<double> hs;
    double eps_factor = 1e-6;
    std::vector<double> eps;    // eps-sweep values
    double h = 0.05;            // eps-sweep and resolvent
    std::optional<double> eps_value;  // resolvent: explicit eps instead of eps_factor * h
    NormVariant variant = NormVariant::global_weighted;
    std::optional<FitModel> fit = FitModel::power_law;
};

struct CarlemanSpec {
    int seeds = 100;
    std::vector<double> hs;     // empty: h0 * 2^-k, k = 0..5
    double eps_factor = 1e-6;
    int ell = 0;
    int modes = 4;
    double xi_max = 2.0;
    double support_min = 0.05;
    double support_max = 20.0;
};

struct OutputSpec {
    std::filesystem::path directory = "out";
    std::vector<std::string> formats{"csv", "json", "dat"};
    bool wants(const std::string& format) const;
};

struct RunConfig {
    std::string command;
    int n = 1;
    double E = 1.0;
    double s = 0.6;
    double delta0 = 0.6;
    PotentialSpec potential{};
    NumericsSpec numerics{};
    SweepSpec sweep{};
    CarlemanSpec carleman{};
    OutputSpec output{};
};

/// Applies `key=value` with a dotted key (`sweep.h_max=0.05`). The value is
/// parsed as JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Validates against the schema in docs/config.md. A relative potential
/// table path resolves against `base_dir`; the output directory is taken
/// relative to the working directory. Throws ConfigInvalid with a JSON pointer.
RunConfig parse_config(const nlohmann::json& config, const std::filesystem::path& base_dir = {});

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Builds the potential, certified for spec.delta0 when given and for
/// `delta0` otherwise.
PotentialModel make_potential(const PotentialSpec& spec, double delta0);

}  // namespace carleman
