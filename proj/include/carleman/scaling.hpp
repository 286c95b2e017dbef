#pragma once

#include "carleman/resolvent.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace carleman {

struct SweepRow {
    double h = 0.0;
    double eps = 0.0;
    NormVariant variant = NormVariant::global_weighted;
    double norm = 0.0;
    bool converged = false;
    int sector_argmax = 0;
    double r_trunc = 0.0;
    std::size_t N = 0;
    double truncation_change = std::numeric_limits<double>::quiet_NaN();
    double raw_norm = 0.0;          // before tail correction
};

enum class FitModel { exp_inv_h, power_law };

std::string_view to_string(FitModel model);
FitModel fit_model_from_string(std::string_view name);

/// ln(norm) = slope * x + intercept with x = 1/h (exp_inv_h, slope = C_est)
/// or x = ln(1/h) (power_law). `residual` is the max absolute deviation in ln.
struct FitResult {
    FitModel model = FitModel::power_law;
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
    int rows_used = 0;
};

/// Least squares on the converged rows; DegenerateFit with fewer than 4 of
/// them or when every h is the same.
FitResult fit_exp_inv_h(std::span<const SweepRow> rows);
FitResult fit_power_law(std::span<const SweepRow> rows);
FitResult fit_exp_inv_h(std::span<const double> hs, std::span<const double> norms);
FitResult fit_power_law(std::span<const double> hs, std::span<const double> norms);

struct SweepOptions {
    NormRequest request{};          // h and eps are overwritten per row
    TruncationOptions truncation{};
    double eps_factor = 1e-6;       // eps = eps_factor * h
    int workers = 1;                // rows computed concurrently
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::optional<FitResult> fit;
};

/// h values from h_max down to h_min, geometrically spaced.
std::vector<double> geometric_hs(double h_max, double h_min, int count);

/// One adaptive full norm per h. `hs` must be strictly decreasing and
/// positive. Fits `fit_model` when at least 4 rows converged.
SweepResult h_sweep(const Problem& problem, std::span<const double> hs, const SweepOptions& options,
                    std::optional<FitModel> fit_model = std::nullopt);

struct EpsSweepResult {
    std::vector<SweepRow> rows;
    double stabilized_value = 0.0;      // norm at the smallest eps
    /// Largest eps from which every further step changes the norm by < 1%.
    std::optional<double> stable_below;
    bool stabilized = false;            // the last two rows differ by < 1%
};

/// `eps_list` must be positive and strictly decreasing.
EpsSweepResult epsilon_sweep(const Problem& problem, double h, std::span<const double> eps_list,
                             const SweepOptions& options, double tolerance = 0.01);

std::string sweep_csv(std::span<const SweepRow> rows);
std::string fit_json(const FitResult& fit);

}  // namespace carleman
