#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace carleman {

enum class PotentialKind { zero, envelope, bump_well, custom_table };

std::string_view to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(std::string_view name);

/// Gaussian well plus Gaussian barrier:
/// V(r) = -A exp(-(r-r_w)^2/sigma^2) + b exp(-(r-r_b)^2/sigma^2).
struct BumpWellParams {
    double well_depth = 0.0;       // A
    double well_center = 0.0;      // r_w
    double barrier_height = 0.0;   // b
    double barrier_center = 0.0;   // r_b
    double width = 1.0;            // sigma
};

/// Radial, h-independent potential V(r) together with the decay exponent it
/// is claimed to satisfy: V <= (1+r)^-delta0 and dV/dr <= (1+r)^(-1-delta0).
class PotentialModel {
public:
    static PotentialModel zero(double delta0);
    static PotentialModel envelope(double delta0);
    static PotentialModel bump_well(const BumpWellParams& params, double delta0);
    static PotentialModel custom_table(std::vector<double> radii, std::vector<double> values,
                                       double delta0);
    /// Reads a two-column CSV with header `r,V`.
    static PotentialModel custom_table_from_csv(const std::string& path, double delta0);

    PotentialKind kind() const noexcept { return kind_; }
    double delta0() const noexcept { return delta0_; }
    const BumpWellParams& bump() const noexcept { return bump_; }
    const std::vector<double>& table_radii() const noexcept { return table_r_; }
    const std::vector<double>& table_values() const noexcept { return table_v_; }

    double value(double r) const;
    double derivative(double r) const;
    bool has_analytic_derivative() const noexcept { return kind_ != PotentialKind::custom_table; }

    /// min V and sup |V| over [0, r_max], sampled densely.
    double min_value(double r_max) const;
    double sup_abs(double r_max) const;

private:
    PotentialKind kind_ = PotentialKind::zero;
    double delta0_ = 0.5;
    BumpWellParams bump_{};
    std::vector<double> table_r_;
    std::vector<double> table_v_;
};

struct Violation {
    double radius;
    enum class Bound { value, derivative } bound;
    double observed;
    double allowed;
};

struct Certificate {
    bool certified = true;
    std::vector<Violation> violations;
    std::optional<double> first_violation() const;
};

/// Audits V <= (1+r)^-delta0 and dV/dr <= (1+r)^(-1-delta0) on the given grid.
/// Derivatives are analytic when the family provides them and centered
/// differences at scale 1e-3 otherwise.
Certificate certify_potential(const PotentialModel& potential, double delta0,
                              std::span<const double> audit_grid, double tol = 1e-12);

/// Uniform audit grid on [0, r_max] with spacing <= step.
std::vector<double> audit_grid(double r_max, double step = 1e-3);

/// Largest barrier height (by bisection) that keeps the bump_well certified
/// for `delta0` on [0, r_audit]. The well depth is left unchanged; throws
/// InvalidInput if the well alone already violates the bound.
PotentialModel cap_barrier(const BumpWellParams& params, double delta0, double r_audit);

}  // namespace carleman
