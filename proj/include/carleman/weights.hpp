#pragma once

#include "carleman/potential.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace carleman {

// Closed-form ingredients. All radii are >= 0; internally everything is
// evaluated through log(1+r) so that astronomically large radii stay finite.

/// w(r) = 1 - (1+r)^-delta.
double eval_w(double r, double delta);
/// w'(r) = delta (1+r)^(-1-delta).
double eval_wprime(double r, double delta);
/// m(r) = (1+r^2)^((1+delta)/4).
double eval_m(double r, double delta);
/// G(r) = (1+r)^-delta0 + (1 - (1+r)^-delta) (1+r)^(delta-delta0) / delta.
double eval_G(double r, double delta, double delta0);
double eval_Gprime(double r, double delta, double delta0);
/// Same as eval_G with the radius given as log(1+r).
double eval_G_log(double log1p_r, double delta, double delta0);

/// Radii and level constant of the piecewise level function psi.
/// `log1p_*` hold log(1+radius) exactly; `R0` is +inf when it overflows a double.
struct RadiiAndLevel {
    double R = 0.0;
    double B = 0.0;
    double R0 = 0.0;
    double r_max = 0.0;
    double log1p_R = 0.0;
    double log1p_R0 = 0.0;
    double log1p_r_max = 0.0;
};

/// Solves (1+R)^(delta-delta0) = delta E/4, B = (1/delta0 + E/4) w(R),
/// w(R0) = 4B/E and (1+r_max)^delta = (1-delta)/(1-delta/delta0).
/// Throws InfeasibleDelta when w(R) >= 1/(1 + 4/(delta0 E)) or when R does not
/// lie past the maximiser of G (both mean delta has to shrink).
RadiiAndLevel compute_radii_and_level(double delta0, double E, double delta);

/// True iff w(R) < 1/(1 + 4/(delta0 E)).
bool level_feasible(double w_at_R, double delta0, double E);

struct WeightParameters {
    double delta0 = 0.0;
    double E = 0.0;
    double delta = 0.0;
    double s = 0.0;           // (1+delta)/2
    double eta = 0.0;         // mollifier width
    double h0 = 0.0;          // semiclassical cap
    RadiiAndLevel radii{};

    double R() const noexcept { return radii.R; }
    double R0() const noexcept { return radii.R0; }
    double B() const noexcept { return radii.B; }
};

WeightParameters make_weight_parameters(double delta0, double E, double delta);

/// Piecewise level function: 1/delta0 on r <= R, B/w - E/4 on (R, R0), 0 past R0.
/// Negative radii extend the first branch.
class Psi {
public:
    explicit Psi(const WeightParameters& params) : p_(params) {}

    double operator()(double r) const;
    /// psi(R0 + x), accurate for |x| << R0 where R0 + x is not representable.
    double near_R0(double x) const;
    const WeightParameters& params() const noexcept { return p_; }

private:
    double middle_branch(double log1p_r, double log_gap_to_R0) const;
    WeightParameters p_;
};

Psi build_psi(const WeightParameters& params);

/// Smooth bump supported in (0,1), normalised to unit mass by the same
/// quadrature used for smoothing.
class Mollifier {
public:
    static const Mollifier& standard();
    double value(double t) const;   // rho(t)
    double d1(double t) const;      // rho'(t)
    double d2(double t) const;      // rho''(t)

private:
    Mollifier();
    double norm_ = 1.0;
};

/// phi', phi'', phi''' at a point.
struct WeightDerivatives {
    double d1 = 0.0;
    double d2 = 0.0;
    double d3 = 0.0;
};

/// Sampled Carleman weight phi = int_0^r psi_tilde with psi_tilde the forward
/// smoothing of sqrt(psi) by rho_eta, plus pointwise evaluators.
class CarlemanWeight {
public:
    const WeightParameters& params() const noexcept { return psi_.params(); }
    const Psi& psi() const noexcept { return psi_; }

    std::span<const double> grid() const noexcept { return grid_; }
    std::span<const double> phi() const noexcept { return phi_; }
    std::span<const double> dphi() const noexcept { return dphi_; }
    std::span<const double> ddphi() const noexcept { return ddphi_; }

    WeightDerivatives derivatives_at(double r) const;
    WeightDerivatives derivatives_near_R0(double x) const;
    double phi_at(double r) const;
    /// phi on [R0, inf); +inf if it overflows.
    double max_phi() const noexcept { return max_phi_; }

private:
    friend CarlemanWeight mollify_and_integrate(const Psi&, double, std::span<const double>);
    explicit CarlemanWeight(Psi psi) : psi_(std::move(psi)) {}
    double integrate_psi_tilde(double a, double b) const;

    Psi psi_;
    std::vector<double> grid_, phi_, dphi_, ddphi_;
    double max_phi_ = 0.0;
};

/// Builds the sampled weight on `grid` (strictly increasing, starting at 0).
/// Throws GridTooCoarse when a grid cell inside a smoothing layer
/// [R - eta, R] or [R0 - eta, R0] is wider than eta/8, InvalidInput when eta
/// is not below min(R, R0 - R)/4.
CarlemanWeight mollify_and_integrate(const Psi& psi, double eta, std::span<const double> grid);

/// Default sampling grid: uniform near the origin, refined in both smoothing
/// layers, logarithmic in between; capped at log(1+r) = 700.
std::vector<double> default_weight_grid(const WeightParameters& params);

/// A verification node. Anchored nodes sit at R0 + offset and are evaluated
/// relative to R0, which need not be resolvable in absolute terms.
struct WeightGridPoint {
    double r = 0.0;
    double offset = 0.0;
    bool anchored = false;
};

/// Uniform spacing min(eta/8, 0.01) near the origin, eta/64 across both
/// smoothing layers, logarithmic out to 2 R0 (capped at log(1+r) = 700).
std::vector<WeightGridPoint> verification_grid(const WeightParameters& params);

/// Pointwise decomposition margin(h) = base - h * slope, with
/// margin = d/dr[w (E - V + phi'^2 - h phi'')] - E w'/4.
struct MarginComponents {
    std::vector<WeightGridPoint> points;
    std::vector<double> base;
    std::vector<double> slope;
    std::vector<double> scale;  // E w'/4
};

MarginComponents margin_components(const CarlemanWeight& weight, const PotentialModel& potential,
                                   std::vector<WeightGridPoint> grid);

struct MarginReport {
    double h = 0.0;
    double min_margin = 0.0;
    double argmin_r = 0.0;
    /// min of margin / (E w'/4); below -1 means the inequality fails in relative terms.
    double min_relative_margin = 0.0;
    double argmin_relative_r = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

MarginReport evaluate_margin(const MarginComponents& components, double h, double E,
                             double tol_margin);

/// PASS iff min over the grid of the margin is >= -tol_margin (default 1e-8 E).
MarginReport verify_weight_inequality(const CarlemanWeight& weight, const PotentialModel& potential,
                                      double h, const std::vector<WeightGridPoint>& grid,
                                      double tol_margin = -1.0);

/// G(r) <= E/4 at every verification node with r >= R.
bool check_far_level(const WeightParameters& params);

struct WeightSearchOptions {
    int max_halvings = 20;
    double tol_margin_factor = 1e-8;  // times E
};

struct WeightConstruction {
    CarlemanWeight weight;
    int eta_halvings = 0;
    int h0_halvings = 0;
    bool passed = false;
    std::vector<MarginReport> reports;  // final reports at h0 and h -> 0, per potential
};

/// Starts from eta = min(R, R0-R)/8 and h0 = E/10 and halves whichever one the
/// margin check implicates (eta when it fails at h = 0, h0 otherwise) until
/// the check passes for every potential at both h = h0 and h = 0. The margin
/// is affine in h at each node, so these two endpoints cover all of (0, h0].
WeightConstruction construct_weight(double delta0, double E, double delta,
                                    const std::vector<PotentialModel>& potentials,
                                    const WeightSearchOptions& options = {});

/// Largest delta in delta0 * 2^-k, k = 1..30, for which the radii exist,
/// G <= E/4 past R, and construct_weight passes for the zero and envelope
/// potentials. Throws NoFeasibleDelta if none does.
double select_delta(double delta0, double E, const WeightSearchOptions& options = {});

/// select_delta followed by the final construction.
WeightConstruction build_carleman_weight(double delta0, double E,
                                         const WeightSearchOptions& options = {});

/// CSV with header r,w,wprime,m,psi,phi,dphi,ddphi at 17 significant digits.
std::string weight_csv(const CarlemanWeight& weight);

}  // namespace carleman
