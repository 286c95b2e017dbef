#pragma once

#include "carleman/operators.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace carleman {

enum class NormVariant { global_weighted, exterior_cutoff };

std::string_view to_string(NormVariant variant);
NormVariant norm_variant_from_string(std::string_view name);

struct SectorSolve {
    std::vector<cplx> u;
    double relative_residual = 0.0;  // |A u - rhs| / |rhs|
};

/// Factorises once and solves A u = rhs, refining iteratively until the
/// residual is below 1e-10 |rhs| (or stops improving).
class SectorSolver {
public:
    explicit SectorSolver(const SectorOperator& op);
    SectorSolve solve(std::span<const cplx> rhs) const;
    /// Bare solves without the residual check, used inside power iteration.
    void apply_inverse(std::span<cplx> x) const { lu_.solve_in_place(x, false); }
    void apply_inverse_adjoint(std::span<cplx> x) const { lu_.solve_in_place(x, true); }
    const SectorOperator& op() const noexcept { return *op_; }

private:
    const SectorOperator* op_;
    TridiagonalLU lu_;
};

SectorSolve solve_sector(const SectorOperator& op, std::span<const cplx> rhs);

/// Diagonal norm weight (1+r_j)^-s, zeroed below R0_cut for exterior_cutoff.
std::vector<double> norm_weights(const RadialGrid& grid, double s, NormVariant variant, double R0_cut);

struct PowerIterationOptions {
    double tol = 1e-6;        // on |G x - theta x| / theta
    int max_iter = 10000;
    std::uint64_t seed = 20241014;
};

struct SectorNorm {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest singular value of W A^-1 W through power iteration on its Gram
/// operator. A zero weight returns 0 immediately.
SectorNorm weighted_sector_norm(const SectorOperator& op, double s, NormVariant variant, double R0_cut,
                                const PowerIterationOptions& options = {});

/// Same quantity from an explicit dense inverse and a full SVD. Meant for
/// small N only; throws InvalidInput above 2000 unknowns.
double dense_weighted_norm(const SectorOperator& op, double s, NormVariant variant, double R0_cut);

struct NormRequest {
    double s = 0.6;
    NormVariant variant = NormVariant::global_weighted;
    double R0_cut = 1.0;
    double h = 0.1;
    double eps = 1e-7;
    int L_max = -1;  // negative: ceil(r_trunc sqrt(E + 1 + sup|V|)/h) + 2
    PowerIterationOptions power{};
    OuterBoundary outer = OuterBoundary::outgoing;
    double points_per_wavelength = 10.0;
    int workers = 1;
    /// n = 1 only: also compute the even (Neumann-origin) sector l = 1.
    bool include_even_sector = true;
};

struct NormResult {
    double value = 0.0;
    int sector_argmax = 0;
    int iterations = 0;             // for the maximising sector
    bool converged = true;
    std::optional<int> unconverged_sector;  // first sector that did not converge
    int sectors_computed = 0;
    int sectors_skipped = 0;
    double r_trunc = 0.0;
    std::size_t N = 0;
    /// adaptive_norm only: relative change over the last r_trunc doubling
    /// (NaN when no doubling ran) and whether it met the tolerance.
    double truncation_change = std::numeric_limits<double>::quiet_NaN();
    bool truncation_converged = true;
    double raw_value = 0.0;         // adaptive_norm: value on the final grid before tail correction
};

/// ceil(r_trunc sqrt(E + 1 + sup|V|)/h) + 2.
int default_L_max(double r_trunc, double h, double E, double sup_potential);

/// True when h^2 lambda / r_trunc^2 >= E + 1 + sup|V|: the sector is
/// uniformly elliptic and its weighted resolvent norm is at most 1.
bool sector_is_elliptic(double lambda, double r_trunc, double h, double E, double sup_potential);

/// Max over sectors l = 0..L_max on the given grid (its origin is adjusted
/// per sector). n = 1 computes the odd sector and, unless disabled, the even one.
NormResult full_norm(const NormRequest& request, const Problem& problem, const RadialGrid& grid);

struct TruncationOptions {
    double r_trunc = 0.0;           // initial radius; 0 means max(2 R0_cut, 40)
    bool auto_double = true;
    double tolerance = 0.05;        // relative change accepted between doublings
    int max_doublings = 8;
    std::size_t max_points = 4000000;
    double refine = 1.0;            // multiplies the wavelength-resolving N
    bool tail_correction = true;    // extrapolate the (1+r)^(1-2s) weight tail when doubling
};

/// Limit as r_trunc -> infinity of a norm whose truncation error is
/// c (1+r_trunc)^(1-2s), fitted through the values at two radii.
double extrapolate_tail(double inner_value, double outer_value, double inner_r, double outer_r, double s);

/// full_norm on wavelength-resolving grids, doubling r_trunc until the value
/// changes by less than `tolerance`. With tail_correction each doubling
/// reports the extrapolated limit from the last two radii and the change is
/// measured between successive limits, which needs at least two doublings.
/// Throws BudgetExceeded when a grid would need more than `max_points` nodes.
NormResult adaptive_norm(const NormRequest& request, const Problem& problem, const TruncationOptions& truncation);

}  // namespace carleman
