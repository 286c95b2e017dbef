#pragma once

#include "carleman/potential.hpp"
#include "carleman/tridiagonal.hpp"

#include <span>
#include <vector>

namespace carleman {

/// Boundary condition at r = 0 in the radial variable u = r^((n-1)/2) v.
enum class OriginCondition { dirichlet, neumann };

/// Boundary condition at the truncation radius. `outgoing` closes the last row
/// with the exact discrete radiation condition of the constant-coefficient tail.
enum class OuterBoundary { dirichlet, outgoing };

/// Uniform interior nodes of (0, r_trunc).
/// Dirichlet origin: r_j = (j+1) dr with dr = r_trunc/(N+1).
/// Neumann origin (staggered): r_j = (j+1/2) dr with dr = r_trunc/(N+1/2).
/// In both cases the first node past the grid sits at r_trunc.
struct RadialGrid {
    double r_trunc = 0.0;
    std::size_t N = 0;
    OriginCondition origin = OriginCondition::dirichlet;

    double dr() const noexcept;
    double point(std::size_t j) const noexcept;
    std::vector<double> points() const;
    RadialGrid with_origin(OriginCondition o) const { return {r_trunc, N, o}; }

    /// Smallest N >= 64 with dr <= h / (ppw sqrt(E + |min V| + 1)).
    static RadialGrid resolving(double r_trunc, double h, double E, double min_potential,
                                double points_per_wavelength = 10.0,
                                OriginCondition origin = OriginCondition::dirichlet);
};

/// Spacing test only; the N >= 64 floor is applied by `resolving`.
bool resolves_wavelength(const RadialGrid& grid, double h, double E, double min_potential,
                         double points_per_wavelength = 10.0);

/// Dimension, energy and potential shared by every sector.
struct Problem {
    int n = 1;
    double E = 1.0;
    PotentialModel potential = PotentialModel::zero(0.5);
};

/// Angular eigenvalue: 0 for n = 1, l(l+n-2) + (n-1)(n-3)/4 for n >= 3.
/// Throws UnsupportedDimension for n = 2 (and n < 1).
double angular_eigenvalue(int n, int ell);

/// Sectors for one dimension. For n = 1 there are two: l = 0 is the odd
/// (Dirichlet) half-line sector and l = 1 the even (Neumann) one.
OriginCondition origin_condition(int n, int ell);

/// The tridiagonal discretisation of -h^2 d^2/dr^2 + h^2 lambda/r^2 + V - E - i eps
/// (plus 2 h phi' d/dr and V_phi = V - phi'^2 + h phi'' for the conjugated form).
struct SectorOperator {
    int n = 1;
    int ell = 0;
    double h = 0.0;
    double eps = 0.0;
    double lambda = 0.0;
    RadialGrid grid;
    OuterBoundary outer = OuterBoundary::outgoing;
    /// Root of the tail recurrence used by the outgoing row, 0 for Dirichlet.
    cplx tail_ratio{0.0, 0.0};
    Tridiagonal matrix;
};

/// Throws WavelengthUnresolved when the grid is too coarse for h, InvalidInput
/// for a negative eps or when the grid origin does not match the sector.
SectorOperator assemble_P(const RadialGrid& grid, const Problem& problem, int ell, double h, double eps,
                          OuterBoundary outer = OuterBoundary::outgoing, double points_per_wavelength = 10.0);

/// phi' and phi'' sampled at the operator grid nodes.
struct WeightSamples {
    std::vector<double> dphi;
    std::vector<double> ddphi;
};

/// Conjugated operator P_phi with a centred first-derivative term. Only
/// Dirichlet-origin sectors are supported (the even n = 1 sector has a kink
/// in phi(|x|) at the origin).
SectorOperator assemble_P_phi(const RadialGrid& grid, const Problem& problem, const WeightSamples& weight, int ell,
                              double h, double eps, OuterBoundary outer = OuterBoundary::outgoing,
                              double points_per_wavelength = 10.0);

}  // namespace carleman
