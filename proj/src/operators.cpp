#include "carleman/operators.hpp"

#include "carleman/errors.hpp"

#include <cmath>
#include <sstream>

namespace carleman {

double RadialGrid::dr() const noexcept {
    const double denom = origin == OriginCondition::dirichlet ? static_cast<double>(N) + 1.0 : static_cast<double>(N) + 0.5;
    return r_trunc / denom;
}

double RadialGrid::point(std::size_t j) const noexcept {
    const double offset = origin == OriginCondition::dirichlet ? 1.0 : 0.5;
    return (static_cast<double>(j) + offset) * dr();
}

std::vector<double> RadialGrid::points() const {
    std::vector<double> out(N);
    for (std::size_t j = 0; j < N; ++j) out[j] = point(j);
    return out;
}

namespace {
double max_spacing(double h, double E, double min_potential, double ppw) {
    return h / (ppw * std::sqrt(E + std::abs(std::min(0.0, min_potential)) + 1.0));
}
}  // namespace

RadialGrid RadialGrid::resolving(double r_trunc, double h, double E, double min_potential,
                                 double points_per_wavelength, OriginCondition origin) {
    if (!(r_trunc > 0.0) || !(h > 0.0)) throw InvalidInput("grid needs r_trunc > 0 and h > 0");
    const double step = max_spacing(h, E, min_potential, points_per_wavelength);
    const auto cells = static_cast<std::size_t>(std::ceil(r_trunc / step));
    RadialGrid g{r_trunc, std::max<std::size_t>(64, cells > 1 ? cells - 1 : 1), origin};
    while (g.dr() > step) ++g.N;
    while (g.N > 64 && RadialGrid{r_trunc, g.N - 1, origin}.dr() <= step) --g.N;
    return g;
}

bool resolves_wavelength(const RadialGrid& grid, double h, double E, double min_potential,
                         double points_per_wavelength) {
    return grid.N >= 1 && grid.dr() <= max_spacing(h, E, min_potential, points_per_wavelength) * (1.0 + 1e-12);
}

double angular_eigenvalue(int n, int ell) {
    if (n == 2 || n < 1) throw UnsupportedDimension("dimension n = " + std::to_string(n) + " is not supported (n != 2)");
    if (ell < 0) throw InvalidInput("angular degree must be >= 0");
    if (n == 1) return 0.0;
    const double l = ell;
    return l * (l + n - 2) + (n - 1.0) * (n - 3.0) / 4.0;
}

OriginCondition origin_condition(int n, int ell) {
    angular_eigenvalue(n, ell);
    if (n == 1) {
        if (ell > 1) throw InvalidInput("n = 1 has only the sectors l = 0 (odd) and l = 1 (even)");
        return ell == 1 ? OriginCondition::neumann : OriginCondition::dirichlet;
    }
    return OriginCondition::dirichlet;
}

namespace {

cplx outgoing_ratio(cplx c, double a) {
    // -a (z - 2 + 1/z) + c = 0  <=>  z^2 - 2 tau z + 1 = 0
    const cplx tau = 1.0 + c / (2.0 * a);
    const cplx root = std::sqrt(tau * tau - 1.0);
    const cplx z1 = tau + root, z2 = tau - root;
    const double m1 = std::abs(z1), m2 = std::abs(z2);
    if (m1 < m2 - 1e-14) return z1;
    if (m2 < m1 - 1e-14) return z2;
    return z1.imag() > 0.0 ? z1 : z2;
}

SectorOperator assemble(const RadialGrid& grid, const Problem& problem, const WeightSamples* weight, int ell,
                        double h, double eps, OuterBoundary outer, double ppw) {
    if (!(h > 0.0)) throw InvalidInput("h must be positive");
    if (!(eps >= 0.0)) throw InvalidInput("eps must be >= 0");
    const double lambda = angular_eigenvalue(problem.n, ell);
    if (grid.origin != origin_condition(problem.n, ell)) throw InvalidInput("grid origin does not match the sector");
    const double min_v = problem.potential.min_value(grid.r_trunc);
    if (!resolves_wavelength(grid, h, problem.E, min_v, ppw)) {
        std::ostringstream msg;
        msg << "grid with N = " << grid.N << ", dr = " << grid.dr() << " does not resolve h = " << h
            << " (refine N)";
        throw WavelengthUnresolved(msg.str());
    }
    const std::size_t n = grid.N;
    if (weight && (weight->dphi.size() != n || weight->ddphi.size() != n))
        throw InvalidInput("weight samples do not match the operator grid");

    SectorOperator op;
    op.n = problem.n;
    op.ell = ell;
    op.h = h;
    op.eps = eps;
    op.lambda = lambda;
    op.grid = grid;
    op.outer = outer;

    const double dr = grid.dr();
    const double a = h * h / (dr * dr);
    const double h2l = h * h * lambda;
    auto& m = op.matrix;
    m.diag.resize(n);
    m.lower.resize(n - 1);
    m.upper.resize(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        const double r = grid.point(j);
        double real = 2.0 * a + h2l / (r * r) + problem.potential.value(r) - problem.E;
        double drift = 0.0;
        if (weight) {
            const double d1 = weight->dphi[j];
            real += -d1 * d1 + h * weight->ddphi[j];
            drift = h * d1 / dr;
        }
        m.diag[j] = cplx(real, -eps);
        if (j + 1 < n) m.upper[j] = -a + drift;
        if (j > 0) m.lower[j - 1] = -a - drift;
    }
    if (grid.origin == OriginCondition::neumann) {
        const double drift = weight ? h * weight->dphi[0] / dr : 0.0;
        m.diag[0] += -a - drift;
    }
    if (outer == OuterBoundary::outgoing) {
        const double rt = grid.r_trunc;
        const cplx c(h2l / (rt * rt) + problem.potential.value(rt) - problem.E, -eps);
        cplx ratio = outgoing_ratio(c, a);
        double drift = 0.0;
        if (weight) {
            // u = e^{phi/h} v: the ghost value picks up exp(phi' dr / h)
            drift = h * weight->dphi[n - 1] / dr;
            ratio *= std::exp(weight->dphi[n - 1] * dr / h);
        }
        op.tail_ratio = ratio;
        m.diag[n - 1] += (-a + drift) * ratio;
    }
    return op;
}

}  // namespace

SectorOperator assemble_P(const RadialGrid& grid, const Problem& problem, int ell, double h, double eps,
                          OuterBoundary outer, double points_per_wavelength) {
    return assemble(grid, problem, nullptr, ell, h, eps, outer, points_per_wavelength);
}

SectorOperator assemble_P_phi(const RadialGrid& grid, const Problem& problem, const WeightSamples& weight, int ell,
                              double h, double eps, OuterBoundary outer, double points_per_wavelength) {
    if (grid.origin != OriginCondition::dirichlet)
        throw InvalidInput("assemble_P_phi supports Dirichlet-origin sectors only");
    return assemble(grid, problem, &weight, ell, h, eps, outer, points_per_wavelength);
}

}  // namespace carleman
