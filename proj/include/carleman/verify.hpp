#pragma once

#include "carleman/operators.hpp"
#include "carleman/weights.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace carleman {

/// Grid samples of a smooth v supported in [a, b]. Nodes are uniform with
/// spacing dr, cover [a, b] exactly and carry two zero nodes on either side.
struct TestFunction {
    std::uint64_t seed = 0;
    double a = 0.0;
    double b = 0.0;
    double dr = 0.0;
    std::vector<double> r;
    std::vector<cplx> v;
};

/// Bump envelope exp(-1/(t(1-t))) on [a, b] times sum_k c_k exp(i xi_k r / h)
/// with `modes` complex Gaussian amplitudes and frequencies xi_k uniform in
/// [-xi_max, xi_max]. The spacing is the largest one <= max_dr that splits
/// [a, b] evenly. Requires 0 < a < b.
TestFunction sample_test_function(std::uint64_t seed, double a, double b, double h, double max_dr, int modes = 4,
                                  double xi_max = 2.0);

/// Spacing that resolves frequencies up to xi_max/h and the local wavelength.
double test_function_spacing(double h, double E, double min_potential, double xi_max = 2.0,
                             double points_per_wavelength = 10.0);

/// phi and m on the nodes of a test function.
struct CarlemanProfile {
    std::vector<double> phi;
    std::vector<double> m;
};

CarlemanProfile sample_profile(const CarlemanWeight& weight, std::span<const double> r);

struct CarlemanSides {
    double lhs = 0.0;
    double rhs_main = 0.0;
    double rhs_eps = 0.0;
    /// The sides are reported times exp(-log_scale); log_scale = 2 max(phi)/h
    /// when shifting, 0 otherwise.
    double log_scale = 0.0;
    double ratio() const { return lhs / (rhs_main + rhs_eps); }
};

/// lhs = |m^-1 e^{phi/h} v|^2, rhs_main = h^-2 |m e^{phi/h} (P - i eps) v|^2,
/// rhs_eps = (eps/h) |e^{phi/h} v|^2 in the sector variables u = r^((n-1)/2) v
/// with measure dr. Without `log_shift` an OverflowRisk is raised once
/// max phi/h exceeds 354 (e^{2 phi/h} would overflow).
CarlemanSides carleman_sides(const TestFunction& v, const CarlemanProfile& profile, const Problem& problem,
                             double h, double eps, int ell, bool log_shift = true);

/// Same, sampling phi and m from the weight. Requires h <= h0.
CarlemanSides carleman_sides(const TestFunction& v, const CarlemanWeight& weight, const Problem& problem, double h,
                             double eps, int ell, bool log_shift = true);

/// V_phi = V - phi'^2 + h phi'' on the given radii.
std::vector<double> conjugated_potential(const CarlemanWeight& weight, const PotentialModel& potential,
                                         std::span<const double> r, double h);

struct EnergyProfile {
    std::vector<double> F;
    std::vector<double> wF;
};

/// F(r_j) = |h u'(r_j)|^2 - (h^2 lambda / r_j^2 + V_phi(r_j) - E) |u_j|^2 with a
/// centred difference for u' (zero outside the samples) and wF = w(r_j) F(r_j).
EnergyProfile energy_functional(std::span<const cplx> u, std::span<const double> r, double dr,
                                std::span<const double> V_phi, double lambda, double h, double E, double delta);

/// u = e^{(phi - max phi)/h} r^((n-1)/2) v on the test-function nodes.
std::vector<cplx> conjugated_samples(const TestFunction& v, const CarlemanProfile& profile, double h, int n);

struct NamedPotential {
    std::string name;
    PotentialModel potential;
};

struct CarlemanCase {
    std::uint64_t seed = 0;
    std::string potential;
    double h = 0.0;
    double eps = 0.0;
    double a = 0.0;
    double b = 0.0;
    CarlemanSides sides;
};

struct CarlemanSuiteOptions {
    int seeds = 100;
    std::vector<double> hs;      // empty: h0 * 2^-k, k = 0..5
    double eps_factor = 1e-6;    // eps = eps_factor * h
    int n = 1;
    int ell = 0;
    int modes = 4;
    double xi_max = 2.0;
    double support_min = 0.05;   // supports [a, b] are drawn inside [support_min, support_max]
    double support_max = 20.0;
    double points_per_wavelength = 10.0;
    int workers = 1;
};

struct CarlemanSuiteResult {
    std::vector<CarlemanCase> cases;
    std::vector<double> hs;
    std::vector<double> c_per_h;  // max ratio at each h
    double c_emp = 0.0;           // max over everything
    /// max_h C(h) / C(hs.front()): growth as h decreases from h0.
    double growth = 0.0;
    /// max_h C(h) / min_h C(h).
    double spread = 0.0;
};

CarlemanSuiteResult run_carleman_suite(const CarlemanWeight& weight, double E,
                                       const std::vector<NamedPotential>& potentials,
                                       const CarlemanSuiteOptions& options);

/// CSV with header seed,h,eps,lhs,rhs_main,rhs_eps,ratio.
std::string carleman_csv(const std::vector<CarlemanCase>& cases);

}  // namespace carleman
