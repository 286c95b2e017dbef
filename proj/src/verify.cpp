#include "carleman/verify.hpp"

#include "carleman/csv.hpp"
#include "carleman/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace carleman {

namespace {
constexpr double kOverflowExponent = 354.0;  // e^{2 x} overflows past x ~ 354.9

double bump(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return std::exp(-1.0 / (t * (1.0 - t)));
}
}  // namespace

double test_function_spacing(double h, double E, double min_potential, double xi_max, double points_per_wavelength) {
    const double local = std::sqrt(E + std::abs(std::min(0.0, min_potential)) + 1.0);
    return h / (points_per_wavelength * std::max(xi_max, local));
}

TestFunction sample_test_function(std::uint64_t seed, double a, double b, double h, double max_dr, int modes,
                                  double xi_max) {
    if (!(a > 0.0) || !(b > a)) throw InvalidInput("test function support must satisfy 0 < a < b");
    if (!(h > 0.0) || !(max_dr > 0.0)) throw InvalidInput("test function needs h > 0 and dr > 0");
    if (modes < 1) throw InvalidInput("test function needs at least one mode");
    const auto cells = static_cast<std::size_t>(std::ceil((b - a) / max_dr));
    TestFunction f;
    f.seed = seed;
    f.a = a;
    f.b = b;
    f.dr = (b - a) / static_cast<double>(cells);
    if (a - 2.0 * f.dr <= 0.0) throw InvalidInput("test function support leaves no room for padding at the origin");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> freq(-xi_max, xi_max);
    std::vector<cplx> amp(static_cast<std::size_t>(modes));
    std::vector<double> xi(amp.size());
    for (std::size_t k = 0; k < amp.size(); ++k) {
        amp[k] = cplx(normal(rng), normal(rng));
        xi[k] = freq(rng);
    }

    const std::size_t n = cells + 5;  // nodes a..b plus two pads on each side
    f.r.resize(n);
    f.v.assign(n, cplx(0.0, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        const double offset = static_cast<double>(j) - 2.0;
        f.r[j] = a + offset * f.dr;
        if (j < 2 || j > cells + 2) continue;
        const double env = bump(offset / static_cast<double>(cells));
        if (env == 0.0) continue;
        cplx sum = 0.0;
        for (std::size_t k = 0; k < amp.size(); ++k) sum += amp[k] * std::polar(1.0, xi[k] * f.r[j] / h);
        f.v[j] = env * sum;
    }
    return f;
}

CarlemanProfile sample_profile(const CarlemanWeight& weight, std::span<const double> r) {
    CarlemanProfile p;
    p.phi.resize(r.size());
    p.m.resize(r.size());
    const double delta = weight.params().delta;
    for (std::size_t j = 0; j < r.size(); ++j) {
        p.phi[j] = weight.phi_at(r[j]);
        p.m[j] = eval_m(r[j], delta);
    }
    return p;
}

namespace {

double radial_factor(double r, int n) { return n == 1 ? 1.0 : std::pow(r, 0.5 * (n - 1)); }

std::vector<cplx> apply_sector_stencil(std::span<const cplx> u, std::span<const double> r, double dr,
                                       const Problem& problem, double lambda, double h, double eps) {
    const std::size_t n = u.size();
    const double a = h * h / (dr * dr);
    std::vector<cplx> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        const cplx left = j > 0 ? u[j - 1] : cplx(0.0);
        const cplx right = j + 1 < n ? u[j + 1] : cplx(0.0);
        const double c = h * h * lambda / (r[j] * r[j]) + problem.potential.value(r[j]) - problem.E;
        out[j] = -a * (left - 2.0 * u[j] + right) + cplx(c, -eps) * u[j];
    }
    return out;
}

}  // namespace

std::vector<cplx> conjugated_samples(const TestFunction& v, const CarlemanProfile& profile, double h, int n) {
    if (profile.phi.size() != v.r.size()) throw InvalidInput("profile does not match the test function");
    const double top = *std::max_element(profile.phi.begin(), profile.phi.end()) / h;
    std::vector<cplx> u(v.v.size());
    for (std::size_t j = 0; j < u.size(); ++j)
        u[j] = std::exp(profile.phi[j] / h - top) * radial_factor(v.r[j], n) * v.v[j];
    return u;
}

CarlemanSides carleman_sides(const TestFunction& v, const CarlemanProfile& profile, const Problem& problem,
                             double h, double eps, int ell, bool log_shift) {
    if (!(h > 0.0)) throw InvalidInput("h must be positive");
    if (!(eps >= 0.0)) throw InvalidInput("eps must be >= 0");
    const std::size_t n = v.r.size();
    if (profile.phi.size() != n || profile.m.size() != n) throw InvalidInput("profile does not match the test function");
    const double lambda = angular_eigenvalue(problem.n, ell);
    const double top = *std::max_element(profile.phi.begin(), profile.phi.end()) / h;
    if (!log_shift && top > kOverflowExponent)
        throw OverflowRisk("max phi/h = " + std::to_string(top) + " overflows e^{2 phi/h}; enable the log shift");
    const double shift = log_shift ? top : 0.0;

    std::vector<cplx> u(n);
    for (std::size_t j = 0; j < n; ++j) u[j] = radial_factor(v.r[j], problem.n) * v.v[j];
    const auto pu = apply_sector_stencil(u, v.r, v.dr, problem, lambda, h, eps);

    // All end nodes vanish, so the trapezoid rule is a plain sum.
    CarlemanSides out;
    out.log_scale = 2.0 * shift;
    for (std::size_t j = 0; j < n; ++j) {
        const double e2 = std::exp(2.0 * (profile.phi[j] / h - shift));
        const double m2 = profile.m[j] * profile.m[j];
        const double u2 = std::norm(u[j]);
        out.lhs += e2 * u2 / m2;
        out.rhs_main += e2 * m2 * std::norm(pu[j]);
        out.rhs_eps += e2 * u2;
    }
    out.lhs *= v.dr;
    out.rhs_main *= v.dr / (h * h);
    out.rhs_eps *= eps == 0.0 ? 0.0 : v.dr * eps / h;
    return out;
}

CarlemanSides carleman_sides(const TestFunction& v, const CarlemanWeight& weight, const Problem& problem, double h,
                             double eps, int ell, bool log_shift) {
    if (h > weight.params().h0 * (1.0 + 1e-12))
        throw InvalidInput("h = " + std::to_string(h) + " exceeds the weight's h0 = " +
                           std::to_string(weight.params().h0));
    return carleman_sides(v, sample_profile(weight, v.r), problem, h, eps, ell, log_shift);
}

std::vector<double> conjugated_potential(const CarlemanWeight& weight, const PotentialModel& potential,
                                         std::span<const double> r, double h) {
    std::vector<double> out(r.size());
    for (std::size_t j = 0; j < r.size(); ++j) {
        const auto d = weight.derivatives_at(r[j]);
        out[j] = potential.value(r[j]) - d.d1 * d.d1 + h * d.d2;
    }
    return out;
}

EnergyProfile energy_functional(std::span<const cplx> u, std::span<const double> r, double dr,
                                std::span<const double> V_phi, double lambda, double h, double E, double delta) {
    const std::size_t n = u.size();
    if (r.size() != n || V_phi.size() != n) throw InvalidInput("energy functional inputs differ in length");
    EnergyProfile out;
    out.F.resize(n);
    out.wF.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const cplx left = j > 0 ? u[j - 1] : cplx(0.0);
        const cplx right = j + 1 < n ? u[j + 1] : cplx(0.0);
        const cplx du = (right - left) / (2.0 * dr);
        const double centrifugal = lambda == 0.0 ? 0.0 : h * h * lambda / (r[j] * r[j]);
        out.F[j] = h * h * std::norm(du) - (centrifugal + V_phi[j] - E) * std::norm(u[j]);
        out.wF[j] = eval_w(r[j], delta) * out.F[j];
    }
    return out;
}

CarlemanSuiteResult run_carleman_suite(const CarlemanWeight& weight, double E,
                                       const std::vector<NamedPotential>& potentials,
                                       const CarlemanSuiteOptions& options) {
    if (potentials.empty()) throw InvalidInput("carleman suite needs at least one potential");
    if (options.seeds < 1) throw InvalidInput("carleman suite needs at least one seed");
    if (!(options.support_max - options.support_min > 1.0)) throw InvalidInput("support window is too narrow");
    CarlemanSuiteResult result;
    result.hs = options.hs;
    if (result.hs.empty())
        for (int k = 0; k <= 5; ++k) result.hs.push_back(weight.params().h0 * std::ldexp(1.0, -k));

    struct Task {
        std::size_t potential;
        std::size_t h_index;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < potentials.size(); ++p)
        for (std::size_t k = 0; k < result.hs.size(); ++k)
            for (int s = 0; s < options.seeds; ++s) tasks.push_back({p, k, static_cast<std::uint64_t>(s)});

    std::vector<double> min_v(potentials.size());
    for (std::size_t p = 0; p < potentials.size(); ++p)
        min_v[p] = potentials[p].potential.min_value(options.support_max);

    result.cases.resize(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            try {
                const Task& task = tasks[t];
                const double h = result.hs[task.h_index];
                // Supports come from a stream independent of the amplitudes.
                std::mt19937_64 rng(task.seed ^ 0x9e3779b97f4a7c15ULL);
                std::uniform_real_distribution<double> unit(0.0, 1.0);
                const double a = options.support_min + unit(rng) * (options.support_max - options.support_min - 1.0);
                const double len = 1.0 + unit(rng) * (std::min(10.0, options.support_max - a) - 1.0);
                const double dr = test_function_spacing(h, E, min_v[task.potential], options.xi_max,
                                                        options.points_per_wavelength);
                const TestFunction v = sample_test_function(task.seed, a, a + len, h, dr, options.modes,
                                                            options.xi_max);
                const Problem problem{options.n, E, potentials[task.potential].potential};
                const double eps = options.eps_factor * h;
                CarlemanCase& c = result.cases[t];
                c.seed = task.seed;
                c.potential = potentials[task.potential].name;
                c.h = h;
                c.eps = eps;
                c.a = a;
                c.b = a + len;
                c.sides = carleman_sides(v, weight, problem, h, eps, options.ell);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) failure = std::current_exception();
                next = tasks.size();
                return;
            }
        }
    };
    const int workers = std::max(1, options.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    result.c_per_h.assign(result.hs.size(), 0.0);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        auto& c = result.c_per_h[tasks[t].h_index];
        c = std::max(c, result.cases[t].sides.ratio());
    }
    const auto [lo, hi] = std::minmax_element(result.c_per_h.begin(), result.c_per_h.end());
    result.c_emp = *hi;
    result.growth = *hi / result.c_per_h.front();
    result.spread = *hi / *lo;
    return result;
}

std::string carleman_csv(const std::vector<CarlemanCase>& cases) {
    CsvTable table;
    table.header = {"seed", "h", "eps", "lhs", "rhs_main", "rhs_eps", "ratio"};
    for (const auto& c : cases)
        table.rows.push_back({std::to_string(c.seed), format_double(c.h), format_double(c.eps),
                              format_double(c.sides.lhs), format_double(c.sides.rhs_main),
                              format_double(c.sides.rhs_eps), format_double(c.sides.ratio())});
    return to_csv_string(table);
}

}  // namespace carleman
