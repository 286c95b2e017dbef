#include "carleman/resolvent.hpp"

#include "carleman/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace carleman {

std::string_view to_string(NormVariant variant) {
    return variant == NormVariant::global_weighted ? "global_weighted" : "exterior_cutoff";
}

NormVariant norm_variant_from_string(std::string_view name) {
    if (name == "global_weighted") return NormVariant::global_weighted;
    if (name == "exterior_cutoff") return NormVariant::exterior_cutoff;
    throw InvalidInput("unknown norm variant '" + std::string(name) + "'");
}

namespace {

double norm2(std::span<const cplx> x) {
    double acc = 0.0;
    for (const auto& v : x) acc += std::norm(v);
    return std::sqrt(acc);
}

}  // namespace

SectorSolver::SectorSolver(const SectorOperator& op) : op_(&op), lu_(op.matrix) {}

SectorSolve SectorSolver::solve(std::span<const cplx> rhs) const {
    const std::size_t n = op_->matrix.size();
    if (rhs.size() != n) throw InvalidInput("rhs length does not match the operator");
    SectorSolve out;
    out.u.assign(rhs.begin(), rhs.end());
    const double rhs_norm = norm2(rhs);
    if (rhs_norm == 0.0) return out;
    lu_.solve_in_place(out.u);

    std::vector<cplx> r(n), au(n);
    auto residual = [&] {
        op_->matrix.multiply(out.u, au);
        for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - au[i];
        return norm2(r) / rhs_norm;
    };
    double res = residual();
    for (int step = 0; step < 5 && res > 1e-12; ++step) {
        std::vector<cplx> correction = r;
        lu_.solve_in_place(correction);
        std::vector<cplx> saved = out.u;
        for (std::size_t i = 0; i < n; ++i) out.u[i] += correction[i];
        const double next = residual();
        if (!(next < res)) {
            out.u = std::move(saved);
            break;
        }
        res = next;
    }
    if (!std::isfinite(res)) throw SingularSystem("sector solve produced non-finite values (use eps > 0)");
    out.relative_residual = res;
    return out;
}

SectorSolve solve_sector(const SectorOperator& op, std::span<const cplx> rhs) {
    return SectorSolver(op).solve(rhs);
}

std::vector<double> norm_weights(const RadialGrid& grid, double s, NormVariant variant, double R0_cut) {
    std::vector<double> w(grid.N);
    for (std::size_t j = 0; j < grid.N; ++j) {
        const double r = grid.point(j);
        const bool keep = variant == NormVariant::global_weighted || r >= R0_cut;
        w[j] = keep ? std::pow(1.0 + r, -s) : 0.0;
    }
    return w;
}

SectorNorm weighted_sector_norm(const SectorOperator& op, double s, NormVariant variant, double R0_cut,
                                const PowerIterationOptions& options) {
    if (!(s > 0.5)) throw InvalidInput("weight exponent s must exceed 1/2");
    if (!(op.eps > 0.0)) throw SingularSystem("weighted norms need eps > 0");
    const auto w = norm_weights(op.grid, s, variant, R0_cut);
    const std::size_t n = w.size();
    SectorNorm out;
    if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) {
        out.converged = true;
        return out;
    }
    const SectorSolver solver(op);

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal;
    std::vector<cplx> x(n), y(n);
    for (auto& v : x) v = cplx(normal(rng), normal(rng));
    auto normalise = [](std::vector<cplx>& v) {
        const double nv = norm2(v);
        for (auto& e : v) e /= nv;
        return nv;
    };
    // Start inside the range of the weight.
    for (std::size_t i = 0; i < n; ++i) x[i] *= w[i];
    normalise(x);

    auto gram = [&](const std::vector<cplx>& in, std::vector<cplx>& res) {
        for (std::size_t i = 0; i < n; ++i) res[i] = w[i] * in[i];
        solver.apply_inverse(res);
        for (std::size_t i = 0; i < n; ++i) res[i] *= w[i] * w[i];
        solver.apply_inverse_adjoint(res);
        for (std::size_t i = 0; i < n; ++i) res[i] *= w[i];
    };

    double theta = 0.0;
    for (int it = 1; it <= options.max_iter; ++it) {
        gram(x, y);
        cplx dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += std::conj(x[i]) * y[i];
        theta = dot.real();
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) res += std::norm(y[i] - theta * x[i]);
        res = std::sqrt(res);
        out.iterations = it;
        if (!std::isfinite(theta)) throw SingularSystem("power iteration diverged (use eps > 0)");
        const double ny = norm2(y);
        if (ny == 0.0) {
            theta = 0.0;
            out.converged = true;
            break;
        }
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
        if (res <= options.tol * theta) {
            // One more Rayleigh quotient with the improved vector.
            gram(x, y);
            dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += std::conj(x[i]) * y[i];
            theta = std::max(theta, dot.real());
            out.converged = true;
            break;
        }
    }
    out.value = std::sqrt(std::max(theta, 0.0));
    return out;
}

double dense_weighted_norm(const SectorOperator& op, double s, NormVariant variant, double R0_cut) {
    const std::size_t n = op.matrix.size();
    if (n > 2000) throw InvalidInput("dense oracle is limited to 2000 unknowns");
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = op.matrix.diag[i];
        if (i + 1 < n) {
            a(i, i + 1) = op.matrix.upper[i];
            a(i + 1, i) = op.matrix.lower[i];
        }
    }
    const auto w = norm_weights(op.grid, s, variant, R0_cut);
    const Eigen::VectorXd wv = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(n));
    const Eigen::MatrixXcd inv = a.partialPivLu().inverse();
    const Eigen::MatrixXcd k = wv.asDiagonal() * inv * wv.asDiagonal();
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(k);
    return svd.singularValues()(0);
}

int default_L_max(double r_trunc, double h, double E, double sup_potential) {
    return static_cast<int>(std::ceil(r_trunc * std::sqrt(E + 1.0 + sup_potential) / h)) + 2;
}

bool sector_is_elliptic(double lambda, double r_trunc, double h, double E, double sup_potential) {
    return h * h * lambda / (r_trunc * r_trunc) >= E + 1.0 + sup_potential;
}

namespace {

RadialGrid sector_grid(const RadialGrid& base, OriginCondition origin, const NormRequest& req, const Problem& p,
                       double min_v) {
    RadialGrid g = base.with_origin(origin);
    // The staggered grid has a slightly wider spacing for the same N.
    if (!resolves_wavelength(g, req.h, p.E, min_v, req.points_per_wavelength)) {
        RadialGrid bumped = g;
        ++bumped.N;
        if (resolves_wavelength(bumped, req.h, p.E, min_v, req.points_per_wavelength)) return bumped;
    }
    return g;
}

}  // namespace

NormResult full_norm(const NormRequest& request, const Problem& problem, const RadialGrid& grid) {
    if (!(request.s > 0.5)) throw InvalidInput("s must exceed 1/2");
    if (request.variant == NormVariant::exterior_cutoff && !(request.R0_cut > 0.0))
        throw InvalidInput("exterior_cutoff needs R0_cut > 0");
    if (!(request.eps > 0.0)) throw SingularSystem("weighted norms need eps > 0");
    if (problem.n == 2 || problem.n < 1) throw UnsupportedDimension("n = 2 is not supported");

    const double sup_v = problem.potential.sup_abs(grid.r_trunc);
    const double min_v = problem.potential.min_value(grid.r_trunc);
    const int floor_L = default_L_max(grid.r_trunc, request.h, problem.E, sup_v) - 2;
    int L_max = request.L_max >= 0 ? request.L_max : floor_L + 2;
    if (problem.n == 1) L_max = request.include_even_sector ? 1 : 0;
    else if (L_max < floor_L) throw InvalidInput("L_max is below ceil(r_trunc sqrt(E+1+sup|V|)/h)");

    std::vector<int> sectors;
    int skipped = 0;
    for (int ell = 0; ell <= L_max; ++ell) {
        if (problem.n > 1 &&
            sector_is_elliptic(angular_eigenvalue(problem.n, ell), grid.r_trunc, request.h, problem.E, sup_v)) {
            ++skipped;
            continue;
        }
        sectors.push_back(ell);
    }

    std::vector<SectorNorm> norms(sectors.size());
    std::vector<std::size_t> sizes(sectors.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= sectors.size()) return;
            try {
                const int ell = sectors[k];
                const RadialGrid g = sector_grid(grid, origin_condition(problem.n, ell), request, problem, min_v);
                const SectorOperator op = assemble_P(g, problem, ell, request.h, request.eps, request.outer,
                                                     request.points_per_wavelength);
                norms[k] = weighted_sector_norm(op, request.s, request.variant, request.R0_cut, request.power);
                sizes[k] = g.N;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = sectors.size();
                return;
            }
        }
    };
    const int workers = std::clamp(request.workers, 1, std::max(1, static_cast<int>(sectors.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    NormResult out;
    out.r_trunc = grid.r_trunc;
    out.N = grid.N;
    out.sectors_computed = static_cast<int>(sectors.size());
    out.sectors_skipped = skipped;
    out.value = -1.0;
    for (std::size_t k = 0; k < sectors.size(); ++k) {
        if (norms[k].value > out.value) {
            out.value = norms[k].value;
            out.sector_argmax = sectors[k];
            out.iterations = norms[k].iterations;
        }
        if (!norms[k].converged && !out.unconverged_sector) {
            out.converged = false;
            out.unconverged_sector = sectors[k];
        }
        out.N = std::max(out.N, sizes[k]);
    }
    if (sectors.empty()) out.value = 0.0;
    return out;
}

double extrapolate_tail(double inner_value, double outer_value, double inner_r, double outer_r, double s) {
    const double a = 1.0 - 2.0 * s;
    const double gap = std::pow(1.0 + inner_r, a) - std::pow(1.0 + outer_r, a);
    // A norm that shrank with r has no tail of this form left to add.
    const double c = std::max(0.0, (outer_value - inner_value) / gap);
    return outer_value + c * std::pow(1.0 + outer_r, a);
}

NormResult adaptive_norm(const NormRequest& request, const Problem& problem, const TruncationOptions& truncation) {
    double r = truncation.r_trunc > 0.0 ? truncation.r_trunc : std::max(40.0, 2.0 * request.R0_cut);
    auto compute = [&](double radius) {
        const double min_v = problem.potential.min_value(radius);
        RadialGrid g = RadialGrid::resolving(radius, request.h, problem.E, min_v, request.points_per_wavelength,
                                             OriginCondition::neumann);
        g.N = static_cast<std::size_t>(std::ceil(static_cast<double>(g.N) * truncation.refine));
        if (g.N > truncation.max_points)
            throw BudgetExceeded("grid for h = " + std::to_string(request.h) + " and r_trunc = " +
                                 std::to_string(radius) + " needs " + std::to_string(g.N) + " points (cap " +
                                 std::to_string(truncation.max_points) + ")");
        return full_norm(request, problem, g.with_origin(OriginCondition::dirichlet));
    };
    NormResult current = compute(r);
    current.raw_value = current.value;
    if (!truncation.auto_double) return current;
    current.truncation_converged = false;
    double previous_estimate = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < truncation.max_doublings; ++k) {
        const double inner = r;
        r *= 2.0;
        NormResult next = compute(r);
        next.raw_value = next.value;
        double reference = current.raw_value;
        if (truncation.tail_correction) {
            next.value = extrapolate_tail(current.raw_value, next.raw_value, inner, r, request.s);
            reference = previous_estimate;
            previous_estimate = next.value;
        }
        current = std::move(next);
        if (std::isnan(reference)) continue;  // the first extrapolation has nothing to compare with
        const double change = std::abs(current.value - reference) / std::max(current.value, 1e-300);
        current.truncation_change = change;
        current.truncation_converged = change < truncation.tolerance;
        if (current.truncation_converged) break;
    }
    return current;
}

}  // namespace carleman
