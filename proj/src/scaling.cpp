#include "carleman/scaling.hpp"

#include "carleman/csv.hpp"
#include "carleman/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace carleman {

std::string_view to_string(FitModel model) { return model == FitModel::exp_inv_h ? "exp_inv_h" : "power_law"; }

FitModel fit_model_from_string(std::string_view name) {
    if (name == "exp_inv_h") return FitModel::exp_inv_h;
    if (name == "power_law") return FitModel::power_law;
    throw InvalidInput("unknown fit model '" + std::string(name) + "'");
}

namespace {

FitResult least_squares(FitModel model, std::span<const double> hs, std::span<const double> norms) {
    if (hs.size() != norms.size()) throw InvalidInput("fit inputs differ in length");
    if (hs.size() < 4) throw DegenerateFit("a fit needs at least 4 converged rows, got " + std::to_string(hs.size()));
    const std::size_t n = hs.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(hs[i] > 0.0) || !(norms[i] > 0.0)) throw InvalidInput("fit needs positive h and norm");
        x[i] = model == FitModel::exp_inv_h ? 1.0 / hs[i] : -std::log(hs[i]);
        y[i] = std::log(norms[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        scale = std::max(scale, std::abs(x[i]));
    }
    if (!(sxx > 1e-24 * scale * scale * static_cast<double>(n)))
        throw DegenerateFit("fit design matrix is rank-deficient (all h equal)");
    FitResult fit;
    fit.model = model;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.rows_used = static_cast<int>(n);
    for (std::size_t i = 0; i < n; ++i)
        fit.residual = std::max(fit.residual, std::abs(y[i] - (fit.slope * x[i] + fit.intercept)));
    return fit;
}

FitResult fit_rows(FitModel model, std::span<const SweepRow> rows) {
    std::vector<double> hs, norms;
    for (const auto& r : rows)
        if (r.converged) {
            hs.push_back(r.h);
            norms.push_back(r.norm);
        }
    return least_squares(model, hs, norms);
}

SweepRow compute_row(const Problem& problem, double h, double eps, const SweepOptions& options) {
    NormRequest req = options.request;
    req.h = h;
    req.eps = eps;
    const NormResult res = adaptive_norm(req, problem, options.truncation);
    return {h,
            eps,
            req.variant,
            res.value,
            res.converged && res.truncation_converged,
            res.sector_argmax,
            res.r_trunc,
            res.N,
            res.truncation_change,
            res.raw_value};
}

template <class F>
std::vector<SweepRow> compute_rows(std::size_t count, int workers, F&& row) {
    std::vector<SweepRow> rows(count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= count) return;
            try {
                rows[k] = row(k);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) failure = std::current_exception();
                next = count;
                return;
            }
        }
    };
    workers = std::clamp(workers, 1, std::max<int>(1, static_cast<int>(count)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

}  // namespace

FitResult fit_exp_inv_h(std::span<const SweepRow> rows) { return fit_rows(FitModel::exp_inv_h, rows); }
FitResult fit_power_law(std::span<const SweepRow> rows) { return fit_rows(FitModel::power_law, rows); }

FitResult fit_exp_inv_h(std::span<const double> hs, std::span<const double> norms) {
    return least_squares(FitModel::exp_inv_h, hs, norms);
}

FitResult fit_power_law(std::span<const double> hs, std::span<const double> norms) {
    return least_squares(FitModel::power_law, hs, norms);
}

std::vector<double> geometric_hs(double h_max, double h_min, int count) {
    if (!(h_max > 0.0) || !(h_min > 0.0) || count < 1) throw InvalidInput("geometric h list needs positive bounds");
    if (count == 1) return {h_max};
    if (!(h_max > h_min)) throw InvalidInput("geometric h list needs h_max > h_min");
    std::vector<double> hs(static_cast<std::size_t>(count));
    const double step = std::log(h_min / h_max) / (count - 1);
    for (int k = 0; k < count; ++k) hs[static_cast<std::size_t>(k)] = h_max * std::exp(step * k);
    hs.front() = h_max;
    hs.back() = h_min;
    return hs;
}

SweepResult h_sweep(const Problem& problem, std::span<const double> hs, const SweepOptions& options,
                    std::optional<FitModel> fit_model) {
    if (hs.empty()) throw InvalidInput("h sweep needs at least one h");
    for (std::size_t i = 0; i < hs.size(); ++i) {
        if (!(hs[i] > 0.0)) throw InvalidInput("h values must be positive");
        if (i > 0 && !(hs[i] < hs[i - 1]))
            throw InvalidInput(hs[i] == hs[i - 1] ? "duplicate h in sweep" : "h values must be strictly decreasing");
    }
    SweepResult out;
    out.rows = compute_rows(hs.size(), options.workers, [&](std::size_t k) {
        return compute_row(problem, hs[k], options.eps_factor * hs[k], options);
    });
    if (fit_model) {
        const auto converged = std::count_if(out.rows.begin(), out.rows.end(), [](const SweepRow& r) { return r.converged; });
        if (converged >= 4)
            out.fit = *fit_model == FitModel::exp_inv_h ? fit_exp_inv_h(out.rows) : fit_power_law(out.rows);
    }
    return out;
}

EpsSweepResult epsilon_sweep(const Problem& problem, double h, std::span<const double> eps_list,
                             const SweepOptions& options, double tolerance) {
    if (eps_list.empty()) throw InvalidInput("eps sweep needs at least one eps");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0)) throw InvalidInput("eps values must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw InvalidInput("eps values must be strictly decreasing");
    }
    EpsSweepResult out;
    out.rows = compute_rows(eps_list.size(), options.workers,
                            [&](std::size_t k) { return compute_row(problem, h, eps_list[k], options); });
    out.stabilized_value = out.rows.back().norm;
    auto change = [&](std::size_t k) {
        return std::abs(out.rows[k].norm - out.rows[k - 1].norm) / std::max(out.rows[k].norm, 1e-300);
    };
    const std::size_t n = out.rows.size();
    if (n >= 2) {
        out.stabilized = change(n - 1) < tolerance;
        std::size_t first = n - 1;
        while (first >= 1 && change(first) < tolerance) --first;
        if (first < n - 1) out.stable_below = out.rows[first].eps;
    }
    return out;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
    CsvTable table;
    table.header = {"h", "eps", "variant", "norm", "converged", "sector_argmax"};
    for (const auto& r : rows)
        table.rows.push_back({format_double(r.h), format_double(r.eps), std::string(to_string(r.variant)),
                              format_double(r.norm), r.converged ? "true" : "false", std::to_string(r.sector_argmax)});
    return to_csv_string(table);
}

std::string fit_json(const FitResult& fit) {
    nlohmann::ordered_json j;
    j["model"] = to_string(fit.model);
    j[fit.model == FitModel::exp_inv_h ? "C_est" : "slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["residual"] = fit.residual;
    j["rows_used"] = fit.rows_used;
    return j.dump(2) + "\n";
}

}  // namespace carleman
