#include "carleman/errors.hpp"
#include "carleman/scaling.hpp"

#include "doctest.h"
#include "json.hpp"

#include <cmath>
#include <random>

using namespace carleman;

namespace {

std::vector<double> sweep_hs() { return geometric_hs(0.1, 0.01, 8); }

std::vector<double> synthetic(const std::vector<double>& hs, double (*law)(double), double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-noise, noise);
    std::vector<double> out;
    for (double h : hs) out.push_back(law(h) * (1.0 + u(rng)));
    return out;
}

SweepOptions fixed_truncation(double r_trunc) {
    SweepOptions o;
    o.truncation.r_trunc = r_trunc;
    o.truncation.auto_double = false;
    return o;
}

}  // namespace

TEST_CASE("geometric h grid") {
    const auto hs = sweep_hs();
    REQUIRE(hs.size() == 8);
    CHECK(hs.front() == doctest::Approx(0.1));
    CHECK(hs.back() == doctest::Approx(0.01));
    for (std::size_t i = 1; i < hs.size(); ++i) CHECK(hs[i] < hs[i - 1]);
}

TEST_CASE("exponential fit recovers exp(3/h)") {
    const auto hs = geometric_hs(0.5, 0.1, 6);
    const auto exact = synthetic(hs, [](double h) { return std::exp(3.0 / h); }, 0.0, 0);
    const auto fit = fit_exp_inv_h(hs, exact);
    CHECK(fit.slope == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(fit.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(fit.rows_used == 6);

    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto noisy = synthetic(hs, [](double h) { return std::exp(3.0 / h); }, 0.01, seed);
        CHECK(std::abs(fit_exp_inv_h(hs, noisy).slope - 3.0) <= 0.1);
    }
}

TEST_CASE("power law fit recovers 5/h") {
    const auto hs = sweep_hs();
    const auto exact = synthetic(hs, [](double h) { return 5.0 / h; }, 0.0, 0);
    const auto fit = fit_power_law(hs, exact);
    CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit.intercept == doctest::Approx(std::log(5.0)).epsilon(1e-10));
    CHECK(fit.residual < 1e-10);
    for (std::uint64_t seed : {4u, 5u, 6u}) {
        const auto noisy = synthetic(hs, [](double h) { return 5.0 / h; }, 0.01, seed);
        CHECK(std::abs(fit_power_law(hs, noisy).slope - 1.0) <= 0.05);
    }
}

TEST_CASE("the two models are distinguishable") {
    const auto hs = sweep_hs();
    const auto power = synthetic(hs, [](double h) { return 1.0 / h; }, 0.0, 0);
    CHECK(fit_exp_inv_h(hs, power).residual > 100.0 * (fit_power_law(hs, power).residual + 1e-12));
    CHECK(fit_exp_inv_h(hs, power).residual > 0.1);
    const auto expo = synthetic(hs, [](double h) { return std::exp(1.0 / h); }, 0.0, 0);
    CHECK(fit_power_law(hs, expo).slope > 3.0);
}

TEST_CASE("degenerate fits") {
    const std::vector<double> three{0.1, 0.05, 0.02}, norms{1.0, 2.0, 5.0};
    CHECK_THROWS_AS(fit_power_law(three, norms), DegenerateFit);
    const std::vector<double> same(5, 0.1), vals(5, 1.0);
    CHECK_THROWS_AS(fit_exp_inv_h(same, vals), DegenerateFit);
    std::vector<SweepRow> rows(5);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = {0.1 / (i + 1), 0.0, NormVariant::global_weighted, 1.0 + i, i != 2};
    CHECK(fit_power_law(rows).rows_used == 4);
    rows[3].converged = false;
    CHECK_THROWS_AS(fit_power_law(rows), DegenerateFit);
}

TEST_CASE("h_sweep: single row, duplicates, monotone free growth") {
    const Problem free{1, 1.0, PotentialModel::zero(0.6)};
    auto opt = fixed_truncation(20.0);
    const std::vector<double> one{0.1};
    const auto single = h_sweep(free, one, opt, FitModel::power_law);
    CHECK(single.rows.size() == 1);
    CHECK_FALSE(single.fit.has_value());

    const std::vector<double> dup{0.1, 0.05, 0.05};
    CHECK_THROWS_AS(h_sweep(free, dup, opt), InvalidInput);
    const std::vector<double> up{0.05, 0.1};
    CHECK_THROWS_AS(h_sweep(free, up, opt), InvalidInput);

    const auto hs = geometric_hs(0.1, 0.02, 4);
    opt.workers = 2;
    const auto sweep = h_sweep(free, hs, opt, FitModel::power_law);
    REQUIRE(sweep.rows.size() == 4);
    REQUIRE(sweep.fit.has_value());
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const auto& row = sweep.rows[i];
        CHECK(row.h == hs[i]);
        CHECK(row.eps == doctest::Approx(1e-6 * hs[i]));
        CHECK(row.converged);
        if (i > 0) CHECK(row.norm > sweep.rows[i - 1].norm);
        NormRequest req = opt.request;
        req.h = hs[i];
        req.eps = 1e-6 * hs[i];
        CHECK(adaptive_norm(req, free, opt.truncation).value == row.norm);
    }
}

TEST_CASE("epsilon sweep: large eps bound and stabilization") {
    const Problem free{1, 1.0, PotentialModel::zero(0.6)};
    const auto opt = fixed_truncation(20.0);
    const double h = 0.05;
    std::vector<double> eps{1e3};
    for (int k = 2; k <= 7; ++k) eps.push_back(h * std::pow(10.0, -k));
    const auto res = epsilon_sweep(free, h, eps, opt);
    REQUIRE(res.rows.size() == eps.size());
    CHECK(res.rows[0].norm <= 1e-3 * (1.0 + 1e-6));
    for (const auto& row : res.rows) CHECK(row.norm <= (1.0 / row.eps) * (1.0 + 1e-6));
    CHECK(res.stabilized);
    REQUIRE(res.stable_below.has_value());
    const double last = res.rows.back().norm, prev = res.rows[res.rows.size() - 2].norm;
    CHECK(std::abs(last - prev) / last < 0.01);
    CHECK(res.stabilized_value == last);

    const std::vector<double> increasing{1e-3, 1e-2};
    CHECK_THROWS_AS(epsilon_sweep(free, h, increasing, opt), InvalidInput);
}

TEST_CASE("sweep CSV and fit JSON") {
    std::vector<SweepRow> rows{{0.1, 1e-7, NormVariant::exterior_cutoff, 12.5, true, 1, 40.0, 100}};
    CHECK(sweep_csv(rows) == "h,eps,variant,norm,converged,sector_argmax\n0.10000000000000001,9.9999999999999995e-08,"
                             "exterior_cutoff,12.5,true,1\n");
    const auto j = nlohmann::json::parse(fit_json({FitModel::power_law, 1.02, 0.5, 0.01, 6}));
    CHECK(j.at("model") == "power_law");
    CHECK(j.at("slope") == 1.02);
    CHECK(j.at("rows_used") == 6);
    const auto e = nlohmann::json::parse(fit_json({FitModel::exp_inv_h, 0.3, 0.5, 0.01, 6}));
    CHECK(e.at("C_est") == 0.3);
    CHECK(fit_model_from_string("exp_inv_h") == FitModel::exp_inv_h);
}
