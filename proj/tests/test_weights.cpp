#include "carleman/csv.hpp"
#include "carleman/errors.hpp"
#include "carleman/weights.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

using namespace carleman;

namespace {

const WeightConstruction& reference_weight() {
    static const WeightConstruction w = build_carleman_weight(0.9, 1.0);
    return w;
}

}  // namespace

TEST_CASE("w closed form") {
    CHECK(eval_w(0.0, 0.5) == 0.0);
    CHECK(eval_w(1e6, 0.5) > 0.99);
    CHECK(eval_w(1.0, 0.5) == doctest::Approx(1.0 - std::pow(2.0, -0.5)).epsilon(1e-15));
}

TEST_CASE("w is strictly increasing with the stated derivative") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> logr(-6.0, 12.0);
    std::vector<double> r(1000);
    for (auto& x : r) x = std::exp(logr(rng));
    std::sort(r.begin(), r.end());
    for (double delta : {0.01, 0.3, 0.8}) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double wp = eval_wprime(r[i], delta);
            CHECK(wp > 0.0);
            CHECK(wp == doctest::Approx(delta * std::pow(1.0 + r[i], -1.0 - delta)).epsilon(1e-13));
            if (i > 0 && r[i] > r[i - 1] * (1 + 1e-9)) CHECK(eval_w(r[i], delta) > eval_w(r[i - 1], delta));
            CHECK(eval_w(r[i], delta) < 1.0);
        }
    }
}

TEST_CASE("m closed form and comparison with (1+r)^s") {
    CHECK(eval_m(0.0, 0.2) == 1.0);
    CHECK(eval_m(1.0, 0.2) == doctest::Approx(std::pow(2.0, 0.3)).epsilon(1e-15));
    for (double delta : {0.05, 0.2, 0.9}) {
        const double s = (1.0 + delta) / 2.0;
        for (double r : {0.1, 1.0, 10.0, 100.0, 1e5}) {
            const double ratio = eval_m(r, delta) / std::pow(1.0 + r, s);
            CHECK(ratio >= std::pow(2.0, -s / 2.0));
            CHECK(ratio <= 1.0 + 1e-15);
        }
    }
}

TEST_CASE("G starts at 1 and peaks at r_max") {
    for (auto [delta, delta0] : {std::pair{0.1, 0.9}, std::pair{0.02, 0.6}, std::pair{0.3, 0.5}}) {
        CHECK(eval_G(0.0, delta, delta0) == doctest::Approx(1.0).epsilon(1e-15));
        const double r_max = std::pow((1.0 - delta) / (1.0 - delta / delta0), 1.0 / delta) - 1.0;
        // log-uniform grid, spacing 1e-4 in log(1+r)
        const double hi = std::log1p(r_max) * 3.0 + 1.0;
        const double step = 1e-4;
        double best = -1.0, best_x = 0.0;
        for (double x = 0.0; x <= hi; x += step) {
            const double g = eval_G_log(x, delta, delta0);
            if (g > best) best = g, best_x = x;
        }
        CHECK(std::abs(best_x - std::log1p(r_max)) <= step);
        CHECK(eval_Gprime(r_max, delta, delta0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    }
}

TEST_CASE("max G stays below 1/delta0 for small delta") {
    const double delta = 1e-3, delta0 = 0.9;
    double best = 0.0;
    for (double x = 0.0; x <= 50.0; x += 1e-3) best = std::max(best, eval_G_log(x, delta, delta0));
    CHECK(best <= 1.0 / delta0);
}

TEST_CASE("radii for delta0 = 0.9, E = 1, delta = 0.01") {
    const auto rl = compute_radii_and_level(0.9, 1.0, 0.01);
    CHECK(rl.R == doctest::Approx(std::pow(400.0, 1.0 / 0.89) - 1.0).epsilon(1e-12));
    CHECK(rl.R == doctest::Approx(837.5).epsilon(1e-3));
    CHECK(eval_w(rl.R, 0.01) < 0.1);
    CHECK(rl.B == doctest::Approx((1.0 / 0.9 + 0.25) * eval_w(rl.R, 0.01)).epsilon(1e-14));
    // w(R0) = 4B/E through log(1+R0)
    CHECK(-std::expm1(-0.01 * rl.log1p_R0) == doctest::Approx(4.0 * rl.B).epsilon(1e-12));
    CHECK(rl.log1p_R0 > rl.log1p_R);
    CHECK(std::pow(1.0 + rl.r_max, 0.01) == doctest::Approx((1 - 0.01) / (1 - 0.01 / 0.9)).epsilon(1e-12));
    CHECK(eval_G(rl.R, 0.01, 0.9) <= 0.25);
}

TEST_CASE("feasibility at delta = 0.5 agrees with a direct evaluation of both sides") {
    const double delta0 = 0.9, E = 1.0, delta = 0.5;
    const double R = std::pow(delta * E / 4.0, 1.0 / (delta - delta0)) - 1.0;
    const double lhs = 1.0 - std::pow(1.0 + R, -delta);
    const double rhs = 1.0 / (1.0 + 4.0 / (delta0 * E));
    if (lhs >= rhs)
        CHECK_THROWS_AS(compute_radii_and_level(delta0, E, delta), InfeasibleDelta);
    else
        CHECK_NOTHROW(compute_radii_and_level(delta0, E, delta));
    CHECK(level_feasible(lhs, delta0, E) == (lhs < rhs));
}

TEST_CASE("psi branches and continuity") {
    const auto p = make_weight_parameters(0.9, 1.0, 0.01);
    const Psi psi(p);
    CHECK(psi(0.0) == doctest::Approx(1.0 / 0.9));
    CHECK(psi(-1.0) == doctest::Approx(1.0 / 0.9));
    CHECK(psi.near_R0(1.0) == 0.0);
    const double R = p.R();
    CHECK(std::abs(psi(R) - psi(std::nextafter(R, 2 * R))) < 1e-10);
    CHECK(std::abs(psi.near_R0(-1e-6) - psi.near_R0(1e-6)) < 1e-10);
    CHECK(psi.near_R0(-1e-6) >= 0.0);
}

TEST_CASE("psi continuity on constructed parameters") {
    for (auto [d0, E] : {std::pair{0.9, 1.0}, std::pair{0.6, 1.0}, std::pair{0.6, 0.1}}) {
        const double delta = select_delta(d0, E);
        const Psi psi(make_weight_parameters(d0, E, delta));
        const double R = psi.params().R();
        CHECK(std::abs(psi(std::nextafter(R, 0.0)) - psi(std::nextafter(R, 2 * R))) < 1e-10);
        CHECK(std::abs(psi.near_R0(-1e-9) - psi.near_R0(1e-9)) < 1e-10);
    }
}

TEST_CASE("select_delta for delta0 = 0.9, E = 1") {
    const auto& c = reference_weight();
    const auto& p = c.weight.params();
    CHECK(c.passed);
    CHECK(p.delta > 0.0);
    CHECK(p.delta < 0.9);
    CHECK(p.s == doctest::Approx((1.0 + p.delta) / 2.0));
    for (const auto& r : c.reports) CHECK(r.min_margin >= -r.tolerance);

    // four times the selected delta was rejected by the search
    const double bigger = 4.0 * p.delta;
    if (bigger < 0.9) {
        bool rejected = false;
        try {
            const auto params = make_weight_parameters(0.9, 1.0, bigger);
            rejected = !check_far_level(params) ||
                       !construct_weight(0.9, 1.0, bigger, {PotentialModel::zero(0.9), PotentialModel::envelope(0.9)})
                            .passed;
        } catch (const InfeasibleDelta&) {
            rejected = true;
        }
        CHECK(rejected);
    }
}

TEST_CASE("sampled weight: phi(0) = 0, monotone, phi' vanishes past R0") {
    const auto& w = reference_weight().weight;
    const auto r = w.grid();
    const auto phi = w.phi();
    const auto dphi = w.dphi();
    CHECK(phi[0] == 0.0);
    const double R0 = w.params().R0();
    for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(dphi[i] >= 0.0);
        if (i > 0) CHECK(phi[i] >= phi[i - 1]);
        if (r[i] >= R0) CHECK(dphi[i] == 0.0);
    }
    CHECK(w.derivatives_near_R0(1e-3).d1 == 0.0);
    CHECK(w.derivatives_near_R0(-1.0).d1 > 0.0);
}

TEST_CASE("phi'^2 - psi shrinks with eta") {
    const auto base = make_weight_parameters(0.9, 1.0, 0.028125);
    const double R = base.R();
    const double eta = std::min(R, base.R0() - R) / 8.0;
    auto error_at = [&](double e, double r) {
        auto p = base;
        p.eta = e;
        std::vector<double> grid{0.0};
        for (int i = -16; i <= 0; ++i) grid.push_back(R + i * e / 16.0);
        for (int i = -16; i <= 0; ++i) grid.push_back(base.R0() + i * e / 16.0);
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        const auto w = mollify_and_integrate(Psi(p), e, grid);
        const double d1 = w.derivatives_at(r).d1;
        return std::abs(d1 * d1 - Psi(p)(r));
    };
    // at R/2 the forward window stays inside the constant branch
    CHECK(error_at(eta, R / 2.0) < 1e-13);
    CHECK(error_at(eta / 2.0, R / 2.0) < 1e-13);
    // in the decaying branch the error is first order in eta
    for (double r : {1.5 * R, 3.0 * R}) {
        const double e1 = error_at(eta, r), e2 = error_at(eta / 2.0, r), e3 = error_at(eta / 4.0, r);
        CHECK(e1 > 0.0);
        CHECK(e2 <= 0.55 * e1);
        CHECK(e3 <= 0.55 * e2);
    }
}

TEST_CASE("mollify_and_integrate input checks") {
    auto p = make_weight_parameters(0.9, 1.0, 0.028125);
    const double R = p.R();
    const double eta = std::min(R, p.R0() - R) / 8.0;
    p.eta = eta;
    const std::vector<double> coarse{0.0, R - eta, R, p.R0()};
    CHECK_THROWS_AS(mollify_and_integrate(Psi(p), eta, coarse), GridTooCoarse);
    CHECK_THROWS_AS(mollify_and_integrate(Psi(p), R, coarse), InvalidInput);
}

TEST_CASE("margin over a halving sweep of h for certified potentials") {
    const auto& w = reference_weight().weight;
    const auto& p = w.params();
    const auto grid = verification_grid(p);
    const std::vector<PotentialModel> pots{PotentialModel::zero(0.9), PotentialModel::envelope(0.9),
                                           cap_barrier({0.2, 0.0, 1.0, 3.0, 1.5}, 0.9, 50.0)};
    for (const auto& pot : pots) {
        const auto comp = margin_components(w, pot, grid);
        for (int k = 0; k <= 6; ++k) {
            const auto rep = evaluate_margin(comp, p.h0 * std::ldexp(1.0, -k), 1.0, 1e-8);
            CHECK(rep.passed);
        }
    }
    // far above h0 the verifier still reports a finite minimum
    const auto stiff = verify_weight_inequality(w, PotentialModel::zero(0.9), 10.0 * p.h0, grid);
    CHECK(std::isfinite(stiff.min_margin));
    CHECK(check_far_level(p));
}

TEST_CASE("weight CSV header and precision") {
    const auto& w = reference_weight().weight;
    const auto table = parse_csv(weight_csv(w));
    CHECK(table.header == std::vector<std::string>{"r", "w", "wprime", "m", "psi", "phi", "dphi", "ddphi"});
    REQUIRE(table.rows.size() == w.grid().size());
    const auto phi = table.column("phi");
    for (std::size_t i = 0; i < phi.size(); i += 97) CHECK(phi[i] == w.phi()[i]);
}
