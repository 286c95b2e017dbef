#include "carleman/errors.hpp"
#include "carleman/potential.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace carleman;

TEST_CASE("zero potential is certified for every delta0") {
    const auto grid = audit_grid(200.0, 1e-2);
    for (double d0 : {0.05, 0.3, 0.6, 0.95}) CHECK(certify_potential(PotentialModel::zero(d0), d0, grid).certified);
}

TEST_CASE("envelope saturates the decay bound and is still certified") {
    const auto grid = audit_grid(500.0, 1e-2);
    for (double d0 : {0.3, 0.9}) {
        const auto env = PotentialModel::envelope(d0);
        CHECK(certify_potential(env, d0, grid, 1e-12).certified);
        CHECK(env.value(3.0) == doctest::Approx(std::pow(4.0, -d0)).epsilon(1e-15));
        // the same family fails a stronger exponent
        CHECK_FALSE(certify_potential(env, d0 + 0.05, grid).certified);
    }
}

TEST_CASE("bump_well above the envelope at the origin is flagged there") {
    const BumpWellParams p{0.0, 0.0, 2.0, 0.0, 1.0};
    const auto cert = certify_potential(PotentialModel::bump_well(p, 0.5), 0.5, audit_grid(20.0, 1e-3));
    REQUIRE_FALSE(cert.certified);
    REQUIRE(cert.first_violation().has_value());
    CHECK(*cert.first_violation() < 1e-2);
}

TEST_CASE("bump_well derivative matches a centred difference") {
    const BumpWellParams p{0.2, 0.0, 0.15, 3.0, 1.5};
    const auto v = PotentialModel::bump_well(p, 0.6);
    for (double r : {0.3, 1.7, 2.9, 4.4}) {
        const double fd = (v.value(r + 1e-5) - v.value(r - 1e-5)) / 2e-5;
        CHECK(v.derivative(r) == doctest::Approx(fd).epsilon(1e-8));
    }
}

TEST_CASE("cap_barrier returns the largest certified barrier") {
    const BumpWellParams p{0.2, 0.0, 1.0, 3.0, 1.5};
    const auto capped = cap_barrier(p, 0.6, 50.0);
    const double b = capped.bump().barrier_height;
    CHECK(b > 0.1);
    CHECK(b < 1.0);
    const auto grid = audit_grid(50.0, std::min(1e-2, p.width / 100.0));
    CHECK(certify_potential(capped, 0.6, grid).certified);
    BumpWellParams above = capped.bump();
    above.barrier_height = b * (1.0 + 1e-6);
    CHECK_FALSE(certify_potential(PotentialModel::bump_well(above, 0.6), 0.6, grid).certified);
    // the capped barrier still rises above E = 0.1 behind the well
    CHECK(capped.value(3.0) > 0.15);
    CHECK(capped.value(0.0) < -0.15);
}

TEST_CASE("cap_barrier rejects a well that already breaks the bound") {
    // a steep well has a positive slope above (1+r)^(-1-delta0)
    const BumpWellParams p{5.0, 0.0, 1.0, 3.0, 0.5};
    CHECK_THROWS_AS(cap_barrier(p, 0.6, 20.0), InvalidInput);
}

TEST_CASE("custom_table interpolates linearly and clamps outside") {
    const auto t = PotentialModel::custom_table({0.0, 1.0, 3.0}, {-1.0, 0.0, 0.5}, 0.5);
    CHECK(t.value(0.5) == doctest::Approx(-0.5));
    CHECK(t.value(2.0) == doctest::Approx(0.25));
    CHECK(t.value(10.0) == doctest::Approx(0.5));
    CHECK(t.min_value(5.0) == doctest::Approx(-1.0));
    CHECK(t.sup_abs(5.0) == doctest::Approx(1.0));
    CHECK_FALSE(t.has_analytic_derivative());
    CHECK(t.derivative(2.0) == doctest::Approx(0.25));
    CHECK_THROWS_AS(PotentialModel::custom_table({0.0, 0.0}, {1.0, 2.0}, 0.5), InvalidInput);
}

TEST_CASE("custom_table loads from a CSV with columns r,V") {
    const auto path = std::filesystem::temp_directory_path() / "carleman_table_test.csv";
    {
        std::ofstream f(path);
        f << "r,V\n0,-0.5\n2,0\n4,0.1\n";
    }
    const auto t = PotentialModel::custom_table_from_csv(path.string(), 0.5);
    CHECK(t.kind() == PotentialKind::custom_table);
    CHECK(t.value(1.0) == doctest::Approx(-0.25));
    std::filesystem::remove(path);
}

TEST_CASE("potential kind names round trip") {
    for (auto k : {PotentialKind::zero, PotentialKind::envelope, PotentialKind::bump_well, PotentialKind::custom_table})
        CHECK(potential_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(potential_kind_from_string("coulomb"), InvalidInput);
}

TEST_CASE("min and sup of the bump_well") {
    const auto v = PotentialModel::bump_well({0.2, 0.0, 0.15, 3.0, 1.5}, 0.6);
    CHECK(v.min_value(20.0) == doctest::Approx(v.value(0.0)).epsilon(1e-3));
    CHECK(v.sup_abs(20.0) >= std::abs(v.value(0.0)) - 1e-12);
}
