#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rmlab/errors.hpp"
#include "rmlab/theory.hpp"

using namespace rmlab;
using namespace rmlab::theory;

TEST_CASE("clt_params at the square aspect ratio") {
    const TheoryParams t = clt_params(100, 100, 1.0, 1.0);
    CHECK(t.c == 1.0);
    CHECK(t.l == 101.0);
    CHECK(t.clt_mean == 102.0);
    CHECK(t.clt_var == 4.0);
    CHECK(t.correction == 1.0);
    CHECK(t.a == 0.0);
    CHECK(t.b == 4.0);
}

TEST_CASE("clt_params at c = 1/2") {
    const TheoryParams t = clt_params(256, 512, 1.0, 1.0);
    CHECK(t.c == 0.5);
    CHECK(t.clt_mean == 257.5);
    CHECK(t.clt_var == 2.0);
    CHECK(t.correction == 0.5);
}

TEST_CASE("clt_params degenerates gracefully at mu = 0") {
    const TheoryParams t = clt_params(64, 128, 0.0, 1.0);
    CHECK(t.clt_var == 0.0);
    CHECK(t.l == 1.0);
}

TEST_CASE("clt_mean minus l is the correction by construction") {
    const int ps[] = {3, 17, 100, 256, 999};
    const int ns[] = {7, 31, 100, 512, 1000};
    for (int p : ps) {
        for (int n : ns) {
            const TheoryParams t = clt_params(p, n, 1.25, 0.75);
            CHECK(t.clt_mean == t.l + t.correction);
        }
    }
}

TEST_CASE("support edges are ordered and vanish only at c = 1") {
    const double cs[] = {0.25, 0.5, 1.0, 2.0, 4.0};
    for (double c : cs) {
        const int n = 1000;
        const int p = static_cast<int>(c * n);
        const TheoryParams t = clt_params(p, n, 1.0, 1.3);
        CHECK(t.a >= 0.0);
        CHECK(t.a <= t.b);
        if (t.c == 1.0) {
            CHECK(t.a == 0.0);
        } else {
            CHECK(t.a > 0.0);
        }
    }
}

TEST_CASE("estimator_expectation evaluates p mu^2 + sigma^2") {
    CHECK(estimator_expectation(100, 1.0, 1.0) == 101.0);
    CHECK(estimator_expectation(3, 2.0, 0.0) == 12.0);
    CHECK(estimator_expectation(1, 0.0, 2.0) == 4.0);
}

TEST_CASE("estimator_variance evaluates the leading term") {
    CHECK(estimator_variance(256, 512, 1.0, 1.0) == 2.0);
    CHECK(estimator_variance(64, 128, 0.0, 1.0) == 0.0);
    CHECK(estimator_variance(77, 77, 1.0, 2.0) == 16.0);
}

TEST_CASE("mp_density vanishes at and outside the edges") {
    CHECK(mp_density(0.0, 1.0, 1.0) == 0.0);
    CHECK(mp_density(4.0, 1.0, 1.0) == 0.0);
    CHECK(mp_density(5.0, 1.0, 1.0) == 0.0);
    CHECK(mp_density(-1.0, 0.5, 1.0) == 0.0);
}

TEST_CASE("mp_density matches the closed form inside the support") {
    const double pi = 3.14159265358979323846;
    CHECK(mp_density(2.0, 1.0, 1.0) == doctest::Approx(1.0 / (2.0 * pi)).epsilon(1e-12));
}

TEST_CASE("mp_point_mass appears only above c = 1") {
    CHECK(mp_point_mass(2.0) == 0.5);
    CHECK(mp_point_mass(1.0) == 0.0);
    CHECK(mp_point_mass(0.5) == 0.0);
}

TEST_CASE("mp_moment gives the Catalan numbers") {
    CHECK(mp_moment(0) == 1.0);
    CHECK(mp_moment(1) == 1.0);
    CHECK(mp_moment(2) == 2.0);
    CHECK(mp_moment(3) == 5.0);
    CHECK(mp_moment(4) == 14.0);
    CHECK(mp_moment(5) == 42.0);
    CHECK(mp_moment(6) == 132.0);
    CHECK_THROWS_AS(mp_moment(-1), NonPositiveInput);
}

TEST_CASE("quadrature reproduces the Catalan moments at c = 1") {
    for (int k = 0; k <= 6; ++k) {
        CHECK(mp_bulk_moment(k, 1.0, 1.0) == doctest::Approx(mp_moment(k)).epsilon(1e-6));
    }
}

TEST_CASE("bulk density integrates to the continuous mass") {
    const double cs[] = {0.25, 0.5, 1.0, 2.0};
    for (double c : cs) {
        const double mass = mp_bulk_moment(0, c, 1.0);
        CHECK(mass == doctest::Approx(1.0 - mp_point_mass(c)).epsilon(1e-6));
    }
}

TEST_CASE("bulk integrals respect the scale parameter") {
    // first moment of the bulk at sigma: integral x f = sigma^2 for c <= 1
    CHECK(mp_bulk_moment(1, 0.5, 2.0) == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(mp_bulk_moment(1, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(mp_bulk_moment(1, 0.0, 1.0), NonPositiveInput);
}
