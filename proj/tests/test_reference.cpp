#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <map>
#include <numbers>

#include "amv/error.hpp"
#include "amv/reference.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace amv;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_SUITE("reference") {

TEST_CASE("second-moment constants") {
    CHECK(cm(1).num == 1);
    CHECK(cm(1).den == 6);
    CHECK(cm(2).value() == 0.125);
    CHECK(cm(3).value() == doctest::Approx(0.1).epsilon(1e-16));
    CHECK_THROWS_AS(cm(0), Error);
    CHECK(limit_constant(SpaceDescriptor::torus_linf(3)) == doctest::Approx(1.0 / 6.0));
    CHECK(limit_constant(SpaceDescriptor::torus_euclid(3)) == doctest::Approx(0.1));
    CHECK(limit_constant(SpaceDescriptor::sphere2()) == 0.125);
    CHECK(limit_constant(SpaceDescriptor::hypercube(2, 1.0)) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("normalized sinc") {
    CHECK(sinc(0.0) == 1.0);
    for (int k = 1; k <= 200; ++k) {
        CHECK(sinc(k) == 0.0);
        CHECK(sinc(-k) == 0.0);
    }
    CHECK(sinc(0.5) == doctest::Approx(2.0 / kPi).epsilon(1e-15));
    for (double x = -10.0; x <= 10.0; x += 0.013) CHECK(std::fabs(sinc(x)) <= 1.0);
}

TEST_CASE("d_inf torus closed form") {
    const int p1[] = {1};
    CHECK(torus_linf_amv_eigenvalue(p1, 0.5) == doctest::Approx((1.0 - 2.0 / kPi) / 0.25).epsilon(1e-14));
    CHECK(torus_linf_amv_eigenvalue(p1, 0.5) == doctest::Approx(1.45352).epsilon(1e-5));
    const int p0[] = {0, 0};
    CHECK(torus_linf_amv_eigenvalue(p0, 0.3) == 0.0);
    const int p2[] = {3, 1};
    CHECK(torus_linf_amv_eigenvalue(p2, 1.0 / 3.0) == doctest::Approx(9.0).epsilon(1e-14));

    // small-r limit (π²/6)|p|² with an O(r²) error: halving r quarters it
    const int p[] = {1, 2};
    const double limit = kPi * kPi / 6.0 * 5.0;
    double prev = std::fabs(torus_linf_amv_eigenvalue(p, 0.08) - limit);
    for (double r = 0.04; r > 0.004; r /= 2) {
        double err = std::fabs(torus_linf_amv_eigenvalue(p, r) - limit);
        CHECK(err / prev == doctest::Approx(0.25).epsilon(0.02));
        prev = err;
    }
}

TEST_CASE("d_inf torus spectrum ordering and multiplicities") {
    auto s = torus_linf_amv_spectrum(1, 0.125, 16);
    CHECK(s.entries.size() == 33);
    CHECK(s.entries[0].value == 0.0);
    auto mult = s.multiplicities(1, 8);
    REQUIRE(mult.size() >= 4);
    for (int i = 0; i < 4; ++i) CHECK(mult[i] == 2);
    for (std::size_t i = 1; i < s.entries.size(); ++i) CHECK(s.entries[i].value >= s.entries[i - 1].value);

    auto s2 = torus_linf_amv_spectrum(2, 0.125, 8);
    auto m2 = s2.multiplicities(1, 12);
    CHECK(m2[0] == 4);
    CHECK(m2[1] == 4);
    CHECK(m2[2] == 4);
    CHECK_THROWS_AS(torus_linf_amv_spectrum(1, 1.0), Error);
    CHECK_THROWS_AS(torus_linf_amv_spectrum(1, 0.5, 0), Error);
}

TEST_CASE("sinc scan") {
    auto grid = default_scan_grid();
    REQUIRE(grid.size() == 100);
    CHECK(grid.front() == 0.01);
    CHECK(grid.back() == 1.0);
    auto s1 = sinc_scan(1, grid, 64);
    CHECK(s1.minimum >= 0.5);
    CHECK(s1.argmin_pinf == 1);
    auto s2 = sinc_scan(2, grid, 64);
    CHECK(s2.minimum == s1.minimum);
    CHECK(s2.argmin_p == std::vector<int>{1, 0});
    CHECK_THROWS_AS(sinc_scan(1, {}, 8), Error);
    CHECK_THROWS_AS(sinc_scan(1, {1.5}, 8), Error);

    // a vanishing factor gives exactly 1/r²
    const int p[] = {4, 1};
    CHECK(torus_linf_amv_eigenvalue(p, 0.25) == 16.0);
}

TEST_CASE("Laplace spectra of the model spaces") {
    auto iv = laplace_spectrum(SpaceDescriptor::interval(1.0), 5);
    for (int k = 0; k < 5; ++k) {
        CHECK(iv.entries[k].value == doctest::Approx(kPi * kPi * k * k).epsilon(1e-14).scale(1.0));
        CHECK(iv.entries[k].multiplicity == 1);
    }
    auto sp = laplace_spectrum(SpaceDescriptor::sphere2(), 4);
    const double sv[] = {0, 2, 6, 12};
    const int sm[] = {1, 3, 5, 7};
    for (int k = 0; k < 4; ++k) {
        CHECK(sp.entries[k].value == sv[k]);
        CHECK(sp.entries[k].multiplicity == sm[k]);
    }
    CHECK(sp.expanded().size() == 16);

    // brute-force enumeration of |p|² over |p|_inf <= 8
    auto tor = laplace_spectrum(SpaceDescriptor::torus_linf(2), 6);
    std::map<int, int> groups;
    for (int a = -8; a <= 8; ++a)
        for (int b = -8; b <= 8; ++b) ++groups[a * a + b * b];
    auto it = groups.begin();
    for (int k = 0; k < 6; ++k, ++it) {
        CHECK(tor.entries[k].value == doctest::Approx(kPi * kPi * it->first).epsilon(1e-14).scale(1.0));
        CHECK(tor.entries[k].multiplicity == it->second);
    }
    CHECK(tor.entries[1].multiplicity == 4);
    CHECK(tor.entries[2].multiplicity == 4);

    auto cube = laplace_spectrum(SpaceDescriptor::hypercube(2, 0.5), 3);
    CHECK(cube.entries[1].value == doctest::Approx(4.0 * kPi * kPi));
    CHECK(cube.entries[1].multiplicity == 2);
    CHECK(cube.entries[2].value == doctest::Approx(8.0 * kPi * kPi));

    CHECK_THROWS_AS(laplace_spectrum(SpaceDescriptor::custom_cloud(2, 2, 1.0), 3), Error);
}

TEST_CASE("interval spectrum agrees with a Neumann finite-difference Laplacian") {
    const std::size_t n = 10000;
    const double L = 1.0, h = L / n;
    std::vector<double> d(n, 2.0 / (h * h)), e(n - 1, -1.0 / (h * h));
    d.front() = d.back() = 1.0 / (h * h);
    auto ref = laplace_spectrum(SpaceDescriptor::interval(L), 5);
    for (std::size_t k = 1; k < 5; ++k) {
        double fd = oracle::tridiag_eigenvalue(d, e, k, 0.0, 4.0 / (h * h));
        CHECK(fd == doctest::Approx(oracle::neumann_fd_eigenvalue(k, n, L)).epsilon(1e-7));
        CHECK(std::fabs(fd - ref.entries[k].value) / ref.entries[k].value < 1e-3);
    }
}

TEST_CASE("round-ball symbol") {
    CHECK(round_ball_symbol(2, 0.0, 0.3) == 1.0);
    for (double r : {0.1, 0.37, 0.9}) {
        CHECK(round_ball_symbol(1, 1.0, r) == doctest::Approx(sinc(r)).epsilon(1e-10));
        // mean of a plane wave over a disc: 2 J_1(k r) / (k r)
        const double kr = kPi * 1.5 * r;
        CHECK(round_ball_symbol(2, 1.5, r) ==
              doctest::Approx(2.0 * boost::math::cyl_bessel_j(1, kr) / kr).epsilon(1e-10));
        const double k3 = kPi * 2.0 * r;
        CHECK(round_ball_symbol(3, 2.0, r) ==
              doctest::Approx(3.0 * (std::sin(k3) - k3 * std::cos(k3)) / (k3 * k3 * k3)).epsilon(1e-10));
    }
    // (1 - symbol)/r² tends to C_2 π² |p|²; Richardson on r removes the r² term
    auto g = [](double r) { return (1.0 - round_ball_symbol(2, 1.0, r)) / (r * r); };
    const double target = kPi * kPi / 8.0;
    CHECK(std::fabs(g(0.1) - target) / target < 0.01);
    double extrap = (4.0 * g(0.05) - g(0.1)) / 3.0;
    CHECK(std::fabs(extrap - target) / target < 1e-4);
    CHECK_THROWS_AS(round_ball_symbol(4, 1.0, 0.1), Error);
}

TEST_CASE("reference CSV export") {
    auto csv = to_csv(laplace_spectrum(SpaceDescriptor::sphere2(), 3));
    CHECK(csv.rfind("label,value,multiplicity\n", 0) == 0);
    CHECK(csv.find("l=1,2,3\n") != std::string::npos);
    auto sc = to_csv(torus_linf_amv_spectrum(2, 0.125, 4), 3);
    CHECK(sc.find(",4\n") != std::string::npos);
}

}  // TEST_SUITE
