#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>

#include "amv/amv_operator.hpp"
#include "amv/error.hpp"
#include "amv/spectra.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace amv;

namespace {

std::shared_ptr<const SampleSet> make(const SpaceDescriptor& s, std::size_t n, SampleStrategy st, std::uint64_t seed = 3) {
    return std::make_shared<const SampleSet>(sample(s, n, st, seed));
}

// Two clusters of three points on [0,1] that no ball of radius 0.1 can bridge.
std::shared_ptr<const SampleSet> two_clusters() {
    SampleSet s;
    s.space = SpaceDescriptor::interval(1.0);
    s.coords = {0.10, 0.15, 0.20, 0.70, 0.75, 0.80};
    s.weights.assign(6, 1.0 / 6.0);
    s.strategy = SampleStrategy::Imported;
    return std::make_shared<const SampleSet>(std::move(s));
}

}  // namespace

TEST_SUITE("spectra") {

TEST_CASE("symmetric form is symmetric and matches -Δ for uniform weights") {
    auto s = make(SpaceDescriptor::torus_linf(2), 400, SampleStrategy::Grid);
    auto op = build_operator(s, 0.2, VolumeMode::Empirical);
    SymmetrizedOperator S(op);
    std::mt19937_64 g(3);
    auto f = oracle::random_vector(s->size(), g);
    auto lf = op.apply_amv(f);
    auto sf = S.apply(f);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(sf[i] == doctest::Approx(-lf[i]).epsilon(1e-12).scale(1.0));

    auto t = make(SpaceDescriptor::hypercube(2, 1.0), 300, SampleStrategy::Iid);
    auto ot = build_operator(t, 0.2, VolumeMode::Empirical);
    SymmetrizedOperator St(ot);
    for (int k = 0; k < 10; ++k) {
        auto u = oracle::random_vector(t->size(), g), v = oracle::random_vector(t->size(), g);
        auto su = St.apply(u), sv = St.apply(v);
        double a = 0, b = 0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            a += su[i] * v[i];
            b += u[i] * sv[i];
        }
        CHECK(std::fabs(a - b) <= 1e-12 * std::max(std::fabs(a), 1.0));
    }
}

TEST_CASE("five-point toy agrees with a dense generalized solve") {
    SampleSet raw;
    raw.space = SpaceDescriptor::interval(1.0);
    raw.coords = {0.05, 0.2, 0.45, 0.5, 0.9};
    raw.weights = {0.1, 0.3, 0.2, 0.15, 0.25};
    raw.strategy = SampleStrategy::Imported;
    auto s = std::make_shared<const SampleSet>(raw);
    auto op = build_operator(s, 0.45, VolumeMode::Empirical);

    auto vol = oracle::empirical_volumes(*s, 0.45);
    auto L = oracle::laplacian_matrix(*s, 0.45, vol);
    Eigen::MatrixXd K(5, 5), W = Eigen::MatrixXd::Zero(5, 5);
    for (int i = 0; i < 5; ++i) {
        W(i, i) = raw.weights[i];
        for (int j = 0; j < 5; ++j) K(i, j) = -raw.weights[i] * L(i, j);
    }
    K = 0.5 * (K + K.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(K, W);
    REQUIRE(ges.info() == Eigen::Success);

    auto res = eig_lowest(op, 4);
    REQUIRE(res.eigenvalues.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CAPTURE(i);
        CHECK(res.eigenvalues[i] == doctest::Approx(ges.eigenvalues()(i)).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("connected interval: zero ground state and a gap") {
    auto s = make(SpaceDescriptor::interval(1.0), 400, SampleStrategy::Grid);
    auto op = build_operator(s, 0.05, VolumeMode::Empirical);
    auto res = eig_lowest(op, 3);
    CHECK(std::fabs(res.eigenvalues[0]) <= 1e-10);
    CHECK(res.eigenvalues[1] > 0.0);
    CHECK(res.connected);
    CHECK(res.solver == "dense");
    for (std::size_t i = 1; i < res.eigenvalues.size(); ++i) CHECK(res.eigenvalues[i] >= res.eigenvalues[i - 1]);
    for (double r : res.residuals) CHECK(r < 1e-8);
    // w-orthonormal eigenvectors
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b) {
            double ip = inner_w(op.weights(), res.eigenvectors[a], res.eigenvectors[b]);
            CHECK(ip == doctest::Approx(a == b ? 1.0 : 0.0).scale(1.0).epsilon(1e-10));
        }
}

TEST_CASE("disconnected ball graph has a degenerate zero") {
    auto s = two_clusters();
    auto op = build_operator(s, 0.1, VolumeMode::Empirical);
    CHECK_FALSE(op.connected());
    auto res = eig_lowest(op, 2);
    CHECK(std::fabs(res.eigenvalues[0]) <= 1e-10);
    CHECK(std::fabs(res.eigenvalues[1]) <= 1e-10);
    CHECK(res.eigenvalues[2] > 1.0);
    for (int k = 0; k < 2; ++k) {
        const auto& f = res.eigenvectors[k];
        // constant on each cluster
        CHECK(std::fabs(f[0] - f[1]) < 1e-10);
        CHECK(std::fabs(f[1] - f[2]) < 1e-10);
        CHECK(std::fabs(f[3] - f[4]) < 1e-10);
        CHECK(std::fabs(f[4] - f[5]) < 1e-10);
    }
}

TEST_CASE("dense and Krylov paths agree") {
    struct Case {
        SpaceDescriptor space;
        std::size_t n;
        SampleStrategy st;
        double r;
        VolumeMode mode;
        std::size_t k;
    };
    const Case cases[] = {
        {SpaceDescriptor::interval(1.0), 1024, SampleStrategy::Iid, 0.05, VolumeMode::Empirical, 8},
        {SpaceDescriptor::torus_linf(2), 1024, SampleStrategy::Grid, 0.2, VolumeMode::Analytic, 12},
        {SpaceDescriptor::sphere2(), 1024, SampleStrategy::Fibonacci, 0.35, VolumeMode::Empirical, 8},
    };
    for (const auto& c : cases) {
        CAPTURE(to_string(c.space.kind));
        auto s = make(c.space, c.n, c.st);
        auto op = build_operator(s, c.r, c.mode);
        EigOptions dense, krylov;
        dense.path = SolverPath::Dense;
        krylov.path = SolverPath::Lanczos;
        krylov.seed = 11;
        auto a = eig_lowest(op, c.k, dense);
        auto b = eig_lowest(op, c.k, krylov);
        CHECK(b.solver == "lanczos");
        const double scale = a.spectral_radius;
        for (std::size_t i = 0; i <= c.k; ++i) {
            CAPTURE(i);
            CHECK(std::fabs(a.eigenvalues[i] - b.eigenvalues[i]) <= 1e-6 * std::max(a.eigenvalues[i], 1e-3 * scale));
            CHECK(b.residuals[i] <= 1e-6 * scale);
        }
        CHECK(b.spectral_radius == doctest::Approx(a.spectral_radius).epsilon(1e-6));
    }
}

TEST_CASE("Krylov path is deterministic under the seed") {
    auto s = make(SpaceDescriptor::hypercube(2, 1.0), 900, SampleStrategy::Grid);
    auto op = build_operator(s, 0.15, VolumeMode::Empirical);
    EigOptions o;
    o.path = SolverPath::Lanczos;
    o.seed = 5;
    auto a = eig_lowest(op, 5, o), b = eig_lowest(op, 5, o);
    CHECK(a.eigenvalues == b.eigenvalues);
    CHECK(a.eigenvectors == b.eigenvectors);
}

TEST_CASE("Krylov path reports non-convergence with residuals") {
    auto s = make(SpaceDescriptor::interval(1.0), 500, SampleStrategy::Iid);
    auto op = build_operator(s, 0.02, VolumeMode::Empirical);
    EigOptions o;
    o.path = SolverPath::Lanczos;
    o.tolerance = 1e-300;
    o.max_restarts = 1;
    try {
        eig_lowest(op, 40, o);
        FAIL("expected a convergence failure");
    } catch (const ConvergenceFailure& e) {
        CHECK(e.code() == ErrorCode::ConvergenceFailure);
        CHECK(e.best_residuals().size() == 41);
    }
}

TEST_CASE("argument checks") {
    auto s = make(SpaceDescriptor::interval(1.0), 10, SampleStrategy::Grid);
    auto op = build_operator(s, 0.3, VolumeMode::Empirical);
    CHECK_THROWS_AS(eig_lowest(op, 10), Error);
    CHECK_NOTHROW(eig_lowest(op, 9));
    std::vector<double> zero(10, 0.0);
    CHECK_THROWS_AS(rayleigh(op, zero), Error);
}

TEST_CASE("Rayleigh quotients and min-max") {
    auto s = make(SpaceDescriptor::interval(1.0), 800, SampleStrategy::Grid);
    auto op = build_operator(s, 0.05, VolumeMode::Empirical);
    auto res = eig_lowest(op, 5);
    std::vector<double> c(s->size(), 2.0);
    CHECK(rayleigh(op, c) == 0.0);
    for (std::size_t i = 0; i <= 5; ++i)
        CHECK(rayleigh(op, res.eigenvectors[i]) == doctest::Approx(res.eigenvalues[i]).epsilon(1e-9).scale(1.0));

    std::vector<std::vector<double>> low(res.eigenvectors.begin(), res.eigenvectors.end());
    CHECK(subspace_max_rayleigh(op, low) == doctest::Approx(res.eigenvalues[5]).epsilon(1e-9));

    // any 6-dimensional subspace has max Rayleigh quotient >= λ_5
    std::mt19937_64 g(8);
    for (int t = 0; t < 20; ++t) {
        std::vector<std::vector<double>> basis;
        for (int d = 0; d < 6; ++d) basis.push_back(oracle::random_vector(s->size(), g));
        CHECK(subspace_max_rayleigh(op, basis) >= res.eigenvalues[5] * (1.0 - 1e-12));
    }

    // a mean-zero tent is orthogonal to constants, so its quotient bounds λ_1 from above
    std::vector<double> tent(s->size());
    double mean = 0.0;
    for (std::size_t i = 0; i < tent.size(); ++i) {
        tent[i] = std::max(0.0, 1.0 - std::fabs(s->point(i)[0] - 0.3) / 0.2);
        mean += tent[i] * s->weights[i];
    }
    for (double& x : tent) x -= mean;
    CHECK(rayleigh(op, tent) >= res.eigenvalues[1]);
}

TEST_CASE("tent bound on the interval") {
    auto s = make(SpaceDescriptor::interval(1.0), 1000, SampleStrategy::Grid);
    auto op = build_operator(s, 0.03, VolumeMode::Empirical);
    std::vector<std::vector<double>> centers{{0.125}, {0.375}, {0.625}, {0.875}};
    auto tb = tent_upper_bound(op, centers);
    CHECK(tb.rbar == doctest::Approx(0.0625));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (i != j) CHECK(tb.cross[i][j] == 0.0);
    auto res = eig_lowest(op, 3);
    CHECK(res.eigenvalues[3] <= tb.bound);

    auto one = tent_upper_bound(op, {{0.5}});
    CHECK(one.bound >= 0.0);
    CHECK(res.eigenvalues[0] <= one.bound);

    auto wide = build_operator(s, 0.07, VolumeMode::Empirical);
    CHECK_THROWS_AS(tent_upper_bound(wide, centers), Error);
}

TEST_CASE("essential threshold report") {
    auto s = make(SpaceDescriptor::torus_linf(2), 1600, SampleStrategy::Grid);
    auto op = build_operator(s, 0.1, VolumeMode::Empirical);
    auto t = essential_threshold(op);
    CHECK(t.threshold == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(t.lower_bound == doctest::Approx(50.0));
    CHECK(t.holds);

    auto h = make(SpaceDescriptor::hypercube(1, 2.0), 200, SampleStrategy::Grid);
    auto oh = build_operator(h, 0.5, VolumeMode::Empirical);
    CHECK(essential_threshold(oh).threshold >= 2.0);
}

TEST_CASE("spectral radius respects the norm bound") {
    for (auto mode : {VolumeMode::Empirical, VolumeMode::Analytic}) {
        auto s = make(SpaceDescriptor::hypercube(2, 1.0), 900, SampleStrategy::Iid);
        auto op = build_operator(s, 0.1, mode);
        double rho = spectral_radius(op);
        CHECK(rho <= op.norm_bound());
        EigOptions k;
        k.path = SolverPath::Lanczos;
        CHECK(spectral_radius(op, k) == doctest::Approx(rho).epsilon(1e-6));
    }
}

TEST_CASE("spectrum export") {
    auto s = make(SpaceDescriptor::interval(1.0), 100, SampleStrategy::Grid);
    auto op = build_operator(s, 0.1, VolumeMode::Empirical);
    auto res = eig_lowest(op, 3);
    auto dir = std::filesystem::temp_directory_path();
    save_spectrum(res, op, dir / "amv_spec.csv", dir / "amv_vecs.csv");
    std::ifstream in(dir / "amv_spec.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "k,lambda,residual");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 4);
    CHECK(std::filesystem::exists(dir / "amv_spec.csv.json"));
    std::ifstream v(dir / "amv_vecs.csv");
    int vrows = 0;
    for (std::string line; std::getline(v, line);) ++vrows;
    CHECK(vrows == 101);
}

}  // TEST_SUITE
