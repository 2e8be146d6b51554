#include "amv/spectra.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <numeric>
#include <random>

#include "amv/error.hpp"
#include "amv/format.hpp"
#include "amv/parallel.hpp"
#include "json.hpp"

namespace amv {

// ---------------------------------------------------------------------------
// Symmetric form

SymmetrizedOperator::SymmetrizedOperator(const AmvOperator& op) {
    const auto w = op.weights();
    const std::size_t n = op.size();
    for (double wi : w)
        if (!(wi > 0.0)) fail(ErrorCode::InvalidInput, "symmetrization needs positive weights");
    sqrt_w_.resize(n);
    for (std::size_t i = 0; i < n; ++i) sqrt_w_[i] = std::sqrt(w[i]);
    offsets_ = op.balls().offsets();
    cols_ = op.balls().indices();
    vals_.resize(cols_.size());
    const auto a1 = op.avg_one();
    const auto kernel = op.kernel();
    const double inv_r2 = 1.0 / (op.radius() * op.radius());
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) {
            std::size_t j = cols_[p];
            if (j == i)
                vals_[p] = (a1[i] - kernel[p] * w[i]) * inv_r2;
            else
                vals_[p] = -std::sqrt(w[i] * w[j]) * kernel[p] * inv_r2;
        }
    });
}

SymmetrizedOperator symmetrize(const AmvOperator& op) { return SymmetrizedOperator(op); }

void SymmetrizedOperator::apply(std::span<const double> v, std::span<double> out) const {
    require(v.size() == size() && out.size() == size(), "vector length does not match the operator");
    parallel_for(size(), [&](std::size_t i) {
        double acc = 0.0;
        for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) acc += vals_[p] * v[cols_[p]];
        out[i] = acc;
    });
}

std::vector<double> SymmetrizedOperator::apply(std::span<const double> v) const {
    std::vector<double> out(size());
    apply(v, out);
    return out;
}

std::vector<double> SymmetrizedOperator::to_dense() const {
    const std::size_t n = size();
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) a[cols_[p] * n + i] = vals_[p];
    return a;
}

std::vector<double> SymmetrizedOperator::to_weighted(std::span<const double> v) const {
    std::vector<double> f(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) f[i] = v[i] / sqrt_w_[i];
    return f;
}

std::vector<double> SymmetrizedOperator::from_weighted(std::span<const double> f) const {
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) v[i] = f[i] * sqrt_w_[i];
    return v;
}

// ---------------------------------------------------------------------------
// Dense path: one tridiagonalization, bisection for the wanted end of the
// spectrum, inverse iteration for the vectors.

namespace {

struct DenseOutcome {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;  // eigenvectors of S
    double top = 0.0;
};

DenseOutcome dense_lowest(const SymmetrizedOperator& S, std::size_t count, bool want_top) {
    const auto n = static_cast<lapack_int>(S.size());
    std::vector<double> a = S.to_dense();
    std::vector<double> d(n), e(std::max<lapack_int>(n - 1, 1)), tau(std::max<lapack_int>(n - 1, 1));
    if (LAPACKE_dsytrd(LAPACK_COL_MAJOR, 'L', n, a.data(), n, d.data(), e.data(), tau.data()) != 0)
        fail(ErrorCode::NumericFailure, "tridiagonal reduction failed");

    const double abstol = 2.0 * LAPACKE_dlamch('S');
    lapack_int m = 0, nsplit = 0;
    std::vector<double> w(n);
    std::vector<lapack_int> iblock(n), isplit(n);
    const auto iu = static_cast<lapack_int>(count);
    if (LAPACKE_dstebz('I', 'B', n, 0.0, 0.0, 1, iu, abstol, d.data(), e.data(), &m, &nsplit, w.data(),
                       iblock.data(), isplit.data()) != 0 ||
        m < iu)
        fail(ErrorCode::NumericFailure, "bisection did not return the requested eigenvalues");

    std::vector<double> z(static_cast<std::size_t>(n) * m);
    std::vector<lapack_int> ifail(m);
    if (LAPACKE_dstein(LAPACK_COL_MAJOR, n, d.data(), e.data(), m, w.data(), iblock.data(), isplit.data(),
                       z.data(), n, ifail.data()) != 0)
        fail(ErrorCode::NumericFailure, "inverse iteration failed to converge");
    if (LAPACKE_dormtr(LAPACK_COL_MAJOR, 'L', 'L', 'N', n, m, a.data(), n, tau.data(), z.data(), n) != 0)
        fail(ErrorCode::NumericFailure, "back transformation failed");

    DenseOutcome out;
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return w[x] < w[y]; });
    // clustered eigenvalues can make bisection return more than asked for
    order.resize(count);
    for (std::size_t c : order) {
        out.values.push_back(w[c]);
        out.vectors.emplace_back(z.begin() + static_cast<std::ptrdiff_t>(c * n),
                                 z.begin() + static_cast<std::ptrdiff_t>((c + 1) * n));
    }
    if (want_top) {
        lapack_int mt = 0;
        if (LAPACKE_dstebz('I', 'E', n, 0.0, 0.0, n, n, abstol, d.data(), e.data(), &mt, &nsplit, w.data(),
                           iblock.data(), isplit.data()) != 0 ||
            mt < 1)
            fail(ErrorCode::NumericFailure, "bisection for the largest eigenvalue failed");
        out.top = *std::max_element(w.begin(), w.begin() + mt);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Thick-restart Lanczos with full reorthogonalization. Works on sign * S in
// the orthogonal complement of `locked` and targets its smallest eigenvalues.

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void project_out(const std::vector<std::vector<double>>& basis, std::vector<double>& v) {
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) axpy(-dot(b, v), b, v);
}

struct KrylovOutcome {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;
    std::vector<double> residuals;
    std::size_t matvecs = 0;
};

std::vector<double> random_unit(std::size_t n, std::mt19937_64& g, const std::vector<std::vector<double>>& a,
                                const std::vector<std::vector<double>>& b) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int attempt = 0; attempt < 8; ++attempt) {
        std::vector<double> v(n);
        for (double& x : v) x = u(g);
        project_out(a, v);
        project_out(b, v);
        double nv = norm2(v);
        if (nv > 1e-8) {
            for (double& x : v) x /= nv;
            return v;
        }
    }
    return {};
}

KrylovOutcome lanczos(const SymmetrizedOperator& S, double sign, std::size_t nev,
                      const std::vector<std::vector<double>>& locked, std::uint64_t seed, double tol,
                      std::size_t max_restarts) {
    const std::size_t n = S.size();
    const std::size_t avail = n - locked.size();
    require(nev >= 1 && nev <= avail, "not enough room for the requested eigenpairs");
    const std::size_t p = std::min(avail, std::max<std::size_t>(2 * nev + 40, 80));

    std::mt19937_64 g(seed);
    std::vector<std::vector<double>> V;
    V.reserve(p + 1);
    V.push_back(random_unit(n, g, locked, V));
    require(!V.back().empty(), "could not draw a start vector");

    std::vector<double> H(p * p, 0.0);  // column-major projected matrix
    auto h = [&](std::size_t i, std::size_t j) -> double& { return H[j * p + i]; };
    std::size_t start = 0;
    double beta = 0.0;
    double scale = 0.0;
    KrylovOutcome out;
    std::vector<double> w(n);
    std::vector<double> best(nev, std::numeric_limits<double>::infinity());

    for (std::size_t cycle = 0;; ++cycle) {
        for (std::size_t j = start; j < p; ++j) {
            S.apply(V[j], w);
            ++out.matvecs;
            if (sign < 0)
                for (double& x : w) x = -x;
            std::vector<double> c(j + 1, 0.0);
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto& l : locked) axpy(-dot(l, w), l, w);
                for (std::size_t i = 0; i <= j; ++i) {
                    double ci = dot(V[i], w);
                    c[i] += ci;
                    axpy(-ci, V[i], w);
                }
            }
            for (std::size_t i = 0; i <= j; ++i) h(i, j) = h(j, i) = c[i];
            beta = norm2(w);
            scale = std::max(scale, std::fabs(c[j]));
            if (j + 1 == p) break;
            if (beta <= 1e-13 * std::max(scale, 1.0)) {
                // invariant subspace: continue in a fresh direction
                auto v = random_unit(n, g, locked, V);
                if (v.empty()) {
                    beta = 0.0;
                    break;
                }
                V.resize(j + 1);
                V.push_back(std::move(v));
                beta = 0.0;
            } else {
                V.resize(j + 1);
                std::vector<double> v(w);
                for (double& x : v) x /= beta;
                V.push_back(std::move(v));
            }
        }
        const std::size_t dim = std::min(p, V.size());

        std::vector<double> Y(dim * dim), theta(dim);
        for (std::size_t j = 0; j < dim; ++j)
            for (std::size_t i = 0; i < dim; ++i) Y[j * dim + i] = 0.5 * (h(i, j) + h(j, i));
        if (LAPACKE_dsyev(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(dim), Y.data(),
                          static_cast<lapack_int>(dim), theta.data()) != 0)
            fail(ErrorCode::NumericFailure, "projected eigenproblem failed");
        for (double t : theta) scale = std::max(scale, std::fabs(t));

        std::size_t good = 0;
        std::vector<double> est(nev);
        for (std::size_t i = 0; i < nev; ++i) {
            est[i] = std::fabs(beta * Y[i * dim + dim - 1]);
            best[i] = std::min(best[i], est[i]);
            if (est[i] <= tol * scale) ++good;
        }
        const bool exhausted = dim == avail;
        if (good == nev || exhausted || cycle >= max_restarts) {
            if (good < nev && !exhausted)
                throw ConvergenceFailure("Lanczos did not converge within " + std::to_string(max_restarts) +
                                             " restarts",
                                         best);
            for (std::size_t i = 0; i < nev; ++i) {
                std::vector<double> u(n, 0.0);
                for (std::size_t c = 0; c < dim; ++c) axpy(Y[i * dim + c], V[c], u);
                double nu = norm2(u);
                for (double& x : u) x /= nu;
                out.values.push_back(sign * theta[i]);
                out.vectors.push_back(std::move(u));
                out.residuals.push_back(est[i]);
            }
            return out;
        }

        // thick restart: keep the lowest `keep` Ritz vectors plus the residual direction
        const std::size_t keep = std::min(dim - 1, nev + (dim - nev) / 2);
        std::vector<std::vector<double>> U;
        U.reserve(p + 1);
        for (std::size_t i = 0; i < keep; ++i) {
            std::vector<double> u(n, 0.0);
            for (std::size_t c = 0; c < dim; ++c) axpy(Y[i * dim + c], V[c], u);
            U.push_back(std::move(u));
        }
        std::vector<double> resid;
        if (beta > 0.0) {
            resid = w;
            for (double& x : resid) x /= beta;
        } else {
            resid = random_unit(n, g, locked, U);
        }
        std::fill(H.begin(), H.end(), 0.0);
        for (std::size_t i = 0; i < keep; ++i) {
            h(i, i) = theta[i];
            h(i, keep) = h(keep, i) = beta * Y[i * dim + dim - 1];
        }
        U.push_back(std::move(resid));
        V = std::move(U);
        start = keep;
    }
}

}  // namespace

std::vector<bool> SpectralResult::isolated() const {
    std::vector<bool> out;
    for (double v : eigenvalues) out.push_back(v < essential_threshold);
    return out;
}

SpectralResult eig_lowest(const AmvOperator& op, std::size_t k, const EigOptions& opts) {
    const std::size_t n = op.size();
    if (k + 1 > n)
        fail(ErrorCode::InvalidInput, "requested " + std::to_string(k + 1) + " eigenpairs from " +
                                          std::to_string(n) + " points");
    SymmetrizedOperator S(op);
    const std::size_t nev = k + 1;
    const bool dense = opts.path == SolverPath::Dense || (opts.path == SolverPath::Auto && n <= opts.dense_limit);

    SpectralResult res;
    res.r = op.radius();
    res.connected = op.connected();
    res.essential_threshold = op.essential_threshold();

    std::vector<std::vector<double>> vecs;
    if (dense) {
        auto d = dense_lowest(S, nev, opts.spectral_radius);
        res.eigenvalues = std::move(d.values);
        vecs = std::move(d.vectors);
        res.spectral_radius = d.top;
        res.solver = "dense";
    } else {
        const std::size_t restarts = opts.max_restarts ? opts.max_restarts : 10 * k + 200;
        std::vector<std::vector<double>> locked;
        std::vector<double> locked_vals;
        const double scale = op.norm_bound();
        // Single-vector Krylov spaces see one direction per eigenspace, so
        // repeat in the complement of everything found until nothing lower
        // than the current k-th value shows up.
        for (std::size_t pass = 0; pass <= nev + 1 && locked.size() + nev <= n; ++pass) {
            auto kr = lanczos(S, 1.0, nev, locked, opts.seed + pass, opts.tolerance, restarts);
            res.matvecs += kr.matvecs;
            bool improved = pass == 0;
            if (!improved) {
                std::vector<double> sorted(locked_vals);
                std::sort(sorted.begin(), sorted.end());
                improved = kr.values.front() < sorted[nev - 1] - opts.tolerance * scale;
            }
            for (std::size_t i = 0; i < kr.values.size(); ++i) {
                locked_vals.push_back(kr.values[i]);
                locked.push_back(std::move(kr.vectors[i]));
            }
            if (!improved) break;
        }
        std::vector<std::size_t> order(locked.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return locked_vals[a] < locked_vals[b]; });
        for (std::size_t i = 0; i < nev; ++i) {
            res.eigenvalues.push_back(locked_vals[order[i]]);
            vecs.push_back(std::move(locked[order[i]]));
        }
        if (opts.spectral_radius) {
            auto top = lanczos(S, -1.0, 1, {}, opts.seed ^ 0x9e3779b97f4a7c15ULL, opts.tolerance, restarts);
            res.spectral_radius = top.values.front();
            res.matvecs += top.matvecs;
        }
        res.solver = "lanczos";
    }

    const double clamp_scale = opts.spectral_radius && res.spectral_radius > 0.0 ? res.spectral_radius
                                                                               : op.norm_bound();
    if (res.connected && std::fabs(res.eigenvalues.front()) < 1e-10 * clamp_scale) res.eigenvalues.front() = 0.0;

    const auto w = op.weights();
    for (std::size_t i = 0; i < nev; ++i) {
        std::vector<double> f = S.to_weighted(vecs[i]);
        // normalize in L^2(w); D^{-1/2} already makes this 1 up to rounding
        double nf = std::sqrt(inner_w(w, f, f));
        for (double& x : f) x /= nf;
        auto lf = op.apply_amv(f);
        long double acc = 0.0L;
        for (std::size_t j = 0; j < n; ++j) {
            long double t = -static_cast<long double>(lf[j]) - static_cast<long double>(res.eigenvalues[i]) * f[j];
            acc += t * t * w[j];
        }
        res.residuals.push_back(static_cast<double>(std::sqrt(acc)));
        res.eigenvectors.push_back(std::move(f));
    }
    return res;
}

void save_spectrum(const SpectralResult& res, const AmvOperator& op, const std::filesystem::path& path,
                   const std::filesystem::path& vectors_path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out << "k,lambda,residual\n";
    for (std::size_t k = 0; k < res.eigenvalues.size(); ++k)
        out << k << ',' << format_double(res.eigenvalues[k]) << ',' << format_double(res.residuals[k]) << '\n';

    nlohmann::ordered_json meta;
    meta["r"] = res.r;
    meta["n"] = op.size();
    meta["space"] = to_string(op.samples().space.kind);
    meta["volume_mode"] = to_string(op.volumes().mode);
    meta["essential_threshold"] = res.essential_threshold;
    meta["spectral_radius"] = res.spectral_radius;
    meta["solver"] = res.solver;
    std::filesystem::path mp = path;
    mp += ".json";
    std::ofstream m(mp, std::ios::binary);
    if (!m) fail(ErrorCode::Io, "cannot open " + mp.string() + " for writing");
    m << meta.dump(2) << '\n';

    if (!vectors_path.empty()) {
        std::ofstream v(vectors_path, std::ios::binary);
        if (!v) fail(ErrorCode::Io, "cannot open " + vectors_path.string() + " for writing");
        for (std::size_t k = 0; k < res.eigenvectors.size(); ++k) v << (k ? "," : "") << "f" << k;
        v << '\n';
        for (std::size_t i = 0; i < op.size(); ++i) {
            for (std::size_t k = 0; k < res.eigenvectors.size(); ++k)
                v << (k ? "," : "") << format_double(res.eigenvectors[k][i]);
            v << '\n';
        }
    }
}

double spectral_radius(const AmvOperator& op, const EigOptions& opts) {
    SymmetrizedOperator S(op);
    if (opts.path == SolverPath::Dense || (opts.path == SolverPath::Auto && op.size() <= opts.dense_limit))
        return dense_lowest(S, 1, true).top;
    const std::size_t restarts = opts.max_restarts ? opts.max_restarts : 200;
    return lanczos(S, -1.0, 1, {}, opts.seed, opts.tolerance, restarts).values.front();
}

double rayleigh(const AmvOperator& op, std::span<const double> f) {
    double nf = inner_w(op.weights(), f, f);
    if (!(nf > 0.0)) fail(ErrorCode::InvalidInput, "Rayleigh quotient of the zero vector");
    return op.energy(f) / nf;
}

double subspace_max_rayleigh(const AmvOperator& op, const std::vector<std::vector<double>>& basis) {
    const auto d = static_cast<lapack_int>(basis.size());
    require(d >= 1, "empty subspace");
    std::vector<double> E(d * d), G(d * d);
    for (lapack_int a = 0; a < d; ++a)
        for (lapack_int b = 0; b <= a; ++b) {
            E[b * d + a] = E[a * d + b] = op.energy_bilinear(basis[a], basis[b]);
            G[b * d + a] = G[a * d + b] = inner_w(op.weights(), basis[a], basis[b]);
        }
    std::vector<double> theta(d);
    if (LAPACKE_dsygv(LAPACK_COL_MAJOR, 1, 'N', 'L', d, E.data(), d, G.data(), d, theta.data()) != 0)
        fail(ErrorCode::NumericFailure, "subspace basis is degenerate");
    return theta.back();
}

TentBound tent_upper_bound(const AmvOperator& op, const std::vector<std::vector<double>>& centers) {
    const auto& samples = op.samples();
    const auto& space = samples.space;
    require(!centers.empty(), "need at least one tent center");
    for (const auto& c : centers)
        require(c.size() == static_cast<std::size_t>(space.ambient), "tent center has the wrong dimension");

    TentBound tb;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < centers.size(); ++i)
        for (std::size_t j = i + 1; j < centers.size(); ++j) {
            double d = distance(space, centers[i], centers[j]);
            require(d > 0.0, "tent centers must be pairwise distinct");
            dmin = std::min(dmin, d);
        }
    // a single tent has no partner; its support only has to fit in the space
    tb.rbar = centers.size() > 1 ? dmin / 4.0 : space.diameter_bound() / 4.0;
    if (!(op.radius() < tb.rbar))
        fail(ErrorCode::InvalidInput, "radius must be below a quarter of the minimum center separation");

    const std::size_t n = samples.size();
    for (const auto& c : centers) {
        std::vector<double> f(n);
        for (std::size_t y = 0; y < n; ++y)
            f[y] = std::max(0.0, 1.0 - distance_unchecked(space, c.data(), samples.point_ptr(y)) / tb.rbar);
        double nf = std::sqrt(inner_w(op.weights(), f, f));
        require(nf > 0.0, "no sample point lies inside a tent support");
        for (double& x : f) x /= nf;
        tb.tents.push_back(std::move(f));
    }
    const std::size_t k = centers.size();
    tb.cross.assign(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) tb.cross[i][j] = op.energy_bilinear(tb.tents[i], tb.tents[j]);
    for (std::size_t i = 0; i < k; ++i) tb.energies.push_back(tb.cross[i][i]);
    tb.bound = *std::max_element(tb.energies.begin(), tb.energies.end());
    return tb;
}

ThresholdReport essential_threshold(const AmvOperator& op) {
    ThresholdReport t;
    t.threshold = op.essential_threshold();
    t.lower_bound = 1.0 / (2.0 * op.radius() * op.radius());
    t.holds = t.threshold >= t.lower_bound;
    return t;
}

}  // namespace amv
