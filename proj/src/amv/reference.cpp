#include "amv/reference.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <numbers>

#include "amv/error.hpp"
#include "amv/format.hpp"

namespace amv {

Rational cm(int m) {
    require(m >= 1, "C_m needs m >= 1");
    return {1, 2 * (static_cast<std::int64_t>(m) + 2)};
}

double limit_constant(const SpaceDescriptor& space) {
    switch (space.kind) {
        case SpaceKind::FlatTorusLinf:
        case SpaceKind::Hypercube:
        case SpaceKind::Interval: return 1.0 / 6.0;
        default: return cm(space.m).value();
    }
}

namespace {

// sin(pi x) with exact zeros at the integers.
double sin_pi(double x) noexcept {
    double y = x - 2.0 * std::nearbyint(0.5 * x);  // y in [-1, 1]
    if (y == 0.0 || std::fabs(y) == 1.0) return 0.0;
    double a = std::fabs(y);
    double s = a > 0.5 ? std::sin(std::numbers::pi * (1.0 - a)) : std::sin(std::numbers::pi * a);
    return y < 0 ? -s : s;
}

int pinf(std::span<const int> p) {
    int v = 0;
    for (int x : p) v = std::max(v, std::abs(x));
    return v;
}

// Advances p through [-pmax, pmax]^m; returns false after the last vector.
bool next_mode(std::vector<int>& p, int pmax) {
    for (int c = static_cast<int>(p.size()) - 1; c >= 0; --c) {
        if (p[c] < pmax) {
            ++p[c];
            return true;
        }
        p[c] = -pmax;
    }
    return false;
}

int nonzeros(std::span<const int> p) {
    return static_cast<int>(std::count_if(p.begin(), p.end(), [](int x) { return x != 0; }));
}

// Tie-break among equal scan values: smaller |p|_inf, then fewer nonzero
// entries, then the lexicographically largest mode, so (1,0) wins over (-1,-1).
bool prefer(const std::vector<int>& p, int pi_max, const SincScan& best) {
    if (pi_max != best.argmin_pinf) return pi_max < best.argmin_pinf;
    int a = nonzeros(p), b = nonzeros(best.argmin_p);
    if (a != b) return a < b;
    return p > best.argmin_p;
}

}  // namespace

double sinc(double x) noexcept {
    if (x == 0.0) return 1.0;
    return sin_pi(x) / (std::numbers::pi * x);
}

double torus_linf_amv_eigenvalue(std::span<const int> p, double r) {
    double prod = 1.0;
    for (int pi : p)
        if (pi != 0) prod *= sinc(pi * r);
    return (1.0 - prod) / (r * r);
}

std::vector<double> RefSpectrum::expanded() const {
    std::vector<double> out;
    for (const auto& e : entries)
        for (int i = 0; i < e.multiplicity; ++i) out.push_back(e.value);
    return out;
}

RefSpectrum laplace_spectrum(const SpaceDescriptor& space, std::size_t count) {
    require(count >= 1, "need at least one reference entry");
    RefSpectrum out{space, {}};
    const double pi2 = std::numbers::pi * std::numbers::pi;
    switch (space.kind) {
        case SpaceKind::Interval:
            for (std::size_t k = 0; k < count; ++k) {
                double v = std::numbers::pi * static_cast<double>(k) / space.side;
                out.entries.push_back({v * v, 1, "k=" + std::to_string(k)});
            }
            return out;
        case SpaceKind::Sphere2:
            for (std::size_t l = 0; l < count; ++l)
                out.entries.push_back({static_cast<double>(l * (l + 1)), static_cast<int>(2 * l + 1),
                                       "l=" + std::to_string(l)});
            return out;
        case SpaceKind::FlatTorusLinf:
        case SpaceKind::FlatTorusEuclid:
        case SpaceKind::Hypercube: {
            // Torus modes run over Z^m, Neumann cube modes over N_0^m; squared
            // norms <= P^2 are complete once |p|_inf <= P is enumerated.
            const bool torus = space.kind != SpaceKind::Hypercube;
            for (int P = 2;; P *= 2) {
                std::map<long long, int> groups;
                std::vector<int> p(space.m, torus ? -P : 0);
                for (;;) {
                    long long s = 0;
                    for (int x : p) s += static_cast<long long>(x) * x;
                    if (s <= static_cast<long long>(P) * P) ++groups[s];
                    int c = space.m - 1;
                    while (c >= 0 && p[c] == P) p[c--] = torus ? -P : 0;
                    if (c < 0) break;
                    ++p[c];
                }
                if (groups.size() < count) continue;
                const double scale = torus ? pi2 : pi2 / (space.side * space.side);
                for (auto it = groups.begin(); out.entries.size() < count; ++it)
                    out.entries.push_back({scale * static_cast<double>(it->first), it->second,
                                           (torus ? "|p|^2=" : "|k|^2=") + std::to_string(it->first)});
                return out;
            }
        }
        case SpaceKind::CustomCloud:
            break;
    }
    fail(ErrorCode::UnsupportedSpace, "no reference spectrum for custom point clouds");
}

std::vector<double> SincSpectrum::values() const {
    std::vector<double> v;
    v.reserve(entries.size());
    for (const auto& e : entries) v.push_back(e.value);
    return v;
}

std::vector<int> SincSpectrum::multiplicities(std::size_t first, std::size_t count, double rel) const {
    std::vector<int> out;
    std::size_t end = std::min(entries.size(), first + count);
    for (std::size_t i = first; i < end;) {
        std::size_t j = i + 1;
        while (j < entries.size() &&
               std::fabs(entries[j].value - entries[i].value) <= rel * std::max(1.0, std::fabs(entries[i].value)))
            ++j;
        out.push_back(static_cast<int>(j - i));
        i = j;
    }
    return out;
}

std::string to_csv(const RefSpectrum& s) {
    std::string out = "label,value,multiplicity\n";
    for (const auto& e : s.entries)
        out += e.label + ',' + format_double(e.value) + ',' + std::to_string(e.multiplicity) + '\n';
    return out;
}

std::string to_csv(const SincSpectrum& s, std::size_t max_rows) {
    std::string out = "label,value,multiplicity\n";
    auto mult = s.multiplicities(0, s.entries.size());
    std::size_t i = 0;
    for (std::size_t g = 0; g < mult.size() && g < max_rows; ++g) {
        std::string label = "p=(";
        for (std::size_t c = 0; c < s.entries[i].p.size(); ++c)
            label += (c ? " " : "") + std::to_string(s.entries[i].p[c]);
        out += label + ")," + format_double(s.entries[i].value) + ',' + std::to_string(mult[g]) + '\n';
        i += static_cast<std::size_t>(mult[g]);
    }
    return out;
}

SincSpectrum torus_linf_amv_spectrum(int m, double r, int pmax) {
    require(m >= 1, "dimension must be positive");
    require(r > 0.0 && r < 1.0, "the torus ball formula needs 0 < r < 1");
    require(pmax >= 1, "pmax must be at least 1");
    SincSpectrum s{r, m, {}};
    std::vector<int> p(m, -pmax);
    do {
        s.entries.push_back({p, torus_linf_amv_eigenvalue(p, r)});
    } while (next_mode(p, pmax));
    std::sort(s.entries.begin(), s.entries.end(), [](const SincMode& a, const SincMode& b) {
        if (a.value != b.value) return a.value < b.value;
        int pa = pinf(a.p), pb = pinf(b.p);
        if (pa != pb) return pa < pb;
        return a.p < b.p;
    });
    return s;
}

std::vector<double> default_scan_grid() {
    std::vector<double> g;
    for (int k = 1; k <= 100; ++k) g.push_back(k / 100.0);
    return g;
}

SincScan sinc_scan(int m, const std::vector<double>& r_grid, int pmax) {
    require(m >= 1, "dimension must be positive");
    require(!r_grid.empty(), "scan grid is empty");
    require(pmax >= 1, "pmax must be at least 1");
    for (double r : r_grid) require(r > 0.0 && r <= 1.0, "scan radii must lie in (0, 1]");

    SincScan best{m, std::numeric_limits<double>::infinity(), 0.0, {}, 0};
    std::vector<double> table(2 * pmax + 1);
    for (double r : r_grid) {
        for (int q = -pmax; q <= pmax; ++q) table[q + pmax] = sinc(q * r);
        std::vector<int> p(m, -pmax);
        do {
            int pi_max = pinf(p);
            if (pi_max == 0) continue;
            double prod = 1.0;
            for (int x : p)
                if (x != 0) prod *= table[x + pmax];
            double v = std::fabs((1.0 - prod) / (r * r));
            if (v < best.minimum || (v == best.minimum && prefer(p, pi_max, best))) {
                best.minimum = v;
                best.argmin_r = r;
                best.argmin_p = p;
                best.argmin_pinf = pi_max;
            }
        } while (next_mode(p, pmax));
    }
    return best;
}

namespace {

template <class F>
double integrate(F f, double a, double b) {
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, 20, 1e-13, &err);
    if (!std::isfinite(v) || err > 1e-11)
        fail(ErrorCode::NumericFailure, "ball-symbol quadrature did not reach the requested accuracy");
    return v;
}

}  // namespace

double round_ball_symbol(int m, double p_norm, double r) {
    require(m >= 1 && m <= 3, "round-ball symbol is available for m = 1, 2, 3");
    require(p_norm >= 0.0, "frequency norm must be nonnegative");
    require(r > 0.0, "radius must be positive");
    if (p_norm == 0.0) return 1.0;
    const double k = std::numbers::pi * p_norm;
    double v = 0.0;
    if (m == 1) {
        v = integrate([&](double s) { return std::cos(k * s); }, 0.0, r) / r;
    } else if (m == 2) {
        // angular mean over the circle, then radial weight s ds
        auto ring = [&](double s) {
            return integrate([&](double phi) { return std::cos(k * s * std::cos(phi)); }, 0.0, std::numbers::pi) /
                   std::numbers::pi;
        };
        v = 2.0 * integrate([&](double s) { return s * ring(s); }, 0.0, r) / (r * r);
    } else {
        // angular mean over the sphere (polar angle with sin weight)
        auto shell = [&](double s) {
            return 0.5 * integrate([&](double th) { return std::cos(k * s * std::cos(th)) * std::sin(th); }, 0.0,
                                   std::numbers::pi);
        };
        v = 3.0 * integrate([&](double s) { return s * s * shell(s); }, 0.0, r) / (r * r * r);
    }
    return v;
}

}  // namespace amv
