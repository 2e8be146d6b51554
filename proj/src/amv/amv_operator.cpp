#include "amv/amv_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>

#include "amv/error.hpp"
#include "amv/format.hpp"
#include "amv/parallel.hpp"
#include "json.hpp"

namespace amv {

AmvOperator AmvOperator::assemble(std::shared_ptr<const SampleSet> samples, BallIndex idx, VolumeField vols) {
    require(samples != nullptr, "operator needs a sample set");
    const std::size_t n = samples->size();
    require(idx.size() == n, "ball index does not match the sample set");
    require(vols.values.size() == n, "volume field does not match the sample set");
    require(idx.radius() == vols.r, "ball index and volume field were built with different radii");
    for (double v : vols.values) require(v > 0.0 && std::isfinite(v), "ball volumes must be positive");

    AmvOperator op;
    op.samples_ = std::move(samples);
    op.idx_ = std::move(idx);
    op.vols_ = std::move(vols);
    op.kernel_.resize(op.idx_.nnz());
    op.avg_one_.resize(n);

    const auto& offsets = op.idx_.offsets();
    const auto& cols = op.idx_.indices();
    const auto& V = op.vols_.values;
    const auto& w = op.samples_->weights;
    parallel_for(n, [&](std::size_t i) {
        long double acc = 0.0L;
        for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
            std::size_t j = cols[p];
            // commutative sum, so ã_ij and ã_ji are bitwise equal
            double a = 0.5 * (1.0 / V[i] + 1.0 / V[j]);
            op.kernel_[p] = a;
            acc += static_cast<long double>(a) * w[j];
        }
        op.avg_one_[i] = static_cast<double>(acc);
    });
    op.connected_ = is_connected(op.idx_);
    return op;
}

AmvOperator build_operator(std::shared_ptr<const SampleSet> samples, double r, VolumeMode mode) {
    BallIndex idx = ball_index(*samples, r);
    VolumeField vols = ball_volume(*samples, idx, mode);
    return AmvOperator::assemble(std::move(samples), std::move(idx), std::move(vols));
}

void AmvOperator::check_length(std::size_t len) const {
    if (len != size())
        fail(ErrorCode::InvalidInput,
             "vector length " + std::to_string(len) + " does not match point count " + std::to_string(size()));
}

std::vector<double> AmvOperator::apply_averaging(std::span<const double> f) const {
    check_length(f.size());
    std::vector<double> out(size());
    const auto& w = samples_->weights;
    parallel_for(size(), [&](std::size_t i) {
        long double acc = 0.0L;
        for (std::uint32_t j : idx_.neighbors(i)) acc += static_cast<long double>(f[j]) * w[j];
        out[i] = static_cast<double>(acc / vols_.values[i]);
    });
    return out;
}

std::vector<double> AmvOperator::apply_adjoint(std::span<const double> f) const {
    check_length(f.size());
    std::vector<double> out(size());
    const auto& w = samples_->weights;
    parallel_for(size(), [&](std::size_t i) {
        long double acc = 0.0L;
        for (std::uint32_t j : idx_.neighbors(i)) acc += static_cast<long double>(f[j]) * w[j] / vols_.values[j];
        out[i] = static_cast<double>(acc);
    });
    return out;
}

std::vector<double> AmvOperator::apply_symmetrized(std::span<const double> f) const {
    check_length(f.size());
    std::vector<double> out(size());
    const auto& w = samples_->weights;
    const auto& offsets = idx_.offsets();
    const auto& cols = idx_.indices();
    parallel_for(size(), [&](std::size_t i) {
        long double acc = 0.0L;
        for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p)
            acc += static_cast<long double>(kernel_[p]) * w[cols[p]] * f[cols[p]];
        out[i] = static_cast<double>(acc);
    });
    return out;
}

std::vector<double> AmvOperator::apply_amv(std::span<const double> f) const {
    check_length(f.size());
    std::vector<double> out(size());
    const auto& w = samples_->weights;
    const auto& offsets = idx_.offsets();
    const auto& cols = idx_.indices();
    const long double inv_r2 = 1.0L / (static_cast<long double>(radius()) * radius());
    parallel_for(size(), [&](std::size_t i) {
        long double acc = 0.0L;
        for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
            std::size_t j = cols[p];
            acc += static_cast<long double>(kernel_[p]) * w[j] * (static_cast<long double>(f[j]) - f[i]);
        }
        out[i] = static_cast<double>(acc * inv_r2);
    });
    return out;
}

double AmvOperator::energy_bilinear(std::span<const double> f, std::span<const double> g) const {
    check_length(f.size());
    check_length(g.size());
    const auto& w = samples_->weights;
    const auto& offsets = idx_.offsets();
    const auto& cols = idx_.indices();
    std::vector<long double> rows(size());
    parallel_for(size(), [&](std::size_t i) {
        long double acc = 0.0L;
        for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
            std::size_t j = cols[p];
            acc += static_cast<long double>(kernel_[p]) * w[j] * (static_cast<long double>(f[i]) - f[j]) *
                   (static_cast<long double>(g[i]) - g[j]);
        }
        rows[i] = acc * w[i];
    });
    long double total = 0.0L;
    for (long double v : rows) total += v;
    // ¼ (1/V_i + 1/V_j) = ½ ã_ij
    return static_cast<double>(0.5L * total / (static_cast<long double>(radius()) * radius()));
}

double AmvOperator::energy(std::span<const double> f) const { return energy_bilinear(f, f); }

double AmvOperator::korevaar_schoen_energy(std::span<const double> f) const {
    check_length(f.size());
    const auto& w = samples_->weights;
    std::vector<long double> rows(size());
    parallel_for(size(), [&](std::size_t i) {
        long double acc = 0.0L;
        for (std::uint32_t j : idx_.neighbors(i)) {
            long double d = static_cast<long double>(f[i]) - f[j];
            acc += d * d * w[j];
        }
        rows[i] = acc * w[i] / vols_.values[i];
    });
    long double total = 0.0L;
    for (long double v : rows) total += v;
    return static_cast<double>(0.5L * total / (static_cast<long double>(radius()) * radius()));
}

double AmvOperator::condition_ir() const {
    std::vector<double> ones(size(), 1.0);
    auto a = apply_adjoint(ones);
    return *std::max_element(a.begin(), a.end());
}

double norm_bound(double condition_ir, double r) {
    require(condition_ir > 0.0, "||A*1|| must be positive");
    require(r > 0.0, "radius must be positive");
    return (2.0 * std::sqrt(condition_ir) + condition_ir + 1.0) / (2.0 * r * r);
}

double AmvOperator::norm_bound() const { return amv::norm_bound(condition_ir(), radius()); }

double AmvOperator::essential_threshold() const {
    return *std::min_element(avg_one_.begin(), avg_one_.end()) / (radius() * radius());
}

double AmvOperator::min_volume() const { return *std::min_element(vols_.values.begin(), vols_.values.end()); }
double AmvOperator::max_volume() const { return *std::max_element(vols_.values.begin(), vols_.values.end()); }

double inner_w(std::span<const double> w, std::span<const double> f, std::span<const double> g) {
    require(w.size() == f.size() && f.size() == g.size(), "vector lengths differ");
    long double acc = 0.0L;
    for (std::size_t i = 0; i < w.size(); ++i) acc += static_cast<long double>(w[i]) * f[i] * g[i];
    return static_cast<double>(acc);
}

void dump_operator(const AmvOperator& op, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
    const auto& offsets = op.balls().offsets();
    const auto& cols = op.balls().indices();
    const auto w = op.weights();
    const auto a1 = op.avg_one();
    const double inv_r2 = 1.0 / (op.radius() * op.radius());
    for (std::size_t i = 0; i < op.size(); ++i) {
        for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
            std::size_t j = cols[p];
            double v = op.kernel()[p] * w[j];
            if (j == i) v -= a1[i];
            out << i << ' ' << j << ' ' << format_double(v * inv_r2) << '\n';
        }
    }
    nlohmann::ordered_json meta{{"r", op.radius()}, {"n", op.size()}, {"volume_mode", to_string(op.volumes().mode)}};
    std::ofstream side(path.string() + ".json");
    if (!side) fail(ErrorCode::Io, "cannot write sidecar for '" + path.string() + "'");
    side << meta.dump(2) << '\n';
}

}  // namespace amv
