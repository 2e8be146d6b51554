#pragma once

// Discrete averaging operators and the symmetrized AMV Laplacian on a
// weighted sample set.

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "amv/geometry.hpp"

namespace amv {

/// Assembled ball operators on a sample set.
///
/// With weights w and ball volumes V the discrete actions are
///   (A f)_i  = (1/V_i) sum_{j in B(i)} f_j w_j
///   (A* f)_i = sum_{j in B(i)} f_j w_j / V_j
///   (Ã f)_i  = sum_{j in B(i)} ã_ij f_j w_j,   ã_ij = (1/V_i + 1/V_j)/2
///   (Δ f)_i  = ((Ã f)_i - [Ã1]_i f_i) / r^2
/// The Laplacian is evaluated as sum_j ã_ij w_j (f_j - f_i) / r^2 so that
/// constants are annihilated exactly.
class AmvOperator {
public:
    static AmvOperator assemble(std::shared_ptr<const SampleSet> samples, BallIndex idx, VolumeField vols);

    double radius() const noexcept { return idx_.radius(); }
    std::size_t size() const noexcept { return idx_.size(); }
    const SampleSet& samples() const noexcept { return *samples_; }
    std::shared_ptr<const SampleSet> samples_ptr() const noexcept { return samples_; }
    const BallIndex& balls() const noexcept { return idx_; }
    const VolumeField& volumes() const noexcept { return vols_; }
    std::span<const double> weights() const noexcept { return samples_->weights; }
    std::span<const double> avg_one() const noexcept { return avg_one_; }
    // Kernel values aligned with balls().indices().
    std::span<const double> kernel() const noexcept { return kernel_; }

    std::vector<double> apply_averaging(std::span<const double> f) const;
    std::vector<double> apply_adjoint(std::span<const double> f) const;
    std::vector<double> apply_symmetrized(std::span<const double> f) const;
    std::vector<double> apply_amv(std::span<const double> f) const;

    double energy(std::span<const double> f) const;
    double energy_bilinear(std::span<const double> f, std::span<const double> g) const;
    // ½ sum_i w_i (1/V_i) sum_{j in B(i)} ((f_i - f_j)/r)^2 w_j
    double korevaar_schoen_energy(std::span<const double> f) const;

    // ||A*1||_inf
    double condition_ir() const;
    double norm_bound() const;
    // min_i [Ã1]_i / r^2
    double essential_threshold() const;
    double min_volume() const;
    double max_volume() const;
    bool connected() const { return connected_; }

private:
    AmvOperator() = default;
    void check_length(std::size_t len) const;

    std::shared_ptr<const SampleSet> samples_;
    BallIndex idx_;
    VolumeField vols_;
    std::vector<double> kernel_;
    std::vector<double> avg_one_;
    bool connected_ = true;
};

// Builds balls, volumes and the operator in one go.
AmvOperator build_operator(std::shared_ptr<const SampleSet> samples, double r, VolumeMode mode);

// (2 s^{1/2} + s + 1) / (2 r^2) with s = ||A*1||_inf.
double norm_bound(double condition_ir, double r);

// Weighted inner product sum_i w_i f_i g_i.
double inner_w(std::span<const double> w, std::span<const double> f, std::span<const double> g);

// Coordinate-format dump (`i j value`, 0-based) of the Laplacian plus
// `<path>.json` metadata {r, n, volume_mode}.
void dump_operator(const AmvOperator& op, const std::filesystem::path& path);

}  // namespace amv
