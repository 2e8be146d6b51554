#include "amv/amv.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "amv/amv_operator.hpp"
#include "amv/error.hpp"
#include "amv/geometry.hpp"
#include "amv/harness.hpp"
#include "amv/reference.hpp"
#include "amv/spectra.hpp"

struct amv_samples {
    std::shared_ptr<const amv::SampleSet> set;
};

struct amv_operator {
    amv::AmvOperator op;
};

struct amv_spectrum {
    amv::SpectralResult result;
    std::shared_ptr<const amv::SampleSet> samples;
    std::unique_ptr<amv::AmvOperator> op;
};

namespace {

thread_local std::string g_last_error;

amv_status set_error(amv_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

amv_status from_code(amv::ErrorCode c) {
    switch (c) {
        case amv::ErrorCode::InvalidInput: return AMV_ERR_INVALID_INPUT;
        case amv::ErrorCode::UnsupportedStrategy: return AMV_ERR_UNSUPPORTED_STRATEGY;
        case amv::ErrorCode::UnsupportedMode: return AMV_ERR_UNSUPPORTED_MODE;
        case amv::ErrorCode::UnsupportedSpace: return AMV_ERR_UNSUPPORTED_SPACE;
        case amv::ErrorCode::ConvergenceFailure: return AMV_ERR_CONVERGENCE;
        case amv::ErrorCode::NumericFailure: return AMV_ERR_NUMERIC;
        case amv::ErrorCode::Io: return AMV_ERR_IO;
        case amv::ErrorCode::BudgetExhausted: return AMV_ERR_BUDGET_EXHAUSTED;
    }
    return AMV_ERR_INTERNAL;
}

template <class F>
amv_status guarded(F&& body) {
    try {
        g_last_error.clear();
        body();
        return AMV_OK;
    } catch (const amv::Error& e) {
        return set_error(from_code(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(AMV_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(AMV_ERR_INTERNAL, e.what());
    }
}

void need(const void* p, const char* what) {
    if (!p) amv::fail(amv::ErrorCode::InvalidInput, std::string(what) + " is null");
}

void copy_out(const std::vector<double>& v, double* out, std::size_t len) {
    need(out, "output buffer");
    if (len < v.size())
        amv::fail(amv::ErrorCode::InvalidInput,
                  "output buffer holds " + std::to_string(len) + " values, " + std::to_string(v.size()) + " needed");
    std::memcpy(out, v.data(), v.size() * sizeof(double));
}

const amv::AmvOperator& op_of(const amv_operator* op) {
    need(op, "operator");
    return op->op;
}

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

extern "C" {

const char* amv_version(void) { return amv::kLibraryVersion; }

const char* amv_last_error(void) { return g_last_error.c_str(); }

const char* amv_status_string(amv_status status) {
    switch (status) {
        case AMV_OK: return "ok";
        case AMV_ERR_INVALID_INPUT: return "invalid-input";
        case AMV_ERR_UNSUPPORTED_STRATEGY: return "unsupported-strategy";
        case AMV_ERR_UNSUPPORTED_MODE: return "unsupported-mode";
        case AMV_ERR_UNSUPPORTED_SPACE: return "unsupported-space";
        case AMV_ERR_CONVERGENCE: return "convergence-failure";
        case AMV_ERR_NUMERIC: return "numeric-failure";
        case AMV_ERR_IO: return "io";
        case AMV_ERR_BUDGET_EXHAUSTED: return "budget-exhausted";
        case AMV_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

amv_status amv_samples_create(amv_space_kind kind, int m, double side, size_t n, amv_strategy strategy,
                              uint64_t seed, amv_samples** out) {
    return guarded([&] {
        need(out, "out");
        *out = nullptr;
        amv::SpaceDescriptor space;
        switch (kind) {
            case AMV_SPACE_TORUS_LINF: space = amv::SpaceDescriptor::torus_linf(m); break;
            case AMV_SPACE_TORUS_EUCLID: space = amv::SpaceDescriptor::torus_euclid(m); break;
            case AMV_SPACE_HYPERCUBE: space = amv::SpaceDescriptor::hypercube(m, side); break;
            case AMV_SPACE_INTERVAL: space = amv::SpaceDescriptor::interval(side); break;
            case AMV_SPACE_SPHERE2: space = amv::SpaceDescriptor::sphere2(); break;
            default: amv::fail(amv::ErrorCode::InvalidInput, "unknown space kind");
        }
        amv::SampleStrategy st;
        switch (strategy) {
            case AMV_SAMPLE_GRID: st = amv::SampleStrategy::Grid; break;
            case AMV_SAMPLE_IID: st = amv::SampleStrategy::Iid; break;
            case AMV_SAMPLE_FIBONACCI: st = amv::SampleStrategy::Fibonacci; break;
            default: amv::fail(amv::ErrorCode::UnsupportedStrategy, "unknown sampling strategy");
        }
        auto set = std::make_shared<const amv::SampleSet>(amv::sample(space, n, st, seed));
        *out = new amv_samples{std::move(set)};
    });
}

amv_status amv_samples_load_csv(const char* path, int m, amv_samples** out) {
    return guarded([&] {
        need(out, "out");
        need(path, "path");
        *out = nullptr;
        auto set = std::make_shared<const amv::SampleSet>(amv::load_cloud_csv(path, m));
        *out = new amv_samples{std::move(set)};
    });
}

void amv_samples_free(amv_samples* s) { delete s; }

size_t amv_samples_size(const amv_samples* s) { return s ? s->set->size() : 0; }

int amv_samples_dim(const amv_samples* s) { return s ? s->set->dim() : 0; }

amv_status amv_samples_coords(const amv_samples* s, double* out, size_t len) {
    return guarded([&] {
        need(s, "samples");
        copy_out(s->set->coords, out, len);
    });
}

amv_status amv_samples_weights(const amv_samples* s, double* out, size_t len) {
    return guarded([&] {
        need(s, "samples");
        copy_out(s->set->weights, out, len);
    });
}

amv_status amv_samples_save(const amv_samples* s, const char* path) {
    return guarded([&] {
        need(s, "samples");
        need(path, "path");
        amv::save_samples(*s->set, path);
    });
}

amv_status amv_operator_create(const amv_samples* s, double r, amv_volume_mode mode, amv_operator** out) {
    return guarded([&] {
        need(out, "out");
        need(s, "samples");
        *out = nullptr;
        if (mode != AMV_VOLUME_EMPIRICAL && mode != AMV_VOLUME_ANALYTIC)
            amv::fail(amv::ErrorCode::UnsupportedMode, "unknown volume mode");
        auto vm = mode == AMV_VOLUME_ANALYTIC ? amv::VolumeMode::Analytic : amv::VolumeMode::Empirical;
        *out = new amv_operator{amv::build_operator(s->set, r, vm)};
    });
}

void amv_operator_free(amv_operator* op) { delete op; }

size_t amv_operator_size(const amv_operator* op) { return op ? op->op.size() : 0; }

amv_status amv_operator_apply(const amv_operator* op, amv_action action, const double* f, double* out, size_t n) {
    return guarded([&] {
        const auto& o = op_of(op);
        need(f, "input vector");
        std::span<const double> in(f, n);
        std::vector<double> res;
        switch (action) {
            case AMV_APPLY_AVERAGING: res = o.apply_averaging(in); break;
            case AMV_APPLY_ADJOINT: res = o.apply_adjoint(in); break;
            case AMV_APPLY_SYMMETRIZED: res = o.apply_symmetrized(in); break;
            case AMV_APPLY_LAPLACIAN: res = o.apply_amv(in); break;
            default: amv::fail(amv::ErrorCode::InvalidInput, "unknown operator action");
        }
        copy_out(res, out, n);
    });
}

amv_status amv_operator_energy(const amv_operator* op, const double* f, const double* g, size_t n, double* out) {
    return guarded([&] {
        const auto& o = op_of(op);
        need(f, "f");
        need(out, "out");
        std::span<const double> fs(f, n);
        *out = g ? o.energy_bilinear(fs, std::span<const double>(g, n)) : o.energy(fs);
    });
}

amv_status amv_operator_korevaar_schoen(const amv_operator* op, const double* f, size_t n, double* out) {
    return guarded([&] {
        const auto& o = op_of(op);
        need(f, "f");
        need(out, "out");
        *out = o.korevaar_schoen_energy(std::span<const double>(f, n));
    });
}

amv_status amv_operator_diagnostics(const amv_operator* op, amv_diagnostics* out) {
    return guarded([&] {
        const auto& o = op_of(op);
        need(out, "out");
        out->condition_ir = o.condition_ir();
        out->norm_bound = o.norm_bound();
        out->essential_threshold = o.essential_threshold();
        out->min_volume = o.min_volume();
        out->max_volume = o.max_volume();
        out->connected = o.connected() ? 1 : 0;
    });
}

amv_status amv_operator_dump(const amv_operator* op, const char* path) {
    return guarded([&] {
        const auto& o = op_of(op);
        need(path, "path");
        amv::dump_operator(o, path);
    });
}

amv_status amv_spectrum_compute(const amv_operator* op, size_t k, amv_solver solver, uint64_t seed,
                                amv_spectrum** out) {
    return guarded([&] {
        const auto& o = op_of(op);
        need(out, "out");
        *out = nullptr;
        amv::EigOptions opts;
        switch (solver) {
            case AMV_SOLVER_AUTO: opts.path = amv::SolverPath::Auto; break;
            case AMV_SOLVER_DENSE: opts.path = amv::SolverPath::Dense; break;
            case AMV_SOLVER_LANCZOS: opts.path = amv::SolverPath::Lanczos; break;
            default: amv::fail(amv::ErrorCode::UnsupportedStrategy, "unknown solver");
        }
        opts.seed = seed;
        auto s = std::make_unique<amv_spectrum>();
        s->result = amv::eig_lowest(o, k, opts);
        s->samples = o.samples_ptr();
        s->op = std::make_unique<amv::AmvOperator>(o);
        *out = s.release();
    });
}

void amv_spectrum_free(amv_spectrum* s) { delete s; }

size_t amv_spectrum_count(const amv_spectrum* s) { return s ? s->result.eigenvalues.size() : 0; }

amv_status amv_spectrum_eigenvalues(const amv_spectrum* s, double* out, size_t len) {
    return guarded([&] {
        need(s, "spectrum");
        copy_out(s->result.eigenvalues, out, len);
    });
}

amv_status amv_spectrum_residuals(const amv_spectrum* s, double* out, size_t len) {
    return guarded([&] {
        need(s, "spectrum");
        copy_out(s->result.residuals, out, len);
    });
}

amv_status amv_spectrum_eigenvector(const amv_spectrum* s, size_t i, double* out, size_t len) {
    return guarded([&] {
        need(s, "spectrum");
        if (i >= s->result.eigenvectors.size()) amv::fail(amv::ErrorCode::InvalidInput, "eigenvector index out of range");
        copy_out(s->result.eigenvectors[i], out, len);
    });
}

double amv_spectrum_essential_threshold(const amv_spectrum* s) { return s ? s->result.essential_threshold : kNaN; }

double amv_spectrum_spectral_radius(const amv_spectrum* s) { return s ? s->result.spectral_radius : kNaN; }

amv_status amv_spectrum_save(const amv_spectrum* s, const char* path) {
    return guarded([&] {
        need(s, "spectrum");
        need(path, "path");
        amv::save_spectrum(s->result, *s->op, path);
    });
}

double amv_cm(int m) { return m >= 1 ? amv::cm(m).value() : kNaN; }

double amv_sinc(double x) { return amv::sinc(x); }

double amv_torus_linf_eigenvalue(const int* p, int m, double r) {
    if (!p || m < 1 || !(r > 0.0)) return kNaN;
    return amv::torus_linf_amv_eigenvalue(std::span<const int>(p, static_cast<std::size_t>(m)), r);
}

amv_status amv_run(const char* config_json, char** csv_out, int* truncated) {
    return guarded([&] {
        need(config_json, "config");
        if (csv_out) *csv_out = nullptr;
        if (truncated) *truncated = 0;
        auto j = nlohmann::json::parse(config_json, nullptr, false);
        if (j.is_discarded()) amv::fail(amv::ErrorCode::InvalidInput, "config is not valid JSON");
        auto cfg = amv::ExperimentConfig::from_json(j);
        amv::ResultTable table = amv::run(cfg);
        if (!cfg.out.empty()) table.write(cfg.out);
        if (csv_out) *csv_out = dup_string(table.to_csv());
        if (truncated) *truncated = table.truncated ? 1 : 0;
    });
}

void amv_string_free(char* s) { std::free(s); }

}  // extern "C"
