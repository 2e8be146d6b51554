#ifndef AMV_AMV_H
#define AMV_AMV_H

/* C interface to the AMV Laplacian library.
 *
 * All objects are opaque handles created by *_create and released by the
 * matching *_free. Functions that can fail return an amv_status; on failure
 * amv_last_error() describes the problem for the calling thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(AMV_BUILDING_LIBRARY)
#    define AMV_API __declspec(dllexport)
#  else
#    define AMV_API __declspec(dllimport)
#  endif
#else
#  define AMV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum amv_status {
    AMV_OK = 0,
    AMV_ERR_INVALID_INPUT = 1,
    AMV_ERR_UNSUPPORTED_STRATEGY = 2,
    AMV_ERR_UNSUPPORTED_MODE = 3,
    AMV_ERR_UNSUPPORTED_SPACE = 4,
    AMV_ERR_CONVERGENCE = 5,
    AMV_ERR_NUMERIC = 6,
    AMV_ERR_IO = 7,
    AMV_ERR_BUDGET_EXHAUSTED = 8,
    AMV_ERR_INTERNAL = 99
} amv_status;

typedef enum amv_space_kind {
    AMV_SPACE_TORUS_LINF = 0,
    AMV_SPACE_TORUS_EUCLID = 1,
    AMV_SPACE_HYPERCUBE = 2,
    AMV_SPACE_INTERVAL = 3,
    AMV_SPACE_SPHERE2 = 4
} amv_space_kind;

typedef enum amv_strategy { AMV_SAMPLE_GRID = 0, AMV_SAMPLE_IID = 1, AMV_SAMPLE_FIBONACCI = 2 } amv_strategy;

typedef enum amv_volume_mode { AMV_VOLUME_EMPIRICAL = 0, AMV_VOLUME_ANALYTIC = 1 } amv_volume_mode;

typedef enum amv_action {
    AMV_APPLY_AVERAGING = 0,   /* A_r */
    AMV_APPLY_ADJOINT = 1,     /* A_r^* */
    AMV_APPLY_SYMMETRIZED = 2, /* Ã_r */
    AMV_APPLY_LAPLACIAN = 3    /* Δ̃_r */
} amv_action;

typedef enum amv_solver { AMV_SOLVER_AUTO = 0, AMV_SOLVER_DENSE = 1, AMV_SOLVER_LANCZOS = 2 } amv_solver;

typedef struct amv_samples amv_samples;
typedef struct amv_operator amv_operator;
typedef struct amv_spectrum amv_spectrum;

typedef struct amv_diagnostics {
    double condition_ir;        /* ||A_r^* 1||_inf */
    double norm_bound;
    double essential_threshold; /* min_i [Ã1]_i / r^2 */
    double min_volume;
    double max_volume;
    int connected;
} amv_diagnostics;

AMV_API const char* amv_version(void);
/* Message of the last failure on this thread; empty when none. */
AMV_API const char* amv_last_error(void);
AMV_API const char* amv_status_string(amv_status status);

/* Samples. `side` is the hypercube side or interval length and is ignored
 * for the torus and the sphere. */
AMV_API amv_status amv_samples_create(amv_space_kind kind, int m, double side, size_t n, amv_strategy strategy,
                                      uint64_t seed, amv_samples** out);
/* CSV with header x1,...,xD,weight; m = 0 takes the intrinsic dimension as D. */
AMV_API amv_status amv_samples_load_csv(const char* path, int m, amv_samples** out);
AMV_API void amv_samples_free(amv_samples* s);
AMV_API size_t amv_samples_size(const amv_samples* s);
AMV_API int amv_samples_dim(const amv_samples* s);
/* Copies size()*dim() coordinates, row-major. */
AMV_API amv_status amv_samples_coords(const amv_samples* s, double* out, size_t len);
AMV_API amv_status amv_samples_weights(const amv_samples* s, double* out, size_t len);
AMV_API amv_status amv_samples_save(const amv_samples* s, const char* path);

/* Operators. The operator keeps its own reference to the samples. */
AMV_API amv_status amv_operator_create(const amv_samples* s, double r, amv_volume_mode mode, amv_operator** out);
AMV_API void amv_operator_free(amv_operator* op);
AMV_API size_t amv_operator_size(const amv_operator* op);
AMV_API amv_status amv_operator_apply(const amv_operator* op, amv_action action, const double* f, double* out,
                                      size_t n);
/* Ẽ_r(f, g); pass g = NULL for the quadratic form Ẽ_r(f). */
AMV_API amv_status amv_operator_energy(const amv_operator* op, const double* f, const double* g, size_t n,
                                       double* out);
AMV_API amv_status amv_operator_korevaar_schoen(const amv_operator* op, const double* f, size_t n, double* out);
AMV_API amv_status amv_operator_diagnostics(const amv_operator* op, amv_diagnostics* out);
AMV_API amv_status amv_operator_dump(const amv_operator* op, const char* path);

/* Lowest k+1 eigenpairs of -Δ̃_r. */
AMV_API amv_status amv_spectrum_compute(const amv_operator* op, size_t k, amv_solver solver, uint64_t seed,
                                        amv_spectrum** out);
AMV_API void amv_spectrum_free(amv_spectrum* s);
AMV_API size_t amv_spectrum_count(const amv_spectrum* s);
AMV_API amv_status amv_spectrum_eigenvalues(const amv_spectrum* s, double* out, size_t len);
AMV_API amv_status amv_spectrum_residuals(const amv_spectrum* s, double* out, size_t len);
/* Eigenvector i, normalized in L^2(w). */
AMV_API amv_status amv_spectrum_eigenvector(const amv_spectrum* s, size_t i, double* out, size_t len);
AMV_API double amv_spectrum_essential_threshold(const amv_spectrum* s);
AMV_API double amv_spectrum_spectral_radius(const amv_spectrum* s);
AMV_API amv_status amv_spectrum_save(const amv_spectrum* s, const char* path);

/* Reference quantities. Invalid arguments return NaN. */
AMV_API double amv_cm(int m);
AMV_API double amv_sinc(double x);
AMV_API double amv_torus_linf_eigenvalue(const int* p, int m, double r);

/* Runs an experiment described by a JSON config. When `csv_out` is non-NULL
 * it receives the CSV table (release with amv_string_free); `truncated` is
 * set when the wall-time budget cut the run short. The table is also written
 * to the config's `out` path when present. */
AMV_API amv_status amv_run(const char* config_json, char** csv_out, int* truncated);
AMV_API void amv_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
