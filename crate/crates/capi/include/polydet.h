/* C interface for the polydet lattice determinant engine.
 *
 * Handles are opaque; release them with the matching _free function.
 * Functions returning a status write through out-pointers only when the
 * status is POLYDET_OK. All functions are safe to call from any thread as
 * long as each handle is used from one thread at a time.
 */

#ifndef POLYDET_H
#define POLYDET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
    POLYDET_OK = 0,
    POLYDET_ERR_NULL = 1,
    POLYDET_ERR_PARSE = 2,
    POLYDET_ERR_GEOMETRY = 3,
    POLYDET_ERR_SIGMA = 4,
    POLYDET_ERR_COMPUTE = 5,
    POLYDET_ERR_PANIC = 6
};

/* Cut directions for polydet_operator_new. */
enum {
    POLYDET_CUT_POS_X = 0,
    POLYDET_CUT_NEG_X = 1,
    POLYDET_CUT_POS_Y = 2,
    POLYDET_CUT_NEG_Y = 3
};

typedef struct PolydetDomain PolydetDomain;
typedef struct PolydetOperator PolydetOperator;

/* Static version string; do not free. */
const char *polydet_version(void);

/* Parse a domain from JSON: {"loops": [[[x,y],...],...], "scale": N}.
 * Returns NULL on failure with *status set. */
PolydetDomain *polydet_domain_parse(const char *json, int32_t *status);

/* New handle for the same polygon at a different scale. */
PolydetDomain *polydet_domain_with_scale(const PolydetDomain *domain,
                                         int64_t scale, int32_t *status);

/* Number of interior lattice sites, or -1 on error. */
int64_t polydet_domain_sites(const PolydetDomain *domain);

void polydet_domain_free(PolydetDomain *domain);

/* Assemble the twisted Dirichlet Laplacian. sigma_doubled holds n_sigma
 * (x, y) pairs in doubled coordinates (punctures at half-integer points);
 * cut is one of the POLYDET_CUT_* values. */
PolydetOperator *polydet_operator_new(const PolydetDomain *domain,
                                      const int64_t *sigma_doubled,
                                      size_t n_sigma, int32_t cut,
                                      int32_t *status);

/* Matrix dimension, or -1 on error. */
int64_t polydet_operator_dim(const PolydetOperator *op);

/* Number of lattice edges, or -1 on error. */
int64_t polydet_operator_edges(const PolydetOperator *op);

/* Exact log-determinant via sparse factorization. */
int32_t polydet_operator_logdet(const PolydetOperator *op, double *out);

/* Heat trace at time t (dense spectral path; fails above the dense size
 * threshold). */
int32_t polydet_operator_heat_trace(const PolydetOperator *op, double t,
                                    double *out);

void polydet_operator_free(PolydetOperator *op);

/* Zeta-regularized zeta'(0) for the continuum Dirichlet rectangle a x b. */
int32_t polydet_continuum_zeta_prime_zero(double a, double b, double *out);

#ifdef __cplusplus
}
#endif

#endif /* POLYDET_H */
