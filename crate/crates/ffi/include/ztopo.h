#ifndef ZTOPO_H
#define ZTOPO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ZtopoBand {
  ZTOPO_BAND_LOWER = 0,
  ZTOPO_BAND_UPPER = 1,
} ZtopoBand;

typedef enum ZtopoStatus {
  ZTOPO_STATUS_OK = 0,
  ZTOPO_STATUS_NULL_POINTER = 1,
  ZTOPO_STATUS_BUFFER_TOO_SMALL = 2,
  ZTOPO_STATUS_INVALID_GEOMETRY = 3,
  ZTOPO_STATUS_COINCIDENT_ATOMS = 4,
  ZTOPO_STATUS_INVALID_ANGLE = 5,
  ZTOPO_STATUS_INVALID_CUTOFF = 6,
  ZTOPO_STATUS_INVALID_PARAMETER = 7,
  ZTOPO_STATUS_INVALID_STATE = 8,
  ZTOPO_STATUS_DEGENERATE_BANDS = 9,
  ZTOPO_STATUS_NUMERICAL_FAILURE = 10,
  ZTOPO_STATUS_SINGULAR_SEPARATION = 11,
  ZTOPO_STATUS_INTERNAL = 12,
} ZtopoStatus;

/**
 * Emitter chain plus model constants.
 */
typedef struct ZtopoChain ZtopoChain;

/**
 * Real-space spectrum of a chain at one polarization angle.
 */
typedef struct ZtopoSpectrum ZtopoSpectrum;

/**
 * Berry curvature and pumping over the synthetic Brillouin zone.
 */
typedef struct ZtopoSyntheticGrid ZtopoSyntheticGrid;

typedef struct ZtopoBlochVector {
  double k;
  double phi;
  double d0;
  double dx;
  double dy;
  double dz;
  /**
   * Nonzero when `k` lay outside (−π/a, π/a] and was folded back.
   */
  uint8_t wrapped;
} ZtopoBlochVector;

typedef struct ZtopoWinding {
  int32_t nu;
  double raw;
  double min_dxy;
  uint8_t well_defined;
  size_t k_points;
} ZtopoWinding;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ztopo_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ztopo_version(void);

/**
 * Builds a zigzag chain of `n_atoms` emitters with lattice constant
 * `lattice_const` (units of λ₀) and sublattice-B shifts in units of `a`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum ZtopoStatus ztopo_chain_new(size_t n_atoms,
                                 double lattice_const,
                                 double shift_x,
                                 double shift_y,
                                 struct ZtopoChain **out);

/**
 * # Safety
 * `chain` must be NULL or a handle from [`ztopo_chain_new`] not yet freed.
 */
void ztopo_chain_free(struct ZtopoChain *chain);

/**
 * Number of emitters, or 0 for a NULL handle.
 *
 * # Safety
 * `chain` must be NULL or a live handle.
 */
size_t ztopo_chain_len(const struct ZtopoChain *chain);

/**
 * Writes positions as `x0, y0, z0, x1, ...` (`3 * n_atoms` values).
 *
 * # Safety
 * `chain` must be a live handle and `out` valid for `capacity` doubles.
 */
enum ZtopoStatus ztopo_chain_positions(const struct ZtopoChain *chain,
                                       double *out,
                                       size_t capacity);

/**
 * Diagonalizes the real-space Hamiltonian at polarization `phi`. A nonzero
 * `delta0` adds the staggered potential; `stripped` removes
 * intra-sublattice couplings (requires `delta0 == 0`).
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum ZtopoStatus ztopo_spectrum_compute(const struct ZtopoChain *chain,
                                        double phi,
                                        double delta0,
                                        bool stripped,
                                        struct ZtopoSpectrum **out);

/**
 * # Safety
 * `spectrum` must be NULL or a live handle.
 */
void ztopo_spectrum_free(struct ZtopoSpectrum *spectrum);

/**
 * Number of eigenstates, or 0 for NULL.
 *
 * # Safety
 * `spectrum` must be NULL or a live handle.
 */
size_t ztopo_spectrum_len(const struct ZtopoSpectrum *spectrum);

/**
 * Ascending eigenvalues `ω − ω₀` in units of Γ₀.
 *
 * # Safety
 * `spectrum` must be a live handle and `out` valid for `capacity` doubles.
 */
enum ZtopoStatus ztopo_spectrum_eigenvalues(const struct ZtopoSpectrum *spectrum,
                                            double *out,
                                            size_t capacity);

/**
 * Inverse participation ratio of every eigenstate.
 *
 * # Safety
 * `spectrum` must be a live handle and `out` valid for `capacity` doubles.
 */
enum ZtopoStatus ztopo_spectrum_ipr(const struct ZtopoSpectrum *spectrum,
                                    double *out,
                                    size_t capacity);

/**
 * Maximal IPR over all eigenstates, or NaN for NULL.
 *
 * # Safety
 * `spectrum` must be NULL or a live handle.
 */
double ztopo_spectrum_loc(const struct ZtopoSpectrum *spectrum);

/**
 * Real amplitudes of eigenstate `index` (ascending order).
 *
 * # Safety
 * `spectrum` must be a live handle and `out` valid for `capacity` doubles.
 */
enum ZtopoStatus ztopo_spectrum_eigenvector(const struct ZtopoSpectrum *spectrum,
                                            size_t index,
                                            double *out,
                                            size_t capacity);

/**
 * Bloch vector of the infinite chain with the unit cell of `chain`.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum ZtopoStatus ztopo_bloch_vector(const struct ZtopoChain *chain,
                                    double phi,
                                    double k,
                                    size_t cutoff,
                                    struct ZtopoBlochVector *out);

/**
 * Winding number of `(dx, dy)` over the Brillouin zone.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum ZtopoStatus ztopo_winding_number(const struct ZtopoChain *chain,
                                      double phi,
                                      size_t k_points,
                                      size_t cutoff,
                                      struct ZtopoWinding *out);

/**
 * Rice-Mele bands, Berry curvature and pumped displacement on an
 * `nk × nphi` grid.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum ZtopoStatus ztopo_synthetic_compute(const struct ZtopoChain *chain,
                                         double delta0,
                                         size_t nk,
                                         size_t nphi,
                                         size_t cutoff,
                                         struct ZtopoSyntheticGrid **out);

/**
 * # Safety
 * `grid` must be NULL or a live handle.
 */
void ztopo_synthetic_free(struct ZtopoSyntheticGrid *grid);

/**
 * Grid dimensions.
 *
 * # Safety
 * `grid` must be a live handle; outputs must be writable.
 */
enum ZtopoStatus ztopo_synthetic_shape(const struct ZtopoSyntheticGrid *grid,
                                       size_t *nk,
                                       size_t *nphi);

/**
 * Chern numbers of the lower and upper band.
 *
 * # Safety
 * `grid` must be a live handle; outputs must be writable.
 */
enum ZtopoStatus ztopo_synthetic_chern(const struct ZtopoSyntheticGrid *grid,
                                       int32_t *chern_minus,
                                       int32_t *chern_plus);

/**
 * Berry curvature per plaquette, `nk * nphi` values indexed `j * nphi + l`.
 *
 * # Safety
 * `grid` must be a live handle and `out` valid for `capacity` doubles.
 */
enum ZtopoStatus ztopo_synthetic_berry(const struct ZtopoSyntheticGrid *grid,
                                       enum ZtopoBand band,
                                       double *out,
                                       size_t capacity);

/**
 * Pumped displacement per k column (`nk` values, units of unit cells).
 *
 * # Safety
 * `grid` must be a live handle and `out` valid for `capacity` doubles.
 */
enum ZtopoStatus ztopo_synthetic_displacement(const struct ZtopoSyntheticGrid *grid,
                                              enum ZtopoBand band,
                                              double *out,
                                              size_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZTOPO_H */
