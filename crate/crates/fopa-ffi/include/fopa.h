#ifndef FOPA_H
#define FOPA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum {
  FOPA_STATUS_OK = 0,
  FOPA_STATUS_INVALID_ARGUMENT = 1,
  FOPA_STATUS_GRID_COVERAGE = 2,
  FOPA_STATUS_GRID_MISMATCH = 3,
  FOPA_STATUS_TRUNCATION_INSUFFICIENT = 4,
  FOPA_STATUS_UNDEFINED_OPTIMUM = 5,
  FOPA_STATUS_NUMERICAL_INSTABILITY = 6,
  FOPA_STATUS_NULL_POINTER = 7,
} FopaStatus;

/**
 * Scalar fields readable from a report.
 */
typedef enum {
  FOPA_FIELD_GAIN = 0,
  FOPA_FIELD_PHOTON_NUMBER_SIGNAL = 1,
  FOPA_FIELD_PHOTON_NUMBER_IDLER = 2,
  FOPA_FIELD_NOISE_SIGNAL = 3,
  FOPA_FIELD_NOISE_IDLER = 4,
  FOPA_FIELD_NOISE_FIGURE = 5,
  FOPA_FIELD_RATIO_USED = 6,
  FOPA_FIELD_INTENSITY_DIFFERENCE_NOISE = 7,
  FOPA_FIELD_RATIO_OPT = 8,
  FOPA_FIELD_INTENSITY_DIFFERENCE_NOISE_AT_OPT = 9,
} FopaField;

/**
 * Opaque noise report handle; create with one of the `fopa_*_report`
 * constructors, read with the getters, release with `fopa_report_free`.
 */
typedef struct FopaReport FopaReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Single-frequency-mode report at photon-number gain `g`.
 */
FopaStatus fopa_singlemode_report(double g, double eta_s, double eta_i, double r, FopaReport **out);

/**
 * Factorable-JSF report at gain coefficient `gc` and squared mode overlap
 * `f2`.
 */
FopaStatus fopa_factorable_report(double gc, double f2, double r, FopaReport **out);

/**
 * Broadband-JSF analytic-series report.
 */
FopaStatus fopa_broadband_report(double gp,
                                 double p,
                                 double s,
                                 double eta_s,
                                 double eta_i,
                                 double r,
                                 uintptr_t n_trunc,
                                 FopaReport **out);

/**
 * Grid Green-function engine report (numerical cross-check).
 */
FopaStatus fopa_engine_report(double gp,
                              double p,
                              double s,
                              double eta_s,
                              double eta_i,
                              double r,
                              uintptr_t n_points,
                              uintptr_t n_trunc,
                              FopaReport **out);

/**
 * Solve G' for a target photon-number gain at bandwidth ratio `p`.
 */
FopaStatus fopa_gp_for_gain(double g_target,
                            double p,
                            uintptr_t n_trunc,
                            double gp_max,
                            double *out);

/**
 * Read one scalar field; `RatioOpt` and `IntensityDifferenceNoiseAtOpt`
 * return `UndefinedOptimum` when no optimum exists.
 */
FopaStatus fopa_report_get(const FopaReport *report, FopaField field, double *out);

/**
 * Release a report handle. Passing null is a no-op.
 */
void fopa_report_free(FopaReport *report);

/**
 * Static description of a status code; never null.
 */
const char *fopa_status_message(FopaStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOPA_H */
