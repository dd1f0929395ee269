#ifndef VUCRL_H
#define VUCRL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum VucrlStatus {
  VUCRL_STATUS_OK = 0,
  VUCRL_STATUS_NULL_POINTER = 1,
  VUCRL_STATUS_INVALID_ARGUMENT = 2,
  VUCRL_STATUS_INVALID_MODEL = 3,
  VUCRL_STATUS_NON_CONVERGENCE = 4,
  VUCRL_STATUS_TOO_EXPENSIVE = 5,
  VUCRL_STATUS_IO = 6,
  VUCRL_STATUS_PARSE = 7,
  VUCRL_STATUS_PANIC = 8,
} VucrlStatus;

/**
 * Learner variants.
 */
typedef enum VucrlMode {
  VUCRL_MODE_NO_RESTART = 0,
  VUCRL_MODE_VARIATION_RESTART = 1,
  VUCRL_MODE_COUNT_RESTART = 2,
  VUCRL_MODE_ZERO_VARIATION_RESTART = 3,
} VucrlMode;

/**
 * A non-stationary environment.
 */
typedef struct VucrlEnv VucrlEnv;

/**
 * A stationary MDP.
 */
typedef struct VucrlMdp VucrlMdp;

/**
 * The trajectory of one learner run.
 */
typedef struct VucrlRecord VucrlRecord;

/**
 * Regret of a run and the matching closed-form bound.
 */
typedef struct VucrlRegret {
  double v_star;
  double realized_reward;
  double regret;
  double bound;
  bool bound_satisfied;
} VucrlRegret;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty if none. Valid
 * until the next failing call on the same thread.
 */
const char *vucrl_last_error_message(void);

/**
 * Builds an MDP from row-major tables: `rewards[s*A + a]` and
 * `transitions[(s*A + a)*S + s']`.
 *
 * # Safety
 * `rewards` must point to `n_states*n_actions` doubles and `transitions` to
 * `n_states*n_actions*n_states` doubles; `out` must be writable.
 */
enum VucrlStatus vucrl_mdp_new(size_t n_states,
                               size_t n_actions,
                               const double *rewards,
                               const double *transitions,
                               struct VucrlMdp **out);

/**
 * # Safety
 * `mdp` must be null or a handle from this library, freed at most once.
 */
void vucrl_mdp_free(struct VucrlMdp *mdp);

/**
 * Optimal average reward by relative value iteration with precision `epsilon`.
 *
 * # Safety
 * `mdp` must be a live handle and `out_gain` writable.
 */
enum VucrlStatus vucrl_mdp_optimal_gain(const struct VucrlMdp *mdp,
                                        double epsilon,
                                        double *out_gain);

/**
 * Diameter; `INFINITY` when some state cannot reach another.
 *
 * # Safety
 * `mdp` must be a live handle and `out` writable.
 */
enum VucrlStatus vucrl_mdp_diameter(const struct VucrlMdp *mdp, double *out);

/**
 * Parses an environment document (JSON).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum VucrlStatus vucrl_env_from_json(const char *json, struct VucrlEnv **out);

/**
 * Serializes an environment; release the string with [`vucrl_string_free`].
 *
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum VucrlStatus vucrl_env_to_json(const struct VucrlEnv *env, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed at most once.
 */
void vucrl_string_free(char *s);

/**
 * Environment with `n_changes` abrupt changes of size at most `magnitude`.
 *
 * # Safety
 * `out` must be writable.
 */
enum VucrlStatus vucrl_env_make_abrupt(uint64_t seed,
                                       size_t n_states,
                                       size_t n_actions,
                                       size_t horizon,
                                       size_t n_changes,
                                       double magnitude,
                                       struct VucrlEnv **out);

/**
 * Environment drifting every step with total variation close to `budget`.
 *
 * # Safety
 * `out` must be writable.
 */
enum VucrlStatus vucrl_env_make_gradual(uint64_t seed,
                                        size_t n_states,
                                        size_t n_actions,
                                        size_t horizon,
                                        double budget,
                                        struct VucrlEnv **out);

/**
 * Horizon `T`, or 0 for a null handle.
 *
 * # Safety
 * `env` must be null or a live handle.
 */
size_t vucrl_env_horizon(const struct VucrlEnv *env);

/**
 * # Safety
 * `env` must be null or a handle from this library, freed at most once.
 */
void vucrl_env_free(struct VucrlEnv *env);

/**
 * Runs a learner over the whole horizon. `l_changes` is used only by
 * count-restart, where a negative value means "number of changes in `env`".
 *
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum VucrlStatus vucrl_run_learner(const struct VucrlEnv *env,
                                   enum VucrlMode mode,
                                   double delta,
                                   int64_t l_changes,
                                   uint64_t seed,
                                   struct VucrlRecord **out);

/**
 * Number of steps in a record, or 0 for a null handle.
 *
 * # Safety
 * `record` must be null or a live handle.
 */
size_t vucrl_record_len(const struct VucrlRecord *record);

/**
 * Number of episodes in a record, or 0 for a null handle.
 *
 * # Safety
 * `record` must be null or a live handle.
 */
size_t vucrl_record_episodes(const struct VucrlRecord *record);

/**
 * Number of phases in a record, or 0 for a null handle.
 *
 * # Safety
 * `record` must be null or a live handle.
 */
size_t vucrl_record_phases(const struct VucrlRecord *record);

/**
 * Copies the realized rewards into `rewards`, which holds `capacity` doubles.
 *
 * # Safety
 * `record` must be a live handle and `rewards` writable for `capacity` doubles.
 */
enum VucrlStatus vucrl_record_rewards(const struct VucrlRecord *record,
                                      double *rewards,
                                      size_t capacity);

/**
 * # Safety
 * `record` must be null or a handle from this library, freed at most once.
 */
void vucrl_record_free(struct VucrlRecord *record);

/**
 * Regret of `record` against `env` and the bound matching the run's mode.
 *
 * # Safety
 * Both handles must be live and `out` writable.
 */
enum VucrlStatus vucrl_evaluate_regret(const struct VucrlRecord *record,
                                       const struct VucrlEnv *env,
                                       struct VucrlRegret *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VUCRL_H */
