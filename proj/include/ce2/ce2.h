/* C interface to the cluster-edge exploration library.
 *
 * All functions are thread-compatible: distinct handles may be used from
 * distinct threads, a single handle must not be shared without external
 * synchronization. Functions that can fail take an optional error buffer
 * (pass NULL/0 to ignore the message) and return a ce2_status.
 */
#ifndef CE2_CE2_H
#define CE2_CE2_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CE2_API __declspec(dllexport)
#else
#define CE2_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ce2_status {
    CE2_OK = 0,
    CE2_ERR_RUN = 1,    /* experiment failed at runtime */
    CE2_ERR_CONFIG = 2, /* config file missing/invalid */
    CE2_ERR_ARG = 3,    /* bad argument (null pointer, dimension mismatch, ...) */
    CE2_ERR_STATE = 4   /* operation not legal in the current state */
} ce2_status;

CE2_API const char* ce2_version(void);

/* ---- experiment-level API (mirrors the CLI subcommands) ---- */

/* Run the experiment described by a config file. out_dir_override replaces
 * the configured output directory when non-NULL. The returned status uses
 * the process exit-code convention: 0 ok, 1 run failure, 2 config error. */
CE2_API ce2_status ce2_run(const char* config_path, const char* out_dir_override,
                           char* err, size_t err_len);

/* Re-evaluate a saved policy against the config's eval goals. */
CE2_API ce2_status ce2_eval(const char* config_path, const char* policy_path,
                            double* success_out, char* err, size_t err_len);

/* Write a comparison table assembled from summary.json files to out_path
 * (NULL writes to stdout). */
CE2_API ce2_status ce2_compare(const char* const* summary_paths, size_t n_paths,
                               const char* out_path, char* err, size_t err_len);

/* Flatten a snapshots.json file into a plot-ready CSV. */
CE2_API ce2_status ce2_export_snapshots(const char* snapshots_path, const char* csv_path,
                                        char* err, size_t err_len);

/* ---- environment handle API ---- */

typedef struct ce2_env ce2_env;

/* Built-in environments: grid5, grid8, grid10, grid10_four_rooms, point10. */
CE2_API ce2_env* ce2_env_create(const char* name, char* err, size_t err_len);

/* Environment from a text map ('#' wall, '.' free, 'S' start; first line is
 * the top row). kind is "grid" or "point". */
CE2_API ce2_env* ce2_env_create_from_map(const char* kind, const char* map_text,
                                         int max_episode_len, double success_radius,
                                         char* err, size_t err_len);

CE2_API void ce2_env_destroy(ce2_env* env);

CE2_API int ce2_env_state_dim(const ce2_env* env);
CE2_API int ce2_env_action_dim(const ce2_env* env);
CE2_API int ce2_env_action_count(const ce2_env* env);
CE2_API int ce2_env_max_episode_len(const ce2_env* env);

/* state_out must hold state_dim doubles. */
CE2_API ce2_status ce2_env_reset(ce2_env* env, uint64_t seed, double* state_out);

/* Continuous action of action_dim components. reached_out reports the
 * success predicate against the current goal (0 when no goal is set). */
CE2_API ce2_status ce2_env_step(ce2_env* env, const double* action, size_t action_dim,
                                double* next_state_out, int* reached_out,
                                char* err, size_t err_len);

/* Discrete action index in [0, action_count). */
CE2_API ce2_status ce2_env_step_discrete(ce2_env* env, int action_index,
                                         double* next_state_out, int* reached_out,
                                         char* err, size_t err_len);

CE2_API ce2_status ce2_env_set_goal(ce2_env* env, const double* goal, size_t dim);
CE2_API ce2_status ce2_env_clear_goal(ce2_env* env);

/* out is 1 when the L2 distance between state and goal is below the success
 * radius. */
CE2_API ce2_status ce2_env_success(const ce2_env* env, const double* state,
                                   const double* goal, size_t dim, int* out);

/* Cell index of the grid cell containing the position (half-open cells). */
CE2_API ce2_status ce2_env_discretize(const ce2_env* env, const double* state, size_t dim,
                                      int* cell_out);

#ifdef __cplusplus
}
#endif

#endif /* CE2_CE2_H */
