/* C interface of the ISAC precoding simulator.
 *
 * All functions are thread-compatible: distinct handles may be used from
 * distinct threads, one handle must not be shared without external locking.
 * Functions returning isacsim_status never throw; on failure they set a
 * thread-local message readable via isacsim_last_error().
 */
#ifndef ISACSIM_ISACSIM_H
#define ISACSIM_ISACSIM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum isacsim_status {
  ISACSIM_OK = 0,
  ISACSIM_ERR_INVALID_ARGUMENT = 1,
  ISACSIM_ERR_RUNTIME = 2,
  ISACSIM_ERR_BAD_HANDLE = 3,
  ISACSIM_ERR_IO = 4
} isacsim_status;

/* Opaque experiment configuration (scenario + agent + campaign). */
typedef struct isacsim_config isacsim_config;

/* Opaque constrained-MDP environment. */
typedef struct isacsim_env isacsim_env;

/* Library version, static storage. */
const char* isacsim_version(void);

/* Message of the calling thread's most recent failure; empty string if none. */
const char* isacsim_last_error(void);

/* Frees buffers returned by this library (isacsim_config_dump). */
void isacsim_free(void* ptr);

/* ---- configuration ---- */

/* Default configuration; never fails. Destroy with isacsim_config_destroy. */
isacsim_config* isacsim_config_default(void);

/* Parse from a JSON file / JSON text. NULL on failure (see last_error). */
isacsim_config* isacsim_config_load(const char* path);
isacsim_config* isacsim_config_parse(const char* json_text);

/* Set one field by dotted path, e.g. ("scenario.num_users", "4") or
 * ("campaign.seeds", "[1,2,3]"). The value is JSON text. */
isacsim_status isacsim_config_set(isacsim_config* config, const char* dotted_path,
                                  const char* json_value);

/* Serialized JSON, heap-allocated; release with isacsim_free. */
char* isacsim_config_dump(const isacsim_config* config);

void isacsim_config_destroy(isacsim_config* config);

/* ---- environment ---- */

/* One simulator bound to the config's scenario and a seed. */
isacsim_env* isacsim_env_create(const isacsim_config* config, uint64_t seed);

/* Starts the next episode (frame); episodes are deterministic in
 * (seed, episode index). */
isacsim_status isacsim_env_reset(isacsim_env* env);

/* State/action geometry:
 *   sh_dims[4] <- {1, N_d, U_max, G_t}
 *   sp_dims[4] <- {1, 3, N_x, N_y}
 *   action_dim <- N_A (bits per action vector)
 * Any output pointer may be NULL to skip it. */
isacsim_status isacsim_env_state_dims(const isacsim_env* env, int32_t* sh_dims,
                                      int32_t* sp_dims, int32_t* action_dim);

/* Copies the current observation. Lengths are element counts and must equal
 * the products of the corresponding dims. Requires a live episode. */
isacsim_status isacsim_env_observe(const isacsim_env* env, double* sh_out,
                                   int64_t sh_len, double* sp_out, int64_t sp_len);

typedef struct isacsim_step_info {
  double reward;
  double cost;
  double se;        /* spectral efficiency, bit/s/Hz */
  double crlb;      /* angle CRLB; +inf when degenerate */
  double min_sinr;  /* worst SINR entry of the subframe */
  int32_t user_index;
  int32_t codeword_index;
  int32_t sinr_violations; /* SINR entries below the threshold */
  int32_t done;            /* 1 when the episode ended with this step */
} isacsim_step_info;

/* Applies one action given as N_A raw bit levels in [0,1] (rounded and
 * decoded internally) and advances one subframe. `info` may be NULL. */
isacsim_status isacsim_env_step(isacsim_env* env, const double* action_raw,
                                int64_t action_len, isacsim_step_info* info);

/* Episode cost budget: discount gamma, per-subframe eta_c, budget gamma_c.
 * Any output pointer may be NULL. */
isacsim_status isacsim_env_budget(const isacsim_env* env, double* gamma,
                                  double* eta_c, double* gamma_c);

void isacsim_env_destroy(isacsim_env* env);

/* ---- campaigns ---- */

/* Trains over the campaign seeds, evaluates, writes logs, checkpoints and
 * plot CSVs under campaign.out_dir. */
isacsim_status isacsim_run_training(const isacsim_config* config);

/* Evaluates one policy ("agent", "random", "greedy", "exhaustive") over the
 * campaign seeds; writes eval logs under campaign.out_dir. */
isacsim_status isacsim_run_eval(const isacsim_config* config, const char* policy);

/* Sweeps `axis` ("snr" or "users"; NULL uses the campaign's axis) over
 * `values` (length n; NULL uses the campaign's values); writes
 * sweep_<axis>.csv under campaign.out_dir. */
isacsim_status isacsim_run_sweep(const isacsim_config* config, const char* axis,
                                 const double* values, int64_t n);

/* Rebuilds plot CSVs from a finished run directory into out_dir. */
isacsim_status isacsim_export_plotdata(const char* run_dir, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ISACSIM_ISACSIM_H */
