/* tapcore: transport-and-pack engine, C interface.
 *
 * Every structured value crosses the boundary as UTF-8 JSON text. Functions
 * that produce text write a heap string to *out, which the caller releases
 * with tap_free. On failure they return a non-zero tap_status and
 * tap_last_error() describes the failure for the calling thread. */
#ifndef TAPCORE_TAPCORE_H
#define TAPCORE_TAPCORE_H

#include <stdint.h>

#if defined(TAPCORE_BUILDING_LIBRARY)
#define TAP_API __attribute__((visibility("default")))
#else
#define TAP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tap_status {
  TAP_OK = 0,
  TAP_E_CONTRACT = 1,
  TAP_E_RANGE = 2,
  TAP_E_OVERFLOW = 3,
  TAP_E_SCENE = 4,
  TAP_E_SESSION = 5,
  TAP_E_PROTOCOL = 6,
  TAP_E_INVALID_ACTION = 7,
  TAP_E_UNREACHABLE = 8,
  TAP_E_DIVERGED = 9,
  TAP_E_IO = 10,
  TAP_E_PARSE = 11,
  TAP_E_INTERNAL = 99
} tap_status;

typedef struct tap_env tap_env;
typedef struct tap_server tap_server;

TAP_API const char* tap_version(void);
TAP_API const char* tap_status_name(tap_status status);
/* Message of the last failure on this thread; empty after success. */
TAP_API const char* tap_last_error(void);
TAP_API void tap_free(char* text);

/* Episode configs are JSON objects; missing keys take defaults. */
TAP_API tap_status tap_default_config(char** out_json);

/* Dataset {spec, seed, source, boxes, solution?} for config.source/n_source/seed. */
TAP_API tap_status tap_generate_dataset(const char* config_json, char** out_json);
/* {scene, precedence} for the config's source boxes. */
TAP_API tap_status tap_generate_scene(const char* config_json, char** out_json);
/* EMS list of a height map {width, depth, height, cells}. */
TAP_API tap_status tap_extract_ems(const char* heightmap_json, int with_constrained, char** out_json);

/* Step-wise environment. reset/step/revise produce protocol messages
 * {type: observation|revise|result, payload}. */
TAP_API tap_status tap_env_create(const char* config_json, tap_env** out_env);
TAP_API void tap_env_destroy(tap_env* env);
TAP_API tap_status tap_env_reset(tap_env* env, char** out_message);
TAP_API tap_status tap_env_step(tap_env* env, int j, int k, char** out_message);
TAP_API tap_status tap_env_revise(tap_env* env, int k, char** out_message);
TAP_API tap_status tap_env_snapshot(const tap_env* env, char** out_json);

/* policy: "greedy", "random" or "external:<host>:<port>". */
TAP_API tap_status tap_run_episode(const char* config_json, const char* policy, char** out_record_json);
/* {records: [...], summary: {...}, csv: "..."}; seeds are seed_base + i.
 * threads <= 0 uses every core. */
TAP_API tap_status tap_run_batch(const char* config_json, const char* policy, int episodes, uint64_t seed_base,
                                 int threads, char** out_json);
/* request: {config?, sources?, modes?, policy?, episodes?, seed_base?, threads?}
 * result: {rows: [...], csv: "...", text: "..."}. */
TAP_API tap_status tap_run_table(const char* request_json, char** out_json);
/* Re-executes a record; TAP_E_DIVERGED names the first divergent step. */
TAP_API tap_status tap_replay(const char* record_json, char** out_report_json);
/* input: an episode record or a dataset carrying a solution.
 * format: "obj" or "json". */
TAP_API tap_status tap_export(const char* input_json, const char* format, char** out_text);

/* Episode protocol over TCP on 127.0.0.1; port 0 picks a free port. */
TAP_API tap_status tap_server_start(int port, tap_server** out_server);
/* Hosts an in-process policy for engines using "external:<host>:<port>". */
TAP_API tap_status tap_policy_server_start(const char* policy, uint64_t seed, int port, tap_server** out_server);
TAP_API int tap_server_port(const tap_server* server);
TAP_API void tap_server_stop(tap_server* server);
/* Serves one episode-protocol session on stdin/stdout until end of input. */
TAP_API tap_status tap_serve_stdio(void);

#ifdef __cplusplus
}
#endif

#endif
