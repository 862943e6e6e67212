/* C ABI for the palette-mpc coloring engine.
 *
 * Ownership: every *_new / *_load / pmpc_run output is released by the
 * matching *_free; strings returned by accessors are borrowed from their
 * handle and become invalid when it is freed; input strings are read only
 * during the call. Handles are not thread-safe; the last-error message is
 * per thread.
 */

#ifndef PALETTE_MPC_H
#define PALETTE_MPC_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes: 0 is success, anything else leaves a message readable via
 * pmpc_last_error(). */
enum {
  PMPC_OK = 0,
  PMPC_NULL_ARGUMENT = 1,
  PMPC_BAD_UTF8 = 2,
  PMPC_PARSE_ERROR = 3,
  PMPC_CONFIG_ERROR = 4,
  PMPC_RUN_FAILED = 5,
  PMPC_INVALID_COLORING = 6,
  PMPC_PANIC = 7
};

typedef struct PmpcInstance PmpcInstance;
typedef struct PmpcConfig PmpcConfig;
typedef struct PmpcOutcome PmpcOutcome;

/* Message for this thread's most recent failing call. Borrowed; valid
 * until the next failing call on the same thread. */
const char *pmpc_last_error(void);

/* Instance loading: edge-list text ("u v" lines, '#' comments, optional
 * "# nodes: N" header) plus optional palette text ("v: c1 c2 ..." lines;
 * pass NULL for default palettes [0, degree]). */
int pmpc_instance_load(const char *graph_text, const char *palette_text,
                       PmpcInstance **out);
void pmpc_instance_free(PmpcInstance *inst);
uint64_t pmpc_instance_nodes(const PmpcInstance *inst);

/* Configuration: the flat config-file keys, one override per call. */
int pmpc_config_new(PmpcConfig **out);
int pmpc_config_set(PmpcConfig *cfg, const char *key, const char *value);
void pmpc_config_free(PmpcConfig *cfg);

/* Run the engine. PMPC_OK means the run finished and the independent
 * verifier accepted the coloring; PMPC_INVALID_COLORING means it finished
 * but verification failed (the outcome is still returned). cfg may be
 * NULL for defaults. */
int pmpc_run(const PmpcInstance *inst, const PmpcConfig *cfg,
             PmpcOutcome **out);
int pmpc_outcome_valid(const PmpcOutcome *outcome);
const char *pmpc_outcome_coloring(const PmpcOutcome *outcome);
const char *pmpc_outcome_report(const PmpcOutcome *outcome);
uint64_t pmpc_outcome_rounds(const PmpcOutcome *outcome);
void pmpc_outcome_free(PmpcOutcome *outcome);

/* Standalone verification of "v: c" coloring text against an instance. */
int pmpc_verify(const PmpcInstance *inst, const char *coloring_text);

#ifdef __cplusplus
}
#endif

#endif /* PALETTE_MPC_H */
