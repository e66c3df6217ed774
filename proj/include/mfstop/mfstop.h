#ifndef MFSTOP_H
#define MFSTOP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MFSTOP_BUILDING)
#    define MFSTOP_API __declspec(dllexport)
#  else
#    define MFSTOP_API __declspec(dllimport)
#  endif
#else
#  define MFSTOP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct mfstop_tree mfstop_tree;
typedef struct mfstop_spec mfstop_spec;
typedef struct mfstop_result mfstop_result;

typedef enum {
    MFSTOP_OK = 0,
    MFSTOP_E_INPUT = 1,       /* malformed JSON, unknown names, missing fields */
    MFSTOP_E_VALIDATION = 2,  /* structural tree invariants violated */
    MFSTOP_E_SOLVER = 3,      /* numerical failure */
    MFSTOP_E_ARGUMENT = 4,    /* bad option values or null handles */
    MFSTOP_E_INTERNAL = 5
} mfstop_status;

typedef enum {
    MFSTOP_VERDICT_PASS = 0,
    MFSTOP_VERDICT_FAIL = 1,
    MFSTOP_VERDICT_NONCONVERGED = 2
} mfstop_verdict;

typedef enum { MFSTOP_METHOD_PICARD = 0, MFSTOP_METHOD_TARSKI = 1 } mfstop_method;
typedef enum { MFSTOP_FROM_BOTTOM = 0, MFSTOP_FROM_TOP = 1 } mfstop_start;
typedef enum { MFSTOP_MAP_T = 0, MFSTOP_MAP_S = 1 } mfstop_map;

typedef struct {
    mfstop_method method;
    mfstop_start tarski_from;
    mfstop_map tarski_map;
    double epsilon;        /* picard target gap */
    double damping;        /* picard mixing weight in (0, 1] */
    int max_iter;
    double tol_gap;        /* verification slack on the gap */
    double tol_cons;       /* consistency tolerance */
    double tol_gap_limit;  /* gap tolerance of the randomized limit candidate */
    int n_samples;         /* sampled measures for assumption and ordering checks */
    uint64_t seed;
} mfstop_options;

MFSTOP_API void mfstop_options_default(mfstop_options* opts);

MFSTOP_API const char* mfstop_version(void);

/* Message of the last failure on this thread, and the same as a JSON document
   {"error": kind, "message": ..., "issues": [...]}. Empty strings after success. */
MFSTOP_API const char* mfstop_last_error(void);
MFSTOP_API const char* mfstop_last_error_json(void);

MFSTOP_API mfstop_status mfstop_tree_load(const char* json_text, mfstop_tree** out);
MFSTOP_API mfstop_status mfstop_tree_load_file(const char* path, mfstop_tree** out);
MFSTOP_API size_t mfstop_tree_size(const mfstop_tree* tree);
MFSTOP_API void mfstop_tree_free(mfstop_tree* tree);

MFSTOP_API mfstop_status mfstop_spec_load(const mfstop_tree* tree, const char* json_text, mfstop_spec** out);
MFSTOP_API mfstop_status mfstop_spec_load_file(const mfstop_tree* tree, const char* path, mfstop_spec** out);
MFSTOP_API void mfstop_spec_free(mfstop_spec* spec);

/* `spec` may be NULL (tree checks only). */
MFSTOP_API mfstop_status mfstop_validate(const mfstop_tree* tree, const mfstop_spec* spec,
                                         const mfstop_options* opts, mfstop_result** out);

/* `measure_json` may be NULL (uniform measure per cell). */
MFSTOP_API mfstop_status mfstop_snell(const mfstop_tree* tree, const mfstop_spec* spec, const char* measure_json,
                                      const mfstop_options* opts, mfstop_result** out);
MFSTOP_API mfstop_status mfstop_bek(const mfstop_tree* tree, const mfstop_spec* spec, const char* measure_json,
                                    const mfstop_options* opts, mfstop_result** out);

MFSTOP_API mfstop_status mfstop_equilibrium(const mfstop_tree* tree, const mfstop_spec* spec,
                                            const mfstop_options* opts, mfstop_result** out);
MFSTOP_API mfstop_status mfstop_randomized_limit(const mfstop_tree* tree, const mfstop_spec* spec,
                                                 const double* eps_seq, size_t n_eps, const mfstop_options* opts,
                                                 mfstop_result** out);
MFSTOP_API mfstop_status mfstop_compare(const mfstop_tree* tree, const mfstop_spec* spec1, const mfstop_spec* spec2,
                                        const mfstop_options* opts, mfstop_result** out);
/* Candidate JSON: {"m_star": measure, "stop": stop rule, "epsilon": e (optional)}. */
MFSTOP_API mfstop_status mfstop_verify(const mfstop_tree* tree, const mfstop_spec* spec, const char* candidate_json,
                                       const mfstop_options* opts, mfstop_result** out);

MFSTOP_API const char* mfstop_result_json(const mfstop_result* r);
MFSTOP_API mfstop_verdict mfstop_result_verdict(const mfstop_result* r);
MFSTOP_API size_t mfstop_result_table_count(const mfstop_result* r);
MFSTOP_API const char* mfstop_result_table_name(const mfstop_result* r, size_t i);
MFSTOP_API const char* mfstop_result_table_csv(const mfstop_result* r, size_t i);
MFSTOP_API void mfstop_result_free(mfstop_result* r);

#ifdef __cplusplus
}
#endif

#endif
