/* deepnag C API
 *
 * Plain-C surface over the gesture-generation library: dataset
 * preparation, generator training, sampling, augmentation evaluation,
 * kernel benchmarking, and SVG export.
 *
 * Conventions:
 *   - Every fallible call returns a nag_status; 0 is success. On
 *     failure nag_last_error() holds a one-line message (thread-local,
 *     valid until the calling thread's next API call).
 *   - Strings handed out through char** parameters are heap-allocated;
 *     release them with nag_string_free().
 *   - Handles (nag_dataset, nag_model) are opaque; close them with the
 *     matching *_close() once done. Closing NULL is a no-op.
 *   - JSON parameters described per call; pass NULL where a parameter
 *     is documented as optional.
 */
#ifndef DEEPNAG_H
#define DEEPNAG_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes in the bundled CLI. */
typedef enum nag_status {
  NAG_OK = 0,
  NAG_ERR_USAGE = 2,   /* invalid arguments, flags, or configuration */
  NAG_ERR_DATA = 3,    /* unreadable, malformed, or inconsistent data */
  NAG_ERR_NUMERIC = 4, /* non-finite values or kernel disagreement */
} nag_status;

/* Library version as "major.minor.patch" (static storage, do not free). */
const char* nag_version(void);

/* Message for the calling thread's most recent failure ("" after
 * success). Storage is thread-local; copy it before the next call. */
const char* nag_last_error(void);

/* Frees any string returned through a char** out-parameter. */
void nag_string_free(char* str);

typedef struct nag_dataset nag_dataset;
typedef struct nag_model nag_model;

/* Progress callback: receives one human-readable line per event
 * (training progress, warnings, checkpoint writes). */
typedef void (*nag_log_fn)(const char* message, void* user_data);

/* ---- dataset preparation ------------------------------------------- */

/* Reads raw gestures, resamples every polyline to `length` equidistant
 * points, normalizes coordinates into [-1, 1], remaps class ids to a
 * contiguous range, and writes the result as a JSON-lines dataset.
 *
 * format: "json" (JSON-lines records), "csv" (columns
 * id,class,subject,t,x,y[,z]), or "auto"/NULL to pick by file
 * extension. Degenerate gestures (single point, zero arc length) are
 * dropped, not fatal.
 *
 * report_json_out (optional) receives a summary:
 *   {"gestures","classes","dims","length","class_counts",
 *    "class_id_map","rejected":[{"id","reason"}]} */
nag_status nag_prepare(const char* input_path, const char* format, int length,
                       const char* output_path, char** report_json_out);

/* Opens a prepared JSON-lines dataset (uniform dims/length enforced). */
nag_status nag_dataset_open(const char* path, nag_dataset** out);

/* {"gestures","classes","dims","length","subjects","class_counts"} */
nag_status nag_dataset_info(const nag_dataset* dataset, char** json_out);

void nag_dataset_close(nag_dataset* dataset);

/* ---- training ------------------------------------------------------ */

/* Trains the generator. config_json mirrors the config file format
 * (unknown keys rejected; every validation problem reported at once);
 * NULL means all defaults. Writes into out_dir:
 *   config.json     effective configuration snapshot
 *   train-log.jsonl one {"step","ed","cos","resample","total"} per step
 *   ckpt-NNNNNN.nag rolling checkpoints (three most recent kept)
 *   ckpt-best.nag   lowest-loss parameters seen
 *
 * resume_checkpoint (optional) continues a run: steps replay exactly as
 * an uninterrupted run would have produced them and the log file is
 * appended, so an interrupted-then-resumed run yields byte-identical
 * outputs. summary_json_out (optional) receives
 *   {"start_step","final_step","best_step","best_loss","final_loss",
 *    "final_checkpoint","best_checkpoint","log","warnings"} */
nag_status nag_train(const nag_dataset* dataset, const char* config_json, const char* out_dir,
                     const char* resume_checkpoint, nag_log_fn log_fn, void* log_user,
                     char** summary_json_out);

/* ---- trained models ------------------------------------------------ */

nag_status nag_model_open(const char* checkpoint_path, nag_model** out);

/* {"step","seed","latent_dims","classes","dims","length","hidden_sizes"} */
nag_status nag_model_info(const nag_model* model, char** json_out);

/* Samples `count` gestures of the given class (deterministic under
 * seed) and writes them as JSON-lines gesture records. */
nag_status nag_model_generate(const nag_model* model, int class_id, int count, uint64_t seed,
                              const char* output_path);

void nag_model_close(nag_model* model);

/* ---- augmentation evaluation --------------------------------------- */

/* Runs the recognizer-based evaluation protocol: per split seed and
 * augmenter, train a 1-NN DTW recognizer on the (augmented) training
 * split and report its test error; generator augmenters are then scored
 * against the baseline and noise rows.
 *
 * options_json keys (all optional): "dataset_name", "fractions" [3],
 * "seeds" [..], "augmenters" ["baseline","noise","deepnag"],
 * "noise_magnitude", "synth_ratio", "workers". model may be NULL unless
 * the "deepnag" augmenter is requested. csv_path (optional) receives
 * the rows as `dataset,recognizer,augmenter,seed,error,n_train_real,
 * n_train_synth`. report_json_out receives
 *   {"results":[...],"scores":{"groups","rows"},
 *    "results_table","score_table"} (tables preformatted as text). */
nag_status nag_eval_augment(const nag_dataset* dataset, const nag_model* model,
                            const char* options_json, const char* csv_path,
                            char** report_json_out);

/* ---- kernel benchmark ---------------------------------------------- */

/* Times the soft alignment kernel (forward + gradient) on one random
 * batch in serial and parallel mode. Before reporting, both runs are
 * verified elementwise equal within 1e-10 — disagreement is
 * NAG_ERR_NUMERIC and no timings are returned.
 *
 * options_json keys (all optional): "batch", "length", "dims",
 * "workers" (0 = NAG_WORKERS or hardware), "seed", "gamma", "kind"
 * ("ed"|"cos"). csv_out receives
 *   batch,length,dims,mode,workers,wall_ms,pairs_per_sec
 * with one row per mode. */
nag_status nag_bench_sdtw(const char* options_json, char** csv_out);

/* ---- figures ------------------------------------------------------- */

/* Renders a JSON-lines gesture file as an SVG grid: one cell per
 * gesture, polyline stroke colored by class, start point marked. */
nag_status nag_export_svg(const char* input_path, const char* output_path, int columns);

#ifdef __cplusplus
}
#endif

#endif /* DEEPNAG_H */
