/* Copyright 2026  The sfv developers
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *  http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* sfv — unsupervised siamese face verification pipeline.
 *
 * C interface to the shared library. All functions return SFV_OK on success
 * or an error code; sfv_last_error() gives a human-readable message for the
 * most recent failure on the calling thread. Objects returned through
 * out-parameters are owned by the caller and released with the matching
 * *_free function. Every pipeline stage is deterministic given its inputs
 * and seed: rerunning a stage reproduces its output files byte for byte.
 */

#ifndef SFV_SFV_H_
#define SFV_SFV_H_

#include <stdint.h>

#if defined(_WIN32)
#define SFV_API __declspec(dllexport)
#else
#define SFV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sfv_status {
  SFV_OK = 0,
  SFV_ERR_IO = 1,        /* file missing / unreadable / unwritable */
  SFV_ERR_FORMAT = 2,    /* malformed or truncated file content */
  SFV_ERR_INVALID = 3,   /* invalid argument or configuration */
  SFV_ERR_DIMENSION = 4, /* tensor / embedding dimension mismatch */
  SFV_ERR_NUMERIC = 5    /* non-finite values where finite ones are required */
} sfv_status;

SFV_API const char* sfv_version(void);

/* Message for the most recent failing call on this thread ("" if none). */
SFV_API const char* sfv_last_error(void);

/* ---------- embedding stores ---------- */

/* Binary store format: magic "EMB1", u32 count, u32 dim, count*dim
 * little-endian float32 row-major; ids in "<path>.ids", one per line. */
typedef struct sfv_store sfv_store;

SFV_API sfv_status sfv_store_create(uint32_t dim, sfv_store** out);
SFV_API sfv_status sfv_store_add(sfv_store* store, const char* id,
                                 const float* values, uint32_t len);
SFV_API sfv_status sfv_store_read(const char* path, sfv_store** out);
SFV_API sfv_status sfv_store_write(const sfv_store* store, const char* path);
SFV_API uint32_t sfv_store_dim(const sfv_store* store);
SFV_API uint64_t sfv_store_size(const sfv_store* store);
/* id/values stay valid until the store is mutated or freed. */
SFV_API sfv_status sfv_store_entry(const sfv_store* store, uint64_t index,
                                   const char** id, const float** values);
SFV_API void sfv_store_free(sfv_store* store);

/* Cosine similarity in double precision; both vectors must be nonzero. */
SFV_API sfv_status sfv_cosine(const float* a, const float* b, uint32_t dim,
                              double* out);

/* ---------- pair mining ---------- */

typedef enum sfv_threshold_mode {
  SFV_THRESHOLD_BELOW = 0, /* keep score <  threshold */
  SFV_THRESHOLD_ABOVE = 1  /* keep score >= threshold */
} sfv_threshold_mode;

typedef struct sfv_mining_config {
  uint32_t k;               /* neighbors per anchor */
  double pos_threshold;     /* in [-1, 1] */
  double neg_threshold;     /* in [-1, 1] */
  int pos_mode;             /* sfv_threshold_mode */
  int neg_mode;             /* sfv_threshold_mode */
  int bidirectional;        /* also mine with X and Y roles swapped */
} sfv_mining_config;

/* Defaults: k=10, thresholds 0.3 / 0.1, both modes BELOW, unidirectional. */
SFV_API void sfv_mining_config_init(sfv_mining_config* cfg);

typedef struct sfv_pairset sfv_pairset;

SFV_API sfv_status sfv_mine(const sfv_store* x, const sfv_store* y,
                            const sfv_mining_config* cfg, uint32_t threads,
                            sfv_pairset** out);
SFV_API uint64_t sfv_pairset_size(const sfv_pairset* ps);
SFV_API sfv_status sfv_pairset_entry(const sfv_pairset* ps, uint64_t index,
                                     const char** anchor_id,
                                     const char** partner_id, int* label,
                                     double* score);
SFV_API sfv_status sfv_pairset_write(const sfv_pairset* ps, const char* path);
SFV_API sfv_status sfv_pairset_read(const char* path, sfv_pairset** out);
SFV_API void sfv_pairset_free(sfv_pairset* ps);

/* ---------- model ---------- */

typedef struct sfv_encoder_config {
  uint32_t input_height;   /* divisible by 8 */
  uint32_t input_width;    /* divisible by 8 */
  uint32_t input_channels;
  uint32_t block_channels[3];
  uint32_t fc1_units;
  uint32_t embedding_dim;
  uint32_t head_hidden_units;
} sfv_encoder_config;

/* Defaults: 64x64x3, blocks 32/64/128, fc1 1024, embedding 300, head 256. */
SFV_API void sfv_encoder_config_init(sfv_encoder_config* cfg);

typedef struct sfv_model sfv_model;

SFV_API sfv_status sfv_model_init(const sfv_encoder_config* cfg, uint64_t seed,
                                  sfv_model** out);
SFV_API sfv_status sfv_model_load(const char* path, sfv_model** out);
SFV_API sfv_status sfv_model_save(const sfv_model* model, const char* path);
SFV_API sfv_status sfv_model_config(const sfv_model* model,
                                    sfv_encoder_config* out);
SFV_API void sfv_model_free(sfv_model* model);

/* ---------- pipeline stages ---------- */

typedef struct sfv_synth_spec {
  uint32_t num_identities;     /* >= 2 */
  uint32_t images_per_identity;
  uint32_t image_size;
  double separation;           /* > 0 */
  double noise;                /* >= 0 */
  double split_fraction;       /* share of images on the A side, in (0, 1) */
} sfv_synth_spec;

/* Defaults: 20 identities x 20 images, 32px, separation 1.0, noise 0.2,
 * split 0.5. */
SFV_API void sfv_synth_spec_init(sfv_synth_spec* spec);

/* Writes out_dir/images/*.png, out_dir/manifest.txt, out_dir/labels.csv,
 * plus the identity-disjoint halves manifest_a.txt and manifest_b.txt. */
SFV_API sfv_status sfv_synth(const sfv_synth_spec* spec, uint64_t seed,
                             const char* out_dir);

/* Identity-disjoint split of a labeled dataset: every identity's images land
 * wholly in A or wholly in B, balanced to within one identity's worth of
 * fraction * total. Labels come from the manifest or, when sidecar_path is
 * non-NULL, from an "id,identity" sidecar. Both output manifests are
 * label-free. */
SFV_API sfv_status sfv_split_disjoint(const char* manifest_path,
                                      const char* sidecar_path,
                                      double fraction, uint64_t seed,
                                      const char* out_manifest_a,
                                      const char* out_manifest_b);

typedef enum sfv_embed_source {
  SFV_EMBED_RANDOM_INIT = 0, /* seeded randomly initialized encoder */
  SFV_EMBED_MODEL = 1,       /* trained checkpoint */
  SFV_EMBED_RAW = 2          /* raw-pixel thumbnail + random projection */
} sfv_embed_source;

/* Embeds every image of the manifest into an EMB1 store at out_path.
 * model_path is used for SFV_EMBED_MODEL; encoder (NULL = defaults) for
 * SFV_EMBED_RANDOM_INIT; raw_dim for SFV_EMBED_RAW. */
SFV_API sfv_status sfv_embed(const char* manifest_path, int source,
                             const char* model_path,
                             const sfv_encoder_config* encoder,
                             uint32_t raw_dim, uint64_t seed, uint32_t threads,
                             const char* out_path);

/* Mines pairs from two embedding stores into a pair-set file; optionally
 * reports the emitted positive/negative counts. */
SFV_API sfv_status sfv_mine_files(const char* x_store_path,
                                  const char* y_store_path,
                                  const sfv_mining_config* cfg,
                                  uint32_t threads, const char* out_path,
                                  uint64_t* positives, uint64_t* negatives);

typedef struct sfv_train_config {
  uint32_t epochs;
  uint32_t batch_size;
  double momentum;
  double weight_decay;
  double lr_start;
  double lr_end;
  uint32_t early_stop_patience; /* 0 disables early stopping */
  double validation_fraction;   /* in (0, 1) */
  int use_adam;                 /* 0 = SGD with momentum (default) */
} sfv_train_config;

/* Defaults: 300 epochs, batch 64, momentum 0.91, weight decay 1e-5,
 * lr 1e-2 -> 1e-8, patience 10, validation fraction 0.1, SGD. */
SFV_API void sfv_train_config_init(sfv_train_config* cfg);

/* Logarithmically decaying learning rate; exact at both endpoints. */
SFV_API sfv_status sfv_lr_schedule(uint32_t epoch, const sfv_train_config* cfg,
                                   double* lr_out);

/* Trains on a mined pair file (or, with baseline != 0, on identity labels
 * from sidecar_path) and writes checkpoint.snw, trainlog.csv and summary.txt
 * under out_dir. init_only != 0 writes the seeded initial checkpoint without
 * training. encoder/train NULL = defaults. */
SFV_API sfv_status sfv_train(const char* pairs_path, const char* manifest_path,
                             const sfv_encoder_config* encoder,
                             const sfv_train_config* train, int baseline,
                             const char* sidecar_path, int init_only,
                             uint64_t seed, uint32_t threads,
                             const char* out_dir);

/* Builds a seeded trial file ("#trialset v1 ..." format) from withheld
 * identity labels. */
SFV_API sfv_status sfv_build_trials(const char* manifest_path,
                                    const char* sidecar_path, uint32_t folds,
                                    uint32_t matched_per_fold,
                                    uint32_t mismatched_per_fold, uint64_t seed,
                                    const char* out_path);

/* Scores trials with a checkpoint and writes report.txt, metrics.csv,
 * roc.csv and scores.csv under out_dir. Pass a trial file, or NULL with a
 * label sidecar to build trials in place (also written to out_dir).
 * eer_out may be NULL. */
SFV_API sfv_status sfv_evaluate(const char* checkpoint_path,
                                const char* manifest_path,
                                const char* trials_path,
                                const char* sidecar_path, uint32_t folds,
                                uint32_t matched_per_fold,
                                uint32_t mismatched_per_fold, uint64_t seed,
                                uint32_t threads, const char* out_dir,
                                double* eer_out);

/* Equal error rate of two nonempty score sets (midpoint threshold sweep,
 * linear interpolation at the FAR/FRR crossing). */
SFV_API sfv_status sfv_compute_eer(const double* genuine, uint64_t n_genuine,
                                   const double* impostor, uint64_t n_impostor,
                                   double* eer, double* threshold);

#ifdef __cplusplus
}
#endif

#endif /* SFV_SFV_H_ */
