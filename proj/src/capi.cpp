// Copyright 2026  The sfv developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sfv/sfv.h"

#include <string>

#include "dataio.hpp"
#include "embeddings.hpp"
#include "encoder.hpp"
#include "error.hpp"
#include "evaluator.hpp"
#include "pair_miner.hpp"
#include "pipeline.hpp"
#include "trainer.hpp"

struct sfv_store {
  sfv::EmbeddingStore impl;
};
struct sfv_pairset {
  sfv::PairSet impl;
};
struct sfv_model {
  sfv::ModelParams<float> impl;
};

namespace {

thread_local std::string g_last_error;

sfv_status status_from(const sfv::Error& e) {
  switch (e.code()) {
    case sfv::ErrorCode::kIo:
      return SFV_ERR_IO;
    case sfv::ErrorCode::kFormat:
      return SFV_ERR_FORMAT;
    case sfv::ErrorCode::kInvalidArgument:
      return SFV_ERR_INVALID;
    case sfv::ErrorCode::kDimensionMismatch:
      return SFV_ERR_DIMENSION;
    case sfv::ErrorCode::kNumeric:
      return SFV_ERR_NUMERIC;
  }
  return SFV_ERR_INVALID;
}

template <typename F>
sfv_status guarded(F&& f) {
  try {
    f();
    return SFV_OK;
  } catch (const sfv::Error& e) {
    g_last_error = e.what();
    return status_from(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SFV_ERR_INVALID;
  }
}

sfv_status fail_invalid(const char* message) {
  g_last_error = message;
  return SFV_ERR_INVALID;
}

sfv::MiningConfig to_cpp(const sfv_mining_config& c) {
  sfv::MiningConfig out;
  out.k = static_cast<int>(c.k);
  out.pos_threshold = c.pos_threshold;
  out.neg_threshold = c.neg_threshold;
  out.pos_mode = c.pos_mode == SFV_THRESHOLD_ABOVE
                     ? sfv::ThresholdMode::kAbove
                     : sfv::ThresholdMode::kBelow;
  out.neg_mode = c.neg_mode == SFV_THRESHOLD_ABOVE
                     ? sfv::ThresholdMode::kAbove
                     : sfv::ThresholdMode::kBelow;
  out.bidirectional = c.bidirectional != 0;
  return out;
}

void to_cpp(const sfv_encoder_config& c, sfv::EncoderConfig* enc,
            sfv::HeadConfig* head) {
  enc->input_height = static_cast<int>(c.input_height);
  enc->input_width = static_cast<int>(c.input_width);
  enc->input_channels = static_cast<int>(c.input_channels);
  enc->block_channels = {static_cast<int>(c.block_channels[0]),
                         static_cast<int>(c.block_channels[1]),
                         static_cast<int>(c.block_channels[2])};
  enc->fc1_units = static_cast<int>(c.fc1_units);
  enc->embedding_dim = static_cast<int>(c.embedding_dim);
  head->hidden_units = static_cast<int>(c.head_hidden_units);
}

sfv_encoder_config from_cpp(const sfv::EncoderConfig& enc,
                            const sfv::HeadConfig& head) {
  sfv_encoder_config out;
  out.input_height = static_cast<uint32_t>(enc.input_height);
  out.input_width = static_cast<uint32_t>(enc.input_width);
  out.input_channels = static_cast<uint32_t>(enc.input_channels);
  for (int i = 0; i < 3; ++i) {
    out.block_channels[i] = static_cast<uint32_t>(enc.block_channels[i]);
  }
  out.fc1_units = static_cast<uint32_t>(enc.fc1_units);
  out.embedding_dim = static_cast<uint32_t>(enc.embedding_dim);
  out.head_hidden_units = static_cast<uint32_t>(head.hidden_units);
  return out;
}

sfv::TrainConfig to_cpp(const sfv_train_config& c) {
  sfv::TrainConfig out;
  out.epochs = static_cast<int>(c.epochs);
  out.batch_size = static_cast<int>(c.batch_size);
  out.momentum = c.momentum;
  out.weight_decay = c.weight_decay;
  out.lr_start = c.lr_start;
  out.lr_end = c.lr_end;
  out.early_stop_patience = static_cast<int>(c.early_stop_patience);
  out.validation_fraction = c.validation_fraction;
  out.optimizer =
      c.use_adam != 0 ? sfv::Optimizer::kAdam : sfv::Optimizer::kSgd;
  return out;
}

}  // namespace

extern "C" {

const char* sfv_version(void) { return "0.1.0"; }

const char* sfv_last_error(void) { return g_last_error.c_str(); }

sfv_status sfv_store_create(uint32_t dim, sfv_store** out) {
  if (out == nullptr) return fail_invalid("sfv_store_create: out is NULL");
  return guarded([&] {
    *out = new sfv_store{sfv::EmbeddingStore(static_cast<int>(dim))};
  });
}

sfv_status sfv_store_add(sfv_store* store, const char* id, const float* values,
                         uint32_t len) {
  if (store == nullptr || id == nullptr || values == nullptr) {
    return fail_invalid("sfv_store_add: NULL argument");
  }
  return guarded([&] {
    store->impl.add(id, std::vector<float>(values, values + len));
  });
}

sfv_status sfv_store_read(const char* path, sfv_store** out) {
  if (path == nullptr || out == nullptr) {
    return fail_invalid("sfv_store_read: NULL argument");
  }
  return guarded([&] { *out = new sfv_store{sfv::store_read(path)}; });
}

sfv_status sfv_store_write(const sfv_store* store, const char* path) {
  if (store == nullptr || path == nullptr) {
    return fail_invalid("sfv_store_write: NULL argument");
  }
  return guarded([&] { sfv::store_write(store->impl, path); });
}

uint32_t sfv_store_dim(const sfv_store* store) {
  return store == nullptr ? 0 : static_cast<uint32_t>(store->impl.dim());
}

uint64_t sfv_store_size(const sfv_store* store) {
  return store == nullptr ? 0 : static_cast<uint64_t>(store->impl.size());
}

sfv_status sfv_store_entry(const sfv_store* store, uint64_t index,
                           const char** id, const float** values) {
  if (store == nullptr) return fail_invalid("sfv_store_entry: store is NULL");
  if (index >= store->impl.size()) {
    return fail_invalid("sfv_store_entry: index out of range");
  }
  const sfv::EmbeddingVector& v = store->impl.at(static_cast<size_t>(index));
  if (id != nullptr) *id = v.id.c_str();
  if (values != nullptr) *values = v.values.data();
  return SFV_OK;
}

void sfv_store_free(sfv_store* store) { delete store; }

sfv_status sfv_cosine(const float* a, const float* b, uint32_t dim,
                      double* out) {
  if (a == nullptr || b == nullptr || out == nullptr) {
    return fail_invalid("sfv_cosine: NULL argument");
  }
  return guarded([&] { *out = sfv::cosine(a, b, dim); });
}

void sfv_mining_config_init(sfv_mining_config* cfg) {
  if (cfg == nullptr) return;
  const sfv::MiningConfig d;
  cfg->k = static_cast<uint32_t>(d.k);
  cfg->pos_threshold = d.pos_threshold;
  cfg->neg_threshold = d.neg_threshold;
  cfg->pos_mode = SFV_THRESHOLD_BELOW;
  cfg->neg_mode = SFV_THRESHOLD_BELOW;
  cfg->bidirectional = 0;
}

sfv_status sfv_mine(const sfv_store* x, const sfv_store* y,
                    const sfv_mining_config* cfg, uint32_t threads,
                    sfv_pairset** out) {
  if (x == nullptr || y == nullptr || cfg == nullptr || out == nullptr) {
    return fail_invalid("sfv_mine: NULL argument");
  }
  return guarded([&] {
    *out = new sfv_pairset{sfv::mine(x->impl, y->impl, to_cpp(*cfg), threads)};
  });
}

uint64_t sfv_pairset_size(const sfv_pairset* ps) {
  return ps == nullptr ? 0 : static_cast<uint64_t>(ps->impl.pairs.size());
}

sfv_status sfv_pairset_entry(const sfv_pairset* ps, uint64_t index,
                             const char** anchor_id, const char** partner_id,
                             int* label, double* score) {
  if (ps == nullptr) return fail_invalid("sfv_pairset_entry: pairset is NULL");
  if (index >= ps->impl.pairs.size()) {
    return fail_invalid("sfv_pairset_entry: index out of range");
  }
  const sfv::TrainingPair& p = ps->impl.pairs[static_cast<size_t>(index)];
  if (anchor_id != nullptr) *anchor_id = p.anchor_id.c_str();
  if (partner_id != nullptr) *partner_id = p.partner_id.c_str();
  if (label != nullptr) *label = p.label;
  if (score != nullptr) *score = p.score;
  return SFV_OK;
}

sfv_status sfv_pairset_write(const sfv_pairset* ps, const char* path) {
  if (ps == nullptr || path == nullptr) {
    return fail_invalid("sfv_pairset_write: NULL argument");
  }
  return guarded([&] { sfv::pairset_write(ps->impl, std::string(path)); });
}

sfv_status sfv_pairset_read(const char* path, sfv_pairset** out) {
  if (path == nullptr || out == nullptr) {
    return fail_invalid("sfv_pairset_read: NULL argument");
  }
  return guarded(
      [&] { *out = new sfv_pairset{sfv::pairset_read(std::string(path))}; });
}

void sfv_pairset_free(sfv_pairset* ps) { delete ps; }

void sfv_encoder_config_init(sfv_encoder_config* cfg) {
  if (cfg == nullptr) return;
  *cfg = from_cpp(sfv::EncoderConfig{}, sfv::HeadConfig{});
}

sfv_status sfv_model_init(const sfv_encoder_config* cfg, uint64_t seed,
                          sfv_model** out) {
  if (cfg == nullptr || out == nullptr) {
    return fail_invalid("sfv_model_init: NULL argument");
  }
  return guarded([&] {
    sfv::EncoderConfig enc;
    sfv::HeadConfig head;
    to_cpp(*cfg, &enc, &head);
    *out = new sfv_model{sfv::params_init<float>(enc, head, seed)};
  });
}

sfv_status sfv_model_load(const char* path, sfv_model** out) {
  if (path == nullptr || out == nullptr) {
    return fail_invalid("sfv_model_load: NULL argument");
  }
  return guarded([&] { *out = new sfv_model{sfv::params_load(path)}; });
}

sfv_status sfv_model_save(const sfv_model* model, const char* path) {
  if (model == nullptr || path == nullptr) {
    return fail_invalid("sfv_model_save: NULL argument");
  }
  return guarded([&] { sfv::params_save(model->impl, path); });
}

sfv_status sfv_model_config(const sfv_model* model, sfv_encoder_config* out) {
  if (model == nullptr || out == nullptr) {
    return fail_invalid("sfv_model_config: NULL argument");
  }
  *out = from_cpp(model->impl.config, model->impl.head);
  return SFV_OK;
}

void sfv_model_free(sfv_model* model) { delete model; }

void sfv_synth_spec_init(sfv_synth_spec* spec) {
  if (spec == nullptr) return;
  const sfv::SyntheticSpec d;
  spec->num_identities = static_cast<uint32_t>(d.num_identities);
  spec->images_per_identity = static_cast<uint32_t>(d.images_per_identity);
  spec->image_size = static_cast<uint32_t>(d.image_size);
  spec->separation = d.separation;
  spec->noise = d.noise;
  spec->split_fraction = 0.5;
}

sfv_status sfv_synth(const sfv_synth_spec* spec, uint64_t seed,
                     const char* out_dir) {
  if (spec == nullptr || out_dir == nullptr) {
    return fail_invalid("sfv_synth: NULL argument");
  }
  return guarded([&] {
    sfv::SyntheticSpec s;
    s.num_identities = static_cast<int>(spec->num_identities);
    s.images_per_identity = static_cast<int>(spec->images_per_identity);
    s.image_size = static_cast<int>(spec->image_size);
    s.separation = spec->separation;
    s.noise = spec->noise;
    s.seed = seed;
    sfv::run_synth(s, out_dir, spec->split_fraction);
  });
}

sfv_status sfv_split_disjoint(const char* manifest_path,
                              const char* sidecar_path, double fraction,
                              uint64_t seed, const char* out_manifest_a,
                              const char* out_manifest_b) {
  if (manifest_path == nullptr || out_manifest_a == nullptr ||
      out_manifest_b == nullptr) {
    return fail_invalid("sfv_split_disjoint: NULL argument");
  }
  return guarded([&] {
    sfv::run_split(manifest_path,
                   sidecar_path == nullptr ? "" : sidecar_path, fraction, seed,
                   out_manifest_a, out_manifest_b);
  });
}

sfv_status sfv_embed(const char* manifest_path, int source,
                     const char* model_path, const sfv_encoder_config* encoder,
                     uint32_t raw_dim, uint64_t seed, uint32_t threads,
                     const char* out_path) {
  if (manifest_path == nullptr || out_path == nullptr) {
    return fail_invalid("sfv_embed: NULL argument");
  }
  return guarded([&] {
    sfv::EmbedOptions opt;
    opt.seed = seed;
    opt.threads = threads;
    switch (source) {
      case SFV_EMBED_MODEL:
        if (model_path == nullptr) {
          sfv::throw_invalid("sfv_embed: model source needs a model path");
        }
        opt.source = sfv::EmbedOptions::Source::kModel;
        opt.model_path = model_path;
        break;
      case SFV_EMBED_RAW:
        opt.source = sfv::EmbedOptions::Source::kRaw;
        opt.raw_dim = static_cast<int>(raw_dim);
        break;
      case SFV_EMBED_RANDOM_INIT:
        opt.source = sfv::EmbedOptions::Source::kRandomInit;
        if (encoder != nullptr) to_cpp(*encoder, &opt.encoder, &opt.head);
        break;
      default:
        sfv::throw_invalid("sfv_embed: unknown source");
    }
    sfv::run_embed(manifest_path, opt, out_path);
  });
}

sfv_status sfv_mine_files(const char* x_store_path, const char* y_store_path,
                          const sfv_mining_config* cfg, uint32_t threads,
                          const char* out_path, uint64_t* positives,
                          uint64_t* negatives) {
  if (x_store_path == nullptr || y_store_path == nullptr || cfg == nullptr ||
      out_path == nullptr) {
    return fail_invalid("sfv_mine_files: NULL argument");
  }
  return guarded([&] {
    const sfv::MineSummary s =
        sfv::run_mine(x_store_path, y_store_path, to_cpp(*cfg), threads,
                      out_path);
    if (positives != nullptr) *positives = s.positives;
    if (negatives != nullptr) *negatives = s.negatives;
  });
}

void sfv_train_config_init(sfv_train_config* cfg) {
  if (cfg == nullptr) return;
  const sfv::TrainConfig d;
  cfg->epochs = static_cast<uint32_t>(d.epochs);
  cfg->batch_size = static_cast<uint32_t>(d.batch_size);
  cfg->momentum = d.momentum;
  cfg->weight_decay = d.weight_decay;
  cfg->lr_start = d.lr_start;
  cfg->lr_end = d.lr_end;
  cfg->early_stop_patience = static_cast<uint32_t>(d.early_stop_patience);
  cfg->validation_fraction = d.validation_fraction;
  cfg->use_adam = 0;
}

sfv_status sfv_lr_schedule(uint32_t epoch, const sfv_train_config* cfg,
                           double* lr_out) {
  if (cfg == nullptr || lr_out == nullptr) {
    return fail_invalid("sfv_lr_schedule: NULL argument");
  }
  return guarded([&] {
    *lr_out = sfv::lr_schedule(static_cast<int>(epoch), to_cpp(*cfg));
  });
}

sfv_status sfv_train(const char* pairs_path, const char* manifest_path,
                     const sfv_encoder_config* encoder,
                     const sfv_train_config* train, int baseline,
                     const char* sidecar_path, int init_only, uint64_t seed,
                     uint32_t threads, const char* out_dir) {
  if (out_dir == nullptr) return fail_invalid("sfv_train: out_dir is NULL");
  return guarded([&] {
    sfv::TrainRunOptions opt;
    if (pairs_path != nullptr) opt.pairs_path = pairs_path;
    if (manifest_path != nullptr) opt.manifest_path = manifest_path;
    if (encoder != nullptr) to_cpp(*encoder, &opt.encoder, &opt.head);
    if (train != nullptr) opt.train = to_cpp(*train);
    opt.train.seed = seed;
    opt.baseline = baseline != 0;
    if (sidecar_path != nullptr) opt.sidecar_path = sidecar_path;
    opt.init_only = init_only != 0;
    opt.threads = threads;
    if (!opt.init_only) {
      if (opt.manifest_path.empty()) {
        sfv::throw_invalid("sfv_train: manifest path required");
      }
      if (!opt.baseline && opt.pairs_path.empty()) {
        sfv::throw_invalid("sfv_train: pair file required for siamese mode");
      }
      if (opt.baseline && opt.sidecar_path.empty()) {
        sfv::throw_invalid("sfv_train: sidecar required for baseline mode");
      }
    }
    sfv::run_train(opt, out_dir);
  });
}

sfv_status sfv_build_trials(const char* manifest_path, const char* sidecar_path,
                            uint32_t folds, uint32_t matched_per_fold,
                            uint32_t mismatched_per_fold, uint64_t seed,
                            const char* out_path) {
  if (manifest_path == nullptr || sidecar_path == nullptr ||
      out_path == nullptr) {
    return fail_invalid("sfv_build_trials: NULL argument");
  }
  return guarded([&] {
    const sfv::Manifest manifest = sfv::manifest_load(manifest_path);
    std::vector<std::string> ids;
    for (const auto& rec : manifest.records) ids.push_back(rec.id);
    const auto labels = sfv::sidecar_load(sidecar_path);
    const sfv::TrialSet trials = sfv::build_trials(
        ids, labels, static_cast<int>(folds),
        static_cast<int>(matched_per_fold),
        static_cast<int>(mismatched_per_fold), seed);
    sfv::trials_write(trials, std::string(out_path));
  });
}

sfv_status sfv_evaluate(const char* checkpoint_path, const char* manifest_path,
                        const char* trials_path, const char* sidecar_path,
                        uint32_t folds, uint32_t matched_per_fold,
                        uint32_t mismatched_per_fold, uint64_t seed,
                        uint32_t threads, const char* out_dir,
                        double* eer_out) {
  if (checkpoint_path == nullptr || manifest_path == nullptr ||
      out_dir == nullptr) {
    return fail_invalid("sfv_evaluate: NULL argument");
  }
  return guarded([&] {
    sfv::EvalRunOptions opt;
    opt.checkpoint_path = checkpoint_path;
    opt.manifest_path = manifest_path;
    if (trials_path != nullptr) opt.trials_path = trials_path;
    if (sidecar_path != nullptr) opt.sidecar_path = sidecar_path;
    opt.folds = static_cast<int>(folds);
    opt.matched_per_fold = static_cast<int>(matched_per_fold);
    opt.mismatched_per_fold = static_cast<int>(mismatched_per_fold);
    opt.seed = seed;
    opt.threads = threads;
    const sfv::EvalReport report = sfv::run_evaluate(opt, out_dir);
    if (eer_out != nullptr) *eer_out = report.eer;
  });
}

sfv_status sfv_compute_eer(const double* genuine, uint64_t n_genuine,
                           const double* impostor, uint64_t n_impostor,
                           double* eer, double* threshold) {
  if (genuine == nullptr || impostor == nullptr || eer == nullptr) {
    return fail_invalid("sfv_compute_eer: NULL argument");
  }
  return guarded([&] {
    const sfv::EerResult r = sfv::compute_eer(
        std::vector<double>(genuine, genuine + n_genuine),
        std::vector<double>(impostor, impostor + n_impostor));
    *eer = r.eer;
    if (threshold != nullptr) *threshold = r.threshold;
  });
}

}  // extern "C"
