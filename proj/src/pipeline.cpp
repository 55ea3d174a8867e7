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

#include "pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "error.hpp"
#include "io_util.hpp"
#include "parallel.hpp"
#include "siamese.hpp"

namespace fs = std::filesystem;

namespace sfv {

namespace {

Manifest with_sidecar_labels(const Manifest& m, const std::string& sidecar_path) {
  const auto labels = sidecar_load(sidecar_path);
  Manifest out = m;
  for (auto& rec : out.records) {
    const auto it = labels.find(rec.id);
    if (it == labels.end()) {
      throw_invalid("split: no sidecar label for id '" + rec.id + "'");
    }
    rec.label = it->second;
  }
  return out;
}

}  // namespace

void run_synth(const SyntheticSpec& spec, const std::string& out_dir,
               double split_fraction) {
  synth_generate(spec, out_dir);
  const Manifest manifest =
      manifest_load((fs::path(out_dir) / "manifest.txt").string());
  const Manifest labeled = with_sidecar_labels(
      manifest, (fs::path(out_dir) / "labels.csv").string());
  const auto [a, b] = split_disjoint(labeled, split_fraction, spec.seed);
  manifest_write(a, (fs::path(out_dir) / "manifest_a.txt").string());
  manifest_write(b, (fs::path(out_dir) / "manifest_b.txt").string());
}

void run_split(const std::string& manifest_path, const std::string& sidecar_path,
               double fraction, uint64_t seed, const std::string& out_a,
               const std::string& out_b) {
  Manifest manifest = manifest_load(manifest_path);
  if (!sidecar_path.empty()) {
    manifest = with_sidecar_labels(manifest, sidecar_path);
  }
  const auto [a, b] = split_disjoint(manifest, fraction, seed);
  manifest_write(a, out_a);
  manifest_write(b, out_b);
}

namespace {

// Forward all images through the given parameters in fixed-size batches;
// batches run in parallel and write disjoint slots, so the store content is
// independent of the thread count.
EmbeddingStore encode_store(const ImageSet& images,
                            const ModelParams<float>& params,
                            unsigned threads, int batch_size) {
  const int emb_dim = params.config.embedding_dim;
  const size_t n = images.size();
  std::vector<float> all(static_cast<size_t>(n) * emb_dim);
  const size_t num_batches =
      (n + static_cast<size_t>(batch_size) - 1) / batch_size;
  parallel_for(num_batches, threads, [&](size_t begin, size_t end) {
    for (size_t bi = begin; bi < end; ++bi) {
      const size_t off = bi * static_cast<size_t>(batch_size);
      const size_t nb = std::min<size_t>(batch_size, n - off);
      std::vector<size_t> rows(nb);
      for (size_t i = 0; i < nb; ++i) rows[i] = off + i;
      const Tensor<float> batch = images.gather(rows);
      const Tensor<float> emb = encoder_forward(params, batch);
      std::copy_n(emb.data.begin(), nb * emb_dim,
                  all.begin() + off * emb_dim);
    }
  });

  EmbeddingStore store(emb_dim, EmbeddingSource::kEncoder);
  for (size_t i = 0; i < n; ++i) {
    store.add(images.ids[i],
              std::vector<float>(all.begin() + i * emb_dim,
                                 all.begin() + (i + 1) * emb_dim));
  }
  return store;
}

}  // namespace

void run_embed(const std::string& manifest_path, const EmbedOptions& opt,
               const std::string& out_path) {
  const Manifest manifest = manifest_load(manifest_path);
  if (manifest.records.empty()) {
    throw_invalid("embed: manifest '" + manifest_path + "' has no records");
  }

  if (opt.source == EmbedOptions::Source::kRaw) {
    const EmbeddingStore store =
        raw_embed(manifest, opt.raw_dim, opt.seed, opt.threads);
    store_write(store, out_path);
    return;
  }

  ModelParams<float> params =
      opt.source == EmbedOptions::Source::kModel
          ? params_load(opt.model_path)
          : params_init<float>(opt.encoder, opt.head, opt.seed);
  if (params.config.input_channels != 3) {
    throw_invalid("embed: image pipelines require 3-channel encoder input");
  }
  const ImageSet images = load_images(manifest, params.config.input_height,
                                      params.config.input_width, opt.threads);
  const EmbeddingStore store =
      encode_store(images, params, opt.threads, opt.batch_size);
  store_write(store, out_path);
}

MineSummary run_mine(const std::string& x_store_path,
                     const std::string& y_store_path, const MiningConfig& cfg,
                     unsigned threads, const std::string& out_path) {
  const EmbeddingStore x = store_read(x_store_path);
  const EmbeddingStore y = store_read(y_store_path);
  PairSet ps = mine(x, y, cfg, threads);
  ps.provenance = PairSetProvenance{x_store_path, y_store_path};
  pairset_write(ps, out_path);
  MineSummary summary;
  for (const auto& p : ps.pairs) {
    if (p.label == 1) {
      ++summary.positives;
    } else {
      ++summary.negatives;
    }
  }
  return summary;
}

TrainLog run_train(const TrainRunOptions& opt, const std::string& out_dir) {
  // Reject bad configuration before any image decoding starts.
  opt.encoder.validate();
  opt.head.validate();
  opt.train.validate();
  fs::create_directories(out_dir);
  const std::string checkpoint_path =
      (fs::path(out_dir) / "checkpoint.snw").string();

  if (opt.init_only) {
    const ModelParams<float> params =
        params_init<float>(opt.encoder, opt.head, opt.train.seed);
    params_save(params, checkpoint_path);
    TrainLog log;
    log.stop_reason = "init-only (no training)";
    std::ofstream os = open_out((fs::path(out_dir) / "summary.txt").string(),
                                /*binary=*/false);
    os << trainlog_summary(log);
    return log;
  }

  const Manifest manifest = manifest_load(opt.manifest_path);
  if (opt.encoder.input_channels != 3) {
    throw_invalid("train: image pipelines require 3-channel encoder input");
  }
  const ImageSet images = load_images(manifest, opt.encoder.input_height,
                                      opt.encoder.input_width, opt.threads);

  TrainResult result;
  if (opt.baseline) {
    const auto labels = sidecar_load(opt.sidecar_path);
    result = train_baseline(images, labels, opt.encoder, opt.head, opt.train);
  } else {
    const PairSet pairs = pairset_read(opt.pairs_path);
    result = train_siamese(pairs, images, opt.encoder, opt.head, opt.train);
  }

  params_save(result.params, checkpoint_path);
  trainlog_write(result.log, (fs::path(out_dir) / "trainlog.csv").string());
  std::ofstream os =
      open_out((fs::path(out_dir) / "summary.txt").string(), /*binary=*/false);
  os << trainlog_summary(result.log);
  if (!os) throw_io("write failed: " + out_dir + "/summary.txt");
  return result.log;
}

EvalReport run_evaluate(const EvalRunOptions& opt, const std::string& out_dir) {
  const ModelParams<float> params = params_load(opt.checkpoint_path);
  const Manifest manifest = manifest_load(opt.manifest_path);
  fs::create_directories(out_dir);

  TrialSet trials;
  if (!opt.trials_path.empty()) {
    trials = trials_read(opt.trials_path);
  } else if (!opt.sidecar_path.empty()) {
    std::vector<std::string> ids;
    for (const auto& rec : manifest.records) ids.push_back(rec.id);
    const auto labels = sidecar_load(opt.sidecar_path);
    trials = build_trials(ids, labels, opt.folds, opt.matched_per_fold,
                          opt.mismatched_per_fold, opt.seed);
    trials_write(trials, (fs::path(out_dir) / "trials.csv").string());
  } else {
    throw_invalid("evaluate: need either a trial file or a label sidecar");
  }
  if (trials.trials.empty()) throw_invalid("evaluate: no trials");

  const ImageSet images = load_images(manifest, params.config.input_height,
                                      params.config.input_width, opt.threads);
  for (const Trial& t : trials.trials) {
    if (images.index.find(t.id_a) == images.index.end() ||
        images.index.find(t.id_b) == images.index.end()) {
      throw_invalid("evaluate: trial id not present in the manifest: " +
                    t.id_a + "," + t.id_b);
    }
  }

  // Symmetrized scores, batched; slots keep the result thread-count
  // independent.
  std::vector<double> scores(trials.trials.size());
  const size_t num_batches =
      (trials.trials.size() + static_cast<size_t>(opt.batch_size) - 1) /
      opt.batch_size;
  parallel_for(num_batches, opt.threads, [&](size_t begin, size_t end) {
    for (size_t bi = begin; bi < end; ++bi) {
      const size_t off = bi * static_cast<size_t>(opt.batch_size);
      const size_t nb =
          std::min<size_t>(opt.batch_size, trials.trials.size() - off);
      std::vector<size_t> rows_a(nb), rows_b(nb);
      for (size_t i = 0; i < nb; ++i) {
        rows_a[i] = images.index.at(trials.trials[off + i].id_a);
        rows_b[i] = images.index.at(trials.trials[off + i].id_b);
      }
      const Tensor<float> a = images.gather(rows_a);
      const Tensor<float> b = images.gather(rows_b);
      const std::vector<float> s = verification_scores(params, a, b);
      for (size_t i = 0; i < nb; ++i) {
        scores[off + i] = static_cast<double>(s[i]);
      }
    }
  });

  std::vector<double> genuine, impostor;
  for (size_t i = 0; i < trials.trials.size(); ++i) {
    (trials.trials[i].label == 1 ? genuine : impostor).push_back(scores[i]);
  }
  if (genuine.empty() || impostor.empty()) {
    throw_invalid("evaluate: trials must include both classes");
  }

  EvalReport report;
  report.n_genuine = genuine.size();
  report.n_impostor = impostor.size();
  const EerResult eer = compute_eer(genuine, impostor);
  report.eer = eer.eer;
  report.eer_threshold = eer.threshold;
  report.roc = eer.roc;
  if (trials.folds >= 2) {
    const KfoldResult kf = kfold_accuracy(trials, scores);
    report.accuracy_mean = kf.accuracy_mean;
    report.accuracy_std = kf.accuracy_std;
    report.fold_thresholds = kf.fold_thresholds;
    report.fold_accuracies = kf.fold_accuracies;
  }

  {
    std::ofstream os = open_out((fs::path(out_dir) / "report.txt").string(),
                                /*binary=*/false);
    report_write_text(report, os);
  }
  {
    std::ofstream os = open_out((fs::path(out_dir) / "metrics.csv").string(),
                                /*binary=*/false);
    report_write_metrics(report, os);
  }
  {
    std::ofstream os =
        open_out((fs::path(out_dir) / "roc.csv").string(), /*binary=*/false);
    roc_write(report.roc, os);
  }
  {
    std::ofstream os = open_out((fs::path(out_dir) / "scores.csv").string(),
                                /*binary=*/false);
    for (size_t i = 0; i < trials.trials.size(); ++i) {
      os << trials.trials[i].id_a << ',' << trials.trials[i].id_b << ','
         << format_score(scores[i]) << ',' << trials.trials[i].label << "\n";
    }
  }
  return report;
}

}  // namespace sfv
