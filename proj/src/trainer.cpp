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

#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "io_util.hpp"
#include "rng.hpp"

namespace sfv {

void TrainConfig::validate() const {
  if (epochs < 1) throw_invalid("train config: epochs must be >= 1");
  if (batch_size < 1) throw_invalid("train config: batch_size must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw_invalid("train config: momentum must lie in [0, 1)");
  }
  if (weight_decay < 0.0) {
    throw_invalid("train config: weight_decay must be >= 0");
  }
  if (!(lr_end > 0.0) || lr_end > lr_start) {
    throw_invalid("train config: need 0 < lr_end <= lr_start");
  }
  if (early_stop_patience < 0) {
    throw_invalid("train config: early_stop_patience must be >= 0");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw_invalid("train config: validation_fraction must lie in (0, 1)");
  }
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch >= cfg.epochs) {
    throw_invalid("lr_schedule: epoch out of range");
  }
  // Endpoints are special-cased so they are exact, not pow/log10 round trips.
  if (epoch == 0 || cfg.epochs == 1) return cfg.lr_start;
  if (epoch == cfg.epochs - 1) return cfg.lr_end;
  const double t = static_cast<double>(epoch) / (cfg.epochs - 1);
  const double exponent =
      std::log10(cfg.lr_start) + (std::log10(cfg.lr_end) - std::log10(cfg.lr_start)) * t;
  return std::pow(10.0, exponent);
}

namespace {

template <typename T>
void check_grads_finite(const ModelParams<T>& grads) {
  const std::string bad = grads.first_non_finite();
  if (!bad.empty()) {
    throw_numeric("non-finite gradient in tensor '" + bad + "'");
  }
}

template <typename T>
void sgd_update_tensor(Tensor<T>& w, const Tensor<T>& g, Tensor<T>& v,
                       double lr, double momentum, double weight_decay) {
  for (int64_t i = 0; i < w.size(); ++i) {
    const double vel = momentum * static_cast<double>(v.data[i]) -
                       lr * (static_cast<double>(g.data[i]) +
                             weight_decay * static_cast<double>(w.data[i]));
    v.data[i] = static_cast<T>(vel);
    w.data[i] = static_cast<T>(static_cast<double>(w.data[i]) + vel);
  }
}

template <typename T>
void adam_update_tensor(Tensor<T>& w, const Tensor<T>& g, Tensor<T>& m,
                        Tensor<T>& v, int64_t step, double lr,
                        double weight_decay) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  for (int64_t i = 0; i < w.size(); ++i) {
    const double grad = static_cast<double>(g.data[i]) +
                        weight_decay * static_cast<double>(w.data[i]);
    const double m1 = kBeta1 * static_cast<double>(m.data[i]) + (1.0 - kBeta1) * grad;
    const double m2 =
        kBeta2 * static_cast<double>(v.data[i]) + (1.0 - kBeta2) * grad * grad;
    m.data[i] = static_cast<T>(m1);
    v.data[i] = static_cast<T>(m2);
    const double update = lr * (m1 / bc1) / (std::sqrt(m2 / bc2) + kEps);
    w.data[i] = static_cast<T>(static_cast<double>(w.data[i]) - update);
  }
}

template <typename T>
std::vector<Tensor<T>*> tensor_list(ModelParams<T>& p) {
  std::vector<Tensor<T>*> out;
  p.for_each_tensor([&](const std::string&, Tensor<T>& t) { out.push_back(&t); });
  return out;
}

}  // namespace

template <typename T>
void sgd_step(ModelParams<T>& params, const ModelParams<T>& grads,
              ModelParams<T>& velocity, double lr, const TrainConfig& cfg) {
  check_grads_finite(grads);
  auto ws = tensor_list(params);
  auto gs = tensor_list(const_cast<ModelParams<T>&>(grads));
  auto vs = tensor_list(velocity);
  for (size_t i = 0; i < ws.size(); ++i) {
    sgd_update_tensor(*ws[i], *gs[i], *vs[i], lr, cfg.momentum,
                      cfg.weight_decay);
  }
#ifndef NDEBUG
  const std::string bad = params.first_non_finite();
  if (!bad.empty()) {
    throw_numeric("non-finite parameter after step in tensor '" + bad + "'");
  }
#endif
}

template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads,
               AdamState<T>& state, double lr, const TrainConfig& cfg) {
  check_grads_finite(grads);
  ++state.step;
  auto ws = tensor_list(params);
  auto gs = tensor_list(const_cast<ModelParams<T>&>(grads));
  auto ms = tensor_list(state.m);
  auto vs = tensor_list(state.v);
  for (size_t i = 0; i < ws.size(); ++i) {
    adam_update_tensor(*ws[i], *gs[i], *ms[i], *vs[i], state.step, lr,
                       cfg.weight_decay);
  }
}

void trainlog_write(const TrainLog& log, std::ostream& os) {
  os << "#trainlog v1\n";
  for (const auto& r : log.records) {
    os << r.epoch << ',' << format_score(r.lr) << ','
       << format_score(r.train_loss) << ',' << format_score(r.val_loss) << '\n';
  }
}

void trainlog_write(const TrainLog& log, const std::string& path) {
  std::ofstream os = open_out(path, /*binary=*/false);
  trainlog_write(log, os);
  if (!os) throw_io("write failed: " + path);
}

std::string trainlog_summary(const TrainLog& log) {
  std::ostringstream os;
  os << "epochs run: " << log.records.size() << "\n";
  os << "best epoch: " << log.best_epoch << "\n";
  os << "stop reason: " << log.stop_reason << "\n";
  if (!log.records.empty()) {
    const auto& last = log.records.back();
    os << "final train loss: " << format_score(last.train_loss) << "\n";
    os << "final val loss: " << format_score(last.val_loss) << "\n";
  }
  return os.str();
}

namespace {

struct PairSample {
  size_t a = 0, b = 0;
  float label = 0.0f;
};

// Seeded index split into (train, validation). Validation keeps at least one
// sample and never swallows the whole set.
std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(
    size_t n, double fraction, uint64_t seed) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(derive_seed(seed, "val-split"));
  rng.shuffle(idx);
  size_t val_n = 0;
  if (n >= 2) {
    val_n = static_cast<size_t>(std::llround(fraction * static_cast<double>(n)));
    val_n = std::clamp<size_t>(val_n, 1, n - 1);
  }
  std::vector<size_t> val(idx.begin(), idx.begin() + val_n);
  std::vector<size_t> train(idx.begin() + val_n, idx.end());
  return {std::move(train), std::move(val)};
}

double eval_pair_loss(const ModelParams<float>& params, const ImageSet& images,
                      const std::vector<PairSample>& samples,
                      const std::vector<size_t>& subset, int batch_size) {
  if (subset.empty()) return 0.0;
  double total = 0.0;
  for (size_t off = 0; off < subset.size(); off += batch_size) {
    const size_t nb = std::min<size_t>(batch_size, subset.size() - off);
    std::vector<size_t> rows_a(nb), rows_b(nb);
    std::vector<float> labels(nb);
    for (size_t i = 0; i < nb; ++i) {
      const PairSample& s = samples[subset[off + i]];
      rows_a[i] = s.a;
      rows_b[i] = s.b;
      labels[i] = s.label;
    }
    const Tensor<float> a = images.gather(rows_a);
    const Tensor<float> b = images.gather(rows_b);
    const Tensor<float> logits = siamese_logits(params, a, b);
    total += static_cast<double>(bce_with_logits(logits, labels)) *
             static_cast<double>(nb);
  }
  return total / static_cast<double>(subset.size());
}

}  // namespace

TrainResult train_siamese(const PairSet& pairs, const ImageSet& images,
                          const EncoderConfig& enc_cfg,
                          const HeadConfig& head_cfg, const TrainConfig& cfg) {
  cfg.validate();
  enc_cfg.validate();
  head_cfg.validate();
  if (pairs.pairs.empty()) throw_invalid("train_siamese: empty pair set");

  // Resolve every id before any training work.
  std::vector<PairSample> samples;
  samples.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) {
    const auto ita = images.index.find(p.anchor_id);
    const auto itb = images.index.find(p.partner_id);
    if (ita == images.index.end()) {
      throw_invalid("train_siamese: pair id '" + p.anchor_id +
                    "' not present in the image set");
    }
    if (itb == images.index.end()) {
      throw_invalid("train_siamese: pair id '" + p.partner_id +
                    "' not present in the image set");
    }
    samples.push_back(
        PairSample{ita->second, itb->second, static_cast<float>(p.label)});
  }

  auto [train_idx, val_idx] =
      split_indices(samples.size(), cfg.validation_fraction, cfg.seed);
  if (train_idx.empty()) {
    train_idx = val_idx;  // single-pair degenerate case
  }

  ModelParams<float> params = params_init<float>(enc_cfg, head_cfg, cfg.seed);
  ModelParams<float> grads = ModelParams<float>::allocate(enc_cfg, head_cfg);
  ModelParams<float> velocity = ModelParams<float>::allocate(enc_cfg, head_cfg);
  AdamState<float> adam;
  if (cfg.optimizer == Optimizer::kAdam) {
    adam.m = ModelParams<float>::allocate(enc_cfg, head_cfg);
    adam.v = ModelParams<float>::allocate(enc_cfg, head_cfg);
  }

  TrainResult result;
  result.params = params;
  double best_val = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg);
    Rng shuffle_rng(derive_seed(cfg.seed, "epoch-shuffle",
                                static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(train_idx);

    double train_loss = 0.0;
    for (size_t off = 0; off < train_idx.size();
         off += static_cast<size_t>(cfg.batch_size)) {
      const size_t nb =
          std::min<size_t>(cfg.batch_size, train_idx.size() - off);
      std::vector<size_t> rows_a(nb), rows_b(nb);
      std::vector<float> labels(nb);
      for (size_t i = 0; i < nb; ++i) {
        const PairSample& s = samples[train_idx[off + i]];
        rows_a[i] = s.a;
        rows_b[i] = s.b;
        labels[i] = s.label;
      }
      const Tensor<float> a = images.gather(rows_a);
      const Tensor<float> b = images.gather(rows_b);
      const float loss = siamese_loss_and_grads(params, a, b, labels, grads);
      if (cfg.optimizer == Optimizer::kAdam) {
        adam_step(params, grads, adam, lr, cfg);
      } else {
        sgd_step(params, grads, velocity, lr, cfg);
      }
      train_loss += static_cast<double>(loss) * static_cast<double>(nb);
    }
    train_loss /= static_cast<double>(train_idx.size());

    const double val_loss =
        val_idx.empty() ? train_loss
                        : eval_pair_loss(params, images, samples, val_idx,
                                         cfg.batch_size);
    result.log.records.push_back(EpochRecord{epoch, lr, train_loss, val_loss});

    if (val_loss < best_val) {
      best_val = val_loss;
      result.log.best_epoch = epoch;
      result.params = params;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    if (cfg.early_stop_patience > 0 &&
        epochs_since_best >= cfg.early_stop_patience) {
      result.log.stop_reason =
          "early stop: no validation improvement for " +
          std::to_string(cfg.early_stop_patience) + " epochs";
      break;
    }
  }
  if (result.log.stop_reason.empty()) result.log.stop_reason = "completed";
  return result;
}

namespace {

// Softmax cross-entropy over [B, C] logits; fills d_logits (mean-reduced)
// and returns (mean loss, correct count).
std::pair<double, int> softmax_xent(const Tensor<float>& logits,
                                    const std::vector<int>& targets,
                                    Tensor<float>* d_logits) {
  const int b = logits.dim(0), c = logits.dim(1);
  if (d_logits != nullptr) *d_logits = Tensor<float>({b, c});
  double loss = 0.0;
  int correct = 0;
  for (int i = 0; i < b; ++i) {
    const float* row = logits.data.data() + static_cast<int64_t>(i) * c;
    float maxv = row[0];
    int argmax = 0;
    for (int j = 1; j < c; ++j) {
      if (row[j] > maxv) {
        maxv = row[j];
        argmax = j;
      }
    }
    if (argmax == targets[static_cast<size_t>(i)]) ++correct;
    double denom = 0.0;
    for (int j = 0; j < c; ++j) {
      denom += std::exp(static_cast<double>(row[j]) - maxv);
    }
    const double logz = std::log(denom) + maxv;
    loss += logz - static_cast<double>(row[targets[static_cast<size_t>(i)]]);
    if (d_logits != nullptr) {
      float* drow = d_logits->data.data() + static_cast<int64_t>(i) * c;
      for (int j = 0; j < c; ++j) {
        const double p = std::exp(static_cast<double>(row[j]) - logz);
        const double y = j == targets[static_cast<size_t>(i)] ? 1.0 : 0.0;
        drow[j] = static_cast<float>((p - y) / b);
      }
    }
  }
  return {loss / b, correct};
}

}  // namespace

TrainResult train_baseline(
    const ImageSet& images,
    const std::unordered_map<std::string, std::string>& labels,
    const EncoderConfig& enc_cfg, const HeadConfig& head_cfg,
    const TrainConfig& cfg) {
  cfg.validate();
  enc_cfg.validate();
  head_cfg.validate();
  if (images.size() == 0) throw_invalid("train_baseline: no images");

  std::vector<std::string> class_names;
  {
    std::set<std::string> uniq;
    for (const auto& id : images.ids) {
      const auto it = labels.find(id);
      if (it == labels.end()) {
        throw_invalid("train_baseline: no identity label for image '" + id +
                      "'");
      }
      uniq.insert(it->second);
    }
    class_names.assign(uniq.begin(), uniq.end());
  }
  if (class_names.size() < 2) {
    throw_invalid("train_baseline: need at least 2 identities, got " +
                  std::to_string(class_names.size()));
  }
  std::unordered_map<std::string, int> class_index;
  for (size_t i = 0; i < class_names.size(); ++i) {
    class_index[class_names[i]] = static_cast<int>(i);
  }
  std::vector<int> targets(images.size());
  for (size_t i = 0; i < images.size(); ++i) {
    targets[i] = class_index.at(labels.at(images.ids[i]));
  }

  const int num_classes = static_cast<int>(class_names.size());
  ModelParams<float> params = params_init<float>(enc_cfg, head_cfg, cfg.seed);
  ModelParams<float> grads = ModelParams<float>::allocate(enc_cfg, head_cfg);
  ModelParams<float> velocity = ModelParams<float>::allocate(enc_cfg, head_cfg);
  // Zero-initialized classifier: the loss trajectory is then exactly
  // invariant under a relabeling of class indices.
  Tensor<float> cls_w({enc_cfg.embedding_dim, num_classes});
  Tensor<float> cls_b({num_classes});
  Tensor<float> cls_w_vel({enc_cfg.embedding_dim, num_classes});
  Tensor<float> cls_b_vel({num_classes});

  auto [train_idx, val_idx] =
      split_indices(images.size(), cfg.validation_fraction, cfg.seed);
  if (train_idx.empty()) train_idx = val_idx;

  int current_epoch = 0;
  auto forward_loss = [&](const std::vector<size_t>& subset,
                          bool backward) -> std::pair<double, int> {
    double total = 0.0;
    int correct = 0;
    for (size_t off = 0; off < subset.size();
         off += static_cast<size_t>(cfg.batch_size)) {
      const size_t nb = std::min<size_t>(cfg.batch_size, subset.size() - off);
      std::vector<size_t> rows(nb);
      std::vector<int> batch_targets(nb);
      for (size_t i = 0; i < nb; ++i) {
        rows[i] = subset[off + i];
        batch_targets[i] = targets[rows[i]];
      }
      const Tensor<float> batch = images.gather(rows);
      EncoderCache<float> cache;
      const Tensor<float> emb =
          encoder_forward(params, batch, backward ? &cache : nullptr);
      Tensor<float> logits;
      fc_forward(emb, cls_w, cls_b, logits);
      Tensor<float> d_logits;
      const auto [loss, ok] =
          softmax_xent(logits, batch_targets, backward ? &d_logits : nullptr);
      total += loss * static_cast<double>(nb);
      correct += ok;
      if (backward) {
        grads.for_each_tensor(
            [](const std::string&, Tensor<float>& t) { t.fill(0.0f); });
        Tensor<float> d_cls_w({enc_cfg.embedding_dim, num_classes});
        Tensor<float> d_cls_b({num_classes});
        Tensor<float> d_emb;
        fc_backward(emb, cls_w, d_logits, d_cls_w, d_cls_b, &d_emb);
        encoder_backward(params, cache, d_emb, grads);
        check_grads_finite(grads);
        const double lr = lr_schedule(current_epoch, cfg);
        // Encoder tensors step through the shared kernel; the head is left
        // untouched (it plays no role in baseline training or evaluation).
        for (int layer = 0; layer < 6; ++layer) {
          sgd_update_tensor(params.conv_w[layer], grads.conv_w[layer],
                            velocity.conv_w[layer], lr, cfg.momentum,
                            cfg.weight_decay);
          sgd_update_tensor(params.conv_b[layer], grads.conv_b[layer],
                            velocity.conv_b[layer], lr, cfg.momentum,
                            cfg.weight_decay);
        }
        sgd_update_tensor(params.fc1_w, grads.fc1_w, velocity.fc1_w, lr,
                          cfg.momentum, cfg.weight_decay);
        sgd_update_tensor(params.fc1_b, grads.fc1_b, velocity.fc1_b, lr,
                          cfg.momentum, cfg.weight_decay);
        sgd_update_tensor(params.fc2_w, grads.fc2_w, velocity.fc2_w, lr,
                          cfg.momentum, cfg.weight_decay);
        sgd_update_tensor(params.fc2_b, grads.fc2_b, velocity.fc2_b, lr,
                          cfg.momentum, cfg.weight_decay);
        sgd_update_tensor(cls_w, d_cls_w, cls_w_vel, lr, cfg.momentum,
                          cfg.weight_decay);
        sgd_update_tensor(cls_b, d_cls_b, cls_b_vel, lr, cfg.momentum,
                          cfg.weight_decay);
      }
    }
    return {total / static_cast<double>(subset.size()), correct};
  };

  TrainResult result;
  result.params = params;
  result.classifier_w = cls_w;
  result.classifier_b = cls_b;
  result.class_names = class_names;
  double best_val = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    current_epoch = epoch;
    Rng shuffle_rng(derive_seed(cfg.seed, "epoch-shuffle",
                                static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(train_idx);
    const double train_loss = forward_loss(train_idx, /*backward=*/true).first;
    const double val_loss =
        val_idx.empty() ? train_loss
                        : forward_loss(val_idx, /*backward=*/false).first;
    result.log.records.push_back(
        EpochRecord{epoch, lr_schedule(epoch, cfg), train_loss, val_loss});
    if (val_loss < best_val) {
      best_val = val_loss;
      result.log.best_epoch = epoch;
      result.params = params;
      result.classifier_w = cls_w;
      result.classifier_b = cls_b;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    if (cfg.early_stop_patience > 0 &&
        epochs_since_best >= cfg.early_stop_patience) {
      result.log.stop_reason =
          "early stop: no validation improvement for " +
          std::to_string(cfg.early_stop_patience) + " epochs";
      break;
    }
  }
  if (result.log.stop_reason.empty()) result.log.stop_reason = "completed";

  // Training-set accuracy of the returned (best) parameters.
  {
    std::swap(params, result.params);
    std::swap(cls_w, result.classifier_w);
    std::swap(cls_b, result.classifier_b);
    const int correct = forward_loss(train_idx, /*backward=*/false).second;
    result.final_train_accuracy =
        static_cast<double>(correct) / static_cast<double>(train_idx.size());
    std::swap(params, result.params);
    std::swap(cls_w, result.classifier_w);
    std::swap(cls_b, result.classifier_b);
  }
  return result;
}

template void sgd_step<float>(ModelParams<float>&, const ModelParams<float>&,
                              ModelParams<float>&, double, const TrainConfig&);
template void sgd_step<double>(ModelParams<double>&, const ModelParams<double>&,
                               ModelParams<double>&, double,
                               const TrainConfig&);
template void adam_step<float>(ModelParams<float>&, const ModelParams<float>&,
                               AdamState<float>&, double, const TrainConfig&);
template void adam_step<double>(ModelParams<double>&,
                                const ModelParams<double>&, AdamState<double>&,
                                double, const TrainConfig&);
template struct AdamState<float>;
template struct AdamState<double>;

}  // namespace sfv
