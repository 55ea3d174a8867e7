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

// Command-line front end for the sfv pipeline. Talks to the shared library
// exclusively through the public C API. Subcommands: synth, embed,
// mine-pairs, train, evaluate. Option precedence: built-in defaults, then
// --config file values, then explicit flags.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sfv/sfv.h"

namespace {

struct Options {
  uint64_t seed = 0;
  uint32_t threads = 0;  // 0 = hardware concurrency

  sfv_synth_spec synth;
  sfv_encoder_config encoder;
  sfv_mining_config mine;
  sfv_train_config train;
  uint32_t eval_folds = 10;
  uint32_t eval_matched = 300;
  uint32_t eval_mismatched = 300;

  std::string pos_mode = "below";
  std::string neg_mode = "below";
  std::string optimizer = "sgd";

  Options() {
    sfv_synth_spec_init(&synth);
    sfv_encoder_config_init(&encoder);
    sfv_mining_config_init(&mine);
    sfv_train_config_init(&train);
  }
};

int parse_mode(const std::string& name) {
  if (name == "below") return SFV_THRESHOLD_BELOW;
  if (name == "above") return SFV_THRESHOLD_ABOVE;
  throw CLI::ValidationError("threshold mode must be 'below' or 'above'");
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T* out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

void load_config_file(const std::string& path, Options* opt) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  nlohmann::json j = nlohmann::json::parse(is);

  maybe(j, "seed", &opt->seed);
  maybe(j, "threads", &opt->threads);
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    maybe(s, "identities", &opt->synth.num_identities);
    maybe(s, "images_per_identity", &opt->synth.images_per_identity);
    maybe(s, "image_size", &opt->synth.image_size);
    maybe(s, "separation", &opt->synth.separation);
    maybe(s, "noise", &opt->synth.noise);
    maybe(s, "split_fraction", &opt->synth.split_fraction);
  }
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    maybe(e, "input_height", &opt->encoder.input_height);
    maybe(e, "input_width", &opt->encoder.input_width);
    maybe(e, "input_channels", &opt->encoder.input_channels);
    if (e.contains("block_channels")) {
      const auto bc = e.at("block_channels").get<std::vector<uint32_t>>();
      if (bc.size() != 3) {
        throw std::runtime_error("config: block_channels needs 3 entries");
      }
      for (int i = 0; i < 3; ++i) opt->encoder.block_channels[i] = bc[i];
    }
    maybe(e, "fc1_units", &opt->encoder.fc1_units);
    maybe(e, "embedding_dim", &opt->encoder.embedding_dim);
    maybe(e, "head_hidden_units", &opt->encoder.head_hidden_units);
  }
  if (j.contains("mine")) {
    const auto& m = j.at("mine");
    maybe(m, "k", &opt->mine.k);
    maybe(m, "pos_threshold", &opt->mine.pos_threshold);
    maybe(m, "neg_threshold", &opt->mine.neg_threshold);
    maybe(m, "pos_mode", &opt->pos_mode);
    maybe(m, "neg_mode", &opt->neg_mode);
    bool bidir = opt->mine.bidirectional != 0;
    maybe(m, "bidirectional", &bidir);
    opt->mine.bidirectional = bidir ? 1 : 0;
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    maybe(t, "epochs", &opt->train.epochs);
    maybe(t, "batch_size", &opt->train.batch_size);
    maybe(t, "momentum", &opt->train.momentum);
    maybe(t, "weight_decay", &opt->train.weight_decay);
    maybe(t, "lr_start", &opt->train.lr_start);
    maybe(t, "lr_end", &opt->train.lr_end);
    maybe(t, "early_stop_patience", &opt->train.early_stop_patience);
    maybe(t, "validation_fraction", &opt->train.validation_fraction);
    maybe(t, "optimizer", &opt->optimizer);
  }
  if (j.contains("evaluate")) {
    const auto& e = j.at("evaluate");
    maybe(e, "folds", &opt->eval_folds);
    maybe(e, "matched_per_fold", &opt->eval_matched);
    maybe(e, "mismatched_per_fold", &opt->eval_mismatched);
  }
}

int fail(const char* command) {
  std::cerr << "sfv " << command << ": " << sfv_last_error() << "\n";
  return 1;
}

void add_encoder_flags(CLI::App* cmd, Options* opt,
                       std::vector<uint32_t>* block_channels) {
  cmd->add_option("--input-height", opt->encoder.input_height,
                  "encoder input height (divisible by 8)");
  cmd->add_option("--input-width", opt->encoder.input_width,
                  "encoder input width (divisible by 8)");
  cmd->add_option("--block-channels", *block_channels,
                  "channels of the three conv blocks")
      ->expected(3);
  cmd->add_option("--fc1-units", opt->encoder.fc1_units, "first FC width");
  cmd->add_option("--embedding-dim", opt->encoder.embedding_dim,
                  "embedding dimension");
  cmd->add_option("--head-hidden", opt->encoder.head_hidden_units,
                  "verification head hidden units");
}

void apply_block_channels(const std::vector<uint32_t>& bc, Options* opt) {
  if (!bc.empty()) {
    for (int i = 0; i < 3; ++i) {
      opt->encoder.block_channels[i] = bc[static_cast<size_t>(i)];
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;

  // --config is applied before flag parsing so flags win.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    std::string path;
    if (arg == "--config" && i + 1 < argc) {
      path = argv[i + 1];
    } else if (arg.rfind("--config=", 0) == 0) {
      path = arg.substr(9);
    }
    if (!path.empty()) {
      try {
        load_config_file(path, &opt);
      } catch (const std::exception& e) {
        std::cerr << "sfv: " << e.what() << "\n";
        return 1;
      }
    }
  }

  CLI::App app{"sfv - unsupervised siamese face verification pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override)");
  app.add_option("--seed", opt.seed, "global seed; all stage seeds derive from it");
  app.add_option("--threads", opt.threads,
                 "worker threads (0 = hardware concurrency); never affects results");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic identity-cluster dataset");
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--identities", opt.synth.num_identities, "number of identities");
  synth->add_option("--images-per-identity", opt.synth.images_per_identity,
                    "images per identity");
  synth->add_option("--image-size", opt.synth.image_size, "square image side");
  synth->add_option("--separation", opt.synth.separation,
                    "identity template spread");
  synth->add_option("--noise", opt.synth.noise, "per-image noise scale");
  synth->add_option("--split-fraction", opt.synth.split_fraction,
                    "image share of the disjoint A side");

  // embed
  auto* embed = app.add_subcommand("embed", "embed manifest images into an EMB1 store");
  std::string embed_manifest, embed_out, embed_model, embed_source = "random";
  uint32_t embed_raw_dim = 300;
  bool embed_raw_flag = false;
  std::vector<uint32_t> embed_bc;
  embed->add_option("--manifest", embed_manifest, "manifest file")->required();
  embed->add_option("--out", embed_out, "output embedding file")->required();
  embed->add_option("--source", embed_source,
                    "embedding source: random | model | raw");
  embed->add_option("--model", embed_model, "checkpoint for --source model");
  embed->add_flag("--raw", embed_raw_flag, "shorthand for --source raw");
  embed->add_option("--raw-dim", embed_raw_dim, "projection dim for raw mode");
  add_encoder_flags(embed, &opt, &embed_bc);

  // mine-pairs
  auto* minec = app.add_subcommand("mine-pairs",
                                   "mine positive/negative training pairs from two stores");
  std::string mine_x, mine_y, mine_out;
  bool mine_bidir = false;
  minec->add_option("--x", mine_x, "anchor-side embedding store")->required();
  minec->add_option("--y", mine_y, "identity-disjoint negative store")->required();
  minec->add_option("--out", mine_out, "output pair file")->required();
  minec->add_option("--k", opt.mine.k, "neighbors per anchor");
  minec->add_option("--pos-threshold", opt.mine.pos_threshold,
                    "positive threshold in [-1,1]");
  minec->add_option("--neg-threshold", opt.mine.neg_threshold,
                    "negative threshold in [-1,1]");
  minec->add_option("--pos-mode", opt.pos_mode, "below | above");
  minec->add_option("--neg-mode", opt.neg_mode, "below | above");
  minec->add_flag("--bidirectional", mine_bidir, "mine both directions");

  // train
  auto* train = app.add_subcommand("train", "train the siamese network on mined pairs");
  std::string train_pairs, train_manifest, train_out, train_sidecar;
  bool train_baseline = false, train_init_only = false;
  std::vector<uint32_t> train_bc;
  train->add_option("--pairs", train_pairs, "mined pair file");
  train->add_option("--manifest", train_manifest, "manifest file");
  train->add_option("--out", train_out, "output directory")->required();
  train->add_flag("--baseline", train_baseline,
                  "supervised baseline mode (needs --sidecar)");
  train->add_option("--sidecar", train_sidecar, "identity labels for baseline");
  train->add_flag("--init-only", train_init_only,
                  "write the seeded initial checkpoint without training");
  train->add_option("--epochs", opt.train.epochs, "training epochs");
  train->add_option("--batch-size", opt.train.batch_size, "minibatch size");
  train->add_option("--momentum", opt.train.momentum, "SGD momentum");
  train->add_option("--weight-decay", opt.train.weight_decay, "weight decay");
  train->add_option("--lr-start", opt.train.lr_start, "initial learning rate");
  train->add_option("--lr-end", opt.train.lr_end, "final learning rate");
  train->add_option("--patience", opt.train.early_stop_patience,
                    "early-stop patience in epochs (0 disables)");
  train->add_option("--validation-fraction", opt.train.validation_fraction,
                    "held-out fraction of pairs");
  train->add_option("--optimizer", opt.optimizer, "sgd | adam");
  add_encoder_flags(train, &opt, &train_bc);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "score trials and report EER / k-fold accuracy");
  std::string eval_checkpoint, eval_manifest, eval_trials, eval_sidecar, eval_out;
  eval->add_option("--checkpoint", eval_checkpoint, "trained checkpoint")->required();
  eval->add_option("--manifest", eval_manifest, "manifest file")->required();
  eval->add_option("--out", eval_out, "output directory")->required();
  eval->add_option("--trials", eval_trials, "prebuilt trial file");
  eval->add_option("--sidecar", eval_sidecar,
                   "identity labels; trials are built from these when no "
                   "trial file is given");
  eval->add_option("--folds", opt.eval_folds, "protocol folds");
  eval->add_option("--matched-per-fold", opt.eval_matched,
                   "matched pairs per fold");
  eval->add_option("--mismatched-per-fold", opt.eval_mismatched,
                   "mismatched pairs per fold");

  CLI11_PARSE(app, argc, argv);

  try {
    opt.mine.pos_mode = parse_mode(opt.pos_mode);
    opt.mine.neg_mode = parse_mode(opt.neg_mode);
    if (opt.optimizer == "adam") {
      opt.train.use_adam = 1;
    } else if (opt.optimizer == "sgd") {
      opt.train.use_adam = 0;
    } else {
      throw CLI::ValidationError("optimizer must be 'sgd' or 'adam'");
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "sfv: " << e.what() << "\n";
    return 1;
  }
  opt.mine.bidirectional = mine_bidir ? 1 : 0;

  if (synth->parsed()) {
    if (sfv_synth(&opt.synth, opt.seed, synth_out.c_str()) != SFV_OK) {
      return fail("synth");
    }
    std::cout << "wrote "
              << opt.synth.num_identities * opt.synth.images_per_identity
              << " images, manifest.txt, labels.csv and the disjoint "
                 "manifest_a/manifest_b split under "
              << synth_out << "\n";
    return 0;
  }

  if (embed->parsed()) {
    apply_block_channels(embed_bc, &opt);
    int source = SFV_EMBED_RANDOM_INIT;
    if (embed_raw_flag || embed_source == "raw") {
      source = SFV_EMBED_RAW;
    } else if (embed_source == "model") {
      source = SFV_EMBED_MODEL;
    } else if (embed_source != "random") {
      std::cerr << "sfv embed: unknown source '" << embed_source << "'\n";
      return 1;
    }
    if (sfv_embed(embed_manifest.c_str(), source,
                  embed_model.empty() ? nullptr : embed_model.c_str(),
                  &opt.encoder, embed_raw_dim, opt.seed, opt.threads,
                  embed_out.c_str()) != SFV_OK) {
      return fail("embed");
    }
    std::cout << "embeddings written to " << embed_out << "\n";
    return 0;
  }

  if (minec->parsed()) {
    uint64_t pos = 0, neg = 0;
    if (sfv_mine_files(mine_x.c_str(), mine_y.c_str(), &opt.mine, opt.threads,
                       mine_out.c_str(), &pos, &neg) != SFV_OK) {
      return fail("mine-pairs");
    }
    std::cout << "mined " << pos << " positive + " << neg
              << " negative pairs -> " << mine_out << "\n";
    return 0;
  }

  if (train->parsed()) {
    apply_block_channels(train_bc, &opt);
    if (sfv_train(train_pairs.empty() ? nullptr : train_pairs.c_str(),
                  train_manifest.empty() ? nullptr : train_manifest.c_str(),
                  &opt.encoder, &opt.train, train_baseline ? 1 : 0,
                  train_sidecar.empty() ? nullptr : train_sidecar.c_str(),
                  train_init_only ? 1 : 0, opt.seed, opt.threads,
                  train_out.c_str()) != SFV_OK) {
      return fail("train");
    }
    std::cout << "checkpoint written to " << train_out << "/checkpoint.snw\n";
    return 0;
  }

  if (eval->parsed()) {
    double eer = 0.0;
    if (sfv_evaluate(eval_checkpoint.c_str(), eval_manifest.c_str(),
                     eval_trials.empty() ? nullptr : eval_trials.c_str(),
                     eval_sidecar.empty() ? nullptr : eval_sidecar.c_str(),
                     opt.eval_folds, opt.eval_matched, opt.eval_mismatched,
                     opt.seed, opt.threads, eval_out.c_str(), &eer) != SFV_OK) {
      return fail("evaluate");
    }
    std::cout << "eer " << eer << "; report written under " << eval_out << "\n";
    return 0;
  }
  return 0;
}
