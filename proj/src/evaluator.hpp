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

#ifndef SFV_EVALUATOR_HPP_
#define SFV_EVALUATOR_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace sfv {

// One evaluation trial: an unordered pair of image ids with ground truth
// (1 = same identity) and a fold assignment.
struct Trial {
  std::string id_a, id_b;
  int label = 0;
  int fold = 0;
};

struct TrialSet {
  int folds = 10;
  std::vector<Trial> trials;
};

struct RocPoint {
  double threshold = 0.0;
  double far = 0.0;  // fraction of impostor scores >= threshold
  double frr = 0.0;  // fraction of genuine scores < threshold
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  std::vector<RocPoint> roc;
};

// Equal error rate. Sweeps candidate thresholds at midpoints between
// adjacent distinct scores plus accept-all/reject-all sentinels; FAR is
// non-increasing and FRR non-decreasing along the sweep, so FAR-FRR crosses
// zero exactly once. The crossing is located by linear interpolation between
// the two adjacent sweep points, which also yields the reported threshold.
EerResult compute_eer(const std::vector<double>& genuine,
                      const std::vector<double>& impostor);

struct KfoldResult {
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;  // population std over folds
  std::vector<double> fold_thresholds;
  std::vector<double> fold_accuracies;
};

// LFW-style protocol: for each fold, pick the accuracy-maximizing threshold
// on the union of the other folds (ties resolved to the lowest such
// threshold), then measure accuracy on the held-out fold with the decision
// rule score >= threshold => same identity. scores[i] belongs to
// trials.trials[i].
KfoldResult kfold_accuracy(const TrialSet& trials,
                           const std::vector<double>& scores);

// Builds a seeded TrialSet from withheld identity labels: per fold,
// matched_per_fold same-identity pairs and mismatched_per_fold
// cross-identity pairs, sampled uniformly without replacement over the whole
// pair space (no trial repeats across folds).
TrialSet build_trials(const std::vector<std::string>& ids,
                      const std::unordered_map<std::string, std::string>& labels,
                      int folds, int matched_per_fold, int mismatched_per_fold,
                      uint64_t seed);

// Trial file: "#trialset v1 folds=<F>" then "id_a,id_b,label,fold" lines.
void trials_write(const TrialSet& ts, std::ostream& os);
void trials_write(const TrialSet& ts, const std::string& path);
TrialSet trials_read(std::istream& is, const std::string& origin);
TrialSet trials_read(const std::string& path);

struct EvalReport {
  size_t n_genuine = 0;
  size_t n_impostor = 0;
  double eer = 0.0;
  double eer_threshold = 0.0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  std::vector<double> fold_thresholds;
  std::vector<double> fold_accuracies;
  std::vector<RocPoint> roc;
};

void report_write_text(const EvalReport& report, std::ostream& os);
// Machine-readable "metric,value" record stream.
void report_write_metrics(const EvalReport& report, std::ostream& os);
// "threshold,far,frr" lines for external plotting.
void roc_write(const std::vector<RocPoint>& roc, std::ostream& os);

}  // namespace sfv

#endif  // SFV_EVALUATOR_HPP_
