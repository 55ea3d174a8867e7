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

#include "evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "error.hpp"
#include "io_util.hpp"
#include "rng.hpp"

namespace sfv {

namespace {

// Candidate thresholds: one below every score, midpoints between adjacent
// distinct scores, one above every score. Sweeping these visits every
// distinct (FAR, FRR) operating point.
std::vector<double> candidate_thresholds(const std::vector<double>& sorted_all) {
  std::vector<double> distinct;
  for (double s : sorted_all) {
    if (distinct.empty() || s != distinct.back()) distinct.push_back(s);
  }
  std::vector<double> out;
  out.reserve(distinct.size() + 1);
  out.push_back(distinct.front() - 1.0);
  for (size_t i = 0; i + 1 < distinct.size(); ++i) {
    out.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
  }
  out.push_back(distinct.back() + 1.0);
  return out;
}

size_t count_below(const std::vector<double>& sorted, double t) {
  return static_cast<size_t>(
      std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
}

}  // namespace

EerResult compute_eer(const std::vector<double>& genuine,
                      const std::vector<double>& impostor) {
  if (genuine.empty() || impostor.empty()) {
    throw_invalid("compute_eer: both score sets must be nonempty");
  }
  std::vector<double> gen = genuine;
  std::vector<double> imp = impostor;
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  std::vector<double> all;
  all.reserve(gen.size() + imp.size());
  std::merge(gen.begin(), gen.end(), imp.begin(), imp.end(),
             std::back_inserter(all));

  EerResult result;
  const std::vector<double> thresholds = candidate_thresholds(all);
  result.roc.reserve(thresholds.size());
  for (double t : thresholds) {
    const double far =
        static_cast<double>(imp.size() - count_below(imp, t)) / imp.size();
    const double frr = static_cast<double>(count_below(gen, t)) / gen.size();
    result.roc.push_back(RocPoint{t, far, frr});
  }

  // FAR-FRR starts at +1 (accept everything) and ends at -1; find the first
  // sweep point at or past the crossing and interpolate linearly.
  size_t i = 1;
  while (i < result.roc.size() &&
         result.roc[i].far - result.roc[i].frr > 0.0) {
    ++i;
  }
  const RocPoint& lo = result.roc[i - 1];
  const RocPoint& hi = result.roc[i];
  const double d_lo = lo.far - lo.frr;
  const double d_hi = hi.far - hi.frr;
  const double alpha = d_lo / (d_lo - d_hi);
  result.eer = lo.far + alpha * (hi.far - lo.far);
  result.threshold = lo.threshold + alpha * (hi.threshold - lo.threshold);
  return result;
}

namespace {

double accuracy_at(const std::vector<double>& sorted_gen,
                   const std::vector<double>& sorted_imp, double t) {
  const size_t correct_gen = sorted_gen.size() - count_below(sorted_gen, t);
  const size_t correct_imp = count_below(sorted_imp, t);
  return static_cast<double>(correct_gen + correct_imp) /
         static_cast<double>(sorted_gen.size() + sorted_imp.size());
}

}  // namespace

KfoldResult kfold_accuracy(const TrialSet& trials,
                           const std::vector<double>& scores) {
  if (trials.folds < 2) throw_invalid("kfold_accuracy: need at least 2 folds");
  if (scores.size() != trials.trials.size()) {
    throw_dim("kfold_accuracy: score count does not match trial count");
  }
  std::vector<std::vector<double>> gen_by_fold(trials.folds);
  std::vector<std::vector<double>> imp_by_fold(trials.folds);
  for (size_t i = 0; i < trials.trials.size(); ++i) {
    const Trial& t = trials.trials[i];
    if (t.fold < 0 || t.fold >= trials.folds) {
      throw_invalid("kfold_accuracy: fold index out of range");
    }
    (t.label == 1 ? gen_by_fold : imp_by_fold)[t.fold].push_back(scores[i]);
  }
  for (int f = 0; f < trials.folds; ++f) {
    if (gen_by_fold[f].empty() || imp_by_fold[f].empty()) {
      throw_invalid("kfold_accuracy: fold " + std::to_string(f) +
                    " lacks one of the two classes");
    }
  }

  KfoldResult result;
  for (int f = 0; f < trials.folds; ++f) {
    std::vector<double> train_gen, train_imp;
    for (int g = 0; g < trials.folds; ++g) {
      if (g == f) continue;
      train_gen.insert(train_gen.end(), gen_by_fold[g].begin(),
                       gen_by_fold[g].end());
      train_imp.insert(train_imp.end(), imp_by_fold[g].begin(),
                       imp_by_fold[g].end());
    }
    std::sort(train_gen.begin(), train_gen.end());
    std::sort(train_imp.begin(), train_imp.end());
    std::vector<double> all;
    all.reserve(train_gen.size() + train_imp.size());
    std::merge(train_gen.begin(), train_gen.end(), train_imp.begin(),
               train_imp.end(), std::back_inserter(all));

    // Ascending sweep with strict improvement keeps the lowest threshold
    // among accuracy ties.
    double best_t = 0.0, best_acc = -1.0;
    for (double t : candidate_thresholds(all)) {
      const double acc = accuracy_at(train_gen, train_imp, t);
      if (acc > best_acc) {
        best_acc = acc;
        best_t = t;
      }
    }

    std::vector<double> fold_gen = gen_by_fold[f];
    std::vector<double> fold_imp = imp_by_fold[f];
    std::sort(fold_gen.begin(), fold_gen.end());
    std::sort(fold_imp.begin(), fold_imp.end());
    result.fold_thresholds.push_back(best_t);
    result.fold_accuracies.push_back(accuracy_at(fold_gen, fold_imp, best_t));
  }

  double mean = 0.0;
  for (double a : result.fold_accuracies) mean += a;
  mean /= result.fold_accuracies.size();
  double var = 0.0;
  for (double a : result.fold_accuracies) var += (a - mean) * (a - mean);
  var /= result.fold_accuracies.size();
  result.accuracy_mean = mean;
  result.accuracy_std = std::sqrt(std::max(0.0, var));
  return result;
}

TrialSet build_trials(const std::vector<std::string>& ids,
                      const std::unordered_map<std::string, std::string>& labels,
                      int folds, int matched_per_fold, int mismatched_per_fold,
                      uint64_t seed) {
  if (folds < 1) throw_invalid("build_trials: folds must be >= 1");
  if (matched_per_fold < 1 || mismatched_per_fold < 1) {
    throw_invalid("build_trials: per-fold pair counts must be >= 1");
  }
  // Group ids by identity in canonical order so the sampled set depends only
  // on (content, seed).
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& id : ids) {
    const auto it = labels.find(id);
    if (it == labels.end()) {
      throw_invalid("build_trials: no identity label for id '" + id + "'");
    }
    groups[it->second].push_back(id);
  }
  for (auto& [identity, members] : groups) {
    std::sort(members.begin(), members.end());
  }

  std::vector<std::pair<std::string, std::string>> matched;
  for (const auto& [identity, members] : groups) {
    for (size_t i = 0; i < members.size(); ++i) {
      for (size_t j = i + 1; j < members.size(); ++j) {
        matched.emplace_back(members[i], members[j]);
      }
    }
  }
  const size_t need_matched =
      static_cast<size_t>(folds) * static_cast<size_t>(matched_per_fold);
  if (matched.size() < need_matched) {
    throw_invalid("build_trials: only " + std::to_string(matched.size()) +
                  " same-identity pairs available, need " +
                  std::to_string(need_matched) +
                  " (insufficient identities with >= 2 images)");
  }

  std::vector<std::pair<std::string, std::string>> mismatched;
  {
    std::vector<const std::vector<std::string>*> group_list;
    for (const auto& [identity, members] : groups) group_list.push_back(&members);
    for (size_t a = 0; a < group_list.size(); ++a) {
      for (size_t b = a + 1; b < group_list.size(); ++b) {
        for (const auto& ia : *group_list[a]) {
          for (const auto& ib : *group_list[b]) {
            mismatched.emplace_back(std::min(ia, ib), std::max(ia, ib));
          }
        }
      }
    }
  }
  const size_t need_mismatched =
      static_cast<size_t>(folds) * static_cast<size_t>(mismatched_per_fold);
  if (mismatched.size() < need_mismatched) {
    throw_invalid("build_trials: only " + std::to_string(mismatched.size()) +
                  " cross-identity pairs available, need " +
                  std::to_string(need_mismatched));
  }

  Rng matched_rng(derive_seed(seed, "trials-matched"));
  matched_rng.shuffle(matched);
  Rng mismatched_rng(derive_seed(seed, "trials-mismatched"));
  mismatched_rng.shuffle(mismatched);

  TrialSet ts;
  ts.folds = folds;
  for (int f = 0; f < folds; ++f) {
    for (int i = 0; i < matched_per_fold; ++i) {
      const auto& [a, b] =
          matched[static_cast<size_t>(f) * matched_per_fold + i];
      ts.trials.push_back(Trial{a, b, 1, f});
    }
    for (int i = 0; i < mismatched_per_fold; ++i) {
      const auto& [a, b] =
          mismatched[static_cast<size_t>(f) * mismatched_per_fold + i];
      ts.trials.push_back(Trial{a, b, 0, f});
    }
  }
  return ts;
}

void trials_write(const TrialSet& ts, std::ostream& os) {
  os << "#trialset v1 folds=" << ts.folds << "\n";
  for (const Trial& t : ts.trials) {
    os << t.id_a << ',' << t.id_b << ',' << t.label << ',' << t.fold << "\n";
  }
}

void trials_write(const TrialSet& ts, const std::string& path) {
  std::ofstream os = open_out(path, /*binary=*/false);
  trials_write(ts, os);
  if (!os) throw_io("write failed: " + path);
}

TrialSet trials_read(std::istream& is, const std::string& origin) {
  std::string line;
  if (!std::getline(is, line)) {
    throw_format("trial set '" + origin + "': missing header");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("#trialset v1 folds=", 0) != 0) {
    throw_format("trial set '" + origin + "': bad header");
  }
  TrialSet ts;
  try {
    ts.folds = std::stoi(line.substr(19));
  } catch (const std::exception&) {
    throw_format("trial set '" + origin + "': bad fold count");
  }
  size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 4) {
      throw_format("trial set '" + origin + "' line " + std::to_string(lineno) +
                   ": expected 4 fields");
    }
    Trial t;
    t.id_a = fields[0];
    t.id_b = fields[1];
    try {
      t.label = std::stoi(fields[2]);
      t.fold = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw_format("trial set '" + origin + "' line " + std::to_string(lineno) +
                   ": bad numeric field");
    }
    if (t.label != 0 && t.label != 1) {
      throw_format("trial set '" + origin + "' line " + std::to_string(lineno) +
                   ": label must be 0 or 1");
    }
    ts.trials.push_back(std::move(t));
  }
  return ts;
}

TrialSet trials_read(const std::string& path) {
  std::ifstream is = open_in(path, /*binary=*/false);
  return trials_read(is, path);
}

void report_write_text(const EvalReport& report, std::ostream& os) {
  os << "verification report\n";
  os << "  trials: " << report.n_genuine + report.n_impostor << " ("
     << report.n_genuine << " genuine / " << report.n_impostor
     << " impostor)\n";
  os << "  eer: " << format_score(report.eer) << " at threshold "
     << format_score(report.eer_threshold) << "\n";
  if (!report.fold_accuracies.empty()) {
    os << "  " << report.fold_accuracies.size()
       << "-fold accuracy: " << format_score(report.accuracy_mean) << " +/- "
       << format_score(report.accuracy_std) << "\n";
  }
}

void report_write_metrics(const EvalReport& report, std::ostream& os) {
  os << "n_genuine," << report.n_genuine << "\n";
  os << "n_impostor," << report.n_impostor << "\n";
  os << "eer," << format_score(report.eer) << "\n";
  os << "eer_threshold," << format_score(report.eer_threshold) << "\n";
  if (!report.fold_accuracies.empty()) {
    os << "accuracy_mean," << format_score(report.accuracy_mean) << "\n";
    os << "accuracy_std," << format_score(report.accuracy_std) << "\n";
    for (size_t f = 0; f < report.fold_accuracies.size(); ++f) {
      os << "fold_" << f << "_threshold,"
         << format_score(report.fold_thresholds[f]) << "\n";
      os << "fold_" << f << "_accuracy,"
         << format_score(report.fold_accuracies[f]) << "\n";
    }
  }
}

void roc_write(const std::vector<RocPoint>& roc, std::ostream& os) {
  os << "threshold,far,frr\n";
  for (const RocPoint& p : roc) {
    os << format_score(p.threshold) << ',' << format_score(p.far) << ','
       << format_score(p.frr) << "\n";
  }
}

}  // namespace sfv
