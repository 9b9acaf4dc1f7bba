// Copyright 2026 The chartrans Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "chartrans/data.hpp"
#include "chartrans/errors.hpp"

namespace chartrans {

/// Levenshtein distance with unit costs, two-row dynamic program.
template <typename Seq>
std::size_t edit_distance(const Seq& a, const Seq& b) {
  const std::size_t n = b.size();
  std::vector<std::size_t> prev(n + 1), cur(n + 1);
  for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

struct Prediction {
  std::string source;
  std::vector<std::string> gold;
  std::vector<std::string> predicted;

  bool correct() const { return gold == predicted; }
};

struct MetricsReport {
  std::size_t count = 0;
  double acc = 0.0;
  double mean_dist = 0.0;
  double wer = 0.0;
  double per = 0.0;
  double cer_i = 0.0;
  std::map<std::size_t, std::size_t> by_length;  // bin start -> error count
  std::size_t bin_width = 1;
};

/// Errors per gold-length bin. Bins are [1..w], [w+1..2w], ... keyed by their
/// lower bound; an empty gold sequence lands in bin 0.
inline std::map<std::size_t, std::size_t> error_length_histogram(
    std::span<const Prediction> predictions, std::size_t bin_width) {
  if (bin_width < 1) throw InvariantError("error_length_histogram: bin width must be >= 1");
  std::map<std::size_t, std::size_t> hist;
  for (const auto& p : predictions) {
    if (p.correct()) continue;
    const std::size_t len = p.gold.size();
    const std::size_t lo = len == 0 ? 0 : ((len - 1) / bin_width) * bin_width + 1;
    ++hist[lo];
  }
  return hist;
}

/// ACC and WER are item-level exact match rates, Dist is the mean edit
/// distance over all items, PER is total edit distance over total gold
/// length, and CER_i averages length-normalized distance over the incorrect
/// items only (0 when there are none).
inline MetricsReport evaluate(std::span<const Prediction> predictions,
                              std::size_t bin_width = 1) {
  if (predictions.empty()) throw InvariantError("evaluate: no predictions");
  MetricsReport r;
  r.count = predictions.size();
  r.bin_width = bin_width;
  std::size_t correct = 0, total_dist = 0, total_gold = 0, wrong = 0;
  double cer_sum = 0.0;
  for (const auto& p : predictions) {
    const std::size_t dist = edit_distance(p.predicted, p.gold);
    total_dist += dist;
    total_gold += p.gold.size();
    if (p.correct()) {
      ++correct;
    } else {
      ++wrong;
      // An empty gold makes every predicted symbol an error.
      cer_sum += p.gold.empty() ? 1.0
                                : static_cast<double>(dist) / static_cast<double>(p.gold.size());
    }
  }
  const double n = static_cast<double>(r.count);
  r.acc = static_cast<double>(correct) / n;
  r.wer = static_cast<double>(wrong) / n;
  r.mean_dist = static_cast<double>(total_dist) / n;
  r.per = total_gold ? static_cast<double>(total_dist) / static_cast<double>(total_gold)
                     : (total_dist ? 1.0 : 0.0);
  r.cer_i = wrong ? cer_sum / static_cast<double>(wrong) : 0.0;
  r.by_length = error_length_histogram(predictions, bin_width);
  return r;
}

/// Aligned human-readable block followed by `key=value` lines.
inline void write_metrics(std::ostream& out, const MetricsReport& r) {
  char buf[128];
  auto row = [&](const char* name, double v) {
    std::snprintf(buf, sizeof buf, "%-8s %12.6f\n", name, v);
    out << buf;
  };
  std::snprintf(buf, sizeof buf, "%-8s %12zu\n", "items", r.count);
  out << buf;
  row("ACC", r.acc);
  row("Dist", r.mean_dist);
  row("WER", r.wer);
  row("PER", r.per);
  row("CER_i", r.cer_i);
  out << "errors by gold length (bin width " << r.bin_width << "):\n";
  for (const auto& [lo, count] : r.by_length) {
    std::snprintf(buf, sizeof buf, "  %4zu-%-4zu %8zu\n", lo, lo == 0 ? 0 : lo + r.bin_width - 1,
                  count);
    out << buf;
  }
  out << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", r.acc);
  out << "acc=" << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", r.mean_dist);
  out << "dist=" << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", r.wer);
  out << "wer=" << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", r.per);
  out << "per=" << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", r.cer_i);
  out << "cer_i=" << buf << '\n';
  out << "count=" << r.count << '\n';
  for (const auto& [lo, count] : r.by_length) {
    out << "errors_len_" << lo << '=' << count << '\n';
  }
}

/// source<TAB>gold<TAB>predicted, one row per item. The predicted column may
/// be empty.
inline void write_predictions(std::ostream& out, std::span<const Prediction> predictions,
                              TargetUnit unit) {
  for (const auto& p : predictions) {
    out << p.source << '\t' << detokenize(p.gold, unit) << '\t' << detokenize(p.predicted, unit)
        << '\n';
  }
}

inline std::vector<Prediction> parse_predictions(std::istream& in, const std::string& name,
                                                 TargetUnit unit) {
  std::vector<Prediction> out;
  detail::for_each_line(in, [&](std::size_t number, const std::string& line) {
    auto cols = split_on(line, '\t');
    if (cols.size() != 3) {
      throw ParseError(name, number, "expected 3 tab-separated columns, found " +
                                         std::to_string(cols.size()));
    }
    Prediction p;
    p.source = cols[0];
    try {
      p.gold = tokenize(cols[1], unit);
      p.predicted = tokenize(cols[2], unit);
    } catch (const std::invalid_argument& e) {
      throw ParseError(name, number, e.what());
    }
    out.push_back(std::move(p));
  });
  return out;
}

inline std::vector<Prediction> read_predictions(const std::string& path, TargetUnit unit) {
  auto in = detail::open_input(path);
  return parse_predictions(in, path, unit);
}

}  // namespace chartrans
