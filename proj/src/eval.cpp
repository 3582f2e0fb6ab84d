// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "lineocr/ctc.hpp"
#include "lineocr/utf8.hpp"

namespace lineocr {

using ordered_json = nlohmann::ordered_json;

std::string to_string(EditKind kind) {
  switch (kind) {
    case EditKind::Match: return "match";
    case EditKind::Substitution: return "substitution";
    case EditKind::Deletion: return "deletion";
    case EditKind::Insertion: return "insertion";
  }
  return "?";
}

Alignment levenshtein(std::u32string_view ref, std::u32string_view hyp) {
  const std::size_t n = ref.size(), m = hyp.size(), w = m + 1;
  std::vector<std::size_t> d((n + 1) * w);
  for (std::size_t j = 0; j <= m; ++j) d[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    d[i * w] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = d[(i - 1) * w + j - 1] + (ref[i - 1] != hyp[j - 1]);
      d[i * w + j] = std::min({diag, d[(i - 1) * w + j] + 1, d[i * w + j - 1] + 1});
    }
  }
  Alignment a;
  a.distance = d[n * w + m];
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::size_t here = d[i * w + j];
    if (i > 0 && j > 0 && here == d[(i - 1) * w + j - 1] + (ref[i - 1] != hyp[j - 1])) {
      const bool same = ref[i - 1] == hyp[j - 1];
      a.script.push_back({same ? EditKind::Match : EditKind::Substitution, ref[i - 1], hyp[j - 1]});
      --i;
      --j;
    } else if (i > 0 && here == d[(i - 1) * w + j] + 1) {
      a.script.push_back({EditKind::Deletion, ref[i - 1], 0});
      --i;
    } else {
      a.script.push_back({EditKind::Insertion, 0, hyp[j - 1]});
      --j;
    }
  }
  std::reverse(a.script.begin(), a.script.end());
  return a;
}

std::size_t edit_distance(std::u32string_view ref, std::u32string_view hyp) {
  std::vector<std::size_t> prev(hyp.size() + 1), cur(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      cur[j] = std::min({prev[j - 1] + (ref[i - 1] != hyp[j - 1]), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

std::u32string apply_to_hypothesis(std::u32string_view hyp, std::span<const EditOp> script) {
  std::u32string out;
  std::size_t pos = 0;
  auto take = [&](char32_t expected) {
    if (pos >= hyp.size() || hyp[pos] != expected) {
      throw Error(ErrorCode::InvalidArgument, "edit script does not fit the hypothesis", pos);
    }
    ++pos;
  };
  for (const EditOp& op : script) {
    switch (op.kind) {
      case EditKind::Match:
      case EditKind::Substitution:
        take(op.hypothesis);
        out.push_back(op.reference);
        break;
      case EditKind::Deletion:
        out.push_back(op.reference);
        break;
      case EditKind::Insertion:
        take(op.hypothesis);
        break;
    }
  }
  if (pos != hyp.size()) throw Error(ErrorCode::InvalidArgument, "edit script leaves characters over", pos);
  return out;
}

std::string ErrorRow::label() const {
  auto q = [](char32_t c) { return "'" + utf8::encode(c) + "'"; };
  switch (kind) {
    case EditKind::Insertion: return "Insertion of " + q(to);
    case EditKind::Deletion: return "Deletion of " + q(from);
    case EditKind::Substitution: return "Substitution " + q(from) + " -> " + q(to);
    case EditKind::Match: break;
  }
  return "Match " + q(from);
}

std::u32string collapse_whitespace(std::u32string_view s) {
  auto is_ws = [](char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r'; };
  std::u32string out;
  bool pending = false;
  for (char32_t c : s) {
    if (is_ws(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(U' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

void CerAccumulator::add(std::u32string_view reference, std::u32string_view hypothesis) {
  std::u32string r(reference), h(hypothesis);
  if (collapse_ws_) {
    r = collapse_whitespace(r);
    h = collapse_whitespace(h);
  }
  const Alignment a = levenshtein(r, h);
  distance_ += static_cast<std::int64_t>(a.distance);
  gt_length_ += static_cast<std::int64_t>(r.size());
  for (const EditOp& op : a.script) {
    if (op.kind != EditKind::Match) ++counts_[{static_cast<int>(op.kind), op.reference, op.hypothesis}];
  }
}

double CerAccumulator::cer() const {
  if (gt_length_ == 0) return distance_ == 0 ? 0.0 : 1.0;
  return static_cast<double>(distance_) / static_cast<double>(gt_length_);
}

std::vector<ErrorRow> CerAccumulator::error_table(std::size_t top_k) const {
  std::vector<ErrorRow> rows;
  std::int64_t total = 0;
  for (const auto& [key, count] : counts_) {
    rows.push_back({static_cast<EditKind>(std::get<0>(key)), std::get<1>(key), std::get<2>(key), count, 0.0});
    total += count;
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ErrorRow& a, const ErrorRow& b) { return a.count > b.count; });
  if (rows.size() > top_k) rows.resize(top_k);
  for (auto& r : rows) r.percent = 100.0 * static_cast<double>(r.count) / static_cast<double>(total);
  return rows;
}

namespace {

// Scenario distortions for one repeat; line ids key the substreams.
std::vector<PreparedLine> distorted_copy(const PreparedSet& data, std::string_view scenario,
                                         const AugmentConfig& aug, std::uint64_t seed, int repeat,
                                         const TextureBank* bank) {
  const std::uint64_t master =
      derive_seed(seed, "eval." + std::string(scenario), static_cast<std::uint64_t>(repeat));
  std::vector<PreparedLine> out;
  out.reserve(data.lines.size());
  for (const PreparedLine& line : data.lines) {
    Rng rng(master, "line", line.id);
    out.push_back({augment_line(line.image, aug, bank, rng), line.labels, line.id});
  }
  return out;
}

}  // namespace

ScenarioResult evaluate(Model& model, const Charset& charset, const PreparedSet& data,
                        std::string_view scenario, int repeats, std::uint64_t seed,
                        const TextureBank* bank, const EvalOptions& options) {
  if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
  const AugmentConfig aug = scenario_preset(scenario);
  CerAccumulator acc(options.collapse_whitespace);
  for (int r = 0; r < repeats; ++r) {
    const auto lines = distorted_copy(data, scenario, aug, seed, r, bank);
    for (const auto& idx : width_sorted_batches(lines, options.batch_size)) {
      const Batch batch = assemble_batch(lines, idx, nullptr, nullptr, 0);
      const auto decoded = decode_batch(model, batch);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        acc.add(charset.decode(lines[idx[i]].labels), charset.decode(decoded[i]));
      }
    }
  }
  ScenarioResult res;
  res.scenario = std::string(scenario);
  res.repeats = repeats;
  res.lines = data.lines.size();
  res.skipped = data.skipped.size();
  res.total_edit_distance = acc.total_edit_distance();
  res.total_gt_length = acc.total_gt_length();
  res.cer = acc.cer();
  res.error_table = acc.error_table(options.top_k);
  return res;
}

Throughput benchmark(Model& model, const Charset& charset, const PreparedSet& data,
                     std::string_view scenario, int batch_size, int trials, std::uint64_t seed,
                     const TextureBank* bank) {
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  if (data.lines.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to benchmark");
  const auto lines = distorted_copy(data, scenario, scenario_preset(scenario), seed, 0, bank);
  const auto batches = width_sorted_batches(lines, batch_size);
  Throughput t;
  t.scenario = std::string(scenario);
  t.batch = batch_size;
  t.trials = trials;
  for (const auto& line : lines) t.symbols += static_cast<std::int64_t>(line.labels.size());
  std::size_t sink = 0;
  for (int k = 0; k < trials; ++k) {
    const auto start = std::chrono::steady_clock::now();
    for (const auto& idx : batches) {
      const Batch batch = assemble_batch(lines, idx, nullptr, nullptr, 0);
      for (const auto& labels : decode_batch(model, batch)) sink += charset.decode(labels).size();
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    t.trial_seconds.push_back(elapsed.count());
  }
  (void)sink;
  std::vector<double> per_page;
  for (double s : t.trial_seconds) per_page.push_back(s / static_cast<double>(t.symbols) * kSymbolsPerPage);
  double mean = 0.0;
  for (double v : per_page) mean += v;
  mean /= static_cast<double>(per_page.size());
  double var = 0.0;
  for (double v : per_page) var += (v - mean) * (v - mean);
  t.sec_per_page_mean = mean;
  t.sec_per_page_std = per_page.size() > 1 ? std::sqrt(var / static_cast<double>(per_page.size() - 1)) : 0.0;
  return t;
}

std::string benchmark_csv(std::span<const Throughput> rows) {
  std::ostringstream os;
  os << "scenario,batch,trials,sec_per_page_mean,sec_per_page_std\n";
  char buf[64];
  for (const auto& r : rows) {
    os << r.scenario << ',' << r.batch << ',' << r.trials << ',';
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.sec_per_page_mean, r.sec_per_page_std);
    os << buf << '\n';
  }
  return os.str();
}

std::string EvalReport::to_json() const {
  ordered_json j;
  j["model"] = model;
  j["scenarios"] = ordered_json::array();
  for (const auto& s : scenarios) {
    ordered_json js;
    js["scenario"] = s.scenario;
    js["repeats"] = s.repeats;
    js["lines"] = s.lines;
    js["skipped"] = s.skipped;
    js["total_edit_distance"] = s.total_edit_distance;
    js["total_gt_length"] = s.total_gt_length;
    js["cer"] = s.cer;
    js["error_table"] = ordered_json::array();
    for (const auto& r : s.error_table) {
      ordered_json jr;
      jr["kind"] = to_string(r.kind);
      jr["from"] = r.kind == EditKind::Insertion ? "" : utf8::encode(r.from);
      jr["to"] = r.kind == EditKind::Deletion ? "" : utf8::encode(r.to);
      jr["count"] = r.count;
      jr["percent"] = r.percent;
      jr["label"] = r.label();
      js["error_table"].push_back(jr);
    }
    j["scenarios"].push_back(js);
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %8s %7s %8s %10s %10s %8s\n", "scenario", "repeats", "lines",
                "skipped", "errors", "gt_chars", "CER");
  os << "model: " << model << "\n" << buf;
  for (const auto& s : scenarios) {
    std::snprintf(buf, sizeof buf, "%-10s %8d %7zu %8zu %10lld %10lld %7.2f%%\n", s.scenario.c_str(),
                  s.repeats, s.lines, s.skipped, static_cast<long long>(s.total_edit_distance),
                  static_cast<long long>(s.total_gt_length), 100.0 * s.cer);
    os << buf;
  }
  for (const auto& s : scenarios) {
    os << "\ntop errors, " << s.scenario << "\n";
    if (s.error_table.empty()) os << "  (none)\n";
    for (const auto& r : s.error_table) {
      std::snprintf(buf, sizeof buf, "  %-32s %7.2f%%  (%lld)\n", r.label().c_str(), r.percent,
                    static_cast<long long>(r.count));
      os << buf;
    }
  }
  return os.str();
}

}  // namespace lineocr
