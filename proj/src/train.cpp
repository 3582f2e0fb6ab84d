// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/train.hpp"

#include <chrono>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lineocr/eval.hpp"

namespace lineocr {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

// Keeps log lines up to `iteration` so a resumed run continues one clean log.
void truncate_log(const fs::path& path, std::int64_t iteration) {
  std::ifstream in(path);
  if (!in) return;
  std::string kept, line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      if (ordered_json::parse(line).at("iteration").get<std::int64_t>() <= iteration) kept += line + "\n";
    } catch (const ordered_json::exception&) {
      // a torn last line from an interrupted run
    }
  }
  in.close();
  std::ofstream(path, std::ios::trunc) << kept;
}

std::string ckpt_name(std::int64_t iteration) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "ckpt_%08lld.bin", static_cast<long long>(iteration));
  return buf;
}

void write_atomic(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  fs::rename(tmp, path);
}

}  // namespace

TrainSummary train_model(Model& model, std::int64_t start_iteration, const Charset& charset,
                         const PreparedSet& train, const PreparedSet* val,
                         const TrainRunOptions& options, const ProgressFn& progress) {
  options.optimizer.validate();
  if (model.spec().num_classes != charset.num_classes()) {
    throw Error(ErrorCode::ChecksumMismatch, "model output size does not match the charset");
  }
  fs::create_directories(options.out_dir / "checkpoints");
  const fs::path log_path = options.out_dir / "train_log.jsonl";
  const fs::path val_path = options.out_dir / "validation.jsonl";
  truncate_log(log_path, start_iteration);
  truncate_log(val_path, start_iteration);
  std::ofstream log(log_path, std::ios::app);
  std::ofstream val_log(val_path, std::ios::app);

  BucketBatcher batcher(train.lines, options.batch_size, derive_seed(options.seed, "batches"),
                        options.augment, options.train_textures);
  const std::string fingerprint = charset.fingerprint();
  const auto t0 = std::chrono::steady_clock::now();
  auto wall_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };

  TrainSummary summary;
  summary.start_iteration = start_iteration;
  summary.last_iteration = start_iteration;
  std::deque<double> recent;
  double recent_sum = 0.0;

  auto validate = [&](std::int64_t t) {
    if (!val || val->lines.empty()) return;
    EvalOptions eo;
    eo.batch_size = options.batch_size;
    const auto res = evaluate(model, charset, *val, options.val_scenario, options.val_repeats,
                              derive_seed(options.seed, "validation"), options.train_textures, eo);
    summary.last_val_cer = res.cer;
    ordered_json j;
    j["iteration"] = t;
    j["scenario"] = options.val_scenario;
    j["cer"] = res.cer;
    j["edit_distance"] = res.total_edit_distance;
    j["gt_length"] = res.total_gt_length;
    val_log << j.dump() << "\n" << std::flush;
    if (progress) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "iter %lld  val CER %.4f", static_cast<long long>(t), res.cer);
      progress(buf);
    }
  };

  const std::int64_t end = options.stop_after > 0 ? std::min(options.stop_after, options.iterations)
                                                  : options.iterations;
  for (std::int64_t t = start_iteration + 1; t <= end; ++t) {
    const Batch batch = batcher.batch(t);
    const TrainStepResult r = train_step(model, batch, options.optimizer, t);
    if (t == start_iteration + 1) summary.first_loss = r.loss;
    recent.push_back(r.loss);
    recent_sum += r.loss;
    if (recent.size() > 100) {
      recent_sum -= recent.front();
      recent.pop_front();
    }
    ordered_json j;
    j["iteration"] = t;
    j["loss"] = r.loss;
    j["lr"] = r.lr;
    j["grad_norm"] = r.grad_norm;
    j["wall_ms"] = std::llround(wall_ms());
    log << j.dump() << "\n";
    summary.last_iteration = t;

    if (t % options.checkpoint_every == 0 || t == end) {
      log.flush();
      const auto bytes = serialize_checkpoint(model, fingerprint, t);
      if (t % options.checkpoint_every == 0) write_atomic(options.out_dir / "checkpoints" / ckpt_name(t), bytes);
      write_atomic(options.out_dir / "latest.bin", bytes);
      if (t == options.iterations) write_atomic(options.out_dir / "final.bin", bytes);
    }
    if (progress && (t % 100 == 0 || t == end)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "iter %lld  loss %.4f  avg100 %.4f  lr %.6f  |g| %.3f  %.0fs",
                    static_cast<long long>(t), r.loss, recent_sum / static_cast<double>(recent.size()),
                    r.lr, r.grad_norm, wall_ms() / 1000.0);
      progress(buf);
    }
    if (t % options.validate_every == 0 || t == options.iterations) validate(t);
  }
  summary.final_loss = recent.empty() ? 0.0 : recent_sum / static_cast<double>(recent.size());
  summary.seconds = wall_ms() / 1000.0;
  return summary;
}

}  // namespace lineocr
