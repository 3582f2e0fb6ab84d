// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "lineocr/config.hpp"
#include "lineocr/eval.hpp"
#include "lineocr/recognize.hpp"
#include "lineocr/synthgen.hpp"
#include "lineocr/toy_assets.hpp"
#include "lineocr/train.hpp"

using namespace lineocr;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool error_json = false;
};

struct Overrides {
  std::string model;
  std::string normalize;
  std::optional<std::int64_t> iters;
  std::optional<int> batch;
  std::string scenario;
  std::optional<int> repeats;
  std::string out;
};

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

void report_skipped(const PreparedSet& set, const std::string& what) {
  if (set.skipped.empty()) return;
  warn(std::to_string(set.skipped.size()) + " " + what + " line(s) skipped; first: id " +
       std::to_string(set.skipped.front().id) + ": " + set.skipped.front().reason);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

RunConfig load_config(const Common& c, const Overrides& o) {
  if (c.config.empty()) throw Error(ErrorCode::InvalidConfig, "--config is required");
  RunConfig cfg = RunConfig::load(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!o.model.empty()) cfg.set_model_kind(parse_model_kind(o.model));
  if (o.normalize == "on") cfg.normalization.enabled = true;
  if (o.normalize == "off") cfg.normalization.enabled = false;
  return cfg;
}

Checkpoint open_checkpoint(const std::string& path, const Charset& charset) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.charset_fingerprint != charset.fingerprint()) {
    throw Error(ErrorCode::ChecksumMismatch, "checkpoint was trained with a different charset");
  }
  return ck;
}

int cmd_toy_assets(const std::string& out, std::uint64_t seed, std::int64_t iters) {
  toy::write_assets(out, seed);
  if (iters > 0) write_text(fs::path(out) / "config.json", toy::run_config(seed, iters));
  std::cout << "toy assets written to " << out << "\n";
  return 0;
}

int cmd_generate(const Common& c, const std::string& only) {
  RunConfig cfg = load_config(c, {});
  cfg.validate_generate();
  const Charset charset = Charset::load(cfg.charset);
  std::vector<GlyphAtlas> atlases;
  for (const auto& a : cfg.atlases) atlases.push_back(load_glyph_atlas(a));
  for (const auto& d : cfg.datasets) {
    if (!only.empty() && d.name != only) continue;
    std::vector<Corpus> corpora;
    for (const auto& p : d.corpora) corpora.push_back(Corpus::load(p, charset, cfg.max_len));
    if (fs::exists(d.out / "manifest.jsonl")) fs::remove_all(d.out);
    CharCounter counter(charset, d.min_count);
    DatasetWriter sink(d.out);
    GenerationOptions opts;
    opts.max_lines = d.max_lines;
    const auto report = generate_dataset(corpora, atlases, counter, sink,
                                         derive_seed(cfg.seed, "dataset." + d.name), opts);
    std::cout << d.name << ": " << report.lines << " lines, " << report.characters
              << " characters, min count " << report.min_count << ", max count "
              << report.max_count << " (" << to_string(report.termination) << ")\n";
    if (report.termination != Termination::Coverage) {
      warn("dataset '" + d.name + "' stopped before every symbol reached " + std::to_string(d.min_count));
    }
  }
  return 0;
}

int cmd_train(const Common& c, const Overrides& o, const std::string& resume,
              std::int64_t stop_after, bool quiet) {
  RunConfig cfg = load_config(c, o);
  if (o.iters) cfg.train.iterations = *o.iters;
  if (o.batch) cfg.train.batch_size = *o.batch;
  if (!o.scenario.empty()) cfg.train.augment = scenario_preset(o.scenario);
  if (!o.out.empty()) cfg.train.out_dir = o.out;
  cfg.validate_train();
  const Charset charset = Charset::load(cfg.charset);
  const int ds = cfg.model.width_downsampling();
  const PreparedSet train = prepare_dataset(cfg.train.train_set, charset, cfg.normalization, ds);
  report_skipped(train, "training");
  std::optional<PreparedSet> val;
  if (!cfg.train.val_set.empty()) {
    val = prepare_dataset(cfg.train.val_set, charset, cfg.normalization, ds, cfg.train.val_max_lines);
    report_skipped(*val, "validation");
  }
  TextureBank bank;
  if (!cfg.textures_train.empty() && fs::exists(cfg.textures_train)) bank = TextureBank::load(cfg.textures_train);

  std::unique_ptr<Model> owned;
  std::int64_t start = 0;
  fs::path resume_path = resume;
  if (resume == "auto") resume_path = fs::exists(cfg.train.out_dir / "latest.bin") ? cfg.train.out_dir / "latest.bin" : "";
  if (!resume_path.empty()) {
    Checkpoint ck = load_checkpoint(resume_path, &cfg.model);
    if (ck.charset_fingerprint != charset.fingerprint()) {
      throw Error(ErrorCode::ChecksumMismatch, "checkpoint was trained with a different charset");
    }
    start = ck.iteration;
    owned = std::move(ck.model);
    std::cerr << "resuming from " << resume_path.string() << " at iteration " << start << "\n";
  } else {
    owned = std::make_unique<Model>(cfg.model, cfg.seed);
  }
  fs::create_directories(cfg.train.out_dir);
  write_text(cfg.train.out_dir / "run_config.json", cfg.to_json());

  TrainRunOptions opts;
  opts.iterations = cfg.train.iterations;
  opts.batch_size = cfg.train.batch_size;
  opts.checkpoint_every = cfg.train.checkpoint_every;
  opts.validate_every = cfg.train.validate_every;
  opts.augment = cfg.train.augment;
  opts.train_textures = bank.empty() ? nullptr : &bank;
  opts.val_scenario = cfg.train.val_scenario;
  opts.val_repeats = cfg.train.val_repeats;
  opts.optimizer = cfg.optimizer;
  opts.seed = cfg.seed;
  opts.out_dir = cfg.train.out_dir;
  opts.stop_after = stop_after;
  const auto summary = train_model(*owned, start, charset, train, val ? &*val : nullptr, opts,
                                   quiet ? ProgressFn{} : ProgressFn([](const std::string& s) {
                                     std::cerr << s << "\n";
                                   }));
  std::cout << "trained " << to_string(cfg.model.kind) << " iterations " << summary.start_iteration + 1
            << ".." << summary.last_iteration << ", final mean loss " << summary.final_loss;
  if (summary.last_val_cer >= 0.0) std::cout << ", validation CER " << summary.last_val_cer;
  std::cout << ", " << summary.seconds << " s\n";
  return 0;
}

int cmd_recognize(const Common& c, const Overrides& o, const std::string& checkpoint,
                  const std::string& charset_path, const std::string& line, const std::string& dataset) {
  NormalizationPolicy policy;
  Charset charset = Charset::build_utf8("a");
  if (!c.config.empty()) {
    const RunConfig cfg = load_config(c, o);
    policy = cfg.normalization;
    charset = Charset::load(cfg.charset);
  } else if (!charset_path.empty()) {
    charset = Charset::load(charset_path);
    if (o.normalize == "off") policy.enabled = false;
  } else {
    throw Error(ErrorCode::InvalidConfig, "--config or --charset is required");
  }
  Checkpoint ck = open_checkpoint(checkpoint, charset);
  Recognizer rec(*ck.model, ck.charset_fingerprint, charset, policy);
  if (!line.empty()) {
    std::cout << rec.recognize(read_pgm(line)).text << "\n";
    return 0;
  }
  if (dataset.empty()) throw Error(ErrorCode::InvalidConfig, "--line or --dataset is required");
  for (const auto& e : load_dataset(dataset)) {
    std::cout << e.id << "\t" << rec.recognize(e.sample).text << "\n";
  }
  return 0;
}

int cmd_eval(const Common& c, const Overrides& o, const std::string& checkpoint) {
  RunConfig cfg = load_config(c, o);
  if (!o.scenario.empty()) cfg.eval.scenarios = {o.scenario};
  if (o.repeats) cfg.eval.repeats = *o.repeats;
  if (o.batch) cfg.eval.batch_size = *o.batch;
  if (!o.out.empty()) cfg.eval.out_dir = o.out;
  cfg.validate_eval();
  const Charset charset = Charset::load(cfg.charset);
  Checkpoint ck = open_checkpoint(checkpoint, charset);
  const PreparedSet test = prepare_dataset(cfg.eval.test_set, charset, cfg.normalization,
                                           ck.spec.width_downsampling());
  report_skipped(test, "test");
  TextureBank bank;
  if (!cfg.textures_test.empty() && fs::exists(cfg.textures_test)) bank = TextureBank::load(cfg.textures_test);
  if (!cfg.textures_train.empty() && fs::exists(cfg.textures_train) && !bank.empty() &&
      !disjoint(bank, TextureBank::load(cfg.textures_train))) {
    throw Error(ErrorCode::InvalidConfig, "train and test texture pools overlap");
  }
  EvalOptions eo;
  eo.batch_size = cfg.eval.batch_size;
  eo.collapse_whitespace = cfg.eval.collapse_whitespace;
  EvalReport report;
  report.model = to_string(ck.spec.kind) + " @ " + std::to_string(ck.iteration);
  for (const auto& s : cfg.eval.scenarios) {
    const int repeats = s == "type1" ? 1 : cfg.eval.repeats;
    report.scenarios.push_back(evaluate(*ck.model, charset, test, s, repeats,
                                        derive_seed(cfg.seed, "evaluation"),
                                        bank.empty() ? nullptr : &bank, eo));
  }
  write_text(cfg.eval.out_dir / "report.json", report.to_json());
  write_text(cfg.eval.out_dir / "report.txt", report.to_text());
  std::cout << report.to_text();
  return 0;
}

int cmd_bench(const Common& c, const Overrides& o, const std::vector<std::string>& checkpoints,
              std::vector<std::string> models, std::optional<int> trials) {
  RunConfig cfg = load_config(c, o);
  if (!o.scenario.empty()) cfg.bench.scenarios = {o.scenario};
  if (o.batch) cfg.bench.batch_size = *o.batch;
  if (trials) cfg.bench.trials = *trials;
  if (!o.out.empty()) cfg.bench.out_dir = o.out;
  cfg.validate_bench();
  const Charset charset = Charset::load(cfg.charset);
  cfg.model.num_classes = charset.num_classes();
  TextureBank bank;
  if (!cfg.textures_test.empty() && fs::exists(cfg.textures_test)) bank = TextureBank::load(cfg.textures_test);

  std::vector<std::pair<std::string, std::unique_ptr<Model>>> targets;
  for (const auto& p : checkpoints) {
    Checkpoint ck = open_checkpoint(p, charset);
    targets.emplace_back(to_string(ck.spec.kind), std::move(ck.model));
  }
  if (targets.empty() && models.empty()) models = {to_string(cfg.model.kind)};
  for (const auto& m : models) {
    ModelSpec spec = cfg.model;
    spec.kind = parse_model_kind(m);
    // Timing does not depend on the weights; a fresh model stands in.
    targets.emplace_back(to_string(spec.kind), std::make_unique<Model>(spec, cfg.seed));
  }
  for (auto& [name, model] : targets) {
    const PreparedSet data = prepare_dataset(cfg.bench.dataset, charset, cfg.normalization,
                                             model->spec().width_downsampling(), cfg.bench.max_lines);
    std::vector<Throughput> rows;
    for (const auto& s : cfg.bench.scenarios) {
      rows.push_back(benchmark(*model, charset, data, s, cfg.bench.batch_size, cfg.bench.trials,
                               derive_seed(cfg.seed, "bench"), bank.empty() ? nullptr : &bank));
    }
    const std::string csv = benchmark_csv(rows);
    write_text(cfg.bench.out_dir / ("bench_" + name + ".csv"), csv);
    std::cout << "# model: " << name << "\n" << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lineocr: segmentation-free text line recognition"};
  app.require_subcommand(1);
  Common common;
  Overrides ov;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "run configuration (JSON)");
    sub->add_option("--seed", common.seed, "master seed");
    sub->add_flag("--error-json", common.error_json, "print errors as JSON on stderr");
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", ov.model, "hybrid | fcn | hybrid-peephole")
        ->check(CLI::IsMember({"hybrid", "fcn", "hybrid-peephole", "hybrid_peephole"}));
  };
  auto add_normalize = [&](CLI::App* sub) {
    sub->add_option("--normalize", ov.normalize, "geometric normalization on|off")->check(CLI::IsMember({"on", "off"}));
  };
  auto scenario_check = CLI::IsMember({"type1", "type2", "type3"});

  std::string toy_out = "toy";
  std::uint64_t toy_seed = 1;
  std::int64_t toy_iters = 0;
  auto* toy_cmd = app.add_subcommand("toy-assets", "write the built-in toy charset, fonts, textures and corpora");
  toy_cmd->add_option("--out", toy_out, "output directory");
  toy_cmd->add_option("--seed", toy_seed, "asset seed");
  toy_cmd->add_option("--iters", toy_iters, "training iterations written into config.json");
  toy_cmd->add_flag("--error-json", common.error_json);

  std::string only;
  auto* gen = app.add_subcommand("generate", "render the configured datasets");
  add_common(gen);
  gen->add_option("--only", only, "generate just this dataset");

  std::string resume;
  std::int64_t stop_after = 0;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train a model");
  add_common(train);
  add_model(train);
  add_normalize(train);
  train->add_option("--iters", ov.iters, "iteration budget");
  train->add_option("--batch", ov.batch, "batch size");
  train->add_option("--scenario", ov.scenario, "training augmentation preset")->check(scenario_check);
  train->add_option("--out", ov.out, "output directory");
  train->add_option("--resume", resume, "checkpoint to resume from, or 'auto'");
  train->add_option("--stop-after", stop_after, "stop after this iteration");
  train->add_flag("--quiet", quiet, "no progress output");

  std::string checkpoint, charset_path, line, dataset;
  auto* rec = app.add_subcommand("recognize", "transcribe a line image or a dataset");
  add_common(rec);
  add_normalize(rec);
  rec->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  rec->add_option("--charset", charset_path, "charset file when no config is given");
  rec->add_option("--line", line, "8-bit PGM line image");
  rec->add_option("--dataset", dataset, "dataset directory with manifest.jsonl");

  auto* ev = app.add_subcommand("eval", "character error rates per scenario");
  add_common(ev);
  add_normalize(ev);
  ev->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  ev->add_option("--scenario", ov.scenario, "evaluate only this scenario")->check(scenario_check);
  ev->add_option("--repeats", ov.repeats, "distortion repeats for type2/type3");
  ev->add_option("--batch", ov.batch, "batch size");
  ev->add_option("--out", ov.out, "output directory");

  std::vector<std::string> bench_ckpts, bench_models;
  std::optional<int> trials;
  auto* bench = app.add_subcommand("bench", "seconds per 1500-symbol page");
  add_common(bench);
  add_normalize(bench);
  bench->add_option("--checkpoint", bench_ckpts, "checkpoints to time");
  bench->add_option("--model", bench_models, "untrained architectures to time")
      ->check(CLI::IsMember({"hybrid", "fcn", "hybrid-peephole", "hybrid_peephole"}));
  bench->add_option("--scenario", ov.scenario, "scenario")->check(scenario_check);
  bench->add_option("--batch", ov.batch, "batch size");
  bench->add_option("--trials", trials, "timed passes");
  bench->add_option("--out", ov.out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*toy_cmd) return cmd_toy_assets(toy_out, toy_seed, toy_iters);
    if (*gen) return cmd_generate(common, only);
    if (*train) return cmd_train(common, ov, resume, stop_after, quiet);
    if (*rec) return cmd_recognize(common, ov, checkpoint, charset_path, line, dataset);
    if (*ev) return cmd_eval(common, ov, checkpoint);
    if (*bench) return cmd_bench(common, ov, bench_ckpts, bench_models, trials);
  } catch (const Error& e) {
    if (common.error_json) {
      nlohmann::ordered_json j;
      j["error"] = std::string(to_string(e.code()));
      j["message"] = e.what();
      if (e.index()) j["index"] = *e.index();
      std::cerr << j.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return e.code() == ErrorCode::InvalidConfig ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
