// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "gradcheck.hpp"
#include "lineocr/augment.hpp"
#include "lineocr/ctc.hpp"
#include "lineocr/eval.hpp"
#include "lineocr/linepipe.hpp"
#include "lineocr/models.hpp"
#include "lineocr/toy_assets.hpp"
#include "lineocr/utf8.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace lineocr;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- 1 -------------------------------------------------------------------

Outcome gradients() {
  const auto t0 = Clock::now();
  const auto suites = testkit::run_gradient_suites(50, 20261015);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = secs < 120.0;
  double worst = 0.0;
  int min_cases = 1 << 30;
  std::string failing;
  for (const auto& s : suites) {
    worst = std::max(worst, s.worst);
    min_cases = std::min(min_cases, s.cases);
    if (s.failures > 0 || s.cases < 50) {
      o.pass = false;
      failing += " " + s.name + "(" + s.first_failure + ")";
    }
  }
  o.detail = std::to_string(suites.size()) + " suites, >= " + std::to_string(min_cases) +
             " cases each, worst rel err " + fmt("%.2e", worst) + " (tol 1e-4), " + fmt("%.1f", secs) +
             " s (limit 120 s)" + (failing.empty() ? "" : ", failing:" + failing);
  return o;
}

// ---- 2 -------------------------------------------------------------------

Outcome ctc_oracles() {
  const auto loss = testkit::ctc_oracle_suite(1000, 11);
  const auto greedy = testkit::greedy_oracle_suite(10000, 12);
  Outcome o;
  o.pass = loss.cases >= 1000 && loss.mismatches == 0 && loss.worst_abs_error <= 1e-10 &&
           greedy.cases >= 10000 && greedy.mismatches == 0;
  o.detail = "loss: " + std::to_string(loss.cases) + " instances, worst |exp(-loss) - brute| " +
             fmt("%.2e", loss.worst_abs_error) + " (tol 1e-10); greedy: " + std::to_string(greedy.cases) +
             " paths, " + std::to_string(greedy.mismatches) + " mismatches";
  if (!loss.first_mismatch.empty()) o.detail += "; " + loss.first_mismatch;
  if (!greedy.first_mismatch.empty()) o.detail += "; " + greedy.first_mismatch;
  return o;
}

// ---- 3 -------------------------------------------------------------------

struct Row {
  std::string prefix;
  std::vector<int> dims;
};

std::vector<Row> expected_rows(ModelKind kind, int w, int k) {
  if (kind == ModelKind::Fcn) {
    return {{"Conv2d (7x7,64; stride: 2x2)", {16, w / 2, 64}},
            {"Max pooling (2x2; stride: 2x2)", {8, w / 4, 64}},
            {"Conv2d (3x3,64; stride: 1x1)", {8, w / 4, 64}},
            {"Conv2d (3x3,64; stride: 1x1)", {8, w / 4, 64}},
            {"Conv2d (3x3,128; stride: 2x1)", {4, w / 4, 128}},
            {"Conv2d (3x3,128; stride: 1x1)", {4, w / 4, 128}},
            {"Conv2d (3x3,256; stride: 2x1)", {2, w / 4, 256}},
            {"Conv2d (3x3,256; stride: 1x1)", {2, w / 4, 256}},
            {"Conv2d (3x3,512; stride: 2x1)", {1, w / 4, 512}},
            {"Conv2d (3x3,512; stride: 1x1)", {1, w / 4, 512}},
            {"Conv2d (3x3,512; stride: 1x1)", {1, w / 4, 512}},
            {"Map to sequence", {w / 4, 512}},
            {"Linear", {w / 4, k}},
            {"CTC output", {w / 4}}};
  }
  const bool peep = kind == ModelKind::HybridPeephole;
  const int t = peep ? w / 2 : w / 4;
  return {{"Conv2d (3x3,64; stride: 1x1)", {32, w, 64}},
          {"Max pooling (2x2; stride: 2x2)", {16, w / 2, 64}},
          {"Conv2d (3x3,128; stride: 1x1)", {16, w / 2, 128}},
          {peep ? "Max pooling (2x2; stride: 2x1)" : "Max pooling (2x2; stride: 2x2)", {8, t, 128}},
          {"Map to sequence", {t, 1024}},
          {"Dropout (50%)", {}},
          {"Bidirectional RNN (units: 2x256)", {t, 512}},
          {"Dropout (50%)", {}},
          {"Linear", {t, k}},
          {"CTC output", {t}}};
}

Outcome shapes() {
  Outcome o;
  o.pass = true;
  const int k = 12;
  int rows = 0;
  for (auto kind : {ModelKind::Hybrid, ModelKind::Fcn, ModelKind::HybridPeephole}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.num_classes = k;
    Model model(spec, 1);
    for (int w : {64, 128, 256}) {
      const auto got = model.trace_shapes(w);
      const auto want = expected_rows(kind, w, k);
      bool ok = got.size() == want.size();
      for (std::size_t i = 0; ok && i < want.size(); ++i) {
        ok = got[i].operation.rfind(want[i].prefix, 0) == 0 && got[i].dims == want[i].dims;
        if (!ok) o.detail += to_string(kind) + " W=" + std::to_string(w) + " row '" + got[i].operation + "'; ";
      }
      if (got.size() != want.size()) o.detail += to_string(kind) + " row count; ";
      o.pass = o.pass && ok;
      rows += static_cast<int>(want.size());
      // the forward pass must agree with the trace
      nn::Tensor<float> x({1, 1, 32, w});
      const std::vector<int> widths{w};
      const auto lp = model.forward(x, widths, nn::Mode::Infer);
      if (lp.dim(0) != want.back().dims[0]) {
        o.pass = false;
        o.detail += to_string(kind) + " forward T; ";
      }
    }
  }
  o.detail += std::to_string(rows) + " rows over 3 architectures x W in {64,128,256}";
  return o;
}

// ---- 4 -------------------------------------------------------------------

Outcome overfit() {
  const auto t0 = Clock::now();
  const Charset cs = toy::charset();
  const GlyphAtlas atlas = toy::stroke_atlas(toy::FontStyle::Plain);
  const std::vector<std::string> words = {"the red hat", "tide", "salted", "toast",
                                          "dish", "lean old", "shore", "this is"};
  std::vector<TextLineSample> samples;
  for (const auto& w : words) samples.push_back(render_line(utf8::decode(w), atlas));

  Outcome o;
  o.pass = true;
  for (auto kind : {ModelKind::Hybrid, ModelKind::HybridPeephole, ModelKind::Fcn}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.num_classes = cs.num_classes();
    Model model(spec, 5);
    const PreparedSet set = prepare_samples(samples, cs, NormalizationPolicy{}, spec.width_downsampling());
    std::vector<std::size_t> idx(set.lines.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const Batch batch = assemble_batch(set.lines, idx, nullptr, nullptr, 0);
    nn::OptimizerConfig opt;
    opt.lr0 = default_learning_rate(kind);
    int reached = -1;
    double loss = 0.0;
    for (int t = 1; t <= 500; ++t) {
      train_step(model, batch, opt, t);
      if (t % 10 == 0) {
        loss = evaluate_loss(model, batch);
        if (loss < 0.1) {
          reached = t;
          break;
        }
      }
    }
    const bool ok = batch.size() == 8 && reached > 0;
    o.pass = o.pass && ok;
    o.detail += to_string(kind) + ": " +
                (ok ? "loss " + fmt("%.3f", loss) + " at iter " + std::to_string(reached)
                    : "loss " + fmt("%.3f", loss) + " after 500 iters") +
                "; ";
  }
  const double secs = seconds_since(t0);
  o.pass = o.pass && secs < 300.0;
  o.detail += fmt("%.1f", secs) + " s (limit 300 s)";
  return o;
}

// ---- CLI helpers ---------------------------------------------------------

struct Cli {
  std::string exe;
  fs::path log;

  void run(const std::string& args) const {
    const std::string cmd = "'" + exe + "' " + args + " >> '" + log.string() + "' 2>&1";
    {
      std::ofstream(log, std::ios::app) << "$ lineocr " << args << "\n";
    }
    const int rc = std::system(cmd.c_str());
    if (rc != 0) throw std::runtime_error("command failed (" + std::to_string(rc) + "): lineocr " + args);
  }
};

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// File name -> contents for every regular file below `dir`.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
  }
  return out;
}

std::string diff_names(const std::map<std::string, std::string>& a, const std::map<std::string, std::string>& b) {
  std::string out;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end() || it->second != v) out += k + " ";
  }
  for (const auto& [k, v] : b) {
    if (!a.count(k)) out += k + " ";
  }
  return out;
}

double scenario_cer(const fs::path& report, const std::string& scenario) {
  const json j = json::parse(read_file(report));
  for (const auto& s : j.at("scenarios")) {
    if (s.at("scenario") == scenario) return s.at("cer").get<double>();
  }
  throw std::runtime_error("scenario missing from " + report.string());
}

// ---- 5 -------------------------------------------------------------------

inline constexpr double kType1Limit = 0.02;
inline constexpr double kType3Limit = 0.10;

Outcome end_to_end(const Cli& cli, const fs::path& work, long long iters) {
  const auto t0 = Clock::now();
  fs::remove_all(work);
  fs::create_directories(work);
  cli.run("toy-assets --out " + q(work) + " --seed 1 --iters " + std::to_string(iters));
  const fs::path cfg = work / "config.json";
  cli.run("generate --config " + q(cfg));

  // identical setup without texture compositing (inversion kept)
  json noalpha = json::parse(read_file(cfg));
  noalpha["train"]["augment"] = json{{"preset", "type2"}, {"invert_prob", 0.5}};
  std::ofstream(work / "config_noalpha.json") << noalpha.dump(2) << "\n";

  cli.run("train --quiet --config " + q(cfg) + " --out " + q(work / "runs/alpha"));
  cli.run("train --quiet --config " + q(work / "config_noalpha.json") + " --out " + q(work / "runs/noalpha"));
  cli.run("eval --config " + q(cfg) + " --checkpoint " + q(work / "runs/alpha/final.bin") + " --out " +
          q(work / "eval/alpha"));
  cli.run("eval --config " + q(cfg) + " --scenario type3 --checkpoint " + q(work / "runs/noalpha/final.bin") +
          " --out " + q(work / "eval/noalpha"));

  const double t1 = scenario_cer(work / "eval/alpha/report.json", "type1");
  const double t3 = scenario_cer(work / "eval/alpha/report.json", "type3");
  const double na3 = scenario_cer(work / "eval/noalpha/report.json", "type3");
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = t1 <= kType1Limit && t3 <= kType3Limit && na3 > t3 && secs <= 7200.0;
  o.detail = std::to_string(iters) + " iters; type1 CER " + fmt("%.4f", t1) + " (<= 0.02), type3 CER " +
             fmt("%.4f", t3) + " (<= 0.10, 30 repeats), no-alpha type3 CER " + fmt("%.4f", na3) +
             " (must exceed), " + fmt("%.0f", secs) + " s (limit 7200 s)";
  return o;
}

// ---- 6 -------------------------------------------------------------------

Outcome levenshtein_suites() {
  const auto ex = testkit::levenshtein_exhaustive_suite(U"abc", 6);
  const auto ax = testkit::levenshtein_axiom_suite(10000, 21);
  Outcome o;
  o.pass = ex.mismatches == 0 && ax.mismatches == 0 && ax.cases >= 10000;
  o.detail = "exhaustive: " + std::to_string(ex.cases) + " pairs, " + std::to_string(ex.mismatches) +
             " mismatches; axioms: " + std::to_string(ax.cases) + " triples, " +
             std::to_string(ax.mismatches) + " violations";
  if (!ex.first_mismatch.empty()) o.detail += "; " + ex.first_mismatch;
  if (!ax.first_mismatch.empty()) o.detail += "; " + ax.first_mismatch;
  return o;
}

// ---- 7 -------------------------------------------------------------------

Outcome determinism(const Cli& cli, const fs::path& work) {
  fs::remove_all(work);
  std::map<std::string, std::string> snaps[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = work / ("run" + std::to_string(run));
    cli.run("toy-assets --out " + q(dir) + " --seed 3 --iters 20");
    const fs::path cfg = dir / "config.json";
    cli.run("generate --config " + q(cfg) + " --seed 9");
    cli.run("train --quiet --config " + q(cfg) + " --seed 9 --batch 8 --out " + q(dir / "runs/train"));
    cli.run("eval --config " + q(cfg) + " --seed 9 --scenario type3 --repeats 2 --checkpoint " +
            q(dir / "runs/train/final.bin") + " --out " + q(dir / "runs/eval"));
    auto s = snapshot(dir / "data");
    for (auto& [k, v] : snapshot(dir / "runs/train/checkpoints")) s["ckpt/" + k] = std::move(v);
    s["final.bin"] = read_file(dir / "runs/train/final.bin");
    s["report.json"] = read_file(dir / "runs/eval/report.json");
    s["report.txt"] = read_file(dir / "runs/eval/report.txt");
    snaps[run] = std::move(s);
  }
  Outcome o;
  const std::string diff = diff_names(snaps[0], snaps[1]);
  std::size_t bytes = 0;
  for (const auto& [k, v] : snaps[0]) bytes += v.size();
  o.pass = diff.empty() && snaps[0].size() > 4;
  o.detail = std::to_string(snaps[0].size()) + " files (" + std::to_string(bytes) +
             " bytes) from generate, train and eval compared" + (diff.empty() ? ", all identical" : ", differ: " + diff);
  return o;
}

// ---- 8 -------------------------------------------------------------------

Outcome augmentation() {
  Rng rng(77);
  const TextureBank bank(toy::textures("train", 4, 5));
  const auto type2 = scenario_preset("type2");
  const auto type3 = scenario_preset("type3");
  int failures = 0;
  std::string first;
  auto fail = [&](const std::string& what) {
    if (failures++ == 0) first = what;
  };
  for (int n = 0; n < 100; ++n) {
    const int w = rng.uniform_int(8, 160);
    const int h = rng.uniform_int(16, 48);
    GrayImage img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    const std::string tag = "image " + std::to_string(n);

    Rng r1(n);
    if (augment_line(img, AugmentConfig{}, &bank, r1) != img) fail(tag + ": probability-0 pipeline");
    Rng r2(n);
    if (elastic_distort(img, 0.0, rng.uniform(1.0, 6.0), r2) != img) fail(tag + ": alpha 0 elastic");
    if (invert(invert(img)) != img) fail(tag + ": double inversion");

    // full opacity: the ink layer replaces the background
    GrayImage tex(w, h);
    for (auto& p : tex.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      if (composite_pixel(1.0, img.pixels[i], tex.pixels[i]) != img.pixels[i]) {
        fail(tag + ": alpha 1 compositing");
        break;
      }
    }
    const GrayImage black(w, h, 0);
    const int ink = rng.uniform_int(0, 255);
    if (alpha_composite(black, tex, ink) != GrayImage(w, h, static_cast<std::uint8_t>(ink))) {
      fail(tag + ": opaque mask compositing");
    }

    for (const auto* cfg : {&type2, &type3}) {
      Rng r3(1000 + n);
      const GrayImage out = augment_line(img, *cfg, &bank, r3);
      if (out.width != w || out.height != h) fail(tag + ": dimensions changed");
    }
  }
  Outcome o;
  o.pass = failures == 0;
  o.detail = "100 random images, " + std::to_string(failures) + " failures" + (first.empty() ? "" : " (" + first + ")");
  return o;
}

// ---- 9 -------------------------------------------------------------------

Outcome throughput(const Cli& cli, const fs::path& work) {
  fs::remove_all(work);
  cli.run("toy-assets --out " + q(work) + " --seed 1");
  const fs::path cfg = work / "config.json";
  cli.run("generate --config " + q(cfg) + " --only test");
  cli.run("bench --config " + q(cfg) + " --model hybrid --model fcn --batch 4 --trials 10 --out " + q(work / "bench"));
  auto row = [&](const std::string& model) {
    std::istringstream in(read_file(work / "bench" / ("bench_" + model + ".csv")));
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    if (header != "scenario,batch,trials,sec_per_page_mean,sec_per_page_std") {
      throw std::runtime_error("unexpected bench header: " + header);
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) f.push_back(c);
    if (f.size() != 5 || f[1] != "4" || f[2] != "10") throw std::runtime_error("unexpected bench row: " + line);
    return std::pair{std::stod(f[3]), std::stod(f[4])};
  };
  const auto [hm, hs] = row("hybrid");
  const auto [fm, fs_] = row("fcn");
  Outcome o;
  // "measurably": the means must be separated by more than both spreads
  o.pass = fm < hm && (hm - fm) > std::max(hs, fs_);
  o.detail = "s/page (1500 symbols, batch 4, 10 trials): hybrid " + fmt("%.4f", hm) + " +- " + fmt("%.4f", hs) +
             ", fcn " + fmt("%.4f", fm) + " +- " + fmt("%.4f", fs_) + ", speedup " + fmt("%.2f", hm / fm) + "x";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lineocr acceptance criteria"};
  std::vector<int> criteria;
  std::string cli_exe;
  std::string work = "acceptance_work";
  long long e2e_iters = 4000;
  app.add_option("--criteria", criteria, "criteria to run (default: all)")->check(CLI::Range(1, 9));
  app.add_option("--cli", cli_exe, "path to the lineocr executable");
  app.add_option("--work", work, "scratch directory");
  app.add_option("--e2e-iters", e2e_iters, "training iterations for the end-to-end run");
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  const fs::path root = fs::absolute(work);
  fs::create_directories(root);
  const Cli cli{cli_exe, root / "commands.log"};
  const std::map<int, std::pair<std::string, std::function<Outcome()>>> table = {
      {1, {"gradient suite", gradients}},
      {2, {"CTC oracle", ctc_oracles}},
      {3, {"shape law", shapes}},
      {4, {"overfit one batch", overfit}},
      {5, {"end-to-end toy reproduction", [&] { return end_to_end(cli, root / "e2e", e2e_iters); }}},
      {6, {"Levenshtein suite", levenshtein_suites}},
      {7, {"determinism", [&] { return determinism(cli, root / "determinism"); }}},
      {8, {"augmentation identities", augmentation}},
      {9, {"throughput report", [&] { return throughput(cli, root / "bench"); }}},
  };
  const std::set<int> needs_cli = {5, 7, 9};
  bool all = true;
  for (int c : criteria) {
    const auto& [name, fn] = table.at(c);
    Outcome o;
    if (needs_cli.count(c) && cli_exe.empty()) {
      o.detail = "--cli not given";
    } else {
      try {
        o = fn();
      } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("error: ") + e.what();
      }
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c << " " << name << ": " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
