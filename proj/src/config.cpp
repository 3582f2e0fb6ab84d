// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lineocr/charset.hpp"
#include "lineocr/error.hpp"

namespace lineocr {

using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

void only_keys(const ordered_json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.contains(k)) bad("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void get(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

AugmentConfig augment_from(const ordered_json& j) {
  if (j.is_string()) return scenario_preset(j.get<std::string>());
  if (j.is_object() && j.contains("preset")) {
    ordered_json rest = j;
    AugmentConfig base = scenario_preset(rest["preset"].get<std::string>());
    rest.erase("preset");
    ordered_json merged = ordered_json::parse(base.to_json());
    for (const auto& [k, v] : rest.items()) merged[k] = v;
    return AugmentConfig::from_json(merged.dump());
  }
  return AugmentConfig::from_json(j.dump());
}

void require_file(const fs::path& p, const std::string& what) {
  if (p.empty() || !fs::exists(p)) bad(what + " not found: '" + p.string() + "'");
}

void require_dataset(const fs::path& p, const std::string& what) {
  require_file(p / "manifest.jsonl", what + " manifest");
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text, const fs::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  auto path = [&](const ordered_json& v) {
    fs::path p = v.get<std::string>();
    if (p.empty()) return p;
    return (p.is_absolute() ? p : base_dir / p).lexically_normal();
  };
  try {
    const auto j = ordered_json::parse(text);
    only_keys(j, {"seed", "charset", "atlases", "textures", "max_len", "datasets", "normalization",
                  "model", "optimizer", "train", "eval", "bench"},
              "run config");
    get(j, "seed", c.seed);
    if (j.contains("charset")) c.charset = path(j["charset"]);
    if (j.contains("atlases")) {
      for (const auto& a : j["atlases"]) c.atlases.push_back(path(a));
    }
    if (j.contains("textures")) {
      only_keys(j["textures"], {"train", "test"}, "textures");
      if (j["textures"].contains("train")) c.textures_train = path(j["textures"]["train"]);
      if (j["textures"].contains("test")) c.textures_test = path(j["textures"]["test"]);
    }
    get(j, "max_len", c.max_len);
    if (j.contains("datasets")) {
      for (const auto& d : j["datasets"]) {
        only_keys(d, {"name", "corpora", "min_count", "max_lines", "out"}, "dataset");
        DatasetSpec s;
        s.name = d.at("name").get<std::string>();
        for (const auto& p : d.at("corpora")) s.corpora.push_back(path(p));
        get(d, "min_count", s.min_count);
        get(d, "max_lines", s.max_lines);
        s.out = path(d.at("out"));
        c.datasets.push_back(std::move(s));
      }
    }
    if (j.contains("normalization")) c.normalization = NormalizationPolicy::from_json(j["normalization"].dump());
    if (j.contains("model")) {
      const auto& m = j["model"];
      only_keys(m, {"kind", "hidden_units", "dropout_rate", "input_height"}, "model");
      if (m.contains("kind")) c.model.kind = parse_model_kind(m["kind"].get<std::string>());
      get(m, "hidden_units", c.model.hidden_units);
      get(m, "dropout_rate", c.model.dropout_rate);
      get(m, "input_height", c.model.input_height);
    }
    c.optimizer.lr0 = default_learning_rate(c.model.kind);
    if (j.contains("optimizer")) {
      const auto& o = j["optimizer"];
      only_keys(o, {"lr0", "decay_factor", "decay_every", "beta1", "beta2", "epsilon", "clip_norm"},
                "optimizer");
      c.lr_explicit = o.contains("lr0");
      get(o, "lr0", c.optimizer.lr0);
      get(o, "decay_factor", c.optimizer.decay_factor);
      get(o, "decay_every", c.optimizer.decay_every);
      get(o, "beta1", c.optimizer.beta1);
      get(o, "beta2", c.optimizer.beta2);
      get(o, "epsilon", c.optimizer.epsilon);
      get(o, "clip_norm", c.optimizer.clip_norm);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      only_keys(t, {"train_set", "val_set", "iterations", "batch_size", "checkpoint_every",
                    "validate_every", "augment", "val_scenario", "val_repeats", "val_max_lines",
                    "out_dir"},
                "train");
      if (t.contains("train_set")) c.train.train_set = path(t["train_set"]);
      if (t.contains("val_set")) c.train.val_set = path(t["val_set"]);
      get(t, "iterations", c.train.iterations);
      get(t, "batch_size", c.train.batch_size);
      get(t, "checkpoint_every", c.train.checkpoint_every);
      get(t, "validate_every", c.train.validate_every);
      if (t.contains("augment")) c.train.augment = augment_from(t["augment"]);
      get(t, "val_scenario", c.train.val_scenario);
      get(t, "val_repeats", c.train.val_repeats);
      get(t, "val_max_lines", c.train.val_max_lines);
      if (t.contains("out_dir")) c.train.out_dir = path(t["out_dir"]);
    }
    if (!j.contains("train") || !j["train"].contains("out_dir")) c.train.out_dir = base_dir / c.train.out_dir;
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      only_keys(e, {"test_set", "scenarios", "repeats", "batch_size", "collapse_whitespace", "out_dir"}, "eval");
      if (e.contains("test_set")) c.eval.test_set = path(e["test_set"]);
      get(e, "scenarios", c.eval.scenarios);
      get(e, "repeats", c.eval.repeats);
      get(e, "batch_size", c.eval.batch_size);
      get(e, "collapse_whitespace", c.eval.collapse_whitespace);
      if (e.contains("out_dir")) c.eval.out_dir = path(e["out_dir"]);
    }
    if (!j.contains("eval") || !j["eval"].contains("out_dir")) c.eval.out_dir = base_dir / c.eval.out_dir;
    if (j.contains("bench")) {
      const auto& b = j["bench"];
      only_keys(b, {"dataset", "scenarios", "batch_size", "trials", "max_lines", "out_dir"}, "bench");
      if (b.contains("dataset")) c.bench.dataset = path(b["dataset"]);
      get(b, "scenarios", c.bench.scenarios);
      get(b, "batch_size", c.bench.batch_size);
      get(b, "trials", c.bench.trials);
      get(b, "max_lines", c.bench.max_lines);
      if (b.contains("out_dir")) c.bench.out_dir = path(b["out_dir"]);
    }
    if (!j.contains("bench") || !j["bench"].contains("out_dir")) c.bench.out_dir = base_dir / c.bench.out_dir;
  } catch (const ordered_json::exception& e) {
    bad(std::string("run config: ") + e.what());
  }
  c.normalization.validate();
  c.optimizer.validate();
  c.train.augment.validate();
  if (c.max_len < 1) bad("max_len must be >= 1");
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot read config '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  RunConfig c = parse(os.str(), fs::absolute(path).parent_path());
  if (!c.charset.empty() && fs::exists(c.charset)) c.sync_num_classes();
  return c;
}

std::string RunConfig::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["charset"] = charset.string();
  j["atlases"] = ordered_json::array();
  for (const auto& a : atlases) j["atlases"].push_back(a.string());
  j["textures"] = {{"train", textures_train.string()}, {"test", textures_test.string()}};
  j["max_len"] = max_len;
  j["datasets"] = ordered_json::array();
  for (const auto& d : datasets) {
    ordered_json jd;
    jd["name"] = d.name;
    jd["corpora"] = ordered_json::array();
    for (const auto& p : d.corpora) jd["corpora"].push_back(p.string());
    jd["min_count"] = d.min_count;
    jd["max_lines"] = d.max_lines;
    jd["out"] = d.out.string();
    j["datasets"].push_back(jd);
  }
  j["normalization"] = ordered_json::parse(normalization.to_json());
  j["model"] = {{"kind", to_string(model.kind)},
                {"hidden_units", model.hidden_units},
                {"dropout_rate", model.dropout_rate},
                {"input_height", model.input_height}};
  j["optimizer"] = {{"lr0", optimizer.lr0},
                    {"decay_factor", optimizer.decay_factor},
                    {"decay_every", optimizer.decay_every},
                    {"beta1", optimizer.beta1},
                    {"beta2", optimizer.beta2},
                    {"epsilon", optimizer.epsilon},
                    {"clip_norm", optimizer.clip_norm}};
  j["train"] = {{"train_set", train.train_set.string()},
                {"val_set", train.val_set.string()},
                {"iterations", train.iterations},
                {"batch_size", train.batch_size},
                {"checkpoint_every", train.checkpoint_every},
                {"validate_every", train.validate_every},
                {"augment", ordered_json::parse(train.augment.to_json())},
                {"val_scenario", train.val_scenario},
                {"val_repeats", train.val_repeats},
                {"val_max_lines", train.val_max_lines},
                {"out_dir", train.out_dir.string()}};
  j["eval"] = {{"test_set", eval.test_set.string()},
               {"scenarios", eval.scenarios},
               {"repeats", eval.repeats},
               {"batch_size", eval.batch_size},
               {"collapse_whitespace", eval.collapse_whitespace},
               {"out_dir", eval.out_dir.string()}};
  j["bench"] = {{"dataset", bench.dataset.string()},
                {"scenarios", bench.scenarios},
                {"batch_size", bench.batch_size},
                {"trials", bench.trials},
                {"max_lines", bench.max_lines},
                {"out_dir", bench.out_dir.string()}};
  return j.dump(2) + "\n";
}

void RunConfig::set_model_kind(ModelKind kind) {
  model.kind = kind;
  if (!lr_explicit) optimizer.lr0 = default_learning_rate(kind);
}

void RunConfig::sync_num_classes() { model.num_classes = Charset::load(charset).num_classes(); }

void RunConfig::validate_generate() const {
  require_file(charset, "charset");
  if (atlases.empty()) bad("no glyph atlas configured");
  for (const auto& a : atlases) require_file(a / "atlas.json", "atlas manifest");
  if (datasets.empty()) bad("no dataset configured");
  for (const auto& d : datasets) {
    if (d.corpora.empty()) bad("dataset '" + d.name + "' has no corpus");
    for (const auto& p : d.corpora) require_file(p, "corpus");
    if (d.min_count < 1) bad("dataset '" + d.name + "' needs min_count >= 1");
  }
}

namespace {

bool needs_textures(const AugmentConfig& a) { return a.composite_prob > 0.0; }

void check_texture_split(const fs::path& train, const fs::path& test) {
  if (train.empty() || test.empty()) return;
  if (fs::exists(train) && fs::exists(test) && fs::equivalent(train, test)) {
    bad("train and test texture directories must differ");
  }
}

}  // namespace

void RunConfig::validate_train() const {
  require_file(charset, "charset");
  require_dataset(train.train_set, "training set");
  if (!train.val_set.empty()) require_dataset(train.val_set, "validation set");
  if (train.iterations < 1 || train.batch_size < 1) bad("iterations and batch_size must be >= 1");
  if (train.checkpoint_every < 1 || train.validate_every < 1) bad("checkpoint and validation intervals must be >= 1");
  if (needs_textures(train.augment)) require_file(textures_train, "training texture directory");
  if (!train.val_set.empty() && needs_textures(scenario_preset(train.val_scenario))) {
    require_file(textures_train, "training texture directory");
  }
  check_texture_split(textures_train, textures_test);
  model.validate();
  optimizer.validate();
}

void RunConfig::validate_eval() const {
  require_file(charset, "charset");
  require_dataset(eval.test_set, "test set");
  if (eval.repeats < 1 || eval.batch_size < 1) bad("repeats and batch_size must be >= 1");
  for (const auto& s : eval.scenarios) {
    if (needs_textures(scenario_preset(s))) require_file(textures_test, "test texture directory");
  }
  check_texture_split(textures_train, textures_test);
}

void RunConfig::validate_bench() const {
  require_file(charset, "charset");
  require_dataset(bench.dataset, "benchmark set");
  if (bench.trials < 1 || bench.batch_size < 1) bad("trials and batch_size must be >= 1");
  for (const auto& s : bench.scenarios) {
    if (needs_textures(scenario_preset(s))) require_file(textures_test, "test texture directory");
  }
}

}  // namespace lineocr
