// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/models.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "json.hpp"
#include "lineocr/ctc.hpp"

namespace lineocr {

using nn::Mode;
using nn::Tensor;
using json = nlohmann::json;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Hybrid: return "hybrid";
    case ModelKind::Fcn: return "fcn";
    case ModelKind::HybridPeephole: return "hybrid_peephole";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "hybrid") return ModelKind::Hybrid;
  if (name == "fcn") return ModelKind::Fcn;
  if (name == "hybrid_peephole" || name == "hybrid-peephole") return ModelKind::HybridPeephole;
  throw Error(ErrorCode::SpecInvalid, "unknown model kind '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (num_classes < 2) throw Error(ErrorCode::SpecInvalid, "num_classes must be at least 2");
  if (hidden_units < 1) throw Error(ErrorCode::SpecInvalid, "hidden_units must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorCode::SpecInvalid, "dropout_rate must lie in [0, 1)");
  }
  if (input_height < 1 || input_height % height_downsampling() != 0) {
    throw Error(ErrorCode::SpecInvalid, "input_height " + std::to_string(input_height) +
                                            " is not divisible by " +
                                            std::to_string(height_downsampling()));
  }
}

int ModelSpec::sequence_length(int width) const {
  const int f = width_downsampling();
  return (width + f - 1) / f;
}

std::string ModelSpec::to_json() const {
  json j;
  j["kind"] = to_string(kind);
  j["num_classes"] = num_classes;
  j["hidden_units"] = hidden_units;
  j["dropout_rate"] = dropout_rate;
  j["input_height"] = input_height;
  return j.dump();
}

ModelSpec ModelSpec::from_json(std::string_view text) {
  ModelSpec s;
  try {
    const json j = json::parse(text);
    s.kind = parse_model_kind(j.at("kind").get<std::string>());
    s.num_classes = j.at("num_classes").get<int>();
    s.hidden_units = j.at("hidden_units").get<int>();
    s.dropout_rate = j.at("dropout_rate").get<double>();
    s.input_height = j.at("input_height").get<int>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SpecInvalid, std::string("model spec: ") + e.what());
  }
  s.validate();
  return s;
}

double default_learning_rate(ModelKind kind) { return kind == ModelKind::Fcn ? 0.001 : 0.0006; }

namespace {

nn::Conv2dGeometry same3(int stride_h = 1) { return {stride_h, 1, 1, 1}; }

std::string percent(double rate) {
  return std::to_string(static_cast<int>(std::lround(rate * 100))) + "%";
}

}  // namespace

Model::Model(ModelSpec spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
  spec_.validate();
  Rng init(seed, "init");
  auto conv = [&](const std::string& name, int in, int out, int k, nn::Conv2dGeometry g) {
    features_.push_back(std::make_unique<nn::ConvBlock<float>>(name, in, out, k, g, init));
  };
  auto pool = [&](nn::PoolGeometry g) { features_.push_back(std::make_unique<nn::MaxPool<float>>(g)); };

  if (spec_.kind == ModelKind::Fcn) {
    conv("conv1", 1, 64, 7, {2, 2, 3, 3});
    pool({2, 2, 2, 2});
    conv("conv2", 64, 64, 3, same3());
    conv("conv3", 64, 64, 3, same3());
    conv("conv4", 64, 128, 3, same3(2));
    conv("conv5", 128, 128, 3, same3());
    conv("conv6", 128, 256, 3, same3(2));
    conv("conv7", 256, 256, 3, same3());
    conv("conv8", 256, 512, 3, same3(2));
    conv("conv9", 512, 512, 3, same3());
    conv("conv10", 512, 512, 3, same3());
    head_ = std::make_unique<nn::Linear<float>>("fc", 512 * (spec_.input_height / 32),
                                                spec_.num_classes, init);
  } else {
    const bool peephole = spec_.kind == ModelKind::HybridPeephole;
    conv("conv1", 1, 64, 3, same3());
    pool({2, 2, 2, 2});
    conv("conv2", 64, 128, 3, same3());
    pool({2, 2, 2, peephole ? 1 : 2});
    rnn_ = std::make_unique<nn::BiLstm<float>>("rnn", 128 * (spec_.input_height / 4),
                                               spec_.hidden_units, peephole, init);
    head_ = std::make_unique<nn::Linear<float>>("fc", 2 * spec_.hidden_units, spec_.num_classes,
                                                init);
  }
}

std::vector<int> Model::output_lengths(std::span<const int> widths) const {
  std::vector<int> out;
  out.reserve(widths.size());
  for (int w : widths) out.push_back(spec_.sequence_length(w));
  return out;
}

Tensor<float> Model::forward(const Tensor<float>& images, std::span<const int> widths, Mode mode,
                             std::uint64_t dropout_index) {
  nn::require_rank(images.shape(), 4, "model input");
  if (images.dim(1) != 1 || images.dim(2) != spec_.input_height) {
    throw Error(ErrorCode::ShapeMismatch, "model input " + nn::shape_string(images.shape()) +
                                              " does not have height " +
                                              std::to_string(spec_.input_height));
  }
  if (widths.size() != static_cast<std::size_t>(images.dim(0))) {
    throw Error(ErrorCode::ShapeMismatch, "one width per image required");
  }
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] < 1 || widths[i] > images.dim(3)) {
      throw Error(ErrorCode::ShapeMismatch, "sample width outside the batch", i);
    }
  }
  Tensor<float> x = images;
  for (auto& layer : features_) x = layer->forward(x, mode);
  feature_shape_ = x.shape();
  Tensor<float> seq = nn::map_to_sequence(x);
  if (rnn_) {
    const std::vector<int> lengths = output_lengths(widths);
    Rng drop(seed_, "dropout", dropout_index);
    seq = nn::dropout(seq, spec_.dropout_rate, mode, drop, &drop_in_mask_);
    seq = rnn_->forward(seq, lengths);
    seq = nn::dropout(seq, spec_.dropout_rate, mode, drop, &drop_out_mask_);
  }
  log_probs_ = nn::log_softmax(head_->forward(seq));
  train_cache_valid_ = mode == Mode::Train;
  return log_probs_;
}

void Model::backward(const Tensor<float>& dlog_probs) {
  if (!train_cache_valid_) {
    throw Error(ErrorCode::InvalidArgument, "backward requires a preceding train-mode forward");
  }
  Tensor<float> d = nn::log_softmax_backward(log_probs_, dlog_probs);
  d = head_->backward(d);
  if (rnn_) {
    d = nn::dropout_backward(d, drop_out_mask_);
    d = rnn_->backward(d);
    d = nn::dropout_backward(d, drop_in_mask_);
  }
  d = nn::map_to_sequence_backward(d, feature_shape_);
  for (auto it = features_.rbegin(); it != features_.rend(); ++it) d = (*it)->backward(d);
  train_cache_valid_ = false;
}

std::vector<nn::Param<float>*> Model::params() {
  std::vector<nn::Param<float>*> out;
  for (auto& layer : features_) {
    for (auto* p : layer->params()) out.push_back(p);
  }
  if (rnn_) {
    for (auto* p : rnn_->params()) out.push_back(p);
  }
  for (auto* p : head_->params()) out.push_back(p);
  return out;
}

std::vector<std::pair<std::string, Tensor<float>*>> Model::buffers() {
  std::vector<std::pair<std::string, Tensor<float>*>> out;
  for (auto& layer : features_) {
    for (auto& b : layer->buffers()) out.push_back(b);
  }
  return out;
}

std::size_t Model::parameter_count() {
  std::size_t n = 0;
  for (auto* p : params()) n += p->value.size();
  return n;
}

std::vector<ShapeRow> Model::trace_shapes(int width) {
  std::vector<ShapeRow> rows;
  Tensor<float> x({1, 1, spec_.input_height, width});
  for (auto& layer : features_) {
    x = layer->forward(x, Mode::Infer);
    rows.push_back({layer->description(), {x.dim(2), x.dim(3), x.dim(1)}});
  }
  Tensor<float> seq = nn::map_to_sequence(x);
  const int steps = seq.dim(0);
  rows.push_back({"Map to sequence", {steps, seq.dim(2)}});
  if (rnn_) {
    const std::vector<int> lengths{steps};
    rows.push_back({"Dropout (" + percent(spec_.dropout_rate) + ")", {}});
    seq = rnn_->forward(seq, lengths);
    rows.push_back({"Bidirectional RNN (units: 2x" + std::to_string(spec_.hidden_units) + ")",
                    {steps, seq.dim(2)}});
    rows.push_back({"Dropout (" + percent(spec_.dropout_rate) + ")", {}});
  }
  seq = head_->forward(seq);
  rows.push_back({"Linear mapping (units: " + std::to_string(spec_.num_classes) + ")",
                  {steps, seq.dim(2)}});
  rows.push_back({"CTC output layer", {steps}});
  train_cache_valid_ = false;
  return rows;
}

TrainStepResult train_step(Model& model, const Batch& batch, const nn::OptimizerConfig& cfg,
                           std::int64_t iteration) {
  if (iteration < 1) throw Error(ErrorCode::InvalidArgument, "iterations are numbered from 1");
  auto params = model.params();
  nn::zero_grads<float>(params);
  const Tensor<float> log_probs =
      model.forward(batch.images, batch.widths, Mode::Train, static_cast<std::uint64_t>(iteration));
  const std::vector<int> lengths = model.output_lengths(batch.widths);
  const auto res = ctc::ctc_loss(log_probs, lengths, batch.labels, {.check_normalization = false});
  if (!res.infeasible.empty()) {
    const std::size_t pos = res.infeasible.front();
    const std::size_t id = pos < batch.sample_ids.size() ? batch.sample_ids[pos] : pos;
    throw Error(ErrorCode::InfeasibleLabel,
                "label longer than the output sequence allows (batch position " +
                    std::to_string(pos) + ")",
                id);
  }
  model.backward(res.grad);
  TrainStepResult out;
  out.loss = res.loss;
  out.grad_norm = nn::clip_global_norm<float>(params, cfg.clip_norm);
  out.lr = nn::learning_rate(cfg, iteration);
  nn::adam_step<float>(params, cfg, iteration);
  return out;
}

double evaluate_loss(Model& model, const Batch& batch) {
  const Tensor<float> log_probs = model.forward(batch.images, batch.widths, Mode::Infer);
  const auto res = ctc::ctc_loss(log_probs, model.output_lengths(batch.widths), batch.labels,
                                 {.check_normalization = false});
  return res.loss;
}

std::vector<LabelSeq> decode_batch(Model& model, const Batch& batch) {
  const Tensor<float> log_probs = model.forward(batch.images, batch.widths, Mode::Infer);
  return ctc::greedy_decode(log_probs, model.output_lengths(batch.widths));
}

// ---- checkpoints -----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'L', 'O', 'C', 'R', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  void raw(void* p, std::size_t n) {
    if (n > bytes_.size() - pos_) {
      throw Error(ErrorCode::CorruptCheckpoint, "checkpoint truncated");
    }
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > bytes_.size() - pos_) throw Error(ErrorCode::CorruptCheckpoint, "checkpoint truncated");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::pair<std::string, Tensor<float>*>> checkpoint_tensors(Model& model) {
  std::vector<std::pair<std::string, Tensor<float>*>> out;
  for (auto* p : model.params()) {
    out.emplace_back(p->name, &p->value);
    out.emplace_back(p->name + ".adam_m", &p->moment1);
    out.emplace_back(p->name + ".adam_v", &p->moment2);
  }
  for (auto& b : model.buffers()) out.push_back(b);
  return out;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(Model& model, std::string_view charset_fingerprint,
                                               std::int64_t iteration) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  json header;
  header["spec"] = json::parse(model.spec().to_json());
  header["charset_fingerprint"] = std::string(charset_fingerprint);
  header["iteration"] = iteration;
  header["seed"] = model.seed();
  w.str(header.dump());
  const auto tensors = checkpoint_tensors(model);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t->rank()));
    for (int d : t->shape()) w.u32(static_cast<std::uint32_t>(d));
    w.raw(t->data(), t->size() * sizeof(float));
  }
  w.u64(fnv1a64(w.bytes));
  return std::move(w.bytes);
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes, const ModelSpec* expected) {
  if (bytes.size() < sizeof kMagic + 4 + 8 ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::CorruptCheckpoint, "not a checkpoint file");
  }
  Reader r(bytes.subspan(sizeof kMagic));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, "checkpoint format version " + std::to_string(version) +
                                                " is not supported");
  }
  const auto body = bytes.first(bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 8);
  if (fnv1a64(body) != stored) throw Error(ErrorCode::CorruptCheckpoint, "checkpoint checksum mismatch");

  Checkpoint ck;
  json header;
  try {
    header = json::parse(r.str());
    ck.charset_fingerprint = header.at("charset_fingerprint").get<std::string>();
    ck.iteration = header.at("iteration").get<std::int64_t>();
    ck.seed = header.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, std::string("checkpoint header: ") + e.what());
  }
  ck.spec = ModelSpec::from_json(header.at("spec").dump());
  if (expected && !(*expected == ck.spec)) {
    throw Error(ErrorCode::SpecInvalid, "checkpoint holds a " + to_string(ck.spec.kind) +
                                            " model, expected " + to_string(expected->kind));
  }
  ck.model = std::make_unique<Model>(ck.spec, ck.seed);

  std::map<std::string, Tensor<float>*> slots;
  for (auto& [name, t] : checkpoint_tensors(*ck.model)) slots.emplace(name, t);
  const std::uint32_t count = r.u32();
  if (count != slots.size()) {
    throw Error(ErrorCode::SpecInvalid, "checkpoint tensor count does not match the model");
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    const auto it = slots.find(name);
    if (it == slots.end()) throw Error(ErrorCode::SpecInvalid, "unexpected tensor '" + name + "'");
    Tensor<float>& t = *it->second;
    const std::uint32_t rank = r.u32();
    nn::Shape shape(rank);
    for (auto& d : shape) d = static_cast<int>(r.u32());
    if (shape != t.shape()) {
      throw Error(ErrorCode::SpecInvalid, "tensor '" + name + "' has shape " +
                                              nn::shape_string(shape) + ", model expects " +
                                              nn::shape_string(t.shape()));
    }
    r.raw(t.data(), t.size() * sizeof(float));
    slots.erase(it);
  }
  if (r.remaining() != 8) throw Error(ErrorCode::CorruptCheckpoint, "trailing bytes in checkpoint");
  return ck;
}

void save_checkpoint(Model& model, std::string_view charset_fingerprint, std::int64_t iteration,
                     const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model, charset_fingerprint, iteration);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "cannot write checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelSpec* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, expected);
}

}  // namespace lineocr
