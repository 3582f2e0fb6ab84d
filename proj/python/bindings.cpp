// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lineocr/augment.hpp"
#include "lineocr/charset.hpp"
#include "lineocr/ctc.hpp"
#include "lineocr/error.hpp"
#include "lineocr/eval.hpp"
#include "lineocr/models.hpp"
#include "lineocr/recognize.hpp"
#include "lineocr/toy_assets.hpp"
#include "lineocr/utf8.hpp"

namespace py = pybind11;
using namespace lineocr;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

GrayImage to_image(const U8Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D uint8 array");
  GrayImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
  return img;
}

U8Array from_image(const GrayImage& img) {
  U8Array out({img.height, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

template <typename T, typename A>
nn::Tensor<T> to_tensor(const A& a) {
  nn::Shape shape;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(static_cast<int>(a.shape(i)));
  nn::Tensor<T> t(shape);
  std::copy(a.data(), a.data() + a.size(), t.data());
  return t;
}

template <typename T>
py::array_t<T> from_tensor(const nn::Tensor<T>& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<T> out(shape);
  std::copy(t.data(), t.data() + t.size(), out.mutable_data());
  return out;
}

// Owns a checkpoint together with the recognizer bound to it.
struct PyRecognizer {
  Checkpoint checkpoint;
  Charset charset;
  std::unique_ptr<Recognizer> rec;

  PyRecognizer(const std::string& checkpoint_path, const std::string& charset_path, bool normalize)
      : checkpoint(load_checkpoint(checkpoint_path)), charset(Charset::load(charset_path)) {
    NormalizationPolicy policy;
    policy.enabled = normalize;
    rec = std::make_unique<Recognizer>(*checkpoint.model, checkpoint.charset_fingerprint, charset, policy);
  }
};

}  // namespace

PYBIND11_MODULE(_lineocr, m) {
  m.doc() = "lineocr core bindings";

  static py::exception<Error> error(m, "LineocrError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<Charset>(m, "Charset")
      .def_static("build", &Charset::build_utf8, py::arg("symbols"))
      .def_static("load", [](const std::string& path) { return Charset::load(path); })
      .def_property_readonly("num_classes", &Charset::num_classes)
      .def_property_readonly("symbols", [](const Charset& c) { return utf8::encode(c.symbols()); })
      .def("fingerprint", &Charset::fingerprint)
      .def("encode", [](const Charset& c, const std::string& s) { return c.encode_utf8(s); })
      .def("decode", [](const Charset& c, const LabelSeq& l) { return c.decode_utf8(l); });

  m.def(
      "ctc_loss",
      [](const F64Array& log_probs, const std::vector<int>& lengths, const std::vector<LabelSeq>& labels) {
        const auto r = ctc::ctc_loss(to_tensor<double>(log_probs), lengths, labels);
        return py::make_tuple(r.loss, r.per_sample_nll, from_tensor(r.grad), r.infeasible);
      },
      py::arg("log_probs"), py::arg("input_lengths"), py::arg("labels"),
      "Mean CTC loss over [T, N, K] log-probabilities; returns (loss, per_sample, grad, infeasible).");
  m.def(
      "greedy_decode",
      [](const F64Array& log_probs, const std::vector<int>& lengths) {
        return ctc::greedy_decode(to_tensor<double>(log_probs), lengths);
      },
      py::arg("log_probs"), py::arg("input_lengths"));

  m.def(
      "levenshtein",
      [](const std::string& ref, const std::string& hyp) {
        const auto a = levenshtein(utf8::decode(ref), utf8::decode(hyp));
        py::list script;
        for (const auto& op : a.script) {
          script.append(py::make_tuple(to_string(op.kind), op.reference ? utf8::encode(op.reference) : "",
                                       op.hypothesis ? utf8::encode(op.hypothesis) : ""));
        }
        return py::make_tuple(a.distance, script);
      },
      py::arg("reference"), py::arg("hypothesis"));
  m.def(
      "cer",
      [](const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
        if (refs.size() != hyps.size()) throw py::value_error("reference/hypothesis count mismatch");
        CerAccumulator acc;
        for (std::size_t i = 0; i < refs.size(); ++i) acc.add(utf8::decode(refs[i]), utf8::decode(hyps[i]));
        return acc.cer();
      },
      py::arg("references"), py::arg("hypotheses"));

  m.def("toy_charset", [] { return toy::charset(); });
  m.def(
      "render_toy_line",
      [](const std::string& text, const std::string& style) {
        const auto atlas = toy::stroke_atlas(style == "serif" ? toy::FontStyle::SlantedSerif : toy::FontStyle::Plain);
        return from_image(render_line(utf8::decode(text), atlas).image);
      },
      py::arg("text"), py::arg("style") = "plain");
  m.def("write_toy_assets", [](const std::string& dir, std::uint64_t seed) { toy::write_assets(dir, seed); },
        py::arg("dir"), py::arg("seed") = 1);

  m.def("scenario_preset", [](const std::string& name) { return scenario_preset(name).to_json(); },
        py::arg("name"), "Preset as a JSON string.");
  m.def(
      "augment",
      [](const U8Array& image, const std::string& scenario, std::uint64_t seed, const std::string& textures) {
        const AugmentConfig cfg = scenario_preset(scenario);
        TextureBank bank;
        if (!textures.empty()) bank = TextureBank::load(textures);
        Rng rng(seed);
        return from_image(augment_line(to_image(image), cfg, textures.empty() ? nullptr : &bank, rng));
      },
      py::arg("image"), py::arg("scenario"), py::arg("seed") = 0, py::arg("textures") = "");

  py::class_<Model>(m, "Model")
      .def(py::init([](const std::string& kind, int num_classes, std::uint64_t seed, int hidden_units) {
             ModelSpec spec;
             spec.kind = parse_model_kind(kind);
             spec.num_classes = num_classes;
             spec.hidden_units = hidden_units;
             return std::make_unique<Model>(spec, seed);
           }),
           py::arg("kind") = "hybrid", py::arg("num_classes") = 2, py::arg("seed") = 1,
           py::arg("hidden_units") = 256)
      .def_property_readonly("kind", [](const Model& mdl) { return to_string(mdl.spec().kind); })
      .def_property_readonly("spec", [](const Model& mdl) { return mdl.spec().to_json(); })
      .def("parameter_count", &Model::parameter_count)
      .def("sequence_length", [](const Model& mdl, int w) { return mdl.spec().sequence_length(w); })
      .def("trace_shapes",
           [](Model& mdl, int width) {
             py::list rows;
             for (const auto& r : mdl.trace_shapes(width)) rows.append(py::make_tuple(r.operation, r.dims));
             return rows;
           })
      .def(
          "forward",
          [](Model& mdl, const F32Array& images, const std::vector<int>& widths) {
            return from_tensor(mdl.forward(to_tensor<float>(images), widths, nn::Mode::Infer));
          },
          py::arg("images"), py::arg("widths"), "Inference log-probabilities [T, N, K].")
      .def(
          "save",
          [](Model& mdl, const std::string& path, const std::string& fingerprint, std::int64_t iteration) {
            save_checkpoint(mdl, fingerprint, iteration, path);
          },
          py::arg("path"), py::arg("charset_fingerprint"), py::arg("iteration") = 0);

  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        Checkpoint ck = load_checkpoint(path);
        py::dict info;
        info["spec"] = ck.spec.to_json();
        info["charset_fingerprint"] = ck.charset_fingerprint;
        info["iteration"] = ck.iteration;
        info["seed"] = ck.seed;
        return py::make_tuple(std::move(ck.model), info);
      },
      py::arg("path"));

  py::class_<PyRecognizer>(m, "Recognizer")
      .def(py::init<const std::string&, const std::string&, bool>(), py::arg("checkpoint"),
           py::arg("charset"), py::arg("normalize") = true)
      .def("recognize", [](PyRecognizer& r, const U8Array& image) {
        const auto res = r.rec->recognize(to_image(image));
        return py::make_tuple(res.text, res.trace);
      });
}
