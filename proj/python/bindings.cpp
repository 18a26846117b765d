// Copyright 2026 The ILA Authors.
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


// Python bindings. Arrays cross the boundary as float64 (or uint8 for raw
// pixels) NumPy arrays; frame and block indices are 0-based here, as in C++.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <cstring>

#include "ila/alignment.hpp"
#include "ila/config.hpp"
#include "ila/errors.hpp"
#include "ila/gradcheck.hpp"
#include "ila/metrics.hpp"
#include "ila/objective.hpp"
#include "ila/parameters.hpp"
#include "ila/synth.hpp"
#include "ila/train.hpp"

namespace py = pybind11;
using namespace ila;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const F64& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_numpy(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

MaskParams mask_params(double eta, double delta, double beta) {
  MaskParams p{eta, delta, beta};
  p.validate();
  return p;
}

py::dict cost_row(const CostReport& r) {
  py::dict d;
  d["scheme"] = to_string(r.scheme);
  d["macs"] = r.macs;
  d["flops"] = r.flops;
  d["asymptotic"] = r.asymptotic;
  return d;
}

py::dict step_dict(const StepRecord& r) {
  py::dict d;
  d["step"] = r.step;
  d["total"] = r.total;
  d["sim"] = r.sim;
  d["align"] = r.align;
  d["lr"] = r.lr;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ila, m) {
  m.doc() = "Implicit learnable alignment for video transformers";
  // Every library exception maps to ila.Error; the message keeps the C++ class name.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  // Alignment geometry.
  m.def("mask_weight", [](double s, double eta, double delta, double beta) {
        return mask_weight(s, mask_params(eta, delta, beta));
      },
      py::arg("s"), py::arg("eta") = 1.0, py::arg("delta") = 0.3, py::arg("beta") = 1.0);
  m.def("make_mask",
        [](double x, double y, std::size_t h, std::size_t w, double eta, double delta,
           double beta) {
          const AlignMask mask = make_mask({x, y}, h, w, mask_params(eta, delta, beta));
          py::array_t<double> out({h, w});
          std::copy(mask.weights.begin(), mask.weights.end(), out.mutable_data());
          return out;
        },
        py::arg("x"), py::arg("y"), py::arg("h"), py::arg("w"), py::arg("eta") = 1.0,
        py::arg("delta") = 0.3, py::arg("beta") = 1.0,
        "Mask weights [h, w] around the interactive point (x, y) in [-1, 1]^2.");
  m.def("grid_position", [](std::size_t i, std::size_t j, std::size_t h, std::size_t w) {
    const InteractivePoint p = grid_position(i, j, h, w);
    return std::make_pair(p.x, p.y);
  });
  m.def("partner",
        [](std::size_t t, std::size_t frames, const std::string& strategy) {
          return partner(t, frames, parse_strategy(strategy));
        },
        py::arg("t"), py::arg("frames"), py::arg("strategy") = "Adjacent");

  // Metrics.
  m.def("emd", [](const F64& a, const F64& b, bool normalize) {
        return emd_pair(to_tensor(a), to_tensor(b), normalize);
      },
      py::arg("a"), py::arg("b"), py::arg("normalize") = true);
  m.def("solve_assignment", [](const F64& cost) {
    if (cost.ndim() != 2 || cost.shape(0) != cost.shape(1)) {
      throw SizeMismatch("cost matrix must be square");
    }
    return solve_assignment({cost.data(), static_cast<std::size_t>(cost.size())},
                            static_cast<std::size_t>(cost.shape(0)));
  });
  m.def("topk_accuracy", [](const std::vector<std::vector<double>>& scores,
                            const std::vector<std::size_t>& labels, std::size_t k) {
    return topk_accuracy(scores, labels, k);
  });
  m.def("flops_table",
        [](double frames, double grid_h, double grid_w, double dim, double kernel, double depth,
           double patch) {
          CostParams p;
          p.frames = frames;
          p.grid_h = grid_h;
          p.grid_w = grid_w;
          p.dim = dim;
          p.kernel = kernel;
          p.depth = depth;
          p.patch = patch;
          py::list rows;
          for (Scheme s : all_schemes()) rows.append(cost_row(flops_estimate(s, p)));
          return rows;
        },
        py::arg("frames") = 8, py::arg("grid_h") = 7, py::arg("grid_w") = 7,
        py::arg("dim") = 768, py::arg("kernel") = 3, py::arg("depth") = 12,
        py::arg("patch") = 32);

  // Losses, evaluated without gradients.
  m.def("similarity_loss",
        [](const std::vector<double>& scores, std::size_t label, double smoothing) {
          Tape tape;
          Tensor s({scores.size()}, scores);
          return similarity_loss(tape.constant(s), label, smoothing).value().item();
        },
        py::arg("scores"), py::arg("label"), py::arg("label_smoothing") = 0.0);
  m.def("alignment_loss", [](const std::vector<std::vector<F64>>& tokens) {
    Tape tape;
    std::vector<std::vector<Var>> vars;
    for (const auto& block : tokens) {
      auto& row = vars.emplace_back();
      for (const auto& t : block) row.push_back(tape.constant(to_tensor(t)));
    }
    return alignment_loss(vars, tape).value().item();
  }, "tokens[block][frame] are equal-shape arrays.");

  // Configuration.
  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_static("parse", &parse_config)
      .def_static("load", &load_config)
      .def("serialize", &serialize_config)
      .def_property_readonly("steps", &RunConfig::steps)
      .def_readwrite("batch", &RunConfig::batch)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("threads", &RunConfig::threads)
      .def_readwrite("train_samples", &RunConfig::train_samples)
      .def_readwrite("test_samples", &RunConfig::test_samples)
      .def("__repr__", [](const RunConfig&) { return "<ila.RunConfig>"; });
  m.def("default_config_text", &default_config_text);

  // Data.
  py::class_<Dataset>(m, "Dataset")
      .def_static("generate",
                  [](const RunConfig& cfg, bool test_split, std::optional<std::size_t> n) {
                    return generate(cfg.task(test_split),
                                    n.value_or(test_split ? cfg.test_samples : cfg.train_samples),
                                    cfg.threads);
                  },
                  py::arg("config"), py::arg("test_split") = false, py::arg("n") = py::none())
      .def_static("read", &read_dataset)
      .def("write", [](const Dataset& d, const std::filesystem::path& p) { write_dataset(p, d); })
      .def("__len__", &Dataset::size)
      .def_property_readonly("labels", &Dataset::labels)
      .def_property_readonly("shape", [](const Dataset& d) {
        return py::make_tuple(d.frames, d.height, d.width, 3);
      })
      .def("clip", [](const Dataset& d, std::size_t i) {
        if (i >= d.size()) throw py::index_error("clip index out of range");
        return to_numpy(d.clip(i));
      }, "Clip i as float64 [T, H, W, 3] in [0, 1].")
      .def("pixels", [](const Dataset& d, std::size_t i) {
        if (i >= d.size()) throw py::index_error("clip index out of range");
        py::array_t<std::uint8_t> out({d.frames, d.height, d.width, std::size_t{3}});
        std::memcpy(out.mutable_data(), d.samples[i].pixels.data(), d.samples[i].pixels.size());
        return out;
      });
  m.def("reverse_frames", [](const F64& clip) { return to_numpy(reverse_frames(to_tensor(clip))); });

  // Model.
  py::class_<IlaModel>(m, "Model")
      .def(py::init([](const RunConfig& cfg) { return IlaModel(cfg.model, cfg.seed); }),
           py::arg("config"))
      .def_static("load", [](const std::filesystem::path& path) {
        const Checkpoint ckpt = load_checkpoint(path);
        const RunConfig cfg = parse_config(ckpt.metadata);
        return std::make_pair(IlaModel(cfg.model, ckpt.params), cfg);
      }, "Returns (model, config) from a checkpoint.")
      .def("save", [](const IlaModel& model, const std::filesystem::path& path,
                      const RunConfig& cfg) {
        save_checkpoint(path, {serialize_config(cfg), model.params()});
      })
      .def_property_readonly("num_parameters",
                             [](const IlaModel& model) { return model.params().scalar_count(); })
      .def("parameter", [](const IlaModel& model, const std::string& name) {
        const auto id = model.params().find(name);
        if (!id) throw py::key_error(name);
        return to_numpy(model.params().value(*id));
      })
      .def("predict", [](const IlaModel& model, const F64& clip) {
        return predict(model, to_tensor(clip));
      }, "Class scores for one float64 [T, H, W, 3] clip.")
      .def("train",
           [](IlaModel& model, const RunConfig& cfg, const Dataset& data,
              const std::function<void(py::dict)>& on_record) {
             std::vector<StepRecord> log;
             {
               py::gil_scoped_release release;
               train(model, cfg, data, [&](const StepRecord& r) { log.push_back(r); });
             }
             py::list out;
             for (const auto& r : log) {
               if (on_record) on_record(step_dict(r));
               out.append(step_dict(r));
             }
             return out;
           },
           py::arg("config"), py::arg("data"), py::arg("on_record") = nullptr)
      .def("evaluate", [](const IlaModel& model, const Dataset& data) {
        EvalReport ev;
        {
          py::gil_scoped_release release;
          ev = evaluate(model, data);
        }
        py::dict d;
        d["samples"] = ev.samples;
        d["top1"] = ev.top1;
        d["top5"] = ev.top5;
        return d;
      })
      .def("mi_probe", [](const IlaModel& model, const Dataset& data) {
        py::gil_scoped_release release;
        const EmdReport r = mi_probe(model, data);
        return std::make_pair(r.mean, r.per_video);
      }, "(mean, per-clip) adjacent-frame EMD of the last block's patch tokens.");

  // Gradient checks.
  m.def("check_ops", [](std::uint64_t seed) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& r : check_ops(seed)) out.emplace_back(r.name, r.rel_error);
    return out;
  }, py::arg("seed") = 0);
  m.def("check_model", [](std::uint64_t seed) { return check_model(seed).rel_error; },
        py::arg("seed") = 0);

  m.def("file_sha1", &file_sha1);
}
