/*
 * Copyright 2026 The FDIM Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Python bindings. Arrays cross the boundary as numpy float32 copies; JSON
// results are returned as strings and parsed on the Python side.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <torch/torch.h>

#include "fdim/calibration.hpp"
#include "fdim/config.hpp"
#include "fdim/errors.hpp"
#include "fdim/evaluation.hpp"
#include "fdim/hdr.hpp"
#include "fdim/model.hpp"
#include "fdim/pairwise.hpp"
#include "fdim/pipeline.hpp"
#include "fdim/synth.hpp"
#include "fdim/weights_io.hpp"

namespace py = pybind11;
using namespace fdimq;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

torch::Tensor to_tensor(const FloatArray& a) {
  std::vector<std::int64_t> shape(a.shape(), a.shape() + a.ndim());
  return torch::from_blob(const_cast<float*>(a.data()), shape, torch::kFloat32).clone();
}

FloatArray to_array(const torch::Tensor& t) {
  const torch::Tensor c = t.detach().to(torch::kFloat32).contiguous();
  FloatArray out(std::vector<py::ssize_t>(c.sizes().begin(), c.sizes().end()));
  std::memcpy(out.mutable_data(), c.data_ptr<float>(), static_cast<std::size_t>(c.numel()) * 4);
  return out;
}

class PyModel {
 public:
  explicit PyModel(net::FdimNet model, nlohmann::json metadata = nlohmann::json::object())
      : model_(std::move(model)), metadata_(std::move(metadata)) {
    model_->eval();
  }

  static PyModel init(std::uint64_t seed, const std::map<std::string, std::string>& ablation) {
    TrainConfig cfg;
    apply_ablation_overrides(cfg, ablation);
    return PyModel(net::make_model(net::model_config_from(cfg), seed));
  }

  static PyModel load(const std::filesystem::path& path) {
    net::LoadedModel m = net::load_checkpoint(path);
    return PyModel(m.model, m.info.metadata);
  }

  void save(const std::filesystem::path& path, const std::string& metadata_json) {
    net::Checkpoint info;
    info.config = model_->config();
    info.metadata = metadata_;
    if (!metadata_json.empty()) info.metadata.update(nlohmann::json::parse(metadata_json));
    net::save_checkpoint(path, model_, info);
  }

  std::int64_t parameter_count() const { return model_->parameter_count(); }

  std::vector<std::string> tensor_names() const {
    std::vector<std::string> names;
    for (const auto& p : model_->named_parameters()) names.push_back(p.key());
    for (const auto& b : model_->named_buffers()) names.push_back(b.key());
    return names;
  }

  FloatArray get_tensor(const std::string& name) const { return to_array(find(name)); }

  void set_tensor(const std::string& name, const FloatArray& value) {
    torch::Tensor target = find(name);
    const torch::Tensor v = to_tensor(value);
    if (v.sizes() != target.sizes()) {
      throw ContractError("set_tensor: shape mismatch for " + name);
    }
    torch::NoGradGuard guard;
    target.copy_(v.to(target.scalar_type()));
  }

  // [N, 3, H, W] in [0, 1] -> four feature maps.
  std::vector<FloatArray> backbone_features(const FloatArray& images) {
    torch::NoGradGuard guard;
    const net::FeaturePyramid p = model_->backbone->forward(to_tensor(images));
    std::vector<FloatArray> out;
    for (const auto& l : p.levels) out.push_back(to_array(l));
    return out;
  }

  FloatArray forward(const FloatArray& ref, const FloatArray& dist) {
    torch::NoGradGuard guard;
    return to_array(model_->forward(to_tensor(ref), to_tensor(dist)));
  }

  std::string config_json() const { return model_->config().to_json().dump(); }

 private:
  torch::Tensor find(const std::string& name) const {
    for (const auto& p : model_->named_parameters()) {
      if (p.key() == name) return p.value();
    }
    for (const auto& b : model_->named_buffers()) {
      if (b.key() == name) return b.value();
    }
    throw ContractError("no tensor named " + name);
  }

  net::FdimNet model_;
  nlohmann::json metadata_;
};

std::string score(const std::filesystem::path& ref, const std::filesystem::path& dist,
                  const std::filesystem::path& weights, int width, int height, double fps,
                  int bit_depth, bool deep_only, std::optional<std::filesystem::path> calibration,
                  std::optional<std::filesystem::path> vmaf_scores, const std::string& sampling,
                  std::uint64_t seed) {
  app::ScoreRequest r;
  r.ref = ref;
  r.dist = dist;
  r.weights = weights;
  r.ref_geometry = {width, height, bit_depth, fps};
  r.dist_geometry = r.ref_geometry;
  r.deep_only = deep_only;
  r.calibration = std::move(calibration);
  r.vmaf_scores = std::move(vmaf_scores);
  r.options.sampling = video::parse_sample_spec(sampling);
  r.seed = seed;
  py::gil_scoped_release release;
  return app::run_score(r).dump();
}

std::string synth_corpus(const std::filesystem::path& out_dir, int refs, int levels, int width,
                         int height, int frames, double fps, std::uint64_t seed) {
  synth::CorpusOptions o;
  o.n_refs = refs;
  o.levels = levels;
  o.width = width;
  o.height = height;
  o.frames = frames;
  o.fps = fps;
  o.seed = seed;
  return app::run_synth(o, out_dir).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "FDIM video quality metric: native core";
  m.attr("__version__") = app::kVersion;

  static py::exception<Error> base(m, "FdimError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  m.def("pu21_encode", &hdr::pu21_encode, py::arg("luminance"));
  m.def("pq_eotf", &hdr::pq_eotf, py::arg("encoded"));
  m.def("gt_preference", &train::gt_preference, py::arg("mu_i"), py::arg("sigma_i"), py::arg("mu_j"),
        py::arg("sigma_j"));
  m.def("predicted_preference", &train::predicted_preference, py::arg("q_i"), py::arg("sigma_i"),
        py::arg("q_j"), py::arg("sigma_j"));
  m.def("fidelity_loss", &train::fidelity_loss, py::arg("target"), py::arg("predicted"));
  m.def(
      "map_branch",
      [](double q, std::array<double, 4> beta) {
        calib::BranchMapping mapping;
        mapping.beta = beta;
        return calib::map_branch(q, mapping);
      },
      py::arg("q"), py::arg("beta"));
  m.def("fuse_scores", [](double a, double b) { return calib::fuse_scores(a, b); });
  m.def("plcc", [](std::vector<double> x, std::vector<double> y) { return eval::compute_plcc(x, y); });
  m.def("srocc", [](std::vector<double> x, std::vector<double> y) { return eval::compute_srocc(x, y); });
  m.def(
      "fit_logistic",
      [](std::vector<double> pred, std::vector<double> mos) {
        const eval::LogisticFit f = eval::fit_eval_logistic(pred, mos);
        py::dict d;
        d["params"] = f.params;
        d["mapped"] = f.mapped;
        d["converged"] = f.converged;
        d["degenerate"] = f.degenerate;
        d["warning"] = f.warning;
        return d;
      },
      py::arg("pred"), py::arg("mos"));

  m.def("_score_json", &score, py::arg("ref"), py::arg("dist"), py::arg("weights"), py::arg("width"),
        py::arg("height"), py::arg("fps") = 25.0, py::arg("bit_depth") = 8,
        py::arg("deep_only") = false, py::arg("calibration") = py::none(),
        py::arg("vmaf_scores") = py::none(), py::arg("sampling") = "one-per-second",
        py::arg("seed") = 0);
  m.def("_synth_json", &synth_corpus, py::arg("out_dir"), py::arg("refs") = 4, py::arg("levels") = 5,
        py::arg("width") = 320, py::arg("height") = 256, py::arg("frames") = 10, py::arg("fps") = 5.0,
        py::arg("seed") = 0);

  py::class_<PyModel>(m, "Model")
      .def_static("init", &PyModel::init, py::arg("seed") = 0,
                  py::arg("ablation") = std::map<std::string, std::string>{})
      .def_static("load", &PyModel::load, py::arg("path"))
      .def("save", &PyModel::save, py::arg("path"), py::arg("metadata_json") = "")
      .def_property_readonly("parameter_count", &PyModel::parameter_count)
      .def("tensor_names", &PyModel::tensor_names)
      .def("get_tensor", &PyModel::get_tensor, py::arg("name"))
      .def("set_tensor", &PyModel::set_tensor, py::arg("name"), py::arg("value"))
      .def("backbone_features", &PyModel::backbone_features, py::arg("images"))
      .def("forward", &PyModel::forward, py::arg("ref"), py::arg("dist"))
      .def("config_json", &PyModel::config_json);
}
