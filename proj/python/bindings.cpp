// Python bindings: model construction, forward/decompose/reconstruct,
// parameter accounting, checkpoints, synthetic data, and a small fit loop.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "dawn/checkpoint.hpp"
#include "dawn/training.hpp"

namespace py = pybind11;
using dawn::DawnConfig;
using dawn::DawnModel;
using dawn::Tensor;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor<float> tensor_from_numpy(const FloatArray& array, int expected_rank, const char* what) {
  if (array.ndim() != expected_rank)
    throw std::invalid_argument(std::string(what) + ": expected a " +
                                std::to_string(expected_rank) + "-d array, got " +
                                std::to_string(array.ndim()) + "-d");
  dawn::Shape shape;
  for (py::ssize_t d = 0; d < array.ndim(); ++d) shape.push_back(array.shape(d));
  std::vector<float> data(static_cast<size_t>(array.size()));
  std::memcpy(data.data(), array.data(), sizeof(float) * data.size());
  return Tensor<float>::from(std::move(shape), std::move(data));
}

py::array_t<float> numpy_from_tensor(const Tensor<float>& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<float> out(shape);
  std::memcpy(out.mutable_data(), t.data().data(), sizeof(float) * t.data().size());
  return out;
}

dawn::Dataset dataset_from_arrays(const FloatArray& images, const std::vector<int>& labels,
                                  int64_t num_classes, const char* split) {
  dawn::Dataset ds;
  ds.split = split;
  ds.images = tensor_from_numpy(images, 4, "images");
  ds.labels = labels;
  int64_t classes = num_classes;
  if (classes == 0)
    for (int y : labels) classes = std::max<int64_t>(classes, y + 1);
  for (int64_t i = 0; i < classes; ++i) ds.class_names.push_back("class_" + std::to_string(i));
  ds.validate();
  return ds;
}

struct PyModel {
  DawnConfig config;
  DawnModel<float> model;

  PyModel(const DawnConfig& cfg, uint64_t seed) : config(cfg), model(DawnModel<float>::build(cfg, seed)) {
    config.levels = cfg.resolved_levels();
  }

  py::tuple forward(const FloatArray& batch, bool training) {
    Tensor<float> x = tensor_from_numpy(batch, 4, "batch");
    dawn::NoGradGuard guard;
    auto result = model.forward(x, training);
    py::list levels;
    for (const auto& level : result.levels) {
      py::dict bands;
      bands["ll"] = numpy_from_tensor(level.bands.ll);
      bands["lh"] = numpy_from_tensor(level.bands.lh);
      bands["hl"] = numpy_from_tensor(level.bands.hl);
      bands["hh"] = numpy_from_tensor(level.bands.hh);
      levels.append(bands);
    }
    return py::make_tuple(numpy_from_tensor(result.log_probs), levels);
  }

  py::list decompose(const FloatArray& batch) {
    return forward(batch, false)[1].cast<py::list>();
  }

  py::array_t<float> reconstruct(const py::list& levels) {
    if (levels.empty()) throw std::invalid_argument("reconstruct: no levels given");
    if (static_cast<int>(levels.size()) != static_cast<int>(model.levels().size()))
      throw std::invalid_argument("reconstruct: expected " +
                                  std::to_string(model.levels().size()) + " levels, got " +
                                  std::to_string(levels.size()));
    dawn::NoGradGuard guard;
    std::vector<dawn::Lifting2D<float>::Subbands> bands;
    for (const auto& item : levels) {
      py::dict d = item.cast<py::dict>();
      dawn::Lifting2D<float>::Subbands sub;
      sub.ll = tensor_from_numpy(d["ll"].cast<FloatArray>(), 4, "ll");
      sub.lh = tensor_from_numpy(d["lh"].cast<FloatArray>(), 4, "lh");
      sub.hl = tensor_from_numpy(d["hl"].cast<FloatArray>(), 4, "hl");
      sub.hh = tensor_from_numpy(d["hh"].cast<FloatArray>(), 4, "hh");
      bands.push_back(std::move(sub));
    }
    Tensor<float> cur = bands.back().ll;
    for (size_t t = bands.size(); t-- > 0;) {
      auto b = bands[t];
      b.ll = cur;
      cur = model.levels()[t].inverse(b);
    }
    return numpy_from_tensor(cur);
  }

  int64_t parameter_count() const { return model.parameter_total(); }
  std::string describe() const { return model.describe(); }
  void save(const std::string& path) { dawn::save_checkpoint(model, path); }
  void load(const std::string& path) { dawn::load_checkpoint(model, path); }

  double evaluate(const FloatArray& images, const std::vector<int>& labels) {
    auto ds = dataset_from_arrays(images, labels, config.num_classes, "test");
    return dawn::evaluate(model, ds);
  }

  py::list fit(const FloatArray& train_images, const std::vector<int>& train_labels,
               const FloatArray& test_images, const std::vector<int>& test_labels, int epochs,
               double lr, double momentum, int64_t batch_size, uint64_t seed, double lambda1,
               double lambda2) {
    auto train_set = dataset_from_arrays(train_images, train_labels, config.num_classes, "train");
    auto test_set = dataset_from_arrays(test_images, test_labels, config.num_classes, "test");
    dawn::TrainConfig tc;
    tc.lr = lr;
    tc.momentum = momentum;
    tc.batch_size = batch_size;
    tc.epochs = epochs;
    tc.seed = seed;
    tc.lambda1 = lambda1;
    tc.lambda2 = lambda2;
    auto history = dawn::train(model, train_set, test_set, tc);
    py::list rows;
    for (const auto& e : history.epochs) {
      py::dict row;
      row["epoch"] = e.epoch;
      row["lr"] = e.lr;
      row["loss_total"] = e.loss.total;
      row["loss_ce"] = e.loss.cross_entropy;
      row["loss_huber"] = e.loss.huber_reg;
      row["loss_mean"] = e.loss.mean_reg;
      row["train_acc"] = e.train_acc;
      row["test_acc"] = e.test_acc;
      rows.append(row);
    }
    return rows;
  }
};

}  // namespace

PYBIND11_MODULE(_dawn, m) {
  m.doc() = "deep adaptive wavelet network: trainable lifting-scheme wavelets for classification";

  m.def("compute_levels", &dawn::compute_levels, py::arg("input_size"),
        "number of decomposition levels for a square input");

  py::class_<DawnConfig>(m, "DawnConfig")
      .def(py::init([](int64_t input_channels, int64_t input_size, int64_t init_channels,
                       int levels, int kernel_size, int hidden_layers, int64_t num_classes) {
             DawnConfig cfg;
             cfg.input_channels = input_channels;
             cfg.input_size = input_size;
             cfg.init_channels = init_channels;
             cfg.levels = levels;
             cfg.kernel_size = kernel_size;
             cfg.hidden_layers = hidden_layers;
             cfg.num_classes = num_classes;
             cfg.validate();
             return cfg;
           }),
           py::arg("input_channels") = 3, py::arg("input_size") = 32,
           py::arg("init_channels") = 16, py::arg("levels") = DawnConfig::kAutoLevels,
           py::arg("kernel_size") = 3, py::arg("hidden_layers") = 1, py::arg("num_classes") = 10)
      .def_readonly("input_channels", &DawnConfig::input_channels)
      .def_readonly("input_size", &DawnConfig::input_size)
      .def_readonly("init_channels", &DawnConfig::init_channels)
      .def_readonly("kernel_size", &DawnConfig::kernel_size)
      .def_readonly("hidden_layers", &DawnConfig::hidden_layers)
      .def_readonly("num_classes", &DawnConfig::num_classes)
      .def_property_readonly("levels", [](const DawnConfig& c) { return c.resolved_levels(); })
      .def_property_readonly("head_width", &DawnConfig::head_width);

  m.def(
      "param_count",
      [](const DawnConfig& cfg) {
        auto breakdown = dawn::param_count(cfg);
        py::dict out;
        out["initial"] = breakdown.initial;
        out["per_level"] = breakdown.per_level;
        out["classifier"] = breakdown.classifier;
        out["total"] = breakdown.total();
        if (auto reference = dawn::published_reference_count(cfg))
          out["published_reference"] = *reference;
        return out;
      },
      py::arg("config"), "closed-form trainable parameter counts");

  py::class_<PyModel>(m, "DawnModel")
      .def(py::init<const DawnConfig&, uint64_t>(), py::arg("config"), py::arg("seed") = 0)
      .def("forward", &PyModel::forward, py::arg("batch"), py::arg("training") = false,
           "returns (log_probs, per-level sub-band dicts)")
      .def("decompose", &PyModel::decompose, py::arg("batch"),
           "per-level LL/LH/HL/HH sub-bands of a [B,C,s,s] batch")
      .def("reconstruct", &PyModel::reconstruct, py::arg("levels"),
           "exact inverse of decompose back to the lifting-stack input")
      .def("parameter_count", &PyModel::parameter_count)
      .def("describe", &PyModel::describe)
      .def("save", &PyModel::save, py::arg("path"))
      .def("load", &PyModel::load, py::arg("path"))
      .def("evaluate", &PyModel::evaluate, py::arg("images"), py::arg("labels"))
      .def("fit", &PyModel::fit, py::arg("train_images"), py::arg("train_labels"),
           py::arg("test_images"), py::arg("test_labels"), py::arg("epochs") = 1,
           py::arg("lr") = 0.03, py::arg("momentum") = 0.9, py::arg("batch_size") = 16,
           py::arg("seed") = 0, py::arg("lambda1") = 0.1, py::arg("lambda2") = 0.1)
      .def_readonly("config", &PyModel::config);

  m.def(
      "synth_textures",
      [](int64_t per_class, int64_t size, uint64_t seed) {
        auto [train, test] = dawn::synth_textures(per_class, size, seed);
        return py::make_tuple(numpy_from_tensor(train.images), train.labels,
                              numpy_from_tensor(test.images), test.labels);
      },
      py::arg("per_class") = 50, py::arg("size") = 32, py::arg("seed") = 7,
      "four-class synthetic texture set: (train_images, train_labels, test_images, test_labels)");
}
