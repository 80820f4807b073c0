// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>

#include "fvr/error.hpp"
#include "fvr/experiment.hpp"
#include "fvr/geometry.hpp"
#include "fvr/io.hpp"
#include "fvr/metrics.hpp"
#include "fvr/nn/model.hpp"
#include "fvr/nn/train.hpp"
#include "fvr/optim.hpp"
#include "fvr/phantom.hpp"
#include "fvr/sampler.hpp"
#include "fvr/subvolume.hpp"

namespace py = pybind11;
using namespace fvr;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

FloatArray frame_array(const Frame2D& f) {
  FloatArray a({f.height, f.width});
  std::copy(f.pixels.begin(), f.pixels.end(), a.mutable_data());
  return a;
}

Frame2D frame_from(const FloatArray& a, double spacing) {
  if (a.ndim() != 2) throw py::value_error("frame must be 2-D");
  Frame2D f(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), spacing);
  std::copy(a.data(), a.data() + a.size(), f.pixels.begin());
  return f;
}

FloatArray volume_array(const Volume3D& v) {
  FloatArray a({v.depth, v.height, v.width});
  std::copy(v.voxels.begin(), v.voxels.end(), a.mutable_data());
  return a;
}

Volume3D volume_from(const FloatArray& a, std::array<double, 3> spacing) {
  if (a.ndim() != 3) throw py::value_error("volume must be 3-D");
  Volume3D v(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
             static_cast<int>(a.shape(2)), {spacing[0], spacing[1], spacing[2]});
  std::copy(a.data(), a.data() + a.size(), v.voxels.begin());
  return v;
}

py::array_t<double> matrix_array(const HomTransform& t) {
  py::array_t<double> a({4, 4});
  auto m = a.mutable_unchecked<2>();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = t.matrix()(r, c);
  }
  return a;
}

HomTransform matrix_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(0) != 4 || a.shape(1) != 4) {
    throw py::value_error("expected a 4x4 matrix");
  }
  Mat4 m;
  auto v = a.unchecked<2>();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = v(r, c);
  }
  return HomTransform::from_matrix(m);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rigid slice-to-volume registration: geometry, simulation, baselines and the net.";

  py::register_exception<Error>(m, "FvrError", PyExc_RuntimeError);

  py::class_<RigidParams>(m, "RigidParams")
      .def(py::init<>())
      .def(py::init([](double tx, double ty, double tz, double ax, double ay, double az) {
             return RigidParams{tx, ty, tz, ax, ay, az};
           }),
           py::arg("tx") = 0.0, py::arg("ty") = 0.0, py::arg("tz") = 0.0, py::arg("ax") = 0.0,
           py::arg("ay") = 0.0, py::arg("az") = 0.0)
      .def_readwrite("tx", &RigidParams::tx)
      .def_readwrite("ty", &RigidParams::ty)
      .def_readwrite("tz", &RigidParams::tz)
      .def_readwrite("ax", &RigidParams::ax)
      .def_readwrite("ay", &RigidParams::ay)
      .def_readwrite("az", &RigidParams::az)
      .def("to_list", [](const RigidParams& p) {
        const auto a = p.to_array();
        return std::vector<double>(a.begin(), a.end());
      })
      .def(py::self == py::self)
      .def("__repr__", [](const RigidParams& p) {
        return "RigidParams(" + std::to_string(p.tx) + ", " + std::to_string(p.ty) + ", " +
               std::to_string(p.tz) + ", " + std::to_string(p.ax) + ", " +
               std::to_string(p.ay) + ", " + std::to_string(p.az) + ")";
      });

  m.def("params_to_matrix", [](const RigidParams& p) { return matrix_array(params_to_matrix(p)); });
  m.def("matrix_to_params", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    return matrix_to_params(matrix_from(a));
  });
  m.def("relative_params", &relative_params, py::arg("theta_n"), py::arg("theta_init"));
  m.def("corner_distance_error", &corner_distance_error, py::arg("a"), py::arg("b"),
        py::arg("height_px"), py::arg("width_px"), py::arg("spacing_mm"));

  py::class_<Frame2D>(m, "Frame")
      .def(py::init(&frame_from), py::arg("pixels"), py::arg("spacing") = 1.0)
      .def_readonly("spacing", &Frame2D::spacing)
      .def_property_readonly("shape", [](const Frame2D& f) { return py::make_tuple(f.height, f.width); })
      .def("array", &frame_array);

  py::class_<Volume3D>(m, "Volume")
      .def(py::init(&volume_from), py::arg("voxels"),
           py::arg("spacing") = std::array<double, 3>{1.0, 1.0, 1.0})
      .def_property_readonly("spacing", [](const Volume3D& v) {
        return py::make_tuple(v.spacing.z, v.spacing.y, v.spacing.x);
      })
      .def_property_readonly("shape", [](const Volume3D& v) {
        return py::make_tuple(v.depth, v.height, v.width);
      })
      .def("array", &volume_array);

  py::enum_<Trajectory>(m, "Trajectory")
      .value("linear", Trajectory::kLinear)
      .value("fan", Trajectory::kFan);

  py::class_<SweepDataset>(m, "Sweep")
      .def_readonly("volume", &SweepDataset::volume)
      .def_readonly("frames", &SweepDataset::frames)
      .def_readonly("poses", &SweepDataset::poses)
      .def_readonly("seed", &SweepDataset::seed)
      .def_readonly("trajectory", &SweepDataset::trajectory)
      .def("__len__", &SweepDataset::size);

  m.def("phantom", &phantom_generate, py::arg("seed"), py::arg("depth") = 48,
        py::arg("height") = 48, py::arg("width") = 48, py::arg("spacing_mm") = 2.0);
  m.def(
      "simulate_sweep",
      [](const Volume3D& v, std::uint64_t seed, int n_frames, Trajectory t, int frame_size) {
        SweepOptions o;
        o.frame_height = o.frame_width = frame_size;
        return sweep_simulate(v, seed, n_frames, t, o);
      },
      py::arg("volume"), py::arg("seed"), py::arg("n_frames") = 61,
      py::arg("trajectory") = Trajectory::kLinear, py::arg("frame_size") = 36);
  m.def(
      "sample_slice",
      [](const Volume3D& v, const RigidParams& theta, int h, int w, double spacing) {
        return sample_slice(v, theta, h, w, spacing).to_frame();
      },
      py::arg("volume"), py::arg("theta"), py::arg("height"), py::arg("width"),
      py::arg("spacing_mm"));
  m.def("load_volume", &load_volume);
  m.def("save_volume", &save_volume);
  m.def("load_sweep", &load_sweep);
  m.def("save_sweep", &save_sweep);

  m.def("mse", py::overload_cast<const Frame2D&, const Frame2D&>(&mse));
  m.def("ncc", py::overload_cast<const Frame2D&, const Frame2D&>(&ncc));

  py::class_<SubvolumeSpec>(m, "SubvolumeSpec")
      .def(py::init([](int d, int h, int w, int r) { return SubvolumeSpec{d, h, w, r, 0.0}; }),
           py::arg("crop_d") = 8, py::arg("crop_h") = 32, py::arg("crop_w") = 32,
           py::arg("frame_range") = 10)
      .def_readwrite("crop_d", &SubvolumeSpec::crop_d)
      .def_readwrite("crop_h", &SubvolumeSpec::crop_h)
      .def_readwrite("crop_w", &SubvolumeSpec::crop_w)
      .def_readwrite("frame_range", &SubvolumeSpec::frame_range);

  py::class_<RegistrationPair>(m, "RegistrationPair")
      .def_readonly("frame", &RegistrationPair::frame)
      .def_readonly("subvolume", &RegistrationPair::subvolume)
      .def_readonly("label", &RegistrationPair::label)
      .def_readonly("frame_index", &RegistrationPair::frame_index)
      .def_readonly("init_index", &RegistrationPair::init_index);
  m.def("make_pair", &make_pair, py::arg("sweep"), py::arg("frame_index"),
        py::arg("init_index"), py::arg("spec") = SubvolumeSpec{8, 32, 32, 10, 0.0});

  py::class_<RegistrationResult>(m, "RegistrationResult")
      .def_readonly("theta", &RegistrationResult::theta_est)
      .def_readonly("objective_trace", &RegistrationResult::objective_trace)
      .def_readonly("iterations", &RegistrationResult::iterations)
      .def_readonly("evaluations", &RegistrationResult::evaluations)
      .def_readonly("wall_time_s", &RegistrationResult::wall_time_s)
      .def_readonly("converged", &RegistrationResult::converged);
  m.def(
      "register",
      [](const Frame2D& frame, const Volume3D& subvol, const RigidParams& theta0,
         const std::string& metric, const std::string& optimizer, int max_iters) {
        OptimConfig c;
        c.metric = parse_metric(metric);
        c.optimizer = parse_optimizer(optimizer);
        c.max_iters = max_iters;
        py::gil_scoped_release release;
        return register_iterative(frame, subvol, theta0, c);
      },
      py::arg("frame"), py::arg("subvolume"), py::arg("theta0") = RigidParams{},
      py::arg("metric") = "mse", py::arg("optimizer") = "powell", py::arg("max_iters") = 200);

  py::class_<nn::NetParams>(m, "NetParams")
      .def_static("load", &nn::NetParams::load)
      .def("save", &nn::NetParams::save)
      .def_property_readonly("parameter_count", &nn::NetParams::parameter_count)
      .def("names", [](const nn::NetParams& p) {
        std::vector<std::string> out;
        for (const nn::NamedTensor& t : p.tensors()) out.push_back(t.name);
        return out;
      });
  m.def(
      "predict",
      [](const RegistrationPair& pair, const nn::NetParams& params, const std::string& config) {
        ExperimentConfig c = ExperimentConfig::defaults();
        if (!config.empty()) c.apply_file(config);
        c.finalize();
        return nn::infer(pair.frame, pair.subvolume, params, c.net).theta;
      },
      py::arg("pair"), py::arg("params"), py::arg("config") = std::string(),
      "Runs the net on one pair; config names a key=value file used at training time.");
}
