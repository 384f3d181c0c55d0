#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "cli.hpp"
#include "exmo/autoencoder.hpp"
#include "exmo/data.hpp"
#include "exmo/errors.hpp"
#include "exmo/evaluation.hpp"
#include "exmo/gradcheck.hpp"
#include "exmo/model_io.hpp"
#include "exmo/parallel.hpp"
#include "exmo/scoring.hpp"
#include "exmo/ssq.hpp"
#include "exmo/synthcam.hpp"
#include "exmo/train.hpp"

namespace py = pybind11;
using namespace exmo;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

// (T, H, W) float32 array <-> frame sequence.
FloatArray to_array(const FrameSequence& seq) {
  FloatArray out({static_cast<py::ssize_t>(seq.size()), static_cast<py::ssize_t>(seq.height()),
                  static_cast<py::ssize_t>(seq.width())});
  float* dst = out.mutable_data();
  for (const auto& f : seq.frames) dst = std::copy(f.pixels.begin(), f.pixels.end(), dst);
  return out;
}

FrameSequence to_sequence(const FloatArray& frames, const std::string& source_id) {
  if (frames.ndim() != 3) throw ShapeError("expected a (frames, height, width) array");
  const int t = static_cast<int>(frames.shape(0)), h = static_cast<int>(frames.shape(1)),
            w = static_cast<int>(frames.shape(2));
  FrameSequence seq;
  seq.source_id = source_id;
  const float* src = frames.data();
  for (int i = 0; i < t; ++i, src += static_cast<std::size_t>(h) * w) {
    seq.frames.push_back({h, w, std::vector<float>(src, src + static_cast<std::size_t>(h) * w)});
  }
  seq.number_frames();
  seq.validate();
  return seq;
}

FloatArray tensor_to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  FloatArray out(shape);
  std::memcpy(out.mutable_data(), t.data(), t.size() * sizeof(float));
  return out;
}

Tensor array_to_tensor(const FloatArray& a) {
  Shape shape;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(static_cast<int>(a.shape(i)));
  Tensor t(shape);
  std::memcpy(t.data(), a.data(), t.size() * sizeof(float));
  return t;
}

py::dict score_to_dict(const SsqScore& s) {
  py::dict d;
  d["nausea_raw"] = s.nausea_raw;
  d["oculomotor_raw"] = s.oculomotor_raw;
  d["disorientation_raw"] = s.disorientation_raw;
  d["total"] = s.total;
  d["flags"] = flags_string(s.flags);
  return d;
}

SsqMode parse_mode(const std::string& mode) {
  if (mode == "literal") return SsqMode::literal;
  if (mode == "kennedy") return SsqMode::kennedy;
  throw ArgumentError("unknown SSQ mode '" + mode + "'");
}

std::array<int, kSymptomCount> to_ratings(const std::vector<int>& ratings) {
  if (ratings.size() != kSymptomCount) throw ValidationError("expected 16 ratings in questionnaire order");
  std::array<int, kSymptomCount> out{};
  std::copy(ratings.begin(), ratings.end(), out.begin());
  return out;
}

}  // namespace

PYBIND11_MODULE(_exmo, m) {
  m.doc() = "Exceptional-motion scoring: reconstruction network, SSQ scoring and correlation";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ValueError);
  py::register_exception<IngestionError>(m, "IngestionError", PyExc_OSError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_OSError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  m.def("set_threads", &set_thread_count, py::arg("threads"));

  // ------------------------------------------------------------- frames

  m.def(
      "load_frames",
      [](const std::filesystem::path& path) {
        const auto seq = load_frames(path);
        return py::make_tuple(to_array(seq), seq.source_id);
      },
      py::arg("path"), "Load a frame directory or raw clip as ((T, H, W) float32 array, source id).");
  m.def(
      "resize",
      [](const FloatArray& frames, int height, int width) {
        return to_array(resize(to_sequence(frames, ""), height, width));
      },
      py::arg("frames"), py::arg("height") = kFrameSize, py::arg("width") = kFrameSize);
  m.def(
      "temporal_phases",
      [](int n_frames, const std::vector<int>& strides) {
        FrameSequence seq;
        for (int i = 0; i < n_frames; ++i) seq.frames.push_back(Frame::filled(1, 1, 0.0f));
        seq.number_frames();
        std::vector<std::vector<int>> out;
        for (const auto& sub : temporal_augment(seq, strides)) out.push_back(sub.frame_numbers);
        return out;
      },
      py::arg("n_frames"), py::arg("strides"), "1-based frame numbers of every stride phase.");
  m.def(
      "synth",
      [](const std::string& texture, double velocity, int n_frames, int size, std::uint64_t seed, int cell) {
        SynthSpec spec;
        spec.texture = parse_texture(texture);
        spec.velocity = velocity;
        spec.n_frames = n_frames;
        spec.size = size;
        spec.seed = seed;
        spec.cell = cell;
        return to_array(generate(spec));
      },
      py::arg("texture") = "noise", py::arg("velocity") = 1.0, py::arg("n_frames") = 32,
      py::arg("size") = kFrameSize, py::arg("seed") = 0, py::arg("cell") = 16);

  // -------------------------------------------------------------- model

  py::class_<Model>(m, "Model")
      .def_property_readonly("base_channels", [](const Model& model) { return model.config.base_channels; })
      .def_property_readonly("input_size", [](const Model& model) { return model.config.input_size; })
      .def_property_readonly("seed", [](const Model& model) { return model.config.seed; })
      .def_property_readonly("parameter_count", &Model::parameter_count)
      .def_property_readonly("loss_history", [](const Model& model) { return model.metadata.loss_history; })
      .def("__eq__", [](const Model& a, const Model& b) { return a == b; });

  m.def(
      "build_model",
      [](int base_channels, int input_size, std::uint64_t seed) {
        NetworkConfig cfg;
        cfg.base_channels = base_channels;
        cfg.input_size = input_size;
        cfg.seed = seed;
        return build<float>(cfg);
      },
      py::arg("base_channels") = 16, py::arg("input_size") = kFrameSize, py::arg("seed") = 0);
  m.def(
      "encoder_ladder",
      [](int base_channels, int input_size) {
        NetworkConfig cfg;
        cfg.base_channels = base_channels;
        cfg.input_size = input_size;
        std::vector<std::pair<int, int>> out;
        for (const auto& s : encoder_ladder(cfg)) out.emplace_back(s.channels, s.size);
        return out;
      },
      py::arg("base_channels") = 16, py::arg("input_size") = kFrameSize);
  m.def(
      "forward", [](const Model& model, const FloatArray& stack) { return tensor_to_array(forward(model, array_to_tensor(stack))); },
      py::arg("model"), py::arg("stack"), "Reconstruct a (5, S, S) stack.");
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));
  m.def(
      "train",
      [](Model& model, const FloatArray& stacks, int epochs, int batch_size, double learning_rate,
         std::int64_t max_steps, std::uint64_t shuffle_seed) {
        if (stacks.ndim() != 4) throw ShapeError("expected an (N, 5, S, S) array of stacks");
        StackList data;
        const std::size_t per = static_cast<std::size_t>(stacks.shape(1)) * stacks.shape(2) * stacks.shape(3);
        for (py::ssize_t i = 0; i < stacks.shape(0); ++i) {
          Tensor t(Shape{static_cast<int>(stacks.shape(1)), static_cast<int>(stacks.shape(2)),
                         static_cast<int>(stacks.shape(3))});
          std::memcpy(t.data(), stacks.data() + i * per, per * sizeof(float));
          data.items().push_back({std::move(t), {"stack", static_cast<int>(i) + 1, 1}});
        }
        TrainPlan plan;
        plan.epochs = epochs;
        plan.batch_size = batch_size;
        plan.adam.learning_rate = learning_rate;
        plan.max_steps = max_steps;
        plan.shuffle_seed = shuffle_seed;
        py::gil_scoped_release release;
        return train(model, data, plan).losses;
      },
      py::arg("model"), py::arg("stacks"), py::arg("epochs") = 1, py::arg("batch_size") = 8,
      py::arg("learning_rate") = 1e-3, py::arg("max_steps") = -1, py::arg("shuffle_seed") = 0,
      "Train in place on an (N, 5, S, S) array; returns the per-step losses.");

  // ------------------------------------------------------------ scoring

  m.def(
      "frame_error",
      [](const FloatArray& a, const FloatArray& b) {
        if (a.size() != b.size()) throw ShapeError("frames differ in size");
        return frame_error(std::span<const float>(a.data(), a.size()), std::span<const float>(b.data(), b.size()));
      },
      py::arg("original"), py::arg("reconstructed"));
  m.def("motion_score", &motion_score, py::arg("error"), py::arg("width"), py::arg("height"));
  m.def(
      "score_video",
      [](const Model& model, const FloatArray& frames, const std::string& video_id) {
        const auto series = score_video(model, to_sequence(frames, video_id));
        py::dict d;
        std::vector<int> frame;
        std::vector<double> e, s;
        for (const auto& entry : series.entries) {
          frame.push_back(entry.frame);
          e.push_back(entry.error);
          s.push_back(entry.motion);
        }
        d["video_id"] = series.video_id;
        d["frame"] = py::array(py::cast(frame));
        d["e"] = py::array(py::cast(e));
        d["s_m"] = py::array(py::cast(s));
        return d;
      },
      py::arg("model"), py::arg("frames"), py::arg("video_id") = "video");
  m.def(
      "aggregate",
      [](const std::vector<double>& s_m, const std::string& method) {
        ScoreSeries series{"v", 1, 1, {}};
        int f = 1;
        for (double v : s_m) series.entries.push_back({f++, v, v});
        return aggregate(series, Aggregation::parse(method));
      },
      py::arg("s_m"), py::arg("method") = "mean");

  // ---------------------------------------------------------------- ssq

  m.def(
      "ssq_symptoms",
      []() {
        std::vector<std::string> out;
        for (const auto& s : symptom_table()) out.emplace_back(s.name);
        return out;
      });
  m.def(
      "score_ssq",
      [](const std::vector<int>& ratings, const std::string& mode) {
        return score_to_dict(score_response({"", "", SsqPhase::post, to_ratings(ratings)}, parse_mode(mode)));
      },
      py::arg("ratings"), py::arg("mode") = "literal");
  m.def(
      "ssq_delta",
      [](const std::vector<int>& pre, const std::vector<int>& post, const std::string& mode) {
        const auto sm = parse_mode(mode);
        return score_to_dict(diff_pre_post(score_response({"", "", SsqPhase::pre, to_ratings(pre)}, sm),
                                           score_response({"", "", SsqPhase::post, to_ratings(post)}, sm)));
      },
      py::arg("pre"), py::arg("post"), py::arg("mode") = "literal");
  m.def(
      "classify_total", [](double total) { return to_string(classify_total(total)); }, py::arg("total"));

  // --------------------------------------------------------- evaluation

  m.def(
      "plcc", [](const std::vector<double>& x, const std::vector<double>& y) { return plcc(x, y); }, py::arg("x"),
      py::arg("y"));

  m.def(
      "gradcheck",
      [](const std::string& precision) {
        std::vector<py::dict> rows;
        for (const auto& r : run_gradcheck(parse_precision(precision))) {
          py::dict d;
          d["op"] = r.op;
          d["max_rel_error"] = r.max_rel_error;
          d["tolerance"] = r.tolerance;
          d["checked"] = r.checked;
          d["pass"] = r.pass();
          rows.push_back(d);
        }
        return rows;
      },
      py::arg("precision") = "double");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return run_cli(args);
      },
      py::arg("args"), "Run a command-line invocation (without the program name); returns the exit code.");
}
