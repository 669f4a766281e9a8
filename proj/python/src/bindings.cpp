#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "afpb/config.hpp"
#include "afpb/dataset.hpp"
#include "afpb/error.hpp"
#include "afpb/evaluate.hpp"
#include "afpb/experiment.hpp"
#include "afpb/model.hpp"
#include "afpb/occsim.hpp"
#include "afpb/saliency.hpp"

namespace py = pybind11;
using namespace afpb;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Images cross the boundary as (H, W) or (H, W, C) uint8 arrays.
Image to_image(const U8Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw py::value_error("image must be (H, W) or (H, W, C)");
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  std::vector<std::uint8_t> px(a.data(), a.data() + a.size());
  return Image(w, h, c, std::move(px));
}

U8Array from_image(const Image& img) {
  std::vector<py::ssize_t> shape{img.height(), img.width()};
  if (img.channels() != 1) shape.push_back(img.channels());
  U8Array out(shape);
  std::memcpy(out.mutable_data(), img.pixels().data(), img.pixels().size());
  return out;
}

py::tuple rect_tuple(const Rect& r) { return py::make_tuple(r.x, r.y, r.w, r.h); }

py::dict sample_dict(const PersonSample& s) {
  py::dict d;
  d["id"] = s.id;
  d["identity"] = s.identity;
  d["occlusion"] = std::string(to_string(s.occlusion));
  d["image"] = from_image(*s.image);
  d["mask"] = s.mask ? py::object(from_image(*s.mask)) : py::none();
  return d;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["shots"] = r.shots;
  d["trials"] = r.trials;
  d["probes"] = r.probes;
  d["cmc"] = r.cmc;
  d["rank1"] = r.rank1;
  d["rank5"] = r.rank5;
  d["rank10"] = r.rank10;
  return d;
}

MultiShotRule rule_of(const std::string& name) {
  if (name == "min") return MultiShotRule::Min;
  if (name == "mean") return MultiShotRule::Mean;
  throw py::value_error("rule must be 'min' or 'mean'");
}

}  // namespace

PYBIND11_MODULE(_afpb, m) {
  m.doc() = "Occlusion simulation, multi-task training and CMC evaluation for occluded person re-id";

  static py::exception<Error> error_type(m, "AfpbError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      // The instance carries the error code name, e.g. err.code == "OutOfBounds".
      py::object err = py::reinterpret_borrow<py::object>(error_type)(e.what());
      err.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), err.ptr());
    }
  });

  // imaging
  m.def("load_image", [](const std::filesystem::path& p) { return from_image(load_image(p)); });
  m.def("save_image", [](const U8Array& a, const std::filesystem::path& p) { save_image(to_image(a), p); });
  m.def("resize", [](const U8Array& a, int w, int h) { return from_image(resize(to_image(a), w, h)); },
        py::arg("image"), py::arg("width"), py::arg("height"));
  m.def("crop", [](const U8Array& a, int x, int y, int w, int h) { return from_image(crop(to_image(a), {x, y, w, h})); },
        py::arg("image"), py::arg("x"), py::arg("y"), py::arg("width"), py::arg("height"));
  m.def("jittered_center_crop",
        [](const U8Array& a, int side, int max_jitter, std::uint64_t seed) {
          Rng rng(seed);
          return from_image(jittered_center_crop(to_image(a), side, max_jitter, rng));
        },
        py::arg("image"), py::arg("side"), py::arg("max_jitter"), py::arg("seed") = 0);

  // occsim
  py::class_<OcclusionConfig>(m, "OcclusionConfig")
      .def(py::init<>())
      .def_readwrite("patch_side", &OcclusionConfig::patch_side)
      .def_readwrite("ratio_lo", &OcclusionConfig::ratio_lo)
      .def_readwrite("ratio_hi", &OcclusionConfig::ratio_hi)
      .def_readwrite("aspect_lo", &OcclusionConfig::aspect_lo)
      .def_readwrite("aspect_hi", &OcclusionConfig::aspect_hi)
      .def_readwrite("background_band", &OcclusionConfig::background_band)
      .def_readwrite("seed", &OcclusionConfig::seed)
      .def_readwrite("regenerate_per_epoch", &OcclusionConfig::regenerate_per_epoch)
      .def("validate", &OcclusionConfig::validate);

  m.def("simulate_occlusion",
        [](const U8Array& a, const OcclusionConfig& cfg, std::uint64_t seed) {
          Rng rng(seed);
          const auto [img, rec] = simulate_occlusion(to_image(a), cfg, rng);
          py::dict record;
          record["patch_rect"] = rect_tuple(rec.patch_rect);
          record["target_rect"] = rect_tuple(rec.target_rect);
          record["area_ratio"] = rec.area_ratio;
          return py::make_tuple(from_image(img), record);
        },
        py::arg("image"), py::arg("config") = OcclusionConfig{}, py::arg("seed") = 0,
        "Returns (occluded image, record with patch_rect, target_rect and area_ratio).");

  // dataset
  m.def("generate_synthetic_dataset",
        [](int identities, int per_identity, int width, int height, std::uint64_t seed) {
          Rng rng(seed);
          py::list out;
          for (const auto& s : generate_synthetic_dataset({identities, per_identity, width, height}, rng))
            out.append(sample_dict(s));
          return out;
        },
        py::arg("identities") = 20, py::arg("per_identity") = 10, py::arg("width") = 32, py::arg("height") = 64,
        py::arg("seed") = 0);
  m.def("scan_dataset", [](const std::filesystem::path& root) {
    py::list out;
    for (const auto& s : scan_dataset(root)) out.append(sample_dict(s));
    return out;
  });

  // model losses
  m.def("softmax", [](const std::vector<double>& z) { return softmax(z); });
  m.def("id_loss", [](const std::vector<double>& z, int label) { return id_loss(z, label); }, py::arg("logits"),
        py::arg("label"));
  m.def("obc_loss", [](const std::vector<double>& z, int flag) { return obc_loss(z, flag); }, py::arg("logits"),
        py::arg("flag"));
  m.def("multi_task_loss", &multi_task_loss, py::arg("id_loss"), py::arg("obc_loss"), py::arg("alpha"));

  py::class_<ModelParams>(m, "Model")
      .def_readonly("num_classes", &ModelParams::num_classes)
      .def_property_readonly("feature_dim", [](const ModelParams& p) { return p.arch.feature_dim(); })
      .def_property_readonly("input_size", [](const ModelParams& p) { return p.arch.input_size; })
      .def("parameter_count", &ModelParams::parameter_count)
      .def("save", [](const ModelParams& p, const std::filesystem::path& path) { save_checkpoint(p, path); })
      .def("extract_feature",
           [](const ModelParams& p, const U8Array& a) { return extract_feature(p, prepare_input(to_image(a), p.arch)); },
           "Feature of an image of any size (resized to the network input).")
      .def("saliency",
           [](const ModelParams& p, const U8Array& a) {
             const Image img = to_image(a);
             const SaliencyMap s = resample(saliency_map(p, prepare_input(img, p.arch)), img.width(), img.height());
             F64Array out({s.height, s.width});
             std::memcpy(out.mutable_data(), s.values.data(), s.values.size() * sizeof(double));
             return out;
           },
           "Saliency map in [0, 1] at the image's own resolution.");
  m.def("load_checkpoint", [](const std::filesystem::path& p) { return load_checkpoint(p); });

  // evaluate
  m.def("l2_distance", [](const std::vector<double>& a, const std::vector<double>& b) { return l2_distance(a, b); });
  m.def("cmc_curve",
        [](const std::vector<std::pair<std::vector<double>, int>>& probes, const FeatureGallery& gallery,
           const std::string& rule) {
          std::vector<ProbeFeature> pf;
          for (const auto& [f, id] : probes) pf.push_back({f, id});
          const int shots = gallery.empty() ? 1 : static_cast<int>(gallery.begin()->second.size());
          return cmc_curve(pf, gallery, shots, rule_of(rule)).cmc;
        },
        py::arg("probes"), py::arg("gallery"), py::arg("rule") = "min",
        "probes: [(feature, identity)], gallery: {identity: [feature, ...]}. Returns cmc[r] for rank r + 1.");

  // saliency
  m.def("binarize",
        [](const F64Array& map, double q) {
          if (map.ndim() != 2) throw py::value_error("map must be 2-D");
          SaliencyMap s{static_cast<int>(map.shape(1)), static_cast<int>(map.shape(0)),
                        std::vector<double>(map.data(), map.data() + map.size())};
          return from_image(binarize(s, q));
        },
        py::arg("map"), py::arg("q") = 0.5);
  m.def("detection_precision", [](const U8Array& salient, const U8Array& annotation) {
    return detection_precision(to_image(salient), to_image(annotation)).precision;
  });

  // experiments
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_static("parse", &parse_config)
      .def_static("load", [](const std::filesystem::path& p) { return load_config(p); })
      .def("format", [](const ExperimentConfig& c) { return format_config(c); })
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("shots", &ExperimentConfig::shots)
      .def_readwrite("trials", &ExperimentConfig::trials)
      .def_readwrite("use_os", &ExperimentConfig::use_os)
      .def_readwrite("use_obc", &ExperimentConfig::use_obc)
      .def_readwrite("replicates", &ExperimentConfig::replicates)
      .def_readwrite("jobs", &ExperimentConfig::jobs)
      .def_property(
          "alpha", [](const ExperimentConfig& c) { return c.train.alpha; },
          [](ExperimentConfig& c, double a) { c.train.alpha = a; })
      .def_property(
          "iterations", [](const ExperimentConfig& c) { return c.train.iterations; },
          [](ExperimentConfig& c, int n) { c.train.iterations = n; })
      .def_property(
          "learning_rate", [](const ExperimentConfig& c) { return c.train.learning_rate; },
          [](ExperimentConfig& c, double lr) { c.train.learning_rate = lr; })
      .def_property(
          "identities", [](const ExperimentConfig& c) { return c.data.synthetic.identities; },
          [](ExperimentConfig& c, int n) { c.data.synthetic.identities = n; })
      .def_property(
          "per_identity", [](const ExperimentConfig& c) { return c.data.synthetic.per_identity; },
          [](ExperimentConfig& c, int n) { c.data.synthetic.per_identity = n; })
      .def_property(
          "data_root", [](const ExperimentConfig& c) { return c.data.root; },
          [](ExperimentConfig& c, const std::string& r) { c.data.root = r; })
      .def_readwrite("occlusion", &ExperimentConfig::occlusion);

  m.def("train",
        [](const ExperimentConfig& cfg) {
          cfg.validate();
          py::gil_scoped_release release;
          const SeedPlan seeds = SeedPlan::from(cfg.seed);
          const PreparedData data = prepare_data(cfg, seeds);
          TrainResult r = run_training(cfg, seeds, data);
          std::vector<std::array<double, 3>> history;
          for (const auto& h : r.history) history.push_back({h.total, h.id, h.obc});
          return std::make_pair(std::move(r.params), std::move(history));
        },
        "Trains on the configured data; returns (model, [(total, id_loss, obc_loss)] per iteration).");
  m.def("evaluate",
        [](const ExperimentConfig& cfg, const ModelParams& params) {
          cfg.validate();
          std::vector<EvalReport> reports;
          {
            py::gil_scoped_release release;
            const SeedPlan seeds = SeedPlan::from(cfg.seed);
            reports = run_evaluation(cfg, seeds, prepare_data(cfg, seeds), params);
          }
          py::list out;
          for (const auto& r : reports) out.append(report_dict(r));
          return out;
        },
        "CMC reports, one per configured shot count, on the test identities of the config's split.");
  m.def("run_ablation", [](const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<AblationCell> cells;
    {
      py::gil_scoped_release release;
      cells = run_ablation(cfg, default_ablation_cells());
    }
    py::dict out;
    for (const auto& c : cells) out[py::str(c.name)] = c.mean_rank(0, 1);
    return out;
  }, "Mean rank-1 (first shot count) of the four component cells.");
}
