#include "pipescan/eval.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pipescan/forward.h"
#include "pipescan/io.h"
#include "pipescan/preproc.h"
#include "pipescan/rng.h"

namespace pipescan {

long ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0L);
}

double ConfusionMatrix::accuracy() const {
  const long t = total();
  if (t == 0) return 0.0;
  long diag = 0;
  for (int c = 0; c < n_classes; ++c) diag += at(c, c);
  return static_cast<double>(diag) / static_cast<double>(t);
}

std::vector<double> ConfusionMatrix::row_normalized() const {
  std::vector<double> out(counts.size(), 0.0);
  for (int r = 0; r < n_classes; ++r) {
    long sum = 0;
    for (int c = 0; c < n_classes; ++c) sum += at(r, c);
    if (sum == 0) continue;
    for (int c = 0; c < n_classes; ++c)
      out[r * n_classes + c] = static_cast<double>(at(r, c)) / static_cast<double>(sum);
  }
  return out;
}

std::string ConfusionMatrix::to_csv() const {
  std::ostringstream os;
  os << "actual\\predicted";
  for (int c = 0; c < n_classes; ++c) os << "," << c;
  os << "\n";
  for (int r = 0; r < n_classes; ++r) {
    os << r;
    for (int c = 0; c < n_classes; ++c) os << "," << at(r, c);
    os << "\n";
  }
  return os.str();
}

ConfusionMatrix confusion_and_accuracy(const std::vector<int>& predictions,
                                       const std::vector<int>& labels, int n_classes,
                                       double* accuracy) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("confusion_and_accuracy: length mismatch");
  ConfusionMatrix cm;
  cm.n_classes = n_classes;
  cm.counts.assign(static_cast<std::size_t>(n_classes) * n_classes, 0L);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes || predictions[i] < 0 ||
        predictions[i] >= n_classes)
      throw std::invalid_argument("confusion_and_accuracy: class index out of range");
    ++cm.at(labels[i], predictions[i]);
  }
  if (accuracy) *accuracy = cm.accuracy();
  return cm;
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm) {
  io::write_text_file(path, cm.to_csv());
}

void write_confusion_pgm(const std::filesystem::path& path, const ConfusionMatrix& cm) {
  Image img;
  img.grid.nx = cm.n_classes;
  img.grid.nz = cm.n_classes;
  img.grid.x_min_m = 0;
  img.grid.x_max_m = cm.n_classes;
  img.grid.z_min_m = 0;
  img.grid.z_max_m = cm.n_classes;
  img.values = cm.row_normalized();
  io::write_pgm(path, img);
}

Learner learner_from_name(const std::string& name) {
  if (name == "cnn") return Learner::cnn;
  if (name == "knn") return Learner::knn;
  throw std::invalid_argument("unknown learner: " + name);
}

ImagingMethod imaging_from_name(const std::string& name) {
  if (name == "bpa") return ImagingMethod::bpa;
  if (name == "baa") return ImagingMethod::baa;
  throw std::invalid_argument("unknown imaging method: " + name);
}

ScenarioSpec scenario_by_id(const std::string& id) {
  ScenarioSpec s;
  s.id = id;
  if (id == "raw") {
    s.stage = PipelineStage::raw;
  } else if (id == "clutter_reduced") {
    s.stage = PipelineStage::clutter_reduced;
  } else if (id == "reference") {
    // defaults
  } else if (id == "lower8") {
    s.band_subset = BandSubset::lower8;
  } else if (id == "upper8") {
    s.band_subset = BandSubset::upper8;
  } else if (id == "df75") {
    s.f_step_override_hz = 75e6;
  } else if (id == "ns23") {
    s.n_positions_override = 23;
  } else if (id == "l06") {
    s.scan_length_override_m = 0.6;
  } else if (id == "deltaf50") {
    s.band_spacing_override_hz = 50e6;
  } else {
    throw std::invalid_argument("unknown scenario id: " + id);
  }
  return s;
}

std::vector<std::string> scenario_ids() {
  return {"raw",    "clutter_reduced", "reference", "lower8", "upper8",
          "df75",   "ns23",            "l06",       "deltaf50"};
}

double calibrate_clutter_gain(const AcquisitionConfig& config, const MoistureClassSet& classes,
                              double db_above, std::uint64_t seed) {
  // Leading singular value of the clutter-free mid-class scan sets the scale;
  // the rank-1 clutter term has sigma_1 = clutter_gain * sqrt(N_s).
  const double mid = classes.levels[classes.levels.size() / 2];
  const Scene scene = scene_for_class(config, mid, seed);
  ImagingGrid grid;
  grid.x_min_m = 0.0;
  grid.x_max_m = config.scan_length_m;
  const ContrastMap contrast = rasterize_scene(scene, grid);
  NoiseSpec clean;
  const BScan scan = simulate_bscan(contrast, config, clean);
  const SvdResult svd = svd_econ(scan.data);
  const double sigma1 = svd.s.empty() ? 0.0 : svd.s[0];
  return std::pow(10.0, db_above / 20.0) * sigma1 / std::sqrt(static_cast<double>(scan.n_s()));
}

namespace {

DatasetSpec dataset_spec_for_scenario(const ScenarioSpec& scenario, ImagingMethod imaging,
                                      std::uint64_t seed, const EvalDefaults& defaults,
                                      const MoistureClassSet& classes) {
  DatasetSpec ds;
  ds.classes = classes;
  ds.config = defaults.config;
  ds.n_bands = defaults.n_bands;
  ds.band_spacing_hz = defaults.band_spacing_hz;
  ds.seed = seed;
  ds.scenario_id = scenario.id;

  if (scenario.scan_length_override_m > 0.0)
    ds.config.scan_length_m = scenario.scan_length_override_m;
  if (scenario.n_positions_override > 0) ds.config.n_positions = scenario.n_positions_override;
  if (scenario.f_step_override_hz > 0.0) {
    ds.config.f_step_hz = scenario.f_step_override_hz;
    // trim f_max to the last full step so the sweep stays an exact grid
    const double span = ds.config.f_max_hz - ds.config.f_min_hz;
    const double steps = std::floor(span / ds.config.f_step_hz + 1e-9);
    ds.config.f_max_hz = ds.config.f_min_hz + steps * ds.config.f_step_hz;
  }
  if (scenario.band_spacing_override_hz > 0.0)
    ds.band_spacing_hz = scenario.band_spacing_override_hz;

  if (scenario.band_subset != BandSubset::all) {
    const int lo = scenario.band_subset == BandSubset::lower8 ? 0 : ds.n_bands / 2;
    for (int b = lo; b < lo + ds.n_bands / 2; ++b) ds.band_subset.push_back(b);
  }

  switch (scenario.stage) {
    case PipelineStage::raw:
      ds.pipeline.stage = PipelineStage::raw;
      break;
    case PipelineStage::clutter_reduced:
      ds.pipeline.stage = PipelineStage::clutter_reduced;
      break;
    default:
      ds.pipeline.stage =
          imaging == ImagingMethod::bpa ? PipelineStage::bpa : PipelineStage::baa;
      break;
  }
  ds.pipeline.n_remove = scenario.n_remove;
  ds.pipeline.snr_db = defaults.snr_db;
  ds.pipeline.clutter_gain = calibrate_clutter_gain(ds.config, ds.classes,
                                                    defaults.clutter_db_above_signal, seed);
  return ds;
}

struct IndexedSplits {
  std::vector<std::size_t> train, val, test;
};

IndexedSplits index_splits(const std::vector<LabeledSample>& samples,
                           const SplitManifest& splits) {
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < samples.size(); ++i) by_id[samples[i].id] = i;
  IndexedSplits out;
  auto fill = [&](const std::vector<std::string>& ids, std::vector<std::size_t>& dst) {
    for (const auto& id : ids) dst.push_back(by_id.at(id));
  };
  fill(splits.train, out.train);
  fill(splits.val, out.val);
  fill(splits.test, out.test);
  return out;
}

TrainSet make_train_set(const std::vector<LabeledSample>& samples,
                        const std::vector<std::size_t>& idx, int size) {
  TrainSet set;
  for (std::size_t i : idx) {
    set.images.push_back(to_feature_vector(samples[i].image, size).values);
    set.labels.push_back(samples[i].label);
  }
  return set;
}

}  // namespace

int TrainedModels::classify(const Image& image) const {
  return learner == Learner::cnn ? cnn_predict(cnn, image) : knn_predict_image(knn, image);
}

TrainedModels train_reference_models(Learner learner, ImagingMethod imaging, std::uint64_t seed,
                                     const EvalDefaults& defaults,
                                     const MoistureClassSet& classes) {
  const ScenarioSpec ref = scenario_by_id("reference");
  DatasetSpec ds = dataset_spec_for_scenario(ref, imaging, seed, defaults, classes);

  const std::vector<LabeledSample> samples = generate_dataset(ds);
  const double ratios[3] = {0.6, 0.2, 0.2};
  const SplitManifest splits = split_dataset(samples, ratios, seed);
  const IndexedSplits idx = index_splits(samples, splits);

  TrainedModels out;
  out.learner = learner;
  out.classes = classes;
  out.dataset_spec = ds;

  const int size = ds.pipeline.classifier_size;
  const TrainSet train = make_train_set(samples, idx.train, size);
  if (learner == Learner::cnn) {
    const TrainSet val = make_train_set(samples, idx.val, size);
    out.cnn = CnnModel::init(classes.size(), seed);
    out.cnn.class_levels = classes.levels;
    TrainConfig tc = defaults.train;
    tc.seed = seed;
    cnn_train(out.cnn, train, val, tc);
  } else {
    std::vector<FeatureVector> fvs;
    for (const auto& img : train.images) fvs.push_back(FeatureVector{img});
    out.knn = knn_fit(fvs, train.labels, defaults.knn_k, classes.size());
    out.knn.class_levels = classes.levels;
  }
  return out;
}

ScenarioReport run_scenario(const ScenarioSpec& scenario, Learner learner, ImagingMethod imaging,
                            std::uint64_t seed, const EvalDefaults& defaults,
                            const MoistureClassSet& classes) {
  DatasetSpec ds = dataset_spec_for_scenario(scenario, imaging, seed, defaults, classes);

  const std::vector<LabeledSample> samples = generate_dataset(ds);
  const double ratios[3] = {0.6, 0.2, 0.2};
  const SplitManifest splits = split_dataset(samples, ratios, seed);
  const IndexedSplits idx = index_splits(samples, splits);

  const int size = ds.pipeline.classifier_size;
  const TrainSet train = make_train_set(samples, idx.train, size);
  const TrainSet val = make_train_set(samples, idx.val, size);
  const TrainSet test = make_train_set(samples, idx.test, size);

  std::vector<int> preds;
  if (learner == Learner::cnn) {
    CnnModel model = CnnModel::init(classes.size(), seed);
    model.class_levels = classes.levels;
    TrainConfig tc = defaults.train;
    tc.seed = seed;
    cnn_train(model, train, val, tc);
    for (const auto& img : test.images) {
      const std::vector<double> probs = cnn_forward(model, img);
      preds.push_back(static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                                       probs.begin()));
    }
  } else {
    std::vector<FeatureVector> fvs;
    for (const auto& img : train.images) fvs.push_back(FeatureVector{img});
    const KnnModel model = knn_fit(fvs, train.labels, defaults.knn_k, classes.size());
    for (const auto& img : test.images) preds.push_back(knn_predict(model, FeatureVector{img}));
  }

  ScenarioReport rep;
  rep.scenario_id = scenario.id;
  rep.learner = learner;
  rep.imaging = imaging;
  rep.seed = seed;
  rep.confusion = confusion_and_accuracy(preds, test.labels, classes.size(), &rep.accuracy);
  rep.train_size = static_cast<int>(train.images.size());
  rep.val_size = static_cast<int>(val.images.size());
  rep.test_size = static_cast<int>(test.images.size());

  nlohmann::json echo;
  echo["config"] = nlohmann::json::parse(to_json(ds.config));
  echo["pipeline"] = nlohmann::json::parse(ds.pipeline.to_json_text());
  echo["n_bands"] = ds.n_bands;
  echo["band_spacing_hz"] = ds.band_spacing_hz;
  echo["band_subset"] = ds.band_subset;
  echo["classes"] = classes.levels;
  rep.config_echo_json = echo.dump();
  return rep;
}

std::string ScenarioReport::to_json_text() const {
  nlohmann::json j;
  j["scenario"] = scenario_id;
  j["learner"] = learner == Learner::cnn ? "cnn" : "knn";
  j["imaging"] = imaging == ImagingMethod::bpa ? "bpa" : "baa";
  j["seed"] = seed;
  j["accuracy"] = accuracy;
  j["sizes"] = {{"train", train_size}, {"val", val_size}, {"test", test_size}};
  auto rows = nlohmann::json::array();
  for (int r = 0; r < confusion.n_classes; ++r) {
    auto row = nlohmann::json::array();
    for (int c = 0; c < confusion.n_classes; ++c) row.push_back(confusion.at(r, c));
    rows.push_back(row);
  }
  j["confusion_counts"] = rows;
  j["config_echo"] = nlohmann::json::parse(config_echo_json.empty() ? "{}" : config_echo_json);
  return j.dump(2);
}

std::vector<Image> scan_scene_images(const Scene& scene, const DatasetSpec& spec) {
  const BandPlan plan = make_band_plan(spec.config, spec.n_bands, spec.band_spacing_hz);
  ImagingGrid grid = spec.pipeline.bpa_grid;
  grid.x_min_m = 0.0;
  grid.x_max_m = spec.config.scan_length_m;
  const ContrastMap contrast = rasterize_scene(scene, grid);

  NoiseSpec noise;
  noise.snr_db = spec.pipeline.snr_db;
  noise.clutter_gain = spec.pipeline.clutter_gain;
  noise.rng_seed = scene.rng_seed;

  ImagingGrid baa_grid = grid;
  baa_grid.nx = spec.pipeline.baa_nx;
  baa_grid.nz = spec.pipeline.baa_nz;

  std::vector<Image> images;
  for (int b = 0; b < spec.n_bands; ++b) {
    BScan scan = slice_band(contrast, plan, b, spec.config, noise);
    if (spec.pipeline.stage != PipelineStage::raw)
      scan = svd_clutter_reduce(scan, {spec.pipeline.n_remove});
    switch (spec.pipeline.stage) {
      case PipelineStage::raw:
      case PipelineStage::clutter_reduced:
        images.push_back(magnitude_image(scan));
        break;
      case PipelineStage::bpa:
        images.push_back(bpa_image(scan, grid, contrast.eps_bg, spec.pipeline.spreading_comp,
                                   spec.config.antenna_height_m));
        break;
      case PipelineStage::baa: {
        const AcquisitionConfig bc = band_config(spec.config, plan.bands[b]);
        images.push_back(baa_image(scan, baa_grid, bc, contrast.eps_bg,
                                   spec.pipeline.truncation));
        break;
      }
    }
  }
  return images;
}

double run_clutter_robustness(const TrainedModels& models, double sm_truth,
                              ClutterPoint::Kind kind, int n_points, std::uint64_t seed) {
  const DatasetSpec& ds = models.dataset_spec;
  Scene scene = scene_for_class(ds.config, sm_truth, mix_seed(seed, 0x726f6275));  // "robu"
  if (sm_truth <= 0.0) scene.moist_region.radius_m = 0.0;  // dry soil: no moist disk

  if (n_points > 0) {
    ImagingGrid grid = ds.pipeline.bpa_grid;
    grid.x_min_m = 0.0;
    grid.x_max_m = ds.config.scan_length_m;
    // reuse the density machinery with an explicit count
    Scene base = scene;
    ClutterDensity d = n_points <= 3 ? ClutterDensity::low
                       : n_points <= 7 ? ClutterDensity::moderate
                                       : ClutterDensity::high;
    scene = add_medium_clutter(base, kind, d, scene.rng_seed, grid);
    // trim/extend to the exact requested count deterministically
    while (static_cast<int>(scene.clutter_points.size()) > n_points)
      scene.clutter_points.pop_back();
  }

  const std::vector<Image> images = scan_scene_images(scene, ds);
  return predict_sm([&](const Image& img) { return models.classify(img); }, images,
                    models.classes, ds.n_bands);
}

double run_clutter_robustness(const TrainedModels& models, double sm_truth,
                              ClutterPoint::Kind kind, ClutterDensity density,
                              std::uint64_t seed) {
  return run_clutter_robustness(models, sm_truth, kind, clutter_point_count(density), seed);
}

LinearFit ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("ols_fit: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols_fit: degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

LeakTrack track_leak(const std::vector<TimedScan>& scans, const TrainedModels& models,
                     double reference_sm) {
  if (scans.size() < 2) throw std::invalid_argument("track_leak: need at least 2 time points");
  LeakTrack track;
  track.reference_sm = reference_sm;
  for (const auto& scan : scans) {
    track.times_min.push_back(scan.time_min);
    track.sm_estimates.push_back(
        predict_sm([&](const Image& img) { return models.classify(img); }, scan.band_images,
                   models.classes, static_cast<int>(scan.band_images.size())));
  }
  track.fit = ols_fit(track.times_min, track.sm_estimates);
  return track;
}

std::string LeakTrack::to_json_text() const {
  nlohmann::json j;
  j["times_min"] = times_min;
  j["sm_estimates"] = sm_estimates;
  j["fit"] = {{"slope_per_min", fit.slope}, {"intercept", fit.intercept}};
  j["reference_sm"] = reference_sm;
  return j.dump(2);
}

std::string LeakTrack::to_csv() const {
  std::ostringstream os;
  os << "time_min,sm_estimate,fit\n";
  for (std::size_t i = 0; i < times_min.size(); ++i)
    os << times_min[i] << "," << sm_estimates[i] << "," << fit.at(times_min[i]) << "\n";
  return os.str();
}

std::vector<TimedScan> synthesize_leak_series(const DatasetSpec& spec, int n_scans,
                                              double interval_min, std::uint64_t seed) {
  if (n_scans < 2) throw std::invalid_argument("synthesize_leak_series: need >= 2 scans");
  std::vector<TimedScan> out;
  const double r0 = 0.04, r1 = 0.12;  // plume radius growth over the series
  for (int i = 0; i < n_scans; ++i) {
    Scene scene = scene_for_class(spec.config, 0.5, mix_seed(seed, 0x6c65616bULL + i));  // "leak"
    scene.moist_region.radius_m = r0 + (r1 - r0) * i / (n_scans - 1);
    TimedScan scan;
    scan.time_min = interval_min * (i + 1);
    scan.band_images = scan_scene_images(scene, spec);
    out.push_back(std::move(scan));
  }
  return out;
}

}  // namespace pipescan
