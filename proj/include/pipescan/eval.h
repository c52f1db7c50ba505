#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pipescan/dataset.h"
#include "pipescan/learn.h"
#include "pipescan/scene.h"

namespace pipescan {

// Rows = actual class, columns = predicted class.
struct ConfusionMatrix {
  int n_classes = 0;
  std::vector<long> counts;  // row-major C x C

  long& at(int actual, int predicted) { return counts[actual * n_classes + predicted]; }
  long at(int actual, int predicted) const { return counts[actual * n_classes + predicted]; }
  long total() const;
  double accuracy() const;
  // Each row divided by its sum; all-zero rows stay zero.
  std::vector<double> row_normalized() const;
  std::string to_csv() const;
};

ConfusionMatrix confusion_and_accuracy(const std::vector<int>& predictions,
                                       const std::vector<int>& labels, int n_classes,
                                       double* accuracy = nullptr);

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm);
void write_confusion_pgm(const std::filesystem::path& path, const ConfusionMatrix& cm);

enum class Learner { cnn, knn };
enum class ImagingMethod { bpa, baa };

Learner learner_from_name(const std::string& name);
ImagingMethod imaging_from_name(const std::string& name);

enum class BandSubset { all, lower8, upper8 };

// One row of the scenario table: overrides relative to the reference run.
struct ScenarioSpec {
  std::string id = "reference";
  PipelineStage stage = PipelineStage::bpa;  // raw/clutter_reduced fixed; image stages
                                             // follow the requested imaging method
  int n_remove = 1;
  BandSubset band_subset = BandSubset::all;
  double f_step_override_hz = 0.0;      // 0 = keep reference
  int n_positions_override = 0;         // 0 = keep reference
  double scan_length_override_m = 0.0;  // 0 = keep reference
  double band_spacing_override_hz = 0.0;
};

// The nine named scenarios: raw, clutter_reduced, reference, lower8, upper8,
// df75, ns23, l06, deltaf50.
ScenarioSpec scenario_by_id(const std::string& id);
std::vector<std::string> scenario_ids();

// Reference evaluation defaults shared by the scenario runner, the clutter
// robustness runner, and leak tracking.
struct EvalDefaults {
  AcquisitionConfig config;                 // Table-style reference acquisition
  int n_bands = 16;
  double band_spacing_hz = 10e6;
  double snr_db = 10.0;
  double clutter_db_above_signal = 50.0;    // rank-1 clutter level vs scattered field
  int knn_k = 5;
  TrainConfig train;
};

// clutter_gain that places the rank-1 term `db_above` decibels over the
// scattered signal's leading singular value for the mid-class scene.
double calibrate_clutter_gain(const AcquisitionConfig& config, const MoistureClassSet& classes,
                              double db_above, std::uint64_t seed);

struct ScenarioReport {
  std::string scenario_id;
  Learner learner = Learner::cnn;
  ImagingMethod imaging = ImagingMethod::bpa;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  int train_size = 0, val_size = 0, test_size = 0;
  std::string config_echo_json;  // resolved dataset spec

  std::string to_json_text() const;
};

// Regenerate the dataset under the scenario, train, evaluate the test split.
ScenarioReport run_scenario(const ScenarioSpec& scenario, Learner learner, ImagingMethod imaging,
                            std::uint64_t seed, const EvalDefaults& defaults = {},
                            const MoistureClassSet& classes = MoistureClassSet::default8());

// ---------------------------------------------------------------------------
// Clutter robustness (models trained on a clutter-free dataset, queried on a
// cluttered scene).

struct TrainedModels {
  Learner learner = Learner::cnn;
  CnnModel cnn;
  KnnModel knn;
  MoistureClassSet classes;
  DatasetSpec dataset_spec;  // the clutter-free training configuration

  int classify(const Image& image) const;
};

TrainedModels train_reference_models(Learner learner, ImagingMethod imaging, std::uint64_t seed,
                                     const EvalDefaults& defaults,
                                     const MoistureClassSet& classes);

// Per-band images of one (possibly cluttered) scene under the models'
// pipeline.
std::vector<Image> scan_scene_images(const Scene& scene, const DatasetSpec& spec);

// Predicted soil moisture for ground truth sm_truth with n_points clutter
// scatterers of the given kind (n_points = 0 is the clutter-free control).
double run_clutter_robustness(const TrainedModels& models, double sm_truth,
                              ClutterPoint::Kind kind, int n_points, std::uint64_t seed);
double run_clutter_robustness(const TrainedModels& models, double sm_truth,
                              ClutterPoint::Kind kind, ClutterDensity density,
                              std::uint64_t seed);

// ---------------------------------------------------------------------------
// Temporal leak tracking

struct LinearFit {
  double slope = 0.0;      // per minute
  double intercept = 0.0;
  double at(double t) const { return intercept + slope * t; }
};

LinearFit ols_fit(const std::vector<double>& x, const std::vector<double>& y);

struct TimedScan {
  double time_min = 0.0;
  std::vector<Image> band_images;
};

struct LeakTrack {
  std::vector<double> times_min;
  std::vector<double> sm_estimates;
  LinearFit fit;
  double reference_sm = 0.0;

  std::string to_json_text() const;
  std::string to_csv() const;
};

LeakTrack track_leak(const std::vector<TimedScan>& scans, const TrainedModels& models,
                     double reference_sm);

// Growing moist region around the pipe, one scan every interval_min minutes.
std::vector<TimedScan> synthesize_leak_series(const DatasetSpec& spec, int n_scans,
                                              double interval_min, std::uint64_t seed);

}  // namespace pipescan
