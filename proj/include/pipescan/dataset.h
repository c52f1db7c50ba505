#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pipescan/acquisition.h"
#include "pipescan/imaging.h"
#include "pipescan/scene.h"

namespace pipescan {

// Ordered soil-moisture class levels (fractions of saturation).
struct MoistureClassSet {
  std::vector<double> levels;

  // Eight bags, 12.5% to 100% in uniform steps.
  static MoistureClassSet default8();
  // Adds a 0% dry class in front (nine classes).
  static MoistureClassSet default9();
  void validate() const;
  int size() const { return static_cast<int>(levels.size()); }
};

enum class PipelineStage { raw, clutter_reduced, bpa, baa };

const char* stage_name(PipelineStage s);
PipelineStage stage_from_name(const std::string& name);

// Everything between the simulated scan and the stored sample image.
struct PipelineSpec {
  PipelineStage stage = PipelineStage::bpa;
  int n_remove = 1;
  bool reduce_wideband_first = false;  // reduce the wideband scan once, then slice bands
  TruncationSpec truncation;           // BAA regularization
  double snr_db = 10.0;
  double clutter_gain = 0.0;
  bool spreading_comp = false;
  ImagingGrid bpa_grid;                 // default 96x96 over the scan line
  int baa_nx = 32, baa_nz = 32;         // BAA inversion mesh (kept desk-scale)
  int classifier_size = 48;             // classifier input is size x size

  std::string to_json_text() const;
  static PipelineSpec from_json_text(const std::string& text);
};

struct LabeledSample {
  std::string id;
  Image image;  // stage-native size; resampled to the classifier size downstream
  int label = 0;
  int band_index = 0;
  std::string scenario_id;
  std::uint64_t scene_seed = 0;
};

struct SplitManifest {
  std::vector<std::string> train, val, test;
  double ratios[3] = {0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
};

struct DatasetSpec {
  MoistureClassSet classes = MoistureClassSet::default8();
  AcquisitionConfig config;
  int n_bands = 16;
  double band_spacing_hz = 10e6;
  std::vector<int> band_subset;  // empty = all bands
  PipelineSpec pipeline;
  std::uint64_t seed = 0;
  std::string scenario_id = "reference";
};

// Scene for one moisture class under the reference geometry: water-carrying
// pipe with a moist disk of the class's saturation around it.
Scene scene_for_class(const AcquisitionConfig& config, double sm_level, std::uint64_t scene_seed);

// One sample per (class level, band): build the scene, simulate the band,
// run the pipeline stage, label with the class index.
std::vector<LabeledSample> generate_dataset(const DatasetSpec& spec);

// Deterministic stratified split; per-class counts follow largest-remainder
// rounding of the ratios.
SplitManifest split_dataset(const std::vector<LabeledSample>& samples,
                            const double ratios[3], std::uint64_t seed, bool stratified = true);

// Directory layout: manifest.json + one MWIM file per sample.
void write_dataset_dir(const std::filesystem::path& dir, const DatasetSpec& spec,
                       const std::vector<LabeledSample>& samples, const SplitManifest& splits);

struct LoadedDataset {
  DatasetSpec spec;
  std::vector<LabeledSample> samples;
  SplitManifest splits;
};

LoadedDataset read_dataset_dir(const std::filesystem::path& dir);

std::string manifest_json(const DatasetSpec& spec, const std::vector<LabeledSample>& samples,
                          const SplitManifest& splits);

}  // namespace pipescan
