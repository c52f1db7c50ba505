#include "pipescan/dataset.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "pipescan/forward.h"
#include "pipescan/io.h"
#include "pipescan/preproc.h"
#include "pipescan/rng.h"

namespace pipescan {

MoistureClassSet MoistureClassSet::default8() {
  MoistureClassSet c;
  for (int i = 1; i <= 8; ++i) c.levels.push_back(0.125 * i);
  return c;
}

MoistureClassSet MoistureClassSet::default9() {
  MoistureClassSet c = default8();
  c.levels.insert(c.levels.begin(), 0.0);
  return c;
}

void MoistureClassSet::validate() const {
  if (levels.empty()) throw std::invalid_argument("MoistureClassSet: empty");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0.0 || levels[i] > 1.0)
      throw std::invalid_argument("MoistureClassSet: level outside [0,1]");
    if (i > 0 && levels[i] <= levels[i - 1])
      throw std::invalid_argument("MoistureClassSet: levels must be strictly increasing");
  }
}

const char* stage_name(PipelineStage s) {
  switch (s) {
    case PipelineStage::raw: return "raw";
    case PipelineStage::clutter_reduced: return "clutter_reduced";
    case PipelineStage::bpa: return "bpa";
    case PipelineStage::baa: return "baa";
  }
  return "?";
}

PipelineStage stage_from_name(const std::string& name) {
  if (name == "raw") return PipelineStage::raw;
  if (name == "clutter_reduced") return PipelineStage::clutter_reduced;
  if (name == "bpa") return PipelineStage::bpa;
  if (name == "baa") return PipelineStage::baa;
  throw std::invalid_argument("unknown pipeline stage: " + name);
}

std::string PipelineSpec::to_json_text() const {
  nlohmann::json j;
  j["stage"] = stage_name(stage);
  j["n_remove"] = n_remove;
  j["reduce_wideband_first"] = reduce_wideband_first;
  j["truncation"] = {{"mode", truncation.mode == TruncationSpec::Mode::rank ? "rank"
                                                                            : "relative_threshold"},
                     {"rank", truncation.rank},
                     {"tau", truncation.tau}};
  j["snr_db"] = std::isfinite(snr_db) ? nlohmann::json(snr_db) : nlohmann::json();
  j["clutter_gain"] = clutter_gain;
  j["spreading_comp"] = spreading_comp;
  j["bpa_grid"] = {{"x_min_m", bpa_grid.x_min_m}, {"x_max_m", bpa_grid.x_max_m},
                   {"z_min_m", bpa_grid.z_min_m}, {"z_max_m", bpa_grid.z_max_m},
                   {"nx", bpa_grid.nx},           {"nz", bpa_grid.nz}};
  j["baa_nx"] = baa_nx;
  j["baa_nz"] = baa_nz;
  j["classifier_size"] = classifier_size;
  return j.dump();
}

PipelineSpec PipelineSpec::from_json_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  PipelineSpec p;
  p.stage = stage_from_name(j.value("stage", "bpa"));
  p.n_remove = j.value("n_remove", 1);
  p.reduce_wideband_first = j.value("reduce_wideband_first", false);
  if (j.contains("truncation")) {
    const auto& t = j["truncation"];
    p.truncation.mode = t.value("mode", "relative_threshold") == std::string("rank")
                            ? TruncationSpec::Mode::rank
                            : TruncationSpec::Mode::relative_threshold;
    p.truncation.rank = t.value("rank", 1);
    p.truncation.tau = t.value("tau", 1e-2);
  }
  p.snr_db = j.contains("snr_db") && !j["snr_db"].is_null()
                 ? j["snr_db"].get<double>()
                 : std::numeric_limits<double>::infinity();
  p.clutter_gain = j.value("clutter_gain", 0.0);
  p.spreading_comp = j.value("spreading_comp", false);
  if (j.contains("bpa_grid")) {
    const auto& g = j["bpa_grid"];
    p.bpa_grid.x_min_m = g.value("x_min_m", 0.0);
    p.bpa_grid.x_max_m = g.value("x_max_m", 1.2);
    p.bpa_grid.z_min_m = g.value("z_min_m", 0.0);
    p.bpa_grid.z_max_m = g.value("z_max_m", 0.4);
    p.bpa_grid.nx = g.value("nx", 96);
    p.bpa_grid.nz = g.value("nz", 96);
  }
  p.baa_nx = j.value("baa_nx", 32);
  p.baa_nz = j.value("baa_nz", 32);
  p.classifier_size = j.value("classifier_size", 48);
  return p;
}

Scene scene_for_class(const AcquisitionConfig& config, double sm_level,
                      std::uint64_t scene_seed) {
  Scene s;
  s.pipe_depth_m = 0.12;
  s.pipe_diameter_m = 0.045;
  s.pipe_filled = true;
  // leaked water drains downward: plume centered just below the pipe, leaving
  // the pipe echo as a stable reference reflector in every image
  s.moist_region.center_x_m = 0.5 * config.scan_length_m;
  s.moist_region.center_z_m = s.pipe_depth_m + 0.03;
  s.moist_region.radius_m = 0.04;
  s.moist_region.sm_fraction = sm_level;
  s.rng_seed = scene_seed;
  return s;
}

namespace {

// BPA imaging grid spanning the configured scan line.
ImagingGrid grid_for_config(const ImagingGrid& base, const AcquisitionConfig& config) {
  ImagingGrid g = base;
  g.x_min_m = 0.0;
  g.x_max_m = config.scan_length_m;
  return g;
}

// Row-wise linear interpolation of a reduced wideband scan onto a band grid
// (the wideband-first clutter reduction path).
BScan interp_rows(const BScan& wide, const std::vector<double>& band_freqs) {
  BScan out;
  out.freq_hz = band_freqs;
  out.pos_m = wide.pos_m;
  out.data = CMatrix(band_freqs.size(), wide.n_s());
  out.provenance = wide.provenance + "|interp_band";
  const auto& wf = wide.freq_hz;
  for (std::size_t i = 0; i < band_freqs.size(); ++i) {
    const double f = band_freqs[i];
    auto it = std::upper_bound(wf.begin(), wf.end(), f);
    std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - wf.begin()), 1,
                                             wf.size() - 1);
    const std::size_t lo = hi - 1;
    const double t = std::clamp((f - wf[lo]) / (wf[hi] - wf[lo]), 0.0, 1.0);
    for (std::size_t a = 0; a < wide.n_s(); ++a)
      out.data(i, a) = (1.0 - t) * wide.data(lo, a) + t * wide.data(hi, a);
  }
  return out;
}

}  // namespace

std::vector<LabeledSample> generate_dataset(const DatasetSpec& spec) {
  spec.classes.validate();
  spec.config.validate();
  const BandPlan plan = make_band_plan(spec.config, spec.n_bands, spec.band_spacing_hz);

  std::vector<int> bands = spec.band_subset;
  if (bands.empty()) {
    bands.resize(spec.n_bands);
    std::iota(bands.begin(), bands.end(), 0);
  }
  for (int b : bands)
    if (b < 0 || b >= spec.n_bands)
      throw std::invalid_argument("generate_dataset: band subset outside plan");

  const ImagingGrid bpa_grid = grid_for_config(spec.pipeline.bpa_grid, spec.config);
  ImagingGrid baa_grid = bpa_grid;
  baa_grid.nx = spec.pipeline.baa_nx;
  baa_grid.nz = spec.pipeline.baa_nz;

  // One cached operator factorization per band for BAA.
  std::vector<std::unique_ptr<BornInverter>> inverters;

  std::vector<LabeledSample> samples;
  for (int ci = 0; ci < spec.classes.size(); ++ci) {
    const std::uint64_t scene_seed = mix_seed(spec.seed, 0x73636e00ULL + ci);  // "scn"+class
    const Scene scene = scene_for_class(spec.config, spec.classes.levels[ci], scene_seed);
    const ContrastMap contrast = rasterize_scene(scene, bpa_grid);

    NoiseSpec noise;
    noise.snr_db = spec.pipeline.snr_db;
    noise.clutter_gain = spec.pipeline.clutter_gain;
    noise.rng_seed = scene_seed;

    BScan wide_reduced;
    if (spec.pipeline.reduce_wideband_first) {
      const BScan wide = simulate_bscan(contrast, spec.config, noise);
      wide_reduced = svd_clutter_reduce(wide, {spec.pipeline.n_remove});
    }

    for (std::size_t bi = 0; bi < bands.size(); ++bi) {
      const int band = bands[bi];
      BScan scan;
      if (spec.pipeline.reduce_wideband_first) {
        const AcquisitionConfig bc = band_config(spec.config, plan.bands[band]);
        scan = interp_rows(wide_reduced, frequency_grid(bc));
      } else {
        scan = slice_band(contrast, plan, band, spec.config, noise);
        if (spec.pipeline.stage != PipelineStage::raw)
          scan = svd_clutter_reduce(scan, {spec.pipeline.n_remove});
      }

      LabeledSample s;
      s.id = "c" + std::to_string(ci) + "_b" + std::to_string(band);
      s.label = ci;
      s.band_index = band;
      s.scenario_id = spec.scenario_id;
      s.scene_seed = scene_seed;

      switch (spec.pipeline.stage) {
        case PipelineStage::raw:
        case PipelineStage::clutter_reduced:
          s.image = magnitude_image(scan);
          break;
        case PipelineStage::bpa:
          s.image = bpa_image(scan, bpa_grid, contrast.eps_bg, spec.pipeline.spreading_comp,
                              spec.config.antenna_height_m);
          break;
        case PipelineStage::baa: {
          if (inverters.empty()) inverters.resize(spec.n_bands);
          if (!inverters[band]) {
            const AcquisitionConfig bc = band_config(spec.config, plan.bands[band]);
            inverters[band] = std::make_unique<BornInverter>(baa_grid, bc, contrast.eps_bg);
          }
          s.image = inverters[band]->invert(scan, spec.pipeline.truncation);
          break;
        }
      }
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

SplitManifest split_dataset(const std::vector<LabeledSample>& samples, const double ratios[3],
                            std::uint64_t seed, bool stratified) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0 || std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split_dataset: ratios must be nonnegative and sum to 1");

  SplitManifest out;
  out.ratios[0] = ratios[0];
  out.ratios[1] = ratios[1];
  out.ratios[2] = ratios[2];
  out.seed = seed;

  int n_classes = 0;
  for (const auto& s : samples) n_classes = std::max(n_classes, s.label + 1);

  std::vector<std::vector<std::size_t>> groups;
  if (stratified) {
    groups.resize(n_classes);
    for (std::size_t i = 0; i < samples.size(); ++i) groups[samples[i].label].push_back(i);
  } else {
    groups.resize(1);
    for (std::size_t i = 0; i < samples.size(); ++i) groups[0].push_back(i);
  }

  auto eng = make_engine(mix_seed(seed, 0x73706c69));  // "spli"
  for (auto& g : groups) {
    if (g.empty()) continue;
    std::shuffle(g.begin(), g.end(), eng);
    const int n = static_cast<int>(g.size());
    // Largest-remainder allocation of n into the three parts.
    int counts[3];
    double frac[3];
    int total = 0;
    for (int p = 0; p < 3; ++p) {
      const double exact = ratios[p] * n;
      counts[p] = static_cast<int>(std::floor(exact + 1e-12));
      frac[p] = exact - counts[p];
      total += counts[p];
    }
    int order[3] = {0, 1, 2};
    std::sort(order, order + 3, [&](int a, int b) {
      return frac[a] != frac[b] ? frac[a] > frac[b] : a < b;
    });
    for (int r = 0; total < n; ++r, ++total) counts[order[r % 3]] += 1;

    // A part with a positive ratio must receive at least one sample.
    for (int p = 0; p < 3; ++p)
      if (ratios[p] > 0.0 && counts[p] == 0)
        throw std::runtime_error("split_dataset: class smaller than the number of split parts");

    std::size_t at = 0;
    for (int c = 0; c < counts[0]; ++c) out.train.push_back(samples[g[at++]].id);
    for (int c = 0; c < counts[1]; ++c) out.val.push_back(samples[g[at++]].id);
    for (int c = 0; c < counts[2]; ++c) out.test.push_back(samples[g[at++]].id);
  }
  return out;
}

std::string manifest_json(const DatasetSpec& spec, const std::vector<LabeledSample>& samples,
                          const SplitManifest& splits) {
  nlohmann::json j;
  j["scenario_id"] = spec.scenario_id;
  j["seed"] = spec.seed;
  j["classes"] = spec.classes.levels;
  j["n_bands"] = spec.n_bands;
  j["band_spacing_hz"] = static_cast<std::int64_t>(std::llround(spec.band_spacing_hz));
  j["band_subset"] = spec.band_subset;
  j["config"] = nlohmann::json::parse(to_json(spec.config));
  j["pipeline"] = nlohmann::json::parse(spec.pipeline.to_json_text());
  j["samples"] = nlohmann::json::array();
  for (const auto& s : samples)
    j["samples"].push_back({{"id", s.id},
                            {"file", s.id + ".mwim"},
                            {"label", s.label},
                            {"band_index", s.band_index},
                            {"scene_seed", s.scene_seed}});
  j["splits"] = {{"train", splits.train},
                 {"val", splits.val},
                 {"test", splits.test},
                 {"ratios", {splits.ratios[0], splits.ratios[1], splits.ratios[2]}},
                 {"seed", splits.seed}};
  return j.dump(2);
}

void write_dataset_dir(const std::filesystem::path& dir, const DatasetSpec& spec,
                       const std::vector<LabeledSample>& samples, const SplitManifest& splits) {
  std::filesystem::create_directories(dir);
  for (const auto& s : samples) {
    io::ImageMeta meta;
    meta.band_index = s.band_index;
    meta.pipeline = spec.pipeline.to_json_text();
    io::write_mwim(dir / (s.id + ".mwim"), s.image, meta);
  }
  io::write_text_file(dir / "manifest.json", manifest_json(spec, samples, splits));
}

LoadedDataset read_dataset_dir(const std::filesystem::path& dir) {
  const nlohmann::json j = nlohmann::json::parse(io::read_text_file(dir / "manifest.json"));
  LoadedDataset out;
  out.spec.scenario_id = j.value("scenario_id", "");
  out.spec.seed = j.value("seed", std::uint64_t{0});
  out.spec.classes.levels = j.at("classes").get<std::vector<double>>();
  out.spec.n_bands = j.value("n_bands", 16);
  out.spec.band_spacing_hz = static_cast<double>(j.value("band_spacing_hz", std::int64_t{10000000}));
  if (j.contains("band_subset")) out.spec.band_subset = j["band_subset"].get<std::vector<int>>();
  out.spec.config = acquisition_from_json(j.at("config").dump());
  out.spec.pipeline = PipelineSpec::from_json_text(j.at("pipeline").dump());

  for (const auto& js : j.at("samples")) {
    LabeledSample s;
    s.id = js.at("id").get<std::string>();
    s.label = js.at("label").get<int>();
    s.band_index = js.at("band_index").get<int>();
    s.scene_seed = js.value("scene_seed", std::uint64_t{0});
    s.scenario_id = out.spec.scenario_id;
    s.image = io::read_mwim(dir / js.at("file").get<std::string>());
    out.samples.push_back(std::move(s));
  }
  const auto& sp = j.at("splits");
  out.splits.train = sp.at("train").get<std::vector<std::string>>();
  out.splits.val = sp.at("val").get<std::vector<std::string>>();
  out.splits.test = sp.at("test").get<std::vector<std::string>>();
  const auto r = sp.at("ratios").get<std::vector<double>>();
  for (int i = 0; i < 3; ++i) out.splits.ratios[i] = r[i];
  out.splits.seed = sp.value("seed", std::uint64_t{0});
  return out;
}

}  // namespace pipescan
