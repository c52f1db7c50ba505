// pipescan: scene -> B-scan -> clutter reduction -> imaging -> dataset ->
// classifier -> evaluation, as file-to-file subcommands.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pipescan/dataset.h"
#include "pipescan/eval.h"
#include "pipescan/forward.h"
#include "pipescan/io.h"
#include "pipescan/kernels.h"
#include "pipescan/learn.h"
#include "pipescan/preproc.h"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace pipescan;

namespace {

std::uint64_t env_seed_fallback() {
  if (const char* s = std::getenv("PIPESCAN_SEED")) return std::strtoull(s, nullptr, 10);
  return 0;
}

// Resolved-config provenance record next to the outputs.
void write_run_json(const fs::path& dir, const std::string& subcommand,
                    const nlohmann::json& resolved) {
  nlohmann::json j;
  j["subcommand"] = subcommand;
  j["resolved"] = resolved;
  fs::create_directories(dir);
  io::write_text_file(dir / "run.json", j.dump(2));
}

AcquisitionConfig config_from_bscan(const BScan& b) {
  AcquisitionConfig c;
  c.f_min_hz = b.freq_hz.front();
  c.f_max_hz = b.freq_hz.back();
  c.f_step_hz = b.freq_hz.size() > 1 ? b.freq_hz[1] - b.freq_hz[0] : 1.0;
  c.n_positions = static_cast<int>(b.pos_m.size());
  c.scan_length_m = b.pos_m.back() - b.pos_m.front();
  return c;
}

struct DatasetFlags {
  std::string stage = "bpa";
  int n_classes = 8;
  double snr_db = 10.0;
  double clutter_db = 50.0;
  int n_remove = 1;
  double tau = 1e-2;
  int bpa_pixels = 96;
  int baa_pixels = 32;
  bool spreading_comp = false;
  int n_bands = 16;
  double band_spacing_hz = 10e6;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--stage", stage, "pipeline stage: raw|clutter_reduced|bpa|baa")
        ->check(CLI::IsMember({"raw", "clutter_reduced", "bpa", "baa"}));
    cmd->add_option("--classes", n_classes, "number of moisture classes (8 or 9)")
        ->check(CLI::IsMember({8, 9}));
    cmd->add_option("--snr-db", snr_db, "receiver SNR in dB (inf for noiseless)");
    cmd->add_option("--clutter-db", clutter_db, "rank-1 clutter level above signal, dB");
    cmd->add_option("--n-remove", n_remove, "singular components removed in clutter reduction");
    cmd->add_option("--tau", tau, "BAA relative truncation threshold");
    cmd->add_option("--bpa-pixels", bpa_pixels, "BPA grid resolution (NxN)");
    cmd->add_option("--baa-pixels", baa_pixels, "BAA inversion mesh (NxN)");
    cmd->add_flag("--spreading-comp", spreading_comp, "compensate spreading loss in BPA");
    cmd->add_option("--n-bands", n_bands, "number of frequency bands");
    cmd->add_option("--band-spacing-hz", band_spacing_hz, "band spacing (delta f)");
  }

  DatasetSpec to_spec(std::uint64_t seed) const {
    DatasetSpec ds;
    ds.classes = n_classes == 9 ? MoistureClassSet::default9() : MoistureClassSet::default8();
    ds.n_bands = n_bands;
    ds.band_spacing_hz = band_spacing_hz;
    ds.seed = seed;
    ds.pipeline.stage = stage_from_name(stage);
    ds.pipeline.n_remove = n_remove;
    ds.pipeline.snr_db = snr_db;
    ds.pipeline.truncation = TruncationSpec::by_tau(tau);
    ds.pipeline.bpa_grid.nx = bpa_pixels;
    ds.pipeline.bpa_grid.nz = bpa_pixels;
    ds.pipeline.baa_nx = baa_pixels;
    ds.pipeline.baa_nz = baa_pixels;
    ds.pipeline.spreading_comp = spreading_comp;
    ds.pipeline.clutter_gain =
        calibrate_clutter_gain(ds.config, ds.classes, clutter_db, seed);
    return ds;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"microwave B-scan simulation, imaging and soil-moisture classification"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::uint64_t seed = env_seed_fallback();
  app.add_option("--seed", seed, "master RNG seed (falls back to PIPESCAN_SEED)");
  int threads = 0;
  app.add_option("--threads", threads, "cap worker threads (0 = hardware default)");
  std::string backend = "auto";
  app.add_option("--kernel-backend", backend, "arithmetic kernels: auto|scalar|avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a B-scan from a scene (MWBS out)");
  std::string sim_scene, sim_config, sim_out;
  double sim_snr = std::numeric_limits<double>::infinity();
  double sim_clutter_gain = 0.0;
  int sim_band = -1, sim_nbands = 16;
  double sim_band_spacing = 10e6;
  int sim_pixels = 96;
  sim->add_option("--scene", sim_scene, "scene JSON file")->required()->check(CLI::ExistingFile);
  sim->add_option("--config", sim_config, "acquisition JSON file")->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "output MWBS path")->required();
  sim->add_option("--snr-db", sim_snr, "receiver SNR in dB");
  sim->add_option("--clutter-gain", sim_clutter_gain, "rank-1 clutter gain (absolute)");
  sim->add_option("--band", sim_band, "simulate this band of the plan instead of the full sweep");
  sim->add_option("--n-bands", sim_nbands, "bands in the plan (with --band)");
  sim->add_option("--band-spacing-hz", sim_band_spacing, "band spacing (with --band)");
  sim->add_option("--pixels", sim_pixels, "rasterization grid resolution (NxN)");

  // reduce
  auto* red = app.add_subcommand("reduce", "SVD clutter reduction (MWBS to MWBS)");
  std::string red_in, red_out;
  int red_n = 1;
  red->add_option("--in", red_in)->required()->check(CLI::ExistingFile);
  red->add_option("--out", red_out)->required();
  red->add_option("--n-remove", red_n, "leading singular components to remove");

  // image
  auto* img = app.add_subcommand("image", "form an image from a B-scan (MWIM out)");
  std::string img_in, img_out, img_method = "bpa";
  double img_eps_re = 3.03, img_tan = 0.02, img_tau = 1e-2;
  int img_rank = 0;
  int img_pixels = 96;
  double img_depth = 0.4;
  bool img_spreading = false;
  std::string img_pgm;
  img->add_option("--in", img_in)->required()->check(CLI::ExistingFile);
  img->add_option("--out", img_out)->required();
  img->add_option("--method", img_method)->check(CLI::IsMember({"bpa", "baa"}));
  img->add_option("--eps-bg-real", img_eps_re, "background relative permittivity");
  img->add_option("--loss-tangent", img_tan, "background loss tangent");
  img->add_option("--tau", img_tau, "BAA relative truncation threshold");
  img->add_option("--rank", img_rank, "BAA fixed truncation rank (overrides --tau)");
  img->add_option("--pixels", img_pixels, "image grid resolution (NxN)");
  img->add_option("--depth", img_depth, "imaged depth extent in m");
  img->add_flag("--spreading-comp", img_spreading, "compensate spreading loss (BPA)");
  img->add_option("--pgm", img_pgm, "also export an 8-bit PGM preview");

  // dataset
  auto* dsc = app.add_subcommand("dataset", "generate the labeled multi-band dataset");
  std::string dsc_dir;
  DatasetFlags dsc_flags;
  dsc->add_option("--out-dir", dsc_dir)->required();
  dsc_flags.add_to(dsc);

  // train
  auto* trn = app.add_subcommand("train", "train a classifier on a dataset directory");
  std::string trn_dataset, trn_learner = "cnn", trn_out;
  trn->add_option("--dataset", trn_dataset)->required()->check(CLI::ExistingDirectory);
  trn->add_option("--learner", trn_learner)->check(CLI::IsMember({"cnn", "knn"}));
  trn->add_option("--out", trn_out, "model output path (.mwnn / .mwkn)")->required();

  // eval
  auto* evl = app.add_subcommand("eval", "run a named scenario end to end");
  std::string evl_scenario = "reference", evl_learner = "cnn", evl_imaging = "bpa",
              evl_dir = "eval_out";
  DatasetFlags evl_flags;
  evl->add_option("--scenario", evl_scenario, "one of the nine named scenarios");
  evl->add_option("--learner", evl_learner)->check(CLI::IsMember({"cnn", "knn"}));
  evl->add_option("--imaging", evl_imaging)->check(CLI::IsMember({"bpa", "baa"}));
  evl->add_option("--out-dir", evl_dir);
  evl->add_option("--snr-db", evl_flags.snr_db);
  evl->add_option("--clutter-db", evl_flags.clutter_db);
  evl->add_option("--classes", evl_flags.n_classes)->check(CLI::IsMember({8, 9}));

  // track
  auto* trk = app.add_subcommand("track", "temporal leak tracking with a trained model");
  std::string trk_model, trk_dir = "track_out";
  int trk_scans = 11;
  double trk_interval = 14.0, trk_ref_sm = 0.22;
  DatasetFlags trk_flags;
  trk->add_option("--model", trk_model, "trained model (.mwnn or .mwkn)")
      ->required()
      ->check(CLI::ExistingFile);
  trk->add_option("--out-dir", trk_dir);
  trk->add_option("--n-scans", trk_scans, "number of time points");
  trk->add_option("--interval-min", trk_interval, "minutes between scans");
  trk->add_option("--reference-sm", trk_ref_sm, "reference measurement to report alongside");
  trk_flags.add_to(trk);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // unknown flags / bad arguments are validation errors
  }

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif
  kernels::set_backend(backend == "scalar"  ? kernels::Backend::Scalar
                       : backend == "avx2" ? kernels::Backend::Avx2
                                           : kernels::Backend::Auto);

  if (sim->parsed()) {
    const Scene scene = scene_from_json(io::read_text_file(sim_scene));
    AcquisitionConfig config;
    if (!sim_config.empty()) config = acquisition_from_json(io::read_text_file(sim_config));
    config.validate();
    ImagingGrid grid;
    grid.x_min_m = 0.0;
    grid.x_max_m = config.scan_length_m;
    grid.nx = grid.nz = sim_pixels;
    const ContrastMap contrast = rasterize_scene(scene, grid);
    NoiseSpec noise{sim_snr, sim_clutter_gain, seed};
    BScan scan;
    if (sim_band >= 0) {
      const BandPlan plan = make_band_plan(config, sim_nbands, sim_band_spacing);
      scan = slice_band(contrast, plan, sim_band, config, noise);
    } else {
      scan = simulate_bscan(contrast, config, noise);
    }
    io::write_mwbs(sim_out, scan);
    write_run_json(fs::path(sim_out).parent_path().empty() ? "." : fs::path(sim_out).parent_path(),
                   "simulate",
                   {{"scene", sim_scene},
                    {"config", nlohmann::json::parse(to_json(config))},
                    {"out", sim_out},
                    {"snr_db", std::isfinite(sim_snr) ? nlohmann::json(sim_snr) : nlohmann::json()},
                    {"clutter_gain", sim_clutter_gain},
                    {"band", sim_band},
                    {"pixels", sim_pixels},
                    {"seed", seed}});
    std::cout << "wrote " << sim_out << " (" << scan.n_f() << " x " << scan.n_s() << ")\n";
  } else if (red->parsed()) {
    const BScan in = io::read_mwbs(red_in);
    const BScan out = svd_clutter_reduce(in, {red_n});
    io::write_mwbs(red_out, out);
    write_run_json(fs::path(red_out).parent_path().empty() ? "." : fs::path(red_out).parent_path(),
                   "reduce", {{"in", red_in}, {"out", red_out}, {"n_remove", red_n}});
    std::cout << "wrote " << red_out << "\n";
  } else if (img->parsed()) {
    const BScan in = io::read_mwbs(img_in);
    const cplx eps_bg{img_eps_re, -img_eps_re * img_tan};
    ImagingGrid grid;
    grid.x_min_m = in.pos_m.front();
    grid.x_max_m = in.pos_m.back();
    grid.z_min_m = 0.0;
    grid.z_max_m = img_depth;
    grid.nx = grid.nz = img_pixels;
    Image image;
    if (img_method == "bpa") {
      image = bpa_image(in, grid, eps_bg, img_spreading);
    } else {
      const AcquisitionConfig config = config_from_bscan(in);
      const TruncationSpec spec =
          img_rank > 0 ? TruncationSpec::by_rank(img_rank) : TruncationSpec::by_tau(img_tau);
      image = baa_image(in, grid, config, eps_bg, spec);
    }
    io::ImageMeta meta;
    meta.pipeline = nlohmann::json({{"method", img_method},
                                    {"eps_bg_real", img_eps_re},
                                    {"loss_tangent", img_tan},
                                    {"spreading_comp", img_spreading}})
                        .dump();
    io::write_mwim(img_out, image, meta);
    if (!img_pgm.empty()) io::write_pgm(img_pgm, image);
    write_run_json(fs::path(img_out).parent_path().empty() ? "." : fs::path(img_out).parent_path(),
                   "image",
                   {{"in", img_in},
                    {"out", img_out},
                    {"method", img_method},
                    {"pixels", img_pixels},
                    {"depth_m", img_depth}});
    std::cout << "wrote " << img_out << "\n";
  } else if (dsc->parsed()) {
    const DatasetSpec ds = dsc_flags.to_spec(seed);
    const std::vector<LabeledSample> samples = generate_dataset(ds);
    const double ratios[3] = {0.6, 0.2, 0.2};
    const SplitManifest splits = split_dataset(samples, ratios, seed);
    write_dataset_dir(dsc_dir, ds, samples, splits);
    write_run_json(dsc_dir, "dataset",
                   nlohmann::json::parse(manifest_json(ds, {}, splits))["pipeline"]);
    std::cout << "wrote " << samples.size() << " samples to " << dsc_dir << "\n";
  } else if (trn->parsed()) {
    const LoadedDataset ds = read_dataset_dir(trn_dataset);
    const int size = ds.spec.pipeline.classifier_size;
    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) by_id[ds.samples[i].id] = i;
    auto collect = [&](const std::vector<std::string>& ids) {
      TrainSet set;
      for (const auto& id : ids) {
        const LabeledSample& s = ds.samples.at(by_id.at(id));
        set.images.push_back(to_feature_vector(s.image, size).values);
        set.labels.push_back(s.label);
      }
      return set;
    };
    const TrainSet train = collect(ds.splits.train);
    const TrainSet val = collect(ds.splits.val);
    const TrainSet test = collect(ds.splits.test);

    MoistureClassSet classes;
    classes.levels = ds.spec.classes.levels;
    double test_acc = 0.0;
    if (trn_learner == "cnn") {
      CnnModel model = CnnModel::init(classes.size(), seed);
      model.class_levels = classes.levels;
      TrainConfig tc;
      tc.seed = seed;
      const TrainHistory hist = cnn_train(model, train, val, tc);
      int correct = 0;
      for (std::size_t i = 0; i < test.images.size(); ++i) {
        const auto probs = cnn_forward(model, test.images[i]);
        if (static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin()) ==
            test.labels[i])
          ++correct;
      }
      test_acc = test.images.empty() ? 0.0
                                     : static_cast<double>(correct) / test.images.size();
      write_mwnn(trn_out, model);
      std::cout << "best val acc " << hist.best_val_acc << " at epoch " << hist.best_epoch
                << ", test acc " << test_acc << "\n";
    } else {
      std::vector<FeatureVector> fvs;
      for (const auto& im : train.images) fvs.push_back(FeatureVector{im});
      KnnModel model = knn_fit(fvs, train.labels, 5, classes.size());
      model.class_levels = classes.levels;
      int correct = 0;
      for (std::size_t i = 0; i < test.images.size(); ++i)
        if (knn_predict(model, FeatureVector{test.images[i]}) == test.labels[i]) ++correct;
      test_acc = test.images.empty() ? 0.0
                                     : static_cast<double>(correct) / test.images.size();
      write_mwkn(trn_out, model);
      std::cout << "test acc " << test_acc << "\n";
    }
    write_run_json(fs::path(trn_out).parent_path().empty() ? "." : fs::path(trn_out).parent_path(),
                   "train",
                   {{"dataset", trn_dataset},
                    {"learner", trn_learner},
                    {"out", trn_out},
                    {"seed", seed},
                    {"test_accuracy", test_acc}});
  } else if (evl->parsed()) {
    EvalDefaults defaults;
    defaults.snr_db = evl_flags.snr_db;
    defaults.clutter_db_above_signal = evl_flags.clutter_db;
    const MoistureClassSet classes = evl_flags.n_classes == 9 ? MoistureClassSet::default9()
                                                              : MoistureClassSet::default8();
    const ScenarioReport rep =
        run_scenario(scenario_by_id(evl_scenario), learner_from_name(evl_learner),
                     imaging_from_name(evl_imaging), seed, defaults, classes);
    fs::create_directories(evl_dir);
    io::write_text_file(fs::path(evl_dir) / "report.json", rep.to_json_text());
    write_confusion_csv(fs::path(evl_dir) / "confusion.csv", rep.confusion);
    write_confusion_pgm(fs::path(evl_dir) / "confusion.pgm", rep.confusion);
    write_run_json(evl_dir, "eval",
                   {{"scenario", evl_scenario},
                    {"learner", evl_learner},
                    {"imaging", evl_imaging},
                    {"seed", seed},
                    {"snr_db", evl_flags.snr_db},
                    {"clutter_db", evl_flags.clutter_db},
                    {"classes", evl_flags.n_classes}});
    std::cout << "scenario " << evl_scenario << " " << evl_learner << "/" << evl_imaging
              << ": accuracy " << rep.accuracy << "\n";
  } else if (trk->parsed()) {
    TrainedModels models;
    models.classes.levels.clear();
    if (trk_model.size() > 5 && trk_model.substr(trk_model.size() - 5) == ".mwkn") {
      models.learner = Learner::knn;
      models.knn = read_mwkn(trk_model);
      models.classes.levels = models.knn.class_levels;
    } else {
      models.learner = Learner::cnn;
      models.cnn = read_mwnn(trk_model);
      models.classes.levels = models.cnn.class_levels;
    }
    if (models.classes.levels.empty())
      throw std::invalid_argument("track: model file carries no class levels");
    models.dataset_spec = trk_flags.to_spec(seed);
    models.dataset_spec.classes = models.classes;

    const std::vector<TimedScan> scans =
        synthesize_leak_series(models.dataset_spec, trk_scans, trk_interval, seed);
    const LeakTrack track = track_leak(scans, models, trk_ref_sm);
    fs::create_directories(trk_dir);
    io::write_text_file(fs::path(trk_dir) / "track.json", track.to_json_text());
    io::write_text_file(fs::path(trk_dir) / "track.csv", track.to_csv());
    write_run_json(trk_dir, "track",
                   {{"model", trk_model},
                    {"n_scans", trk_scans},
                    {"interval_min", trk_interval},
                    {"reference_sm", trk_ref_sm},
                    {"seed", seed}});
    std::cout << "fit slope " << track.fit.slope << "/min, intercept " << track.fit.intercept
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
