#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pipescan/dataset.h"
#include "pipescan/imaging.h"

namespace pipescan {

// Flattened classifier input, per-image max-abs normalized to [0,1].
struct FeatureVector {
  std::vector<double> values;
  int dim() const { return static_cast<int>(values.size()); }
};

FeatureVector to_feature_vector(const Image& image, int size);

// ---------------------------------------------------------------------------
// KNN

struct KnnModel {
  std::vector<double> train_features;  // row-major n x dim
  std::vector<int> train_labels;
  int dim = 0;
  int k = 5;
  int n_classes = 0;
  std::vector<double> class_levels;

  int n_train() const { return static_cast<int>(train_labels.size()); }
};

KnnModel knn_fit(const std::vector<FeatureVector>& features, const std::vector<int>& labels,
                 int k, int n_classes);

// Majority vote among the k nearest training points (Euclidean). Count ties
// break to the label of the nearest tied neighbor; distance ties break to the
// lower training index.
int knn_predict(const KnnModel& model, const FeatureVector& query);

// ---------------------------------------------------------------------------
// CNN: conv(8,3x3,pad1)+ReLU -> maxpool2 -> conv(16,3x3,pad1)+ReLU ->
//      maxpool2 -> dense(64)+ReLU -> dense(C)+softmax. Float64 throughout.

struct CnnModel {
  static constexpr int kInput = 48;
  static constexpr int kC1 = 8;
  static constexpr int kC2 = 16;
  static constexpr int kHidden = 64;

  int n_classes = 8;
  std::uint64_t seed = 0;
  std::vector<double> class_levels;

  std::vector<double> conv1_w, conv1_b;  // [8*1*3*3], [8]
  std::vector<double> conv2_w, conv2_b;  // [16*8*3*3], [16]
  std::vector<double> fc1_w, fc1_b;      // [64 x 2304], [64]
  std::vector<double> fc2_w, fc2_b;      // [C x 64], [C]

  static int flat_dim() { return kC2 * (kInput / 4) * (kInput / 4); }
  // He-style uniform init scaled by fan-in; biases zero.
  static CnnModel init(int n_classes, std::uint64_t seed);
  std::size_t parameter_count() const;
};

// Gradient container congruent to the parameter blocks.
struct CnnGrads {
  std::vector<double> conv1_w, conv1_b, conv2_w, conv2_b, fc1_w, fc1_b, fc2_w, fc2_b;
  static CnnGrads zeros_like(const CnnModel& m);
  void add_scaled(const CnnGrads& o, double scale);
};

std::vector<double> cnn_forward(const CnnModel& model, const std::vector<double>& image);

// Mean cross-entropy over the batch and its gradient.
double cnn_loss_and_grads(const CnnModel& model, const std::vector<const double*>& images,
                          const std::vector<int>& labels, CnnGrads& grads);

struct TrainConfig {
  // 1e-2 converges within the early-stopping budget on the 80-sample
  // reference training split (5 Adam steps per epoch); 1e-3 stalls there.
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 16;
  int max_epochs = 100;
  int patience = 10;  // epochs without val-accuracy improvement
  std::uint64_t seed = 0;
};

struct EpochStats {
  double train_loss = 0.0, train_acc = 0.0;
  double val_loss = 0.0, val_acc = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_acc = 0.0;
};

struct TrainSet {
  std::vector<std::vector<double>> images;  // normalized 48x48 buffers
  std::vector<int> labels;
};

// Adam + early stopping on validation accuracy; the model is left at the
// best-validation snapshot. Deterministic per config seed.
TrainHistory cnn_train(CnnModel& model, const TrainSet& train, const TrainSet& val,
                       const TrainConfig& config);

// ---------------------------------------------------------------------------

// Average the class levels predicted per band image. `classify` maps an
// image to a class index against `classes`.
double predict_sm(const std::function<int(const Image&)>& classify,
                  const std::vector<Image>& band_images, const MoistureClassSet& classes,
                  int expected_bands);

int cnn_predict(const CnnModel& model, const Image& image);
int knn_predict_image(const KnnModel& model, const Image& image);

// Model files ("MWNN"/"MWKN"): header, shape table, float64 parameters, JSON
// trailer. Byte-exact round trips.
void write_mwnn(const std::filesystem::path& path, const CnnModel& model);
CnnModel read_mwnn(const std::filesystem::path& path);
void write_mwkn(const std::filesystem::path& path, const KnnModel& model);
KnnModel read_mwkn(const std::filesystem::path& path);

}  // namespace pipescan
