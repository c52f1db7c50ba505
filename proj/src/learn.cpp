#include "pipescan/learn.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "pipescan/kernels.h"
#include "pipescan/rng.h"

namespace pipescan {

FeatureVector to_feature_vector(const Image& image, int size) {
  const Image resized = (image.grid.nx == size && image.grid.nz == size)
                            ? image
                            : resample_bilinear(image, size, size);
  FeatureVector fv;
  fv.values = resized.values;
  double peak = 0.0;
  for (double v : fv.values) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : fv.values) v /= peak;
  return fv;
}

// ---------------------------------------------------------------------------
// KNN

KnnModel knn_fit(const std::vector<FeatureVector>& features, const std::vector<int>& labels,
                 int k, int n_classes) {
  if (features.empty() || features.size() != labels.size())
    throw std::invalid_argument("knn_fit: empty or mismatched training data");
  if (k < 1 || static_cast<std::size_t>(k) > features.size())
    throw std::invalid_argument("knn_fit: k outside [1, n_train]");
  KnnModel m;
  m.dim = features.front().dim();
  m.k = k;
  m.n_classes = n_classes;
  m.train_labels = labels;
  m.train_features.reserve(features.size() * m.dim);
  for (const auto& f : features) {
    if (f.dim() != m.dim) throw std::invalid_argument("knn_fit: inconsistent feature dims");
    m.train_features.insert(m.train_features.end(), f.values.begin(), f.values.end());
  }
  return m;
}

int knn_predict(const KnnModel& model, const FeatureVector& query) {
  if (query.dim() != model.dim) throw std::invalid_argument("knn_predict: dimension mismatch");
  const int n = model.n_train();
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i)
    dist[i] = {kernels::l2sq(model.train_features.data() + static_cast<std::size_t>(i) * model.dim,
                             query.values.data(), model.dim),
               i};
  const int k = std::min(model.k, n);
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());  // (distance, index) order

  std::vector<int> votes(std::max(model.n_classes, 1), 0);
  for (int j = 0; j < k; ++j) {
    const int label = model.train_labels[dist[j].second];
    if (label >= static_cast<int>(votes.size())) votes.resize(label + 1, 0);
    ++votes[label];
  }
  int best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c)
    if (votes[c] > votes[best]) best = static_cast<int>(c);
  // Count tie: the tied label seen first in the neighbor order wins (that is
  // the label of the nearest neighbor among tied labels).
  for (int j = 0; j < k; ++j) {
    const int label = model.train_labels[dist[j].second];
    if (votes[label] == votes[best]) return label;
  }
  return best;
}

// ---------------------------------------------------------------------------
// CNN

namespace {

constexpr int kIn = CnnModel::kInput;           // 48
constexpr int kP1 = kIn / 2;                    // 24
constexpr int kP2 = kIn / 4;                    // 12

void he_uniform(std::vector<double>& w, int fan_in, std::mt19937_64& eng) {
  const double limit = std::sqrt(6.0 / fan_in);
  std::uniform_real_distribution<double> u(-limit, limit);
  for (double& v : w) v = u(eng);
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// 2x2 max pooling, first-encountered index wins ties.
void maxpool2(const double* in, int h, int w, double* out, int* argmax) {
  const int oh = h / 2, ow = w / 2;
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      int best_idx = (2 * y) * w + 2 * x;
      double best = in[best_idx];
      const int candidates[3] = {(2 * y) * w + 2 * x + 1, (2 * y + 1) * w + 2 * x,
                                 (2 * y + 1) * w + 2 * x + 1};
      for (int idx : candidates)
        if (in[idx] > best) {
          best = in[idx];
          best_idx = idx;
        }
      out[y * ow + x] = best;
      argmax[y * ow + x] = best_idx;
    }
}

struct Workspace {
  std::vector<double> z1, a1, p1, z2, a2, p2, z3, a3, logits, probs;
  std::vector<int> idx1, idx2;
  // backward scratch
  std::vector<double> dz2, da1, dz1, dflat, dz3, dz4, da2;

  Workspace(int c)
      : z1(CnnModel::kC1 * kIn * kIn),
        a1(CnnModel::kC1 * kIn * kIn),
        p1(CnnModel::kC1 * kP1 * kP1),
        z2(CnnModel::kC2 * kP1 * kP1),
        a2(CnnModel::kC2 * kP1 * kP1),
        p2(CnnModel::kC2 * kP2 * kP2),
        z3(CnnModel::kHidden),
        a3(CnnModel::kHidden),
        logits(c),
        probs(c),
        idx1(CnnModel::kC1 * kP1 * kP1),
        idx2(CnnModel::kC2 * kP2 * kP2),
        dz2(CnnModel::kC2 * kP1 * kP1),
        da1(CnnModel::kC1 * kIn * kIn),
        dz1(CnnModel::kC1 * kIn * kIn),
        dflat(CnnModel::flat_dim()),
        dz3(CnnModel::kHidden),
        dz4(c),
        da2(CnnModel::kC2 * kP1 * kP1) {}
};

void forward_pass(const CnnModel& m, const double* image, Workspace& ws) {
  const int c1 = CnnModel::kC1, c2 = CnnModel::kC2, hidden = CnnModel::kHidden;
  const int C = m.n_classes;

  // conv1 (single input channel)
  for (int oc = 0; oc < c1; ++oc) {
    double* z = ws.z1.data() + oc * kIn * kIn;
    std::fill(z, z + kIn * kIn, m.conv1_b[oc]);
    kernels::conv3x3_same_acc(image, kIn, kIn, m.conv1_w.data() + oc * 9, z);
  }
  for (std::size_t i = 0; i < ws.z1.size(); ++i) ws.a1[i] = relu(ws.z1[i]);
  for (int ch = 0; ch < c1; ++ch)
    maxpool2(ws.a1.data() + ch * kIn * kIn, kIn, kIn, ws.p1.data() + ch * kP1 * kP1,
             ws.idx1.data() + ch * kP1 * kP1);

  // conv2
  for (int oc = 0; oc < c2; ++oc) {
    double* z = ws.z2.data() + oc * kP1 * kP1;
    std::fill(z, z + kP1 * kP1, m.conv2_b[oc]);
    for (int ic = 0; ic < c1; ++ic)
      kernels::conv3x3_same_acc(ws.p1.data() + ic * kP1 * kP1, kP1, kP1,
                                m.conv2_w.data() + (oc * c1 + ic) * 9, z);
  }
  for (std::size_t i = 0; i < ws.z2.size(); ++i) ws.a2[i] = relu(ws.z2[i]);
  for (int ch = 0; ch < c2; ++ch)
    maxpool2(ws.a2.data() + ch * kP1 * kP1, kP1, kP1, ws.p2.data() + ch * kP2 * kP2,
             ws.idx2.data() + ch * kP2 * kP2);

  // dense 1
  const int flat = CnnModel::flat_dim();
  for (int o = 0; o < hidden; ++o) {
    double acc = m.fc1_b[o];
    const double* wrow = m.fc1_w.data() + static_cast<std::size_t>(o) * flat;
    for (int i = 0; i < flat; ++i) acc += wrow[i] * ws.p2[i];
    ws.z3[o] = acc;
    ws.a3[o] = relu(acc);
  }

  // dense 2 + softmax
  for (int o = 0; o < C; ++o) {
    double acc = m.fc2_b[o];
    const double* wrow = m.fc2_w.data() + static_cast<std::size_t>(o) * hidden;
    for (int i = 0; i < hidden; ++i) acc += wrow[i] * ws.a3[i];
    ws.logits[o] = acc;
  }
  const double peak = *std::max_element(ws.logits.begin(), ws.logits.end());
  double denom = 0.0;
  for (int o = 0; o < C; ++o) denom += std::exp(ws.logits[o] - peak);
  for (int o = 0; o < C; ++o) ws.probs[o] = std::exp(ws.logits[o] - peak) / denom;
}

// Accumulates `scale` times this sample's parameter gradient into `g`.
void backward_pass(const CnnModel& m, const double* image, int label, double scale, Workspace& ws,
                   CnnGrads& g) {
  const int c1 = CnnModel::kC1, c2 = CnnModel::kC2, hidden = CnnModel::kHidden;
  const int C = m.n_classes;
  const int flat = CnnModel::flat_dim();

  // softmax + cross-entropy: dlogits = probs - onehot
  for (int o = 0; o < C; ++o) ws.dz4[o] = (ws.probs[o] - (o == label ? 1.0 : 0.0)) * scale;

  // dense 2
  for (int o = 0; o < C; ++o) {
    g.fc2_b[o] += ws.dz4[o];
    double* grow = g.fc2_w.data() + static_cast<std::size_t>(o) * hidden;
    for (int i = 0; i < hidden; ++i) grow[i] += ws.dz4[o] * ws.a3[i];
  }
  for (int i = 0; i < hidden; ++i) {
    double acc = 0.0;
    for (int o = 0; o < C; ++o) acc += m.fc2_w[static_cast<std::size_t>(o) * hidden + i] * ws.dz4[o];
    ws.dz3[i] = ws.z3[i] > 0.0 ? acc : 0.0;
  }

  // dense 1
  for (int o = 0; o < hidden; ++o) {
    g.fc1_b[o] += ws.dz3[o];
    double* grow = g.fc1_w.data() + static_cast<std::size_t>(o) * flat;
    for (int i = 0; i < flat; ++i) grow[i] += ws.dz3[o] * ws.p2[i];
  }
  for (int i = 0; i < flat; ++i) {
    double acc = 0.0;
    for (int o = 0; o < hidden; ++o) acc += m.fc1_w[static_cast<std::size_t>(o) * flat + i] * ws.dz3[o];
    ws.dflat[i] = acc;
  }

  // unpool 2 + ReLU'
  std::fill(ws.da2.begin(), ws.da2.end(), 0.0);
  for (int ch = 0; ch < c2; ++ch) {
    const int* idx = ws.idx2.data() + ch * kP2 * kP2;
    const double* d = ws.dflat.data() + ch * kP2 * kP2;
    double* da = ws.da2.data() + ch * kP1 * kP1;
    for (int i = 0; i < kP2 * kP2; ++i) da[idx[i]] += d[i];
  }
  for (std::size_t i = 0; i < ws.dz2.size(); ++i)
    ws.dz2[i] = ws.z2[i] > 0.0 ? ws.da2[i] : 0.0;

  // conv2 grads and input gradient
  std::fill(ws.da1.begin(), ws.da1.end(), 0.0);
  for (int oc = 0; oc < c2; ++oc) {
    const double* dz = ws.dz2.data() + oc * kP1 * kP1;
    double bsum = 0.0;
    for (int i = 0; i < kP1 * kP1; ++i) bsum += dz[i];
    g.conv2_b[oc] += bsum;
    for (int ic = 0; ic < c1; ++ic) {
      kernels::conv3x3_wgrad_acc(ws.p1.data() + ic * kP1 * kP1, kP1, kP1, dz,
                                 g.conv2_w.data() + (oc * c1 + ic) * 9);
      // input grad: correlate dz with the 180-degree rotated kernel,
      // accumulated in pool1 space (first kP1*kP1 entries of the channel block)
      double wr[9];
      const double* w = m.conv2_w.data() + (oc * c1 + ic) * 9;
      for (int t = 0; t < 9; ++t) wr[t] = w[8 - t];
      kernels::conv3x3_same_acc(dz, kP1, kP1, wr, ws.da1.data() + ic * kIn * kIn);
    }
  }

  // Scatter the pool1-space gradients through maxpool1 into image space.
  std::fill(ws.dz1.begin(), ws.dz1.end(), 0.0);
  for (int ch = 0; ch < c1; ++ch) {
    const int* idx = ws.idx1.data() + ch * kP1 * kP1;
    const double* d = ws.da1.data() + ch * kIn * kIn;  // pool-space grads
    double* dz = ws.dz1.data() + ch * kIn * kIn;
    for (int i = 0; i < kP1 * kP1; ++i) {
      const double v = d[i];
      if (v != 0.0) dz[idx[i]] += v;
    }
  }
  for (std::size_t i = 0; i < ws.dz1.size(); ++i)
    if (ws.z1[i] <= 0.0) ws.dz1[i] = 0.0;

  // conv1 grads
  for (int oc = 0; oc < c1; ++oc) {
    const double* dz = ws.dz1.data() + oc * kIn * kIn;
    double bsum = 0.0;
    for (int i = 0; i < kIn * kIn; ++i) bsum += dz[i];
    g.conv1_b[oc] += bsum;
    kernels::conv3x3_wgrad_acc(image, kIn, kIn, dz, g.conv1_w.data() + oc * 9);
  }
}

}  // namespace

CnnModel CnnModel::init(int n_classes, std::uint64_t seed) {
  if (n_classes < 2) throw std::invalid_argument("CnnModel: need at least 2 classes");
  CnnModel m;
  m.n_classes = n_classes;
  m.seed = seed;
  auto eng = make_engine(mix_seed(seed, 0x696e6974));  // "init"
  m.conv1_w.resize(kC1 * 1 * 9);
  m.conv1_b.assign(kC1, 0.0);
  m.conv2_w.resize(kC2 * kC1 * 9);
  m.conv2_b.assign(kC2, 0.0);
  m.fc1_w.resize(static_cast<std::size_t>(kHidden) * flat_dim());
  m.fc1_b.assign(kHidden, 0.0);
  m.fc2_w.resize(static_cast<std::size_t>(n_classes) * kHidden);
  m.fc2_b.assign(n_classes, 0.0);
  he_uniform(m.conv1_w, 1 * 9, eng);
  he_uniform(m.conv2_w, kC1 * 9, eng);
  he_uniform(m.fc1_w, flat_dim(), eng);
  he_uniform(m.fc2_w, kHidden, eng);
  return m;
}

std::size_t CnnModel::parameter_count() const {
  return conv1_w.size() + conv1_b.size() + conv2_w.size() + conv2_b.size() + fc1_w.size() +
         fc1_b.size() + fc2_w.size() + fc2_b.size();
}

CnnGrads CnnGrads::zeros_like(const CnnModel& m) {
  CnnGrads g;
  g.conv1_w.assign(m.conv1_w.size(), 0.0);
  g.conv1_b.assign(m.conv1_b.size(), 0.0);
  g.conv2_w.assign(m.conv2_w.size(), 0.0);
  g.conv2_b.assign(m.conv2_b.size(), 0.0);
  g.fc1_w.assign(m.fc1_w.size(), 0.0);
  g.fc1_b.assign(m.fc1_b.size(), 0.0);
  g.fc2_w.assign(m.fc2_w.size(), 0.0);
  g.fc2_b.assign(m.fc2_b.size(), 0.0);
  return g;
}

void CnnGrads::add_scaled(const CnnGrads& o, double scale) {
  auto acc = [scale](std::vector<double>& dst, const std::vector<double>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  };
  acc(conv1_w, o.conv1_w);
  acc(conv1_b, o.conv1_b);
  acc(conv2_w, o.conv2_w);
  acc(conv2_b, o.conv2_b);
  acc(fc1_w, o.fc1_w);
  acc(fc1_b, o.fc1_b);
  acc(fc2_w, o.fc2_w);
  acc(fc2_b, o.fc2_b);
}

std::vector<double> cnn_forward(const CnnModel& model, const std::vector<double>& image) {
  if (image.size() != static_cast<std::size_t>(kIn) * kIn)
    throw std::invalid_argument("cnn_forward: input must be 48x48");
  Workspace ws(model.n_classes);
  forward_pass(model, image.data(), ws);
  return ws.probs;
}

double cnn_loss_and_grads(const CnnModel& model, const std::vector<const double*>& images,
                          const std::vector<int>& labels, CnnGrads& grads) {
  if (images.empty() || images.size() != labels.size())
    throw std::invalid_argument("cnn_loss_and_grads: empty or mismatched batch");
  const double scale = 1.0 / static_cast<double>(images.size());
  Workspace ws(model.n_classes);
  double loss = 0.0;
  for (std::size_t s = 0; s < images.size(); ++s) {
    if (labels[s] < 0 || labels[s] >= model.n_classes)
      throw std::invalid_argument("cnn_loss_and_grads: label out of range");
    forward_pass(model, images[s], ws);
    loss -= scale * std::log(std::max(ws.probs[labels[s]], 1e-300));
    backward_pass(model, images[s], labels[s], scale, ws, grads);
  }
  return loss;
}

namespace {

struct AdamState {
  std::vector<double> m, v;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_update(std::vector<double>& w, const std::vector<double>& g, AdamState& st, double lr,
                 double b1, double b2, double eps, int t) {
  const double bc1 = 1.0 - std::pow(b1, t);
  const double bc2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < w.size(); ++i) {
    st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
    st.v[i] = b2 * st.v[i] + (1.0 - b2) * g[i] * g[i];
    w[i] -= lr * (st.m[i] / bc1) / (std::sqrt(st.v[i] / bc2) + eps);
  }
}

struct EvalResult {
  double loss = 0.0;
  double acc = 0.0;
};

EvalResult evaluate(const CnnModel& m, const TrainSet& set) {
  EvalResult r;
  if (set.images.empty()) return r;
  Workspace ws(m.n_classes);
  int correct = 0;
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    forward_pass(m, set.images[i].data(), ws);
    r.loss -= std::log(std::max(ws.probs[set.labels[i]], 1e-300));
    const int pred = static_cast<int>(std::max_element(ws.probs.begin(), ws.probs.end()) -
                                      ws.probs.begin());
    if (pred == set.labels[i]) ++correct;
  }
  r.loss /= static_cast<double>(set.images.size());
  r.acc = static_cast<double>(correct) / static_cast<double>(set.images.size());
  return r;
}

}  // namespace

TrainHistory cnn_train(CnnModel& model, const TrainSet& train, const TrainSet& val,
                       const TrainConfig& config) {
  TrainHistory hist;
  if (config.max_epochs == 0) return hist;
  if (train.images.empty() || val.images.empty())
    throw std::invalid_argument("cnn_train: empty train or validation split");

  AdamState s_c1w(model.conv1_w.size()), s_c1b(model.conv1_b.size());
  AdamState s_c2w(model.conv2_w.size()), s_c2b(model.conv2_b.size());
  AdamState s_f1w(model.fc1_w.size()), s_f1b(model.fc1_b.size());
  AdamState s_f2w(model.fc2_w.size()), s_f2b(model.fc2_b.size());

  auto shuffle_eng = make_engine(mix_seed(config.seed, 0x73687566));  // "shuf"
  std::vector<std::size_t> order(train.images.size());
  std::iota(order.begin(), order.end(), 0);

  CnnModel best = model;
  int since_best = 0;
  int t = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_eng);

    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t at = 0; at < order.size(); at += config.batch_size) {
      const std::size_t end = std::min(order.size(), at + config.batch_size);
      std::vector<const double*> imgs;
      std::vector<int> labels;
      for (std::size_t i = at; i < end; ++i) {
        imgs.push_back(train.images[order[i]].data());
        labels.push_back(train.labels[order[i]]);
      }
      CnnGrads g = CnnGrads::zeros_like(model);
      const double loss = cnn_loss_and_grads(model, imgs, labels, g);
      if (!std::isfinite(loss))
        throw std::runtime_error("cnn_train: loss diverged at epoch " + std::to_string(epoch));
      epoch_loss += loss;
      ++batches;
      ++t;
      adam_update(model.conv1_w, g.conv1_w, s_c1w, config.learning_rate, config.beta1,
                  config.beta2, config.epsilon, t);
      adam_update(model.conv1_b, g.conv1_b, s_c1b, config.learning_rate, config.beta1,
                  config.beta2, config.epsilon, t);
      adam_update(model.conv2_w, g.conv2_w, s_c2w, config.learning_rate, config.beta1,
                  config.beta2, config.epsilon, t);
      adam_update(model.conv2_b, g.conv2_b, s_c2b, config.learning_rate, config.beta1,
                  config.beta2, config.epsilon, t);
      adam_update(model.fc1_w, g.fc1_w, s_f1w, config.learning_rate, config.beta1, config.beta2,
                  config.epsilon, t);
      adam_update(model.fc1_b, g.fc1_b, s_f1b, config.learning_rate, config.beta1, config.beta2,
                  config.epsilon, t);
      adam_update(model.fc2_w, g.fc2_w, s_f2w, config.learning_rate, config.beta1, config.beta2,
                  config.epsilon, t);
      adam_update(model.fc2_b, g.fc2_b, s_f2b, config.learning_rate, config.beta1, config.beta2,
                  config.epsilon, t);
    }

    EpochStats st;
    st.train_loss = epoch_loss / std::max(batches, 1);
    st.train_acc = evaluate(model, train).acc;
    const EvalResult v = evaluate(model, val);
    st.val_loss = v.loss;
    st.val_acc = v.acc;
    hist.epochs.push_back(st);

    if (v.acc > hist.best_val_acc || hist.best_epoch < 0) {
      hist.best_val_acc = v.acc;
      hist.best_epoch = epoch;
      best = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  model = best;
  return hist;
}

// ---------------------------------------------------------------------------

double predict_sm(const std::function<int(const Image&)>& classify,
                  const std::vector<Image>& band_images, const MoistureClassSet& classes,
                  int expected_bands) {
  if (static_cast<int>(band_images.size()) != expected_bands)
    throw std::invalid_argument("predict_sm: band count mismatch");
  classes.validate();
  double acc = 0.0;
  for (const Image& img : band_images) {
    const int c = classify(img);
    if (c < 0 || c >= classes.size())
      throw std::invalid_argument("predict_sm: classifier returned out-of-range class");
    acc += classes.levels[c];
  }
  return acc / static_cast<double>(band_images.size());
}

int cnn_predict(const CnnModel& model, const Image& image) {
  const FeatureVector fv = to_feature_vector(image, CnnModel::kInput);
  const std::vector<double> probs = cnn_forward(model, fv.values);
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

int knn_predict_image(const KnnModel& model, const Image& image) {
  const int size = static_cast<int>(std::lround(std::sqrt(static_cast<double>(model.dim))));
  return knn_predict(model, to_feature_vector(image, size));
}

// ---------------------------------------------------------------------------
// Model files

namespace {

void put_u16(std::string& buf, std::uint16_t v) { buf.append(reinterpret_cast<char*>(&v), 2); }
void put_u32(std::string& buf, std::uint32_t v) { buf.append(reinterpret_cast<char*>(&v), 4); }
void put_f64s(std::string& buf, const std::vector<double>& v) {
  buf.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void spit(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

struct Cursor {
  const std::string& b;
  std::size_t at = 0;
  void magic(const char* m) {
    if (b.size() < at + 4 || std::memcmp(b.data() + at, m, 4) != 0)
      throw std::runtime_error(std::string("bad magic, expected ") + m);
    at += 4;
  }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  void f64s(std::vector<double>& dst, std::size_t n) {
    dst.resize(n);
    need(n * 8);
    std::memcpy(dst.data(), b.data() + at, n * 8);
    at += n * 8;
  }
  void u32s(std::vector<int>& dst, std::size_t n) {
    dst.resize(n);
    for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<int>(u32());
  }
  std::string rest() { return b.substr(at); }
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b.data() + at, sizeof(T));
    at += sizeof(T);
    return v;
  }
  void need(std::size_t n) {
    if (b.size() < at + n) throw std::runtime_error("truncated model file");
  }
};

}  // namespace

void write_mwnn(const std::filesystem::path& path, const CnnModel& model) {
  const std::vector<const std::vector<double>*> blocks = {
      &model.conv1_w, &model.conv1_b, &model.conv2_w, &model.conv2_b,
      &model.fc1_w,   &model.fc1_b,   &model.fc2_w,   &model.fc2_b};
  std::string buf;
  buf.append("MWNN", 4);
  put_u16(buf, 1);
  put_u32(buf, static_cast<std::uint32_t>(model.n_classes));
  put_u32(buf, static_cast<std::uint32_t>(blocks.size()));
  for (const auto* b : blocks) put_u32(buf, static_cast<std::uint32_t>(b->size()));
  for (const auto* b : blocks) put_f64s(buf, *b);

  nlohmann::json trailer;
  trailer["architecture"] = "conv8-3x3/relu/pool2/conv16-3x3/relu/pool2/dense64/relu/denseC/softmax";
  trailer["input"] = CnnModel::kInput;
  trailer["seed"] = model.seed;
  trailer["class_levels"] = model.class_levels;
  buf += trailer.dump();
  spit(path, buf);
}

CnnModel read_mwnn(const std::filesystem::path& path) {
  const std::string bytes = slurp(path);
  Cursor c{bytes};
  c.magic("MWNN");
  if (c.u16() != 1) throw std::runtime_error("MWNN: unsupported version");
  const int C = static_cast<int>(c.u32());
  const std::uint32_t n_blocks = c.u32();
  if (n_blocks != 8) throw std::runtime_error("MWNN: unexpected block count");
  std::vector<std::size_t> sizes(n_blocks);
  for (auto& s : sizes) s = c.u32();

  CnnModel m = CnnModel::init(C, 0);
  std::vector<std::vector<double>*> blocks = {&m.conv1_w, &m.conv1_b, &m.conv2_w, &m.conv2_b,
                                              &m.fc1_w,   &m.fc1_b,   &m.fc2_w,   &m.fc2_b};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (sizes[i] != blocks[i]->size()) throw std::runtime_error("MWNN: block shape mismatch");
    c.f64s(*blocks[i], sizes[i]);
  }
  const nlohmann::json trailer = nlohmann::json::parse(c.rest());
  m.seed = trailer.value("seed", std::uint64_t{0});
  if (trailer.contains("class_levels"))
    m.class_levels = trailer["class_levels"].get<std::vector<double>>();
  return m;
}

void write_mwkn(const std::filesystem::path& path, const KnnModel& model) {
  std::string buf;
  buf.append("MWKN", 4);
  put_u16(buf, 1);
  put_u32(buf, static_cast<std::uint32_t>(model.n_train()));
  put_u32(buf, static_cast<std::uint32_t>(model.dim));
  put_u32(buf, static_cast<std::uint32_t>(model.k));
  put_f64s(buf, model.train_features);
  for (int l : model.train_labels) put_u32(buf, static_cast<std::uint32_t>(l));

  nlohmann::json trailer;
  trailer["n_classes"] = model.n_classes;
  trailer["class_levels"] = model.class_levels;
  buf += trailer.dump();
  spit(path, buf);
}

KnnModel read_mwkn(const std::filesystem::path& path) {
  const std::string bytes = slurp(path);
  Cursor c{bytes};
  c.magic("MWKN");
  if (c.u16() != 1) throw std::runtime_error("MWKN: unsupported version");
  KnnModel m;
  const std::uint32_t n = c.u32();
  m.dim = static_cast<int>(c.u32());
  m.k = static_cast<int>(c.u32());
  c.f64s(m.train_features, static_cast<std::size_t>(n) * m.dim);
  c.u32s(m.train_labels, n);
  const nlohmann::json trailer = nlohmann::json::parse(c.rest());
  m.n_classes = trailer.value("n_classes", 0);
  if (trailer.contains("class_levels"))
    m.class_levels = trailer["class_levels"].get<std::vector<double>>();
  return m;
}

}  // namespace pipescan
