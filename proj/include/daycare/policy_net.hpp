#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "daycare/env.hpp"
#include "daycare/errors.hpp"
#include "daycare/kv.hpp"
#include "daycare/perception.hpp"
#include "daycare/rng.hpp"

namespace daycare {

enum class EncoderKind : std::uint8_t { MultiHot, Dense, Conv };

inline std::string_view encoder_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::MultiHot: return "multihot";
    case EncoderKind::Dense: return "dense";
    case EncoderKind::Conv: return "conv";
  }
  return "?";
}

inline EncoderKind encoder_from_name(std::string_view name) {
  if (name == "multihot") return EncoderKind::MultiHot;
  if (name == "dense") return EncoderKind::Dense;
  if (name == "conv") return EncoderKind::Conv;
  throw ConfigError("unknown encoder '" + std::string(name) + "'");
}

/// Layer sizes of the recurrent actor-critic. The torso is two ReLU layers;
/// for the conv encoder the first torso layer reads the flattened conv stack.
struct Architecture {
  EncoderKind encoder = EncoderKind::MultiHot;
  int input_size = kSymbolicFeatures;
  int conv1_channels = 16;
  int conv2_channels = 32;
  int torso1 = 64;
  int torso2 = 64;
  int aux_size = 3;
  int lstm_size = 128;
  int head_size = 128;
  int num_actions = kNumActions;

  /// Symbolic input, LSTM 128, heads 128.
  static Architecture desk() { return {}; }

  /// Pixel input through conv 16/32, LSTM 256, heads 256.
  static Architecture pixels() {
    Architecture a;
    a.encoder = EncoderKind::Conv;
    a.input_size = kPixelRows * kPixelCols * kPixelChannels;
    a.lstm_size = 256;
    a.head_size = 256;
    return a;
  }

  int torso_input() const {
    return encoder == EncoderKind::Conv ? conv2_channels * kViewCells : input_size;
  }

  std::string fingerprint() const {
    std::string s(encoder_name(encoder));
    s += ":in" + std::to_string(input_size);
    if (encoder == EncoderKind::Conv) s += ":conv" + std::to_string(conv1_channels) + "," + std::to_string(conv2_channels);
    s += ":torso" + std::to_string(torso1) + "," + std::to_string(torso2);
    s += ":aux" + std::to_string(aux_size) + ":lstm" + std::to_string(lstm_size);
    s += ":head" + std::to_string(head_size) + ":act" + std::to_string(num_actions);
    return s;
  }

  KeyValues to_kv() const {
    KeyValues kv;
    kv.set("encoder", std::string(encoder_name(encoder)));
    kv.set("input_size", input_size);
    kv.set("conv1_channels", conv1_channels);
    kv.set("conv2_channels", conv2_channels);
    kv.set("torso1", torso1);
    kv.set("torso2", torso2);
    kv.set("aux_size", aux_size);
    kv.set("lstm_size", lstm_size);
    kv.set("head_size", head_size);
    kv.set("num_actions", num_actions);
    return kv;
  }

  /// Missing keys keep their desk-profile defaults; unknown keys are rejected.
  static Architecture from_kv(const KeyValues& kv) {
    Architecture a;
    for (const auto& k : kv.keys()) {
      auto num = [&] { return static_cast<int>(kv.get_int(k)); };
      if (k == "encoder") a.encoder = encoder_from_name(kv.get(k));
      else if (k == "input_size") a.input_size = num();
      else if (k == "conv1_channels") a.conv1_channels = num();
      else if (k == "conv2_channels") a.conv2_channels = num();
      else if (k == "torso1") a.torso1 = num();
      else if (k == "torso2") a.torso2 = num();
      else if (k == "aux_size") a.aux_size = num();
      else if (k == "lstm_size") a.lstm_size = num();
      else if (k == "head_size") a.head_size = num();
      else if (k == "num_actions") a.num_actions = num();
      else throw ConfigError("unknown architecture key '" + k + "'");
    }
    for (int v : {a.input_size, a.conv1_channels, a.conv2_channels, a.torso1, a.torso2, a.lstm_size, a.head_size,
                  a.num_actions})
      if (v < 1) throw ConfigError("architecture sizes must be >= 1");
    if (a.aux_size < 0) throw ConfigError("aux_size must be >= 0");
    return a;
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// One batch element's observation in the form the encoder expects.
struct PolicyInput {
  std::vector<std::int32_t> active;   // MultiHot: indices of set features
  std::vector<float> dense;           // Dense
  std::vector<std::uint8_t> pixels;   // Conv: 88x88x3 row-major
};

/// Recurrent actor-critic with a hand-written backward pass.
///
/// All parameters live in one flat vector so the optimiser, checkpointing and
/// finite-difference checks can treat them uniformly. Batches are laid out
/// column-wise (one column per environment).
template <typename T>
class PolicyNet {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;

  struct Segment {
    std::string name;
    int rows = 0;
    int cols = 0;
    Eigen::Index offset = 0;
    Eigen::Index size() const { return static_cast<Eigen::Index>(rows) * cols; }
  };

  struct RecurrentState {
    Matrix h;
    Matrix c;
  };

  /// Activations of one time step, kept for the backward pass.
  struct StepCache {
    std::vector<Matrix> patches1, act1, patches2;  // conv only, per batch column
    Matrix enc;                                     // dense/conv encoder output
    Matrix a1, a2, z, c_prev, gates, c, tanh_c, h, ph, vh;
    Matrix logits, probs, values;
  };

  PolicyNet() = default;

  PolicyNet(const Architecture& arch, std::uint64_t seed) : arch_(arch) {
    build_layout();
    params_ = Vector::Zero(total_);
    initialize(seed);
  }

  const Architecture& architecture() const { return arch_; }
  const std::vector<Segment>& segments() const { return segments_; }
  Eigen::Index num_parameters() const { return total_; }
  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }

  MatrixMap view(Vector& flat, int seg) const {
    const auto& s = segments_[seg];
    return MatrixMap(flat.data() + s.offset, s.rows, s.cols);
  }
  ConstMatrixMap view(const Vector& flat, int seg) const {
    const auto& s = segments_[seg];
    return ConstMatrixMap(flat.data() + s.offset, s.rows, s.cols);
  }
  MatrixMap param(int seg) { return view(params_, seg); }
  ConstMatrixMap param(int seg) const { return view(params_, seg); }

  int segment_index(std::string_view name) const {
    for (std::size_t i = 0; i < segments_.size(); ++i)
      if (segments_[i].name == name) return static_cast<int>(i);
    throw InputError("no parameter named '" + std::string(name) + "'");
  }

  // Segment ids used by the value-output rescaling.
  int value_out_weight() const { return id_.vw2; }
  int value_out_bias() const { return id_.vb2; }

  RecurrentState initial_state(int batch) const {
    return {Matrix::Zero(arch_.lstm_size, batch), Matrix::Zero(arch_.lstm_size, batch)};
  }

  /// One time step for a batch. Updates `state` in place. When `cache` is
  /// given, stores what backward() needs.
  void forward(std::span<const PolicyInput> inputs, const Matrix& aux, RecurrentState& state,
               StepCache& cache) const {
    const int B = static_cast<int>(inputs.size());
    if (aux.rows() != arch_.aux_size || aux.cols() != B) throw InputError("aux input has wrong shape");
    if (state.h.rows() != arch_.lstm_size || state.h.cols() != B) throw InputError("recurrent state has wrong shape");
    const int H = arch_.lstm_size;

    // Encoder + first torso layer.
    Matrix pre1(arch_.torso1, B);
    const auto w1 = param(id_.t1w);
    const auto b1 = param(id_.t1b);
    switch (arch_.encoder) {
      case EncoderKind::MultiHot:
        for (int b = 0; b < B; ++b) {
          auto col = pre1.col(b);
          col = b1.col(0);
          for (std::int32_t idx : inputs[b].active) {
            if (idx < 0 || idx >= arch_.input_size) throw InputError("multi-hot index out of range");
            col += w1.col(idx);
          }
        }
        break;
      case EncoderKind::Dense:
        cache.enc.resize(arch_.input_size, B);
        for (int b = 0; b < B; ++b) {
          if (static_cast<int>(inputs[b].dense.size()) != arch_.input_size) throw InputError("dense input has wrong size");
          for (int i = 0; i < arch_.input_size; ++i) cache.enc(i, b) = static_cast<T>(inputs[b].dense[i]);
        }
        pre1.noalias() = w1 * cache.enc;
        pre1.colwise() += b1.col(0);
        break;
      case EncoderKind::Conv:
        conv_forward(inputs, cache);
        pre1.noalias() = w1 * cache.enc;
        pre1.colwise() += b1.col(0);
        break;
    }
    cache.a1 = pre1.cwiseMax(T(0));
    cache.a2.noalias() = param(id_.t2w) * cache.a1;
    cache.a2.colwise() += param(id_.t2b).col(0);
    cache.a2 = cache.a2.cwiseMax(T(0));

    // LSTM.
    const int Z = arch_.torso2 + arch_.aux_size + H;
    cache.z.resize(Z, B);
    cache.z.topRows(arch_.torso2) = cache.a2;
    cache.z.middleRows(arch_.torso2, arch_.aux_size) = aux;
    cache.z.bottomRows(H) = state.h;
    cache.c_prev = state.c;
    cache.gates.noalias() = param(id_.lw) * cache.z;
    cache.gates.colwise() += param(id_.lb).col(0);
    auto sig = [](auto x) { return T(1) / (T(1) + (-x).array().exp()); };
    cache.gates.topRows(2 * H) = sig(cache.gates.topRows(2 * H)).matrix();
    cache.gates.middleRows(2 * H, H) = cache.gates.middleRows(2 * H, H).array().tanh().matrix();
    cache.gates.bottomRows(H) = sig(cache.gates.bottomRows(H)).matrix();
    const auto i_g = cache.gates.topRows(H).array();
    const auto f_g = cache.gates.middleRows(H, H).array();
    const auto g_g = cache.gates.middleRows(2 * H, H).array();
    const auto o_g = cache.gates.bottomRows(H).array();
    cache.c = (f_g * cache.c_prev.array() + i_g * g_g).matrix();
    cache.tanh_c = cache.c.array().tanh().matrix();
    cache.h = (o_g * cache.tanh_c.array()).matrix();
    state.h = cache.h;
    state.c = cache.c;

    // Heads.
    cache.ph.noalias() = param(id_.pw1) * cache.h;
    cache.ph.colwise() += param(id_.pb1).col(0);
    cache.ph = cache.ph.cwiseMax(T(0));
    cache.logits.noalias() = param(id_.pw2) * cache.ph;
    cache.logits.colwise() += param(id_.pb2).col(0);
    cache.vh.noalias() = param(id_.vw1) * cache.h;
    cache.vh.colwise() += param(id_.vb1).col(0);
    cache.vh = cache.vh.cwiseMax(T(0));
    cache.values.noalias() = param(id_.vw2) * cache.vh;
    cache.values.colwise() += param(id_.vb2).col(0);

    cache.probs.resize(arch_.num_actions, B);
    for (int b = 0; b < B; ++b) {
      const T m = cache.logits.col(b).maxCoeff();
      auto e = (cache.logits.col(b).array() - m).exp();
      cache.probs.col(b) = (e / e.sum()).matrix();
    }
  }

  /// Backward through one step. `dlogits` (A x B) and `dvalues` (1 x B) are
  /// loss gradients of this step's outputs; `dh`, `dc` carry the gradient
  /// flowing back from the next step and are replaced with the gradient for
  /// the previous step. Columns flagged in `reset` had their incoming state
  /// zeroed, so nothing flows further back for them.
  void backward(std::span<const PolicyInput> inputs, const StepCache& cache, const Matrix& dlogits,
                const Matrix& dvalues, const std::vector<bool>& reset, Matrix& dh, Matrix& dc, Vector& grad) const {
    const int H = arch_.lstm_size;

    // Heads.
    view(grad, id_.pw2).noalias() += dlogits * cache.ph.transpose();
    view(grad, id_.pb2) += dlogits.rowwise().sum();
    Matrix dph = (param(id_.pw2).transpose() * dlogits).cwiseProduct(relu_mask(cache.ph));
    view(grad, id_.pw1).noalias() += dph * cache.h.transpose();
    view(grad, id_.pb1) += dph.rowwise().sum();
    view(grad, id_.vw2).noalias() += dvalues * cache.vh.transpose();
    view(grad, id_.vb2) += dvalues.rowwise().sum();
    Matrix dvh = (param(id_.vw2).transpose() * dvalues).cwiseProduct(relu_mask(cache.vh));
    view(grad, id_.vw1).noalias() += dvh * cache.h.transpose();
    view(grad, id_.vb1) += dvh.rowwise().sum();

    Matrix dh_total = dh;
    dh_total.noalias() += param(id_.pw1).transpose() * dph;
    dh_total.noalias() += param(id_.vw1).transpose() * dvh;

    // LSTM cell.
    const auto i_g = cache.gates.topRows(H).array();
    const auto f_g = cache.gates.middleRows(H, H).array();
    const auto g_g = cache.gates.middleRows(2 * H, H).array();
    const auto o_g = cache.gates.bottomRows(H).array();
    const auto tc = cache.tanh_c.array();
    const Matrix dcell = (dh_total.array() * o_g * (T(1) - tc * tc) + dc.array()).matrix();
    Matrix dgates(4 * H, dh_total.cols());
    dgates.topRows(H) = (dcell.array() * g_g * i_g * (T(1) - i_g)).matrix();
    dgates.middleRows(H, H) = (dcell.array() * cache.c_prev.array() * f_g * (T(1) - f_g)).matrix();
    dgates.middleRows(2 * H, H) = (dcell.array() * i_g * (T(1) - g_g * g_g)).matrix();
    dgates.bottomRows(H) = (dh_total.array() * tc * o_g * (T(1) - o_g)).matrix();
    view(grad, id_.lw).noalias() += dgates * cache.z.transpose();
    view(grad, id_.lb) += dgates.rowwise().sum();
    const Matrix dz = param(id_.lw).transpose() * dgates;

    dh = dz.bottomRows(H);
    dc = (dcell.array() * f_g).matrix();
    for (int b = 0; b < static_cast<int>(reset.size()); ++b)
      if (reset[b]) {
        dh.col(b).setZero();
        dc.col(b).setZero();
      }

    // Torso.
    const Matrix dpre2 = dz.topRows(arch_.torso2).cwiseProduct(relu_mask(cache.a2));
    view(grad, id_.t2w).noalias() += dpre2 * cache.a1.transpose();
    view(grad, id_.t2b) += dpre2.rowwise().sum();
    const Matrix dpre1 = (param(id_.t2w).transpose() * dpre2).cwiseProduct(relu_mask(cache.a1));
    view(grad, id_.t1b) += dpre1.rowwise().sum();
    auto gw1 = view(grad, id_.t1w);
    switch (arch_.encoder) {
      case EncoderKind::MultiHot:
        for (int b = 0; b < static_cast<int>(inputs.size()); ++b)
          for (std::int32_t idx : inputs[b].active) gw1.col(idx) += dpre1.col(b);
        break;
      case EncoderKind::Dense:
        gw1.noalias() += dpre1 * cache.enc.transpose();
        break;
      case EncoderKind::Conv: {
        gw1.noalias() += dpre1 * cache.enc.transpose();
        const Matrix denc = param(id_.t1w).transpose() * dpre1;
        conv_backward(cache, denc, grad);
        break;
      }
    }
  }

  std::uint64_t weight_hash() const {
    return fnv1a(std::string_view(reinterpret_cast<const char*>(params_.data()),
                                  static_cast<std::size_t>(params_.size()) * sizeof(T)));
  }

 private:
  struct Ids {
    int c1w = -1, c1b = -1, c2w = -1, c2b = -1;
    int t1w = -1, t1b = -1, t2w = -1, t2b = -1, lw = -1, lb = -1;
    int pw1 = -1, pb1 = -1, pw2 = -1, pb2 = -1, vw1 = -1, vb1 = -1, vw2 = -1, vb2 = -1;
  };

  static Matrix relu_mask(const Matrix& a) { return (a.array() > T(0)).template cast<T>().matrix(); }

  int add(const std::string& name, int rows, int cols) {
    segments_.push_back({name, rows, cols, total_});
    total_ += static_cast<Eigen::Index>(rows) * cols;
    return static_cast<int>(segments_.size()) - 1;
  }

  void build_layout() {
    segments_.clear();
    total_ = 0;
    const auto& a = arch_;
    if (a.encoder == EncoderKind::Conv) {
      id_.c1w = add("conv1.w", a.conv1_channels, kPixelChannels * kCellPixels * kCellPixels);
      id_.c1b = add("conv1.b", a.conv1_channels, 1);
      id_.c2w = add("conv2.w", a.conv2_channels, a.conv1_channels * 9);
      id_.c2b = add("conv2.b", a.conv2_channels, 1);
    }
    id_.t1w = add("torso1.w", a.torso1, a.torso_input());
    id_.t1b = add("torso1.b", a.torso1, 1);
    id_.t2w = add("torso2.w", a.torso2, a.torso1);
    id_.t2b = add("torso2.b", a.torso2, 1);
    id_.lw = add("lstm.w", 4 * a.lstm_size, a.torso2 + a.aux_size + a.lstm_size);
    id_.lb = add("lstm.b", 4 * a.lstm_size, 1);
    id_.pw1 = add("policy.w1", a.head_size, a.lstm_size);
    id_.pb1 = add("policy.b1", a.head_size, 1);
    id_.pw2 = add("policy.w2", a.num_actions, a.head_size);
    id_.pb2 = add("policy.b2", a.num_actions, 1);
    id_.vw1 = add("value.w1", a.head_size, a.lstm_size);
    id_.vb1 = add("value.b1", a.head_size, 1);
    id_.vw2 = add("value.w2", 1, a.head_size);
    id_.vb2 = add("value.b2", 1, 1);
  }

  void initialize(std::uint64_t seed) {
    Rng rng(seed, 101);
    auto glorot = [&](int seg, int fan_in, int fan_out) {
      auto w = param(seg);
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>((2.0 * rng.uniform() - 1.0) * limit);
    };
    const auto& a = arch_;
    if (a.encoder == EncoderKind::Conv) {
      glorot(id_.c1w, kPixelChannels * 64, a.conv1_channels);
      glorot(id_.c2w, a.conv1_channels * 9, a.conv2_channels);
    }
    glorot(id_.t1w, a.torso_input(), a.torso1);
    glorot(id_.t2w, a.torso1, a.torso2);
    glorot(id_.lw, a.torso2 + a.aux_size + a.lstm_size, a.lstm_size);
    param(id_.lb).middleRows(a.lstm_size, a.lstm_size).setConstant(T(1));  // forget gate
    glorot(id_.pw1, a.lstm_size, a.head_size);
    glorot(id_.vw1, a.lstm_size, a.head_size);
    glorot(id_.vw2, a.head_size, 1);
    // policy.w2 stays zero: the initial policy is uniform.
  }

  void conv_forward(std::span<const PolicyInput> inputs, StepCache& cache) const {
    const int B = static_cast<int>(inputs.size());
    const int C1 = arch_.conv1_channels, C2 = arch_.conv2_channels;
    constexpr int K1 = kPixelChannels * kCellPixels * kCellPixels;
    cache.patches1.resize(B);
    cache.act1.resize(B);
    cache.patches2.resize(B);
    cache.enc.resize(C2 * kViewCells, B);
    for (int b = 0; b < B; ++b) {
      const auto& px = inputs[b].pixels;
      if (static_cast<int>(px.size()) != kPixelRows * kPixelCols * kPixelChannels)
        throw InputError("pixel input must be 88x88x3");
      Matrix& p1 = cache.patches1[b];
      p1.resize(K1, kViewCells);
      for (int cell = 0; cell < kViewCells; ++cell) {
        const int r0 = (cell / kViewCols) * kCellPixels, c0 = (cell % kViewCols) * kCellPixels;
        for (int ch = 0; ch < kPixelChannels; ++ch)
          for (int y = 0; y < kCellPixels; ++y)
            for (int x = 0; x < kCellPixels; ++x)
              p1((ch * kCellPixels + y) * kCellPixels + x, cell) =
                  static_cast<T>(px[((r0 + y) * kPixelCols + c0 + x) * kPixelChannels + ch]) / T(255);
      }
      Matrix z1 = param(id_.c1w) * p1;
      z1.colwise() += param(id_.c1b).col(0);
      cache.act1[b] = z1.cwiseMax(T(0));
      Matrix& p2 = cache.patches2[b];
      p2.setZero(C1 * 9, kViewCells);
      for (int cell = 0; cell < kViewCells; ++cell) {
        const int r = cell / kViewCols, c = cell % kViewCols;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int rr = r + dy, cc = c + dx;
            if (rr < 0 || rr >= kViewRows || cc < 0 || cc >= kViewCols) continue;
            const int k = (dy + 1) * 3 + (dx + 1);
            for (int ch = 0; ch < C1; ++ch) p2(ch * 9 + k, cell) = cache.act1[b](ch, rr * kViewCols + cc);
          }
      }
      Matrix z2 = param(id_.c2w) * p2;
      z2.colwise() += param(id_.c2b).col(0);
      z2 = z2.cwiseMax(T(0));
      cache.enc.col(b) = Eigen::Map<const Vector>(z2.data(), C2 * kViewCells);
    }
  }

  void conv_backward(const StepCache& cache, const Matrix& denc, Vector& grad) const {
    const int C1 = arch_.conv1_channels, C2 = arch_.conv2_channels;
    for (int b = 0; b < static_cast<int>(cache.patches1.size()); ++b) {
      const Matrix a2 = Eigen::Map<const Matrix>(cache.enc.col(b).data(), C2, kViewCells);
      const Matrix dz2 = Eigen::Map<const Matrix>(denc.col(b).data(), C2, kViewCells).cwiseProduct(relu_mask(a2));
      view(grad, id_.c2w).noalias() += dz2 * cache.patches2[b].transpose();
      view(grad, id_.c2b) += dz2.rowwise().sum();
      const Matrix dp2 = param(id_.c2w).transpose() * dz2;
      Matrix da1 = Matrix::Zero(C1, kViewCells);
      for (int cell = 0; cell < kViewCells; ++cell) {
        const int r = cell / kViewCols, c = cell % kViewCols;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int rr = r + dy, cc = c + dx;
            if (rr < 0 || rr >= kViewRows || cc < 0 || cc >= kViewCols) continue;
            const int k = (dy + 1) * 3 + (dx + 1);
            for (int ch = 0; ch < C1; ++ch) da1(ch, rr * kViewCols + cc) += dp2(ch * 9 + k, cell);
          }
      }
      const Matrix dz1 = da1.cwiseProduct(relu_mask(cache.act1[b]));
      view(grad, id_.c1w).noalias() += dz1 * cache.patches1[b].transpose();
      view(grad, id_.c1b) += dz1.rowwise().sum();
    }
  }

  Architecture arch_;
  std::vector<Segment> segments_;
  Eigen::Index total_ = 0;
  Ids id_;
  Vector params_;
};

/// Adam moments over a flat parameter vector.
template <typename T>
struct AdamState {
  Eigen::Matrix<T, Eigen::Dynamic, 1> m;
  Eigen::Matrix<T, Eigen::Dynamic, 1> v;
  std::int64_t step = 0;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
void adam_step(Eigen::Matrix<T, Eigen::Dynamic, 1>& params, const Eigen::Matrix<T, Eigen::Dynamic, 1>& grad,
               AdamState<T>& st, const AdamConfig& cfg) {
  if (st.m.size() != params.size()) {
    st.m.setZero(params.size());
    st.v.setZero(params.size());
    st.step = 0;
  }
  ++st.step;
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  st.m = b1 * st.m + (T(1) - b1) * grad;
  st.v = b2 * st.v + (T(1) - b2) * grad.cwiseProduct(grad);
  const T c1 = T(1) - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(st.step)));
  const T c2 = T(1) - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(st.step)));
  const T lr = static_cast<T>(cfg.learning_rate);
  params.array() -= lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + static_cast<T>(cfg.epsilon));
}

}  // namespace daycare
