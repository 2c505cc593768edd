#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mjo/errors.hpp"
#include "mjo/rng.hpp"

namespace mjo::ad {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

/// One value in the differentiation graph. Nodes are created in program
/// order; backward processes them in strictly decreasing creation order,
/// which makes gradient accumulation deterministic.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on demand, same length as value
  bool requires_grad = false;
  std::uint64_t id = 0;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // pushes this->grad into parents
  bool backward_ran = false;

  void ensure_grad();
};

/// Value-semantics handle onto a graph node.
class Tensor {
public:
  Tensor() = default;

  static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> values() const { return node_->value; }
  /// Mutable access to a leaf's storage (parameters, staging buffers).
  std::span<double> values_mut();
  std::span<const double> grad() const;
  std::span<double> grad_mut();

  double item() const;

  /// Reverse-mode accumulation from this scalar. Throws if the value is
  /// not scalar or if backward already ran through this node.
  void backward() const;
  void zero_grad() const;

  std::shared_ptr<Node>& node() { return node_; }
  const std::shared_ptr<Node>& node() const { return node_; }

  static Tensor wrap(std::shared_ptr<Node> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }

private:
  std::shared_ptr<Node> node_;
};

/// Creates an operation node. The backprop callback must honor each
/// parent's requires_grad flag and accumulate (+=) into parent grads.
Tensor make_op(const char* op, Shape shape, std::vector<double> value,
               std::vector<std::shared_ptr<Node>> parents, std::function<void(Node&)> backprop);

// ---- elementwise and reduction ops ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
/// Mean of squared differences over all elements.
Tensor mse(const Tensor& a, const Tensor& b);

// ---- dense ops ----
/// (m,k) x (k,n) -> (m,n).
Tensor matmul(const Tensor& a, const Tensor& b);
/// Adds a length-n row vector to every row of an (m,n) matrix.
Tensor add_rowvec(const Tensor& m, const Tensor& v);
/// Column slice [begin,end) of an (m,n) matrix.
Tensor slice_cols(const Tensor& m, int begin, int end);
/// Horizontal concatenation of (m,p) and (m,q).
Tensor concat_cols(const Tensor& a, const Tensor& b);

// ---- sequence ops over (N, L, D) ----
Tensor select_step(const Tensor& seq, int t);                 // -> (N, D)
Tensor stack_steps(const std::vector<Tensor>& steps);         // L x (N,D) -> (N,L,D)
/// (N,L,F) x (F,G) -> (N,L,G); the matrix may be a frozen constant.
Tensor linear_seq(const Tensor& seq, const Tensor& matrix);

// ---- field ops over (N, C, T, H, W) ----
enum class PadMode { Zero, Circular };

struct Conv3dSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kt = 1, kh = 1, kw = 1;  // odd extents
  PadMode pad_t = PadMode::Zero;
  PadMode pad_h = PadMode::Zero;
  PadMode pad_w = PadMode::Circular;

  void validate() const;
  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * in_channels * kt * kh * kw;
  }
};

/// Same-size cross-correlation, stride 1. Weight shape
/// (out_c, in_c, kt, kh, kw), bias shape (out_c).
Tensor conv3d(const Tensor& input, const Conv3dSpec& spec, const Tensor& weight,
              const Tensor& bias);

/// Average pooling with ceiling division; edge windows average over the
/// cells that exist.
Tensor pool_avg(const Tensor& input, std::array<int, 3> factors);

/// Nearest-neighbor upsampling to explicit target extents (t, h, w);
/// source index = floor(i * in_extent / out_extent).
Tensor upsample_nn(const Tensor& input, std::array<int, 3> target_extents);

Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Mean over rows [row_begin, row_end) of the H axis: (N,C,T,H,W) -> (N,C,T,W).
Tensor band_mean_h(const Tensor& input, int row_begin, int row_end);

/// Per-channel affine x*gain[c] + bias[c] on (N,C,T,H,W); used to map
/// standardized fields back to physical units inside the graph.
Tensor channel_affine(const Tensor& input, std::array<double, 3> gain, std::array<double, 3> bias);

/// (N,C,T,W) -> (N,T,C*W), dividing channel c by norms[c]: builds the
/// combined projection feature per lead.
Tensor profiles_to_features(const Tensor& input, std::array<double, 3> norms);

/// Negative mean bivariate correlation across the batch, per lead, between
/// refined (N,L,2) and observed (N,L,2). Leads with a zero denominator
/// contribute 0 and are counted in degenerate_leads when given.
Tensor bivariate_cor_loss(const Tensor& refined, const Tensor& observed,
                          int* degenerate_leads = nullptr);

// ---- LSTM ----
struct LstmSpec {
  int input_size = 2;
  int hidden_size = 32;
  int output_size = 2;
  void validate() const;
  /// 4*(H*I + H*H + H) gate parameters plus the (H*O + O) read-out.
  std::int64_t parameter_count() const;
};

/// Weights stored input-major: w_x (I, 4H), w_h (H, 4H), b (4H) with gate
/// order (input, forget, cell, output); read-out w_out (H, O), b_out (O).
struct LstmParams {
  Tensor w_x, w_h, b, w_out, b_out;
};

/// Single-layer LSTM over (N, L, I) with zero initial state and a linear
/// per-step read-out; returns (N, L, O).
Tensor lstm_forward(const Tensor& seq, const LstmSpec& spec, const LstmParams& params);

}  // namespace mjo::ad
