#include "mjo/tensor.hpp"

namespace mjo::ad {

void LstmSpec::validate() const {
  if (input_size <= 0 || hidden_size <= 0 || output_size <= 0)
    throw ModelError("lstm: spec sizes must be positive");
}

std::int64_t LstmSpec::parameter_count() const {
  const std::int64_t h = hidden_size, i = input_size, o = output_size;
  return 4 * (h * i + h * h + h) + (h * o + o);
}

Tensor lstm_forward(const Tensor& seq, const LstmSpec& spec, const LstmParams& params) {
  spec.validate();
  if (seq.shape().size() != 3 || seq.shape()[2] != spec.input_size)
    throw ModelError("lstm_forward: sequence must be (N, L, input_size)");
  const int n = seq.shape()[0], l = seq.shape()[1], hs = spec.hidden_size;
  if (params.w_x.shape() != Shape{spec.input_size, 4 * hs} ||
      params.w_h.shape() != Shape{hs, 4 * hs} || params.b.shape() != Shape{4 * hs} ||
      params.w_out.shape() != Shape{hs, spec.output_size} ||
      params.b_out.shape() != Shape{spec.output_size})
    throw ModelError("lstm_forward: parameter shape mismatch");

  Tensor h = Tensor::zeros({n, hs});
  Tensor c = Tensor::zeros({n, hs});
  std::vector<Tensor> outputs;
  outputs.reserve(l);

  for (int t = 0; t < l; ++t) {
    Tensor x_t = select_step(seq, t);
    Tensor pre = add(add_rowvec(matmul(x_t, params.w_x), params.b), matmul(h, params.w_h));
    Tensor gate_i = sigmoid(slice_cols(pre, 0, hs));
    Tensor gate_f = sigmoid(slice_cols(pre, hs, 2 * hs));
    Tensor gate_g = tanh_op(slice_cols(pre, 2 * hs, 3 * hs));
    Tensor gate_o = sigmoid(slice_cols(pre, 3 * hs, 4 * hs));
    c = add(mul(gate_f, c), mul(gate_i, gate_g));
    h = mul(gate_o, tanh_op(c));
    outputs.push_back(add_rowvec(matmul(h, params.w_out), params.b_out));
  }
  return stack_steps(outputs);
}

}  // namespace mjo::ad
