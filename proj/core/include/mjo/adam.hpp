#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mjo/tensor.hpp"

namespace mjo::ad {

/// Bias-corrected Adam with per-parameter moment buffers.
struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
public:
  Adam() = default;
  Adam(AdamConfig cfg, const std::vector<Tensor>& params);

  /// One update from the gradients currently held by the parameters.
  /// Parameters with no gradient buffer are treated as zero-gradient.
  void step(std::vector<Tensor>& params);

  long step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void set_step_count(long s) { step_ = s; }

private:
  AdamConfig cfg_;
  long step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

enum class Init { Zero, Glorot };

/// Named trainable tensors in creation order; creation order fixes the
/// RNG draw sequence and the checkpoint layout.
class ParamStore {
public:
  Tensor create(const std::string& name, Shape shape, Init init, int fan_in, int fan_out,
                Rng& rng);
  Tensor get(const std::string& name) const;
  bool has(const std::string& name) const;
  std::vector<Tensor> all() const;
  /// Parameters whose name starts with the prefix, in creation order.
  std::vector<Tensor> with_prefix(const std::string& prefix) const;
  std::int64_t count_with_prefix(const std::string& prefix) const;
  void zero_grads();
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor>>& entries_mut() { return entries_; }

private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Checkpoint ("MJOW"): every parameter by name plus Adam state.
void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     const Adam* adam = nullptr,
                     const std::vector<std::pair<std::string, double>>& extra_scalars = {});
void load_checkpoint_values(const std::filesystem::path& path, ParamStore& params);

}  // namespace mjo::ad
