#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mjo/adam.hpp"
#include "mjo/eofrmm.hpp"
#include "mjo/grid.hpp"
#include "mjo/prep.hpp"
#include "mjo/tensor.hpp"
#include "mjo/verify.hpp"

namespace mjo {

/// 3D U-Net schedule. Spatial kernels are (k_lon, k_lat) per encoder
/// level; temporal kernels likewise per level; both run in reverse order
/// through the decoder. Longitude convolutions pad circularly.
struct UNetConfig {
  int levels = 4;
  std::vector<std::array<int, 2>> spatial_kernels = {{7, 5}, {5, 3}, {3, 3}, {3, 3}};
  std::vector<int> temporal_kernels = {3, 7, 15, 21};
  std::vector<int> channels = {8, 16, 32, 64};
  std::vector<std::array<int, 3>> pool_factors = {{1, 2, 2}, {1, 2, 2}, {2, 2, 2}, {2, 2, 2}};
  bool residual = true;  // corrected = input + learned delta

  void validate() const;
};

enum class TrainStage { Stage1, Stage2, Cascade };

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 1e-3;
  int max_epochs = 100;
  TrainStage stage = TrainStage::Cascade;
  std::uint64_t seed = 0;
  // Per-stage epoch budgets; values <= 0 fall back to max_epochs.
  int stage1_epochs = -1;
  int stage2_epochs = -1;
  // Relative epoch-loss improvement below which a stage stops early.
  double early_stop_tol = 0.0;
  bool finetune_unet_in_stage2 = false;
  int lstm_hidden = 32;
  bool lstm_residual = true;

  void validate() const;
  int epochs_for_stage(int stage) const;
};

struct EpochLoss {
  int stage = 1;
  int epoch = 0;
  double loss = 0.0;
};

/// The trained two-stage corrector: U-Net parameters, the frozen EOF
/// basis, LSTM parameters, and the preprocessing statistics needed for
/// inference.
struct CorrectorModel {
  UNetConfig unet_cfg;
  ad::LstmSpec lstm_spec{2, 32, 2};
  bool lstm_residual = true;
  bool stage1_active = true;
  bool stage2_active = true;
  GridSpec grid;
  int n_leads = 40;
  ZScoreParams z_forecast, z_truth;
  EofBasis basis;
  std::optional<Climatology> climatology;  // carried when preprocessing ran here
  MeridionalBand band;
  std::uint64_t seed = 0;
  std::vector<EpochLoss> history;

  ad::ParamStore params;
  struct UNetHandles {
    std::vector<ad::Tensor> enc_w, enc_b;
    ad::Tensor bottom_w, bottom_b;
    std::vector<ad::Tensor> dec_w, dec_b;
    ad::Tensor final_w, final_b;
  };
  UNetHandles unet;
  ad::LstmParams lstm;
  ad::Tensor projection;  // (3*n_lon, 2) frozen: eof_k / scale_k columns

  std::string loss_csv() const;
};

/// Builds an untrained model: Glorot parameter initialization from the
/// seed, except the final 1x1x1 convolution which starts at zero so the
/// residual path begins as the identity.
CorrectorModel build_corrector(const GridSpec& grid, int n_leads, const UNetConfig& cfg,
                               int lstm_hidden, bool lstm_residual, std::uint64_t seed);

/// Rebuilds the frozen projection tensor from the model's basis; required
/// after assigning a basis by hand (train/load do this themselves).
void finalize_basis(CorrectorModel& model);

/// Encoder/decoder pass over standardized fields (N,3,T,H,W) -> same shape.
ad::Tensor unet_forward(const CorrectorModel& model, const ad::Tensor& input_std);

/// Mean squared error over all elements.
ad::Tensor stage1_loss(const ad::Tensor& corrected, const ad::Tensor& truth);

/// Projection bottleneck and LSTM refinement: standardized corrected
/// fields -> refined (N, L, 2) RMM sequence. The basis stays frozen; only
/// LSTM parameters (and optionally upstream U-Net weights) carry grads.
ad::Tensor stage2_forward(const CorrectorModel& model, const ad::Tensor& corrected_std);

/// Negative mean bivariate correlation (see ad::bivariate_cor_loss).
ad::Tensor stage2_loss(const ad::Tensor& refined, const ad::Tensor& observed,
                       int* degenerate_leads = nullptr);

/// Differentiable end-to-end inference: physical anomaly input
/// (N,3,T,H,W) -> refined (N,L,2), honoring the model's active stages.
/// Standardization happens inside the graph, so gradients with respect to
/// the physical input are available when the input tensor requires them.
ad::Tensor model_refined_forward(const CorrectorModel& model, const ad::Tensor& physical_input);

CorrectorModel train(std::span<const ForecastCase> train_cases, const UNetConfig& unet_cfg,
                     const TrainConfig& train_cfg, const MeridionalBand& band = {});

struct CorrectionResult {
  AnomalyField corrected;
  RmmSeries preliminary;
  RmmSeries refined;
};

CorrectionResult correct(const CorrectorModel& model, const AnomalyField& forecast);
std::vector<CorrectionResult> correct_batch(const CorrectorModel& model,
                                            std::span<const AnomalyField* const> forecasts);

/// Observed RMM of a truth field under the model's basis.
RmmSeries observed_rmm(const CorrectorModel& model, const AnomalyField& truth);

struct ParameterCounts {
  std::int64_t unet = 0;
  std::int64_t lstm = 0;
};
ParameterCounts count_parameters(const CorrectorModel& model);

void save_model(const CorrectorModel& model, const std::filesystem::path& path);  // magic "MJOW"
CorrectorModel load_model(const std::filesystem::path& path);

/// Per-lead affine regression (rmm_obs ~ M(t) rmm_fc + c(t)) fit on the
/// training split; the reference corrector that any learned model must
/// beat.
struct LinearBaseline {
  int n_leads = 0;
  std::vector<std::array<double, 6>> coef;  // m11,m12,b1,m21,m22,b2 per lead
};

LinearBaseline fit_linear_baseline(const RmmBatch& obs_train, const RmmBatch& raw_train);
RmmBatch apply_linear_baseline(const LinearBaseline& lb, const RmmBatch& raw);

}  // namespace mjo
