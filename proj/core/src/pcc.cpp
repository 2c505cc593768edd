#include "mjo/pcc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mjo/container.hpp"
#include "mjo/linalg.hpp"

namespace mjo {

using ad::Tensor;

void UNetConfig::validate() const {
  if (levels <= 0) throw ConfigError("unet: levels must be positive");
  if (static_cast<int>(spatial_kernels.size()) != levels ||
      static_cast<int>(temporal_kernels.size()) != levels ||
      static_cast<int>(channels.size()) != levels ||
      static_cast<int>(pool_factors.size()) != levels)
    throw ConfigError("unet: kernel/channel/pool schedules must all have one entry per level");
  for (int i = 0; i < levels; ++i) {
    if (spatial_kernels[i][0] <= 0 || spatial_kernels[i][0] % 2 == 0 ||
        spatial_kernels[i][1] <= 0 || spatial_kernels[i][1] % 2 == 0 ||
        temporal_kernels[i] <= 0 || temporal_kernels[i] % 2 == 0)
      throw ConfigError("unet: kernel extents must be positive odd integers");
    if (channels[i] <= 0) throw ConfigError("unet: channels must be positive");
    for (int f : pool_factors[i])
      if (f <= 0) throw ConfigError("unet: pool factors must be positive");
  }
}

void TrainConfig::validate() const {
  if (batch_size <= 0) throw ConfigError("train: batch size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
  if (max_epochs <= 0) throw ConfigError("train: max epochs must be positive");
  if (lstm_hidden <= 0) throw ConfigError("train: lstm hidden size must be positive");
}

int TrainConfig::epochs_for_stage(int stage) const {
  const int v = stage == 1 ? stage1_epochs : stage2_epochs;
  return v > 0 ? std::min(v, max_epochs) : max_epochs;
}

namespace {

ad::Conv3dSpec level_conv_spec(const UNetConfig& cfg, int level, int in_c, int out_c) {
  ad::Conv3dSpec spec;
  spec.in_channels = in_c;
  spec.out_channels = out_c;
  spec.kt = cfg.temporal_kernels[level];
  spec.kh = cfg.spatial_kernels[level][1];  // k_lat
  spec.kw = cfg.spatial_kernels[level][0];  // k_lon
  return spec;
}

Tensor create_conv(ad::ParamStore& params, const std::string& name, const ad::Conv3dSpec& spec,
                   ad::Init init, Rng& rng, Tensor& bias_out) {
  const int fan_in = spec.in_channels * spec.kt * spec.kh * spec.kw;
  const int fan_out = spec.out_channels * spec.kt * spec.kh * spec.kw;
  Tensor w = params.create(name + ".w",
                           {spec.out_channels, spec.in_channels, spec.kt, spec.kh, spec.kw}, init,
                           fan_in, fan_out, rng);
  bias_out = params.create(name + ".b", {spec.out_channels}, ad::Init::Zero, 0, 0, rng);
  return w;
}

struct BandRows {
  int begin = 0;
  int end = 0;
};

BandRows band_rows(const GridSpec& grid, const MeridionalBand& band) {
  const auto rows = grid.rows_within(band.south_deg, band.north_deg);
  if (rows.empty()) throw DataError("band selects no latitude rows");
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i] != rows[i - 1] + 1) throw DataError("band rows are not contiguous");
  return BandRows{rows.front(), rows.back() + 1};
}

/// Stacks fields into a standardized (N,3,T,H,W) constant tensor.
Tensor fields_to_tensor(std::span<const AnomalyField* const> fields, const ZScoreParams& z,
                        bool requires_grad = false) {
  const AnomalyField& f0 = *fields.front();
  const int n = static_cast<int>(fields.size());
  const std::size_t per_field = f0.size();
  std::vector<double> values(static_cast<std::size_t>(n) * per_field);
  const std::size_t per_var = static_cast<std::size_t>(f0.n_leads) * f0.grid.n_lat * f0.grid.n_lon;
  for (int s = 0; s < n; ++s) {
    const AnomalyField& f = *fields[s];
    if (f.grid != f0.grid || f.n_leads != f0.n_leads)
      throw DataError("fields_to_tensor: inconsistent field shapes");
    double* dst = values.data() + static_cast<std::size_t>(s) * per_field;
    for (int v = 0; v < kNumVars; ++v) {
      const double inv = 1.0 / z.sigma[v];
      const double mu = z.mu[v];
      const double* src = f.values.data() + static_cast<std::size_t>(v) * per_var;
      double* out = dst + static_cast<std::size_t>(v) * per_var;
      for (std::size_t i = 0; i < per_var; ++i) out[i] = (src[i] - mu) * inv;
    }
  }
  return Tensor::from_values({n, kNumVars, f0.n_leads, f0.grid.n_lat, f0.grid.n_lon},
                             std::move(values), requires_grad);
}

}  // namespace

CorrectorModel build_corrector(const GridSpec& grid, int n_leads, const UNetConfig& cfg,
                               int lstm_hidden, bool lstm_residual, std::uint64_t seed) {
  cfg.validate();
  CorrectorModel m;
  m.unet_cfg = cfg;
  m.grid = grid;
  m.n_leads = n_leads;
  m.seed = seed;
  m.lstm_residual = lstm_residual;
  m.lstm_spec = ad::LstmSpec{2, lstm_hidden, 2};

  Rng rng(seed);
  const int L = cfg.levels;
  m.unet.enc_w.resize(L);
  m.unet.enc_b.resize(L);
  m.unet.dec_w.resize(L);
  m.unet.dec_b.resize(L);

  int in_c = kNumVars;
  for (int i = 0; i < L; ++i) {
    const auto spec = level_conv_spec(cfg, i, in_c, cfg.channels[i]);
    m.unet.enc_w[i] = create_conv(m.params, "unet.enc" + std::to_string(i), spec, ad::Init::Glorot,
                                  rng, m.unet.enc_b[i]);
    in_c = cfg.channels[i];
  }
  {
    const auto spec = level_conv_spec(cfg, L - 1, cfg.channels[L - 1], cfg.channels[L - 1]);
    m.unet.bottom_w =
        create_conv(m.params, "unet.bottom", spec, ad::Init::Glorot, rng, m.unet.bottom_b);
  }
  for (int i = L - 1; i >= 0; --i) {
    const int in_dec = cfg.channels[i] + (i + 1 < L ? cfg.channels[i + 1] : cfg.channels[L - 1]);
    const auto spec = level_conv_spec(cfg, i, in_dec, cfg.channels[i]);
    m.unet.dec_w[i] = create_conv(m.params, "unet.dec" + std::to_string(i), spec, ad::Init::Glorot,
                                  rng, m.unet.dec_b[i]);
  }
  {
    // Zero start for the head: with the residual connection the untrained
    // corrector is the identity.
    ad::Conv3dSpec spec;
    spec.in_channels = cfg.channels[0];
    spec.out_channels = kNumVars;
    m.unet.final_w =
        create_conv(m.params, "unet.final", spec, cfg.residual ? ad::Init::Zero : ad::Init::Glorot,
                    rng, m.unet.final_b);
  }

  const int hs = lstm_hidden;
  m.lstm.w_x = m.params.create("lstm.w_x", {2, 4 * hs}, ad::Init::Glorot, 2, 4 * hs, rng);
  m.lstm.w_h = m.params.create("lstm.w_h", {hs, 4 * hs}, ad::Init::Glorot, hs, 4 * hs, rng);
  m.lstm.b = m.params.create("lstm.b", {4 * hs}, ad::Init::Zero, 0, 0, rng);
  m.lstm.w_out = m.params.create("lstm.w_out", {hs, 2},
                                 lstm_residual ? ad::Init::Zero : ad::Init::Glorot, hs, 2, rng);
  m.lstm.b_out = m.params.create("lstm.b_out", {2}, ad::Init::Zero, 0, 0, rng);
  return m;
}

ad::Tensor unet_forward(const CorrectorModel& m, const Tensor& input_std) {
  const auto& cfg = m.unet_cfg;
  const int L = cfg.levels;
  Tensor x = input_std;
  std::vector<Tensor> skips;
  std::vector<std::array<int, 3>> extents;
  skips.reserve(L);

  for (int i = 0; i < L; ++i) {
    const auto spec = level_conv_spec(cfg, i, x.shape()[1], cfg.channels[i]);
    x = ad::relu(ad::conv3d(x, spec, m.unet.enc_w[i], m.unet.enc_b[i]));
    skips.push_back(x);
    extents.push_back({x.shape()[2], x.shape()[3], x.shape()[4]});
    x = ad::pool_avg(x, cfg.pool_factors[i]);
  }
  {
    const auto spec = level_conv_spec(cfg, L - 1, x.shape()[1], cfg.channels[L - 1]);
    x = ad::relu(ad::conv3d(x, spec, m.unet.bottom_w, m.unet.bottom_b));
  }
  for (int i = L - 1; i >= 0; --i) {
    x = ad::upsample_nn(x, extents[i]);
    x = ad::concat_channels(skips[i], x);
    const auto spec = level_conv_spec(cfg, i, x.shape()[1], cfg.channels[i]);
    x = ad::relu(ad::conv3d(x, spec, m.unet.dec_w[i], m.unet.dec_b[i]));
  }
  {
    ad::Conv3dSpec spec;
    spec.in_channels = x.shape()[1];
    spec.out_channels = kNumVars;
    x = ad::conv3d(x, spec, m.unet.final_w, m.unet.final_b);
  }
  if (cfg.residual) x = ad::add(input_std, x);
  return x;
}

ad::Tensor stage1_loss(const Tensor& corrected, const Tensor& truth) {
  return ad::mse(corrected, truth);
}

namespace {

/// The corrected field lives in truth-standardized units when the U-Net
/// ran and in forecast-standardized units when stage 1 is bypassed.
const ZScoreParams& output_zparams(const CorrectorModel& m) {
  return m.stage1_active ? m.z_truth : m.z_forecast;
}

/// Standardized corrected fields -> preliminary (N, L, 2) RMM sequence via
/// the frozen projection bottleneck.
Tensor project_prelim(const CorrectorModel& m, const Tensor& corrected_std) {
  const BandRows rows = band_rows(m.grid, m.band);
  // Back to physical anomaly units before the meridional mean.
  const ZScoreParams& z = output_zparams(m);
  Tensor physical = ad::channel_affine(corrected_std, z.sigma, z.mu);
  Tensor profiles = ad::band_mean_h(physical, rows.begin, rows.end);
  Tensor features = ad::profiles_to_features(profiles, m.basis.field_norms);
  return ad::linear_seq(features, m.projection);
}

Tensor lstm_refine(const CorrectorModel& m, const Tensor& prelim) {
  Tensor out = ad::lstm_forward(prelim, m.lstm_spec, m.lstm);
  return m.lstm_residual ? ad::add(prelim, out) : out;
}

}  // namespace

void finalize_basis(CorrectorModel& m) {
  if (m.basis.eof1.empty()) throw ModelError("finalize_basis: model has no basis");
  const int dim = m.basis.profile_len();
  std::vector<double> p(static_cast<std::size_t>(dim) * 2);
  for (int i = 0; i < dim; ++i) {
    p[static_cast<std::size_t>(i) * 2 + 0] = m.basis.eof1[i] / m.basis.scale1;
    p[static_cast<std::size_t>(i) * 2 + 1] = m.basis.eof2[i] / m.basis.scale2;
  }
  m.projection = Tensor::from_values({dim, 2}, std::move(p), /*requires_grad=*/false);
}

ad::Tensor stage2_forward(const CorrectorModel& m, const Tensor& corrected_std) {
  if (!m.projection.defined()) throw ModelError("stage2_forward: model has no fitted basis");
  return lstm_refine(m, project_prelim(m, corrected_std));
}

ad::Tensor stage2_loss(const Tensor& refined, const Tensor& observed, int* degenerate_leads) {
  return ad::bivariate_cor_loss(refined, observed, degenerate_leads);
}

ad::Tensor model_refined_forward(const CorrectorModel& m, const Tensor& physical_input) {
  if (!m.projection.defined()) throw ModelError("model_refined_forward: model has no fitted basis");
  std::array<double, 3> inv_sigma, neg_mu_over_sigma;
  for (int v = 0; v < kNumVars; ++v) {
    inv_sigma[v] = 1.0 / m.z_forecast.sigma[v];
    neg_mu_over_sigma[v] = -m.z_forecast.mu[v] / m.z_forecast.sigma[v];
  }
  Tensor standardized = ad::channel_affine(physical_input, inv_sigma, neg_mu_over_sigma);
  Tensor corrected = m.stage1_active ? unet_forward(m, standardized) : standardized;
  Tensor prelim = project_prelim(m, corrected);
  return m.stage2_active ? lstm_refine(m, prelim) : prelim;
}

RmmSeries observed_rmm(const CorrectorModel& m, const AnomalyField& truth) {
  return project_rmm(meridional_mean(truth, m.band), m.basis);
}

namespace {

std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

double run_stage1_epoch(CorrectorModel& m, std::span<const ForecastCase> cases,
                        const std::vector<int>& order, int batch_size, ad::Adam& adam,
                        std::vector<Tensor>& unet_params) {
  double loss_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<const AnomalyField*> fc, tr;
    for (std::size_t i = start; i < end; ++i) {
      fc.push_back(&cases[order[i]].forecast);
      tr.push_back(&cases[order[i]].truth);
    }
    Tensor input = fields_to_tensor(fc, m.z_forecast);
    Tensor target = fields_to_tensor(tr, m.z_truth);
    Tensor corrected = unet_forward(m, input);
    Tensor loss = stage1_loss(corrected, target);
    const double lv = loss.item();
    if (!std::isfinite(lv))
      throw ModelError("stage 1 diverged: non-finite loss at step " +
                       std::to_string(adam.step_count()));
    loss.backward();
    adam.step(unet_params);
    m.params.zero_grads();
    loss_sum += lv * static_cast<double>(end - start);
    count += end - start;
  }
  return loss_sum / static_cast<double>(count);
}

struct PrelimCache {
  // (case, lead, component) for preliminary and observed series
  int n_leads = 0;
  std::vector<double> prelim;
  std::vector<double> observed;
};

PrelimCache build_prelim_cache(CorrectorModel& m, std::span<const ForecastCase> cases,
                               int batch_size) {
  PrelimCache cache;
  cache.n_leads = m.n_leads;
  cache.prelim.reserve(cases.size() * m.n_leads * 2);
  cache.observed.reserve(cases.size() * m.n_leads * 2);
  for (std::size_t start = 0; start < cases.size(); start += batch_size) {
    const std::size_t end = std::min(cases.size(), start + batch_size);
    std::vector<const AnomalyField*> fc;
    for (std::size_t i = start; i < end; ++i) fc.push_back(&cases[i].forecast);
    Tensor input = fields_to_tensor(fc, m.z_forecast);
    Tensor corrected = m.stage1_active ? unet_forward(m, input) : input;
    Tensor prelim = project_prelim(m, corrected);
    auto pv = prelim.values();
    cache.prelim.insert(cache.prelim.end(), pv.begin(), pv.end());
  }
  for (const auto& c : cases) {
    RmmSeries obs = observed_rmm(m, c.truth);
    for (int t = 0; t < m.n_leads; ++t) {
      cache.observed.push_back(obs.rmm1[t]);
      cache.observed.push_back(obs.rmm2[t]);
    }
  }
  return cache;
}

double run_stage2_epoch_cached(CorrectorModel& m, const PrelimCache& cache, int n_cases,
                               const std::vector<int>& order, int batch_size, ad::Adam& adam,
                               std::vector<Tensor>& lstm_params) {
  (void)n_cases;
  const int l = cache.n_leads;
  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    const int b = static_cast<int>(end - start);
    if (b < 2) continue;  // correlation across the batch needs >= 2 cases
    std::vector<double> prelim(static_cast<std::size_t>(b) * l * 2);
    std::vector<double> observed(static_cast<std::size_t>(b) * l * 2);
    for (int i = 0; i < b; ++i) {
      const std::size_t src = static_cast<std::size_t>(order[start + i]) * l * 2;
      std::copy_n(cache.prelim.begin() + src, l * 2, prelim.begin() + static_cast<std::size_t>(i) * l * 2);
      std::copy_n(cache.observed.begin() + src, l * 2,
                  observed.begin() + static_cast<std::size_t>(i) * l * 2);
    }
    Tensor prelim_t = Tensor::from_values({b, l, 2}, std::move(prelim));
    Tensor observed_t = Tensor::from_values({b, l, 2}, std::move(observed));
    Tensor refined = lstm_refine(m, prelim_t);
    Tensor loss = stage2_loss(refined, observed_t);
    const double lv = loss.item();
    if (!std::isfinite(lv)) throw ModelError("stage 2 diverged: non-finite loss");
    loss.backward();
    adam.step(lstm_params);
    m.params.zero_grads();
    loss_sum += lv;
    ++batches;
  }
  if (batches == 0) throw ModelError("stage 2: no usable batches (batch size vs case count)");
  return loss_sum / static_cast<double>(batches);
}

double run_stage2_epoch_cascade(CorrectorModel& m, std::span<const ForecastCase> cases,
                                const PrelimCache& cache, const std::vector<int>& order,
                                int batch_size, ad::Adam& adam, std::vector<Tensor>& all_params) {
  const int l = cache.n_leads;
  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    const int b = static_cast<int>(end - start);
    if (b < 2) continue;
    std::vector<const AnomalyField*> fc;
    std::vector<double> observed(static_cast<std::size_t>(b) * l * 2);
    for (int i = 0; i < b; ++i) {
      fc.push_back(&cases[order[start + i]].forecast);
      const std::size_t src = static_cast<std::size_t>(order[start + i]) * l * 2;
      std::copy_n(cache.observed.begin() + src, l * 2,
                  observed.begin() + static_cast<std::size_t>(i) * l * 2);
    }
    Tensor input = fields_to_tensor(fc, m.z_forecast);
    Tensor corrected = m.stage1_active ? unet_forward(m, input) : input;
    Tensor refined = stage2_forward(m, corrected);
    Tensor observed_t = Tensor::from_values({b, l, 2}, std::move(observed));
    Tensor loss = stage2_loss(refined, observed_t);
    const double lv = loss.item();
    if (!std::isfinite(lv)) throw ModelError("stage 2 diverged: non-finite loss");
    loss.backward();
    adam.step(all_params);
    m.params.zero_grads();
    loss_sum += lv;
    ++batches;
  }
  if (batches == 0) throw ModelError("stage 2: no usable batches");
  return loss_sum / static_cast<double>(batches);
}

}  // namespace

CorrectorModel train(std::span<const ForecastCase> train_cases, const UNetConfig& unet_cfg,
                     const TrainConfig& train_cfg, const MeridionalBand& band) {
  unet_cfg.validate();
  train_cfg.validate();
  if (train_cases.empty()) throw DataError("train: empty training set");

  std::vector<const AnomalyField*> fc_ptrs, tr_ptrs;
  for (const auto& c : train_cases) {
    fc_ptrs.push_back(&c.forecast);
    tr_ptrs.push_back(&c.truth);
  }

  const GridSpec grid = train_cases.front().forecast.grid;
  const int n_leads = train_cases.front().forecast.n_leads;

  CorrectorModel m = build_corrector(grid, n_leads, unet_cfg, train_cfg.lstm_hidden,
                                     train_cfg.lstm_residual, train_cfg.seed);
  m.band = band;
  m.z_forecast = zscore_fit(fc_ptrs);
  m.z_truth = zscore_fit(tr_ptrs);
  m.basis = fit_eof(tr_ptrs, band);
  finalize_basis(m);
  m.stage1_active = train_cfg.stage != TrainStage::Stage2;
  m.stage2_active = train_cfg.stage != TrainStage::Stage1;

  Rng shuffle_rng(train_cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const int n = static_cast<int>(train_cases.size());

  if (m.stage1_active) {
    auto unet_params = m.params.with_prefix("unet.");
    ad::Adam adam({train_cfg.learning_rate}, unet_params);
    double prev = 0.0;
    for (int epoch = 0; epoch < train_cfg.epochs_for_stage(1); ++epoch) {
      const auto order = shuffled_indices(n, shuffle_rng);
      const double loss =
          run_stage1_epoch(m, train_cases, order, train_cfg.batch_size, adam, unet_params);
      m.history.push_back({1, epoch, loss});
      if (epoch > 0 && train_cfg.early_stop_tol > 0.0 &&
          std::fabs(prev - loss) <= train_cfg.early_stop_tol * std::max(1e-300, std::fabs(prev)))
        break;
      prev = loss;
    }
  }

  if (m.stage2_active) {
    PrelimCache cache = build_prelim_cache(m, train_cases, train_cfg.batch_size);
    if (train_cfg.finetune_unet_in_stage2) {
      auto all_params = m.params.all();
      ad::Adam adam({train_cfg.learning_rate}, all_params);
      double prev = 0.0;
      for (int epoch = 0; epoch < train_cfg.epochs_for_stage(2); ++epoch) {
        const auto order = shuffled_indices(n, shuffle_rng);
        const double loss = run_stage2_epoch_cascade(m, train_cases, cache, order,
                                                     train_cfg.batch_size, adam, all_params);
        m.history.push_back({2, epoch, loss});
        if (epoch > 0 && train_cfg.early_stop_tol > 0.0 &&
            std::fabs(prev - loss) <= train_cfg.early_stop_tol * std::max(1e-300, std::fabs(prev)))
          break;
        prev = loss;
      }
    } else {
      auto lstm_params = m.params.with_prefix("lstm.");
      ad::Adam adam({train_cfg.learning_rate}, lstm_params);
      double prev = 0.0;
      for (int epoch = 0; epoch < train_cfg.epochs_for_stage(2); ++epoch) {
        const auto order = shuffled_indices(n, shuffle_rng);
        const double loss = run_stage2_epoch_cached(m, cache, n, order, train_cfg.batch_size, adam,
                                                    lstm_params);
        m.history.push_back({2, epoch, loss});
        if (epoch > 0 && train_cfg.early_stop_tol > 0.0 &&
            std::fabs(prev - loss) <= train_cfg.early_stop_tol * std::max(1e-300, std::fabs(prev)))
          break;
        prev = loss;
      }
    }
  }
  return m;
}

std::vector<CorrectionResult> correct_batch(const CorrectorModel& model,
                                            std::span<const AnomalyField* const> forecasts) {
  if (!model.projection.defined()) throw ModelError("correct: model has no fitted basis");
  constexpr std::size_t kChunk = 8;  // keeps inference graphs small
  std::vector<CorrectionResult> results;
  results.reserve(forecasts.size());

  for (std::size_t start = 0; start < forecasts.size(); start += kChunk) {
    const std::size_t end = std::min(forecasts.size(), start + kChunk);
    std::span<const AnomalyField* const> chunk = forecasts.subspan(start, end - start);
    Tensor input = fields_to_tensor(chunk, model.z_forecast);
    Tensor corrected_std = model.stage1_active ? unet_forward(model, input) : input;
    const ZScoreParams& z_out = output_zparams(model);
    Tensor physical = ad::channel_affine(corrected_std, z_out.sigma, z_out.mu);
    Tensor prelim = project_prelim(model, corrected_std);
    Tensor refined = model.stage2_active ? lstm_refine(model, prelim) : prelim;

    auto phys_v = physical.values();
    auto prelim_v = prelim.values();
    auto refined_v = refined.values();
    const int l = model.n_leads;
    const std::size_t per_field = chunk.front()->size();
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      CorrectionResult r;
      r.corrected = AnomalyField::zeros(model.grid, l, chunk[i]->init_date);
      std::copy_n(phys_v.begin() + static_cast<std::size_t>(i) * per_field, per_field,
                  r.corrected.values.begin());
      r.corrected.validate();
      r.preliminary.rmm1.resize(l);
      r.preliminary.rmm2.resize(l);
      r.refined.rmm1.resize(l);
      r.refined.rmm2.resize(l);
      for (int t = 0; t < l; ++t) {
        const std::size_t base = (static_cast<std::size_t>(i) * l + t) * 2;
        r.preliminary.rmm1[t] = prelim_v[base];
        r.preliminary.rmm2[t] = prelim_v[base + 1];
        r.refined.rmm1[t] = refined_v[base];
        r.refined.rmm2[t] = refined_v[base + 1];
      }
      results.push_back(std::move(r));
    }
  }
  return results;
}

CorrectionResult correct(const CorrectorModel& model, const AnomalyField& forecast) {
  const AnomalyField* ptr = &forecast;
  auto results = correct_batch(model, std::span<const AnomalyField* const>(&ptr, 1));
  return std::move(results.front());
}

ParameterCounts count_parameters(const CorrectorModel& model) {
  ParameterCounts c;
  c.unet = model.params.count_with_prefix("unet.");
  c.lstm = model.params.count_with_prefix("lstm.");
  return c;
}

std::string CorrectorModel::loss_csv() const {
  std::string out = "epoch,stage,loss\n";
  char line[64];
  for (const auto& e : history) {
    std::snprintf(line, sizeof(line), "%d,%d,%.12g\n", e.epoch, e.stage, e.loss);
    out += line;
  }
  return out;
}

void save_model(const CorrectorModel& m, const std::filesystem::path& path) {
  ArtifactWriter w("MJOW");
  w.add("grid", {6},
        {static_cast<double>(m.grid.n_lat), static_cast<double>(m.grid.n_lon), m.grid.lat_start_deg,
         m.grid.lat_step_deg, m.grid.lon_start_deg, m.grid.lon_step_deg});
  w.add_scalar("n_leads", m.n_leads);
  w.add_scalar("seed", static_cast<double>(m.seed));
  w.add_scalar("levels", m.unet_cfg.levels);
  w.add_scalar("residual", m.unet_cfg.residual ? 1.0 : 0.0);
  w.add_scalar("lstm_hidden", m.lstm_spec.hidden_size);
  w.add_scalar("lstm_residual", m.lstm_residual ? 1.0 : 0.0);
  w.add_scalar("stage1_active", m.stage1_active ? 1.0 : 0.0);
  w.add_scalar("stage2_active", m.stage2_active ? 1.0 : 0.0);
  {
    std::vector<double> sched;
    for (int i = 0; i < m.unet_cfg.levels; ++i) {
      sched.push_back(m.unet_cfg.spatial_kernels[i][0]);
      sched.push_back(m.unet_cfg.spatial_kernels[i][1]);
      sched.push_back(m.unet_cfg.temporal_kernels[i]);
      sched.push_back(m.unet_cfg.channels[i]);
      sched.push_back(m.unet_cfg.pool_factors[i][0]);
      sched.push_back(m.unet_cfg.pool_factors[i][1]);
      sched.push_back(m.unet_cfg.pool_factors[i][2]);
    }
    w.add("schedule", {static_cast<std::uint64_t>(m.unet_cfg.levels), 7}, sched);
  }
  w.add("band", {2}, {m.band.south_deg, m.band.north_deg});
  w.add("z_forecast", {2, kNumVars},
        {m.z_forecast.mu[0], m.z_forecast.mu[1], m.z_forecast.mu[2], m.z_forecast.sigma[0],
         m.z_forecast.sigma[1], m.z_forecast.sigma[2]});
  w.add("z_truth", {2, kNumVars},
        {m.z_truth.mu[0], m.z_truth.mu[1], m.z_truth.mu[2], m.z_truth.sigma[0], m.z_truth.sigma[1],
         m.z_truth.sigma[2]});
  w.add_scalar("basis_n_lon", m.basis.n_lon);
  w.add("basis_norms", {kNumVars},
        {m.basis.field_norms[0], m.basis.field_norms[1], m.basis.field_norms[2]});
  w.add("basis_eof1", {m.basis.eof1.size()}, m.basis.eof1);
  w.add("basis_eof2", {m.basis.eof2.size()}, m.basis.eof2);
  w.add("basis_explained", {2}, {m.basis.explained_var1, m.basis.explained_var2});
  w.add("basis_scales", {2}, {m.basis.scale1, m.basis.scale2});
  if (m.climatology) {
    w.add_scalar("has_climatology", 1.0);
    const auto& clim = *m.climatology;
    const std::vector<std::uint64_t> dims = {static_cast<std::uint64_t>(kNumVars),
                                             static_cast<std::uint64_t>(clim.grid.n_lat),
                                             static_cast<std::uint64_t>(clim.grid.n_lon)};
    w.add("clim_mean", dims, clim.mean);
    for (int k = 0; k < kClimatologyHarmonics; ++k) {
      w.add("clim_cos" + std::to_string(k + 1), dims, clim.cos_coef[k]);
      w.add("clim_sin" + std::to_string(k + 1), dims, clim.sin_coef[k]);
    }
  }
  {
    std::vector<double> hist;
    for (const auto& e : m.history) {
      hist.push_back(e.stage);
      hist.push_back(e.epoch);
      hist.push_back(e.loss);
    }
    w.add("history", {m.history.size(), 3}, hist);
  }
  for (const auto& [name, t] : m.params.entries()) {
    std::vector<std::uint64_t> dims;
    for (int d : t.shape()) dims.push_back(static_cast<std::uint64_t>(d));
    w.add("param/" + name, dims, {t.values().begin(), t.values().end()});
  }
  w.save(path);
}

CorrectorModel load_model(const std::filesystem::path& path) {
  ArtifactReader r(path, "MJOW");
  UNetConfig cfg;
  cfg.levels = static_cast<int>(r.scalar("levels"));
  cfg.residual = r.scalar("residual") != 0.0;
  const auto& sched = r.data("schedule");
  cfg.spatial_kernels.clear();
  cfg.temporal_kernels.clear();
  cfg.channels.clear();
  cfg.pool_factors.clear();
  for (int i = 0; i < cfg.levels; ++i) {
    const double* row = &sched[static_cast<std::size_t>(i) * 7];
    cfg.spatial_kernels.push_back({static_cast<int>(row[0]), static_cast<int>(row[1])});
    cfg.temporal_kernels.push_back(static_cast<int>(row[2]));
    cfg.channels.push_back(static_cast<int>(row[3]));
    cfg.pool_factors.push_back(
        {static_cast<int>(row[4]), static_cast<int>(row[5]), static_cast<int>(row[6])});
  }

  GridSpec grid;
  const auto& g = r.data("grid");
  grid.n_lat = static_cast<int>(g[0]);
  grid.n_lon = static_cast<int>(g[1]);
  grid.lat_start_deg = g[2];
  grid.lat_step_deg = g[3];
  grid.lon_start_deg = g[4];
  grid.lon_step_deg = g[5];

  CorrectorModel m = build_corrector(grid, static_cast<int>(r.scalar("n_leads")), cfg,
                                     static_cast<int>(r.scalar("lstm_hidden")),
                                     r.scalar("lstm_residual") != 0.0,
                                     static_cast<std::uint64_t>(r.scalar("seed")));
  m.stage1_active = r.scalar("stage1_active") != 0.0;
  m.stage2_active = r.scalar("stage2_active") != 0.0;
  m.band.south_deg = r.data("band")[0];
  m.band.north_deg = r.data("band")[1];
  {
    const auto& zf = r.data("z_forecast");
    const auto& zt = r.data("z_truth");
    for (int v = 0; v < kNumVars; ++v) {
      m.z_forecast.mu[v] = zf[v];
      m.z_forecast.sigma[v] = zf[kNumVars + v];
      m.z_truth.mu[v] = zt[v];
      m.z_truth.sigma[v] = zt[kNumVars + v];
    }
  }
  m.basis.n_lon = static_cast<int>(r.scalar("basis_n_lon"));
  m.basis.band = m.band;
  {
    const auto& norms = r.data("basis_norms");
    for (int v = 0; v < kNumVars; ++v) m.basis.field_norms[v] = norms[v];
  }
  m.basis.eof1 = r.data("basis_eof1");
  m.basis.eof2 = r.data("basis_eof2");
  m.basis.explained_var1 = r.data("basis_explained")[0];
  m.basis.explained_var2 = r.data("basis_explained")[1];
  m.basis.scale1 = r.data("basis_scales")[0];
  m.basis.scale2 = r.data("basis_scales")[1];
  if (r.has("has_climatology")) {
    Climatology clim;
    clim.grid = grid;
    clim.mean = r.data("clim_mean");
    for (int k = 0; k < kClimatologyHarmonics; ++k) {
      clim.cos_coef[k] = r.data("clim_cos" + std::to_string(k + 1));
      clim.sin_coef[k] = r.data("clim_sin" + std::to_string(k + 1));
    }
    m.climatology = std::move(clim);
  }
  {
    const auto& hist = r.data("history");
    for (std::size_t i = 0; i + 3 <= hist.size(); i += 3)
      m.history.push_back({static_cast<int>(hist[i]), static_cast<int>(hist[i + 1]), hist[i + 2]});
  }
  for (auto& [name, t] : m.params.entries_mut()) {
    const auto& data = r.data("param/" + name);
    if (data.size() != t.numel()) throw DataError("model load: parameter size mismatch for " + name);
    std::copy(data.begin(), data.end(), t.values_mut().begin());
  }
  finalize_basis(m);
  return m;
}

LinearBaseline fit_linear_baseline(const RmmBatch& obs_train, const RmmBatch& raw_train) {
  if (obs_train.n_cases != raw_train.n_cases || obs_train.n_leads != raw_train.n_leads)
    throw DataError("linear baseline: batch shape mismatch");
  if (obs_train.n_cases < 4) throw DataError("linear baseline: too few training cases");
  LinearBaseline lb;
  lb.n_leads = obs_train.n_leads;
  lb.coef.resize(lb.n_leads);
  const int n = obs_train.n_cases;
  for (int t = 0; t < lb.n_leads; ++t) {
    // Regressors x = (raw1, raw2, 1); two targets obs1, obs2.
    double xtx[9] = {0};
    double xty1[3] = {0}, xty2[3] = {0};
    for (int i = 0; i < n; ++i) {
      const double x[3] = {raw_train.rmm1[raw_train.idx(i, t)], raw_train.rmm2[raw_train.idx(i, t)],
                           1.0};
      const double y1 = obs_train.rmm1[obs_train.idx(i, t)];
      const double y2 = obs_train.rmm2[obs_train.idx(i, t)];
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) xtx[a * 3 + b] += x[a] * x[b];
        xty1[a] += x[a] * y1;
        xty2[a] += x[a] * y2;
      }
    }
    // Tiny ridge keeps degenerate leads solvable and deterministic.
    const double ridge = 1e-12 * (xtx[0] + xtx[4] + xtx[8] + 1.0);
    for (int a = 0; a < 3; ++a) xtx[a * 3 + a] += ridge;

    std::vector<double> a1(xtx, xtx + 9), b1(xty1, xty1 + 3);
    solve_linear_system(a1, b1, 3);
    std::vector<double> a2(xtx, xtx + 9), b2(xty2, xty2 + 3);
    solve_linear_system(a2, b2, 3);
    lb.coef[t] = {b1[0], b1[1], b1[2], b2[0], b2[1], b2[2]};
  }
  return lb;
}

RmmBatch apply_linear_baseline(const LinearBaseline& lb, const RmmBatch& raw) {
  if (raw.n_leads != lb.n_leads) throw DataError("linear baseline: lead count mismatch");
  RmmBatch out;
  for (int i = 0; i < raw.n_cases; ++i) {
    RmmSeries s;
    s.rmm1.resize(raw.n_leads);
    s.rmm2.resize(raw.n_leads);
    for (int t = 0; t < raw.n_leads; ++t) {
      const double r1 = raw.rmm1[raw.idx(i, t)];
      const double r2 = raw.rmm2[raw.idx(i, t)];
      const auto& c = lb.coef[t];
      s.rmm1[t] = c[0] * r1 + c[1] * r2 + c[2];
      s.rmm2[t] = c[3] * r1 + c[4] * r2 + c[5];
    }
    out.push_case(s, raw.init_dates.empty() ? 0 : raw.init_dates[i]);
  }
  return out;
}

}  // namespace mjo
