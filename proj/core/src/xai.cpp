#include "mjo/xai.hpp"

#include <cmath>

#include "mjo/container.hpp"

namespace mjo {

using ad::Tensor;

namespace {

/// Attribution differentiates with respect to the input only; turning
/// parameter grads off while the graphs are built skips the weight-grad
/// passes entirely.
class FreezeParamsGuard {
public:
  explicit FreezeParamsGuard(const CorrectorModel& m) {
    for (const auto& [name, t] : m.params.entries()) {
      nodes_.push_back(t.node());
      flags_.push_back(t.node()->requires_grad);
      t.node()->requires_grad = false;
    }
  }
  ~FreezeParamsGuard() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) nodes_[i]->requires_grad = flags_[i];
  }

private:
  std::vector<std::shared_ptr<ad::Node>> nodes_;
  std::vector<bool> flags_;
};

/// Sum over the batch of one refined component at one lead; per-sample
/// gradients are independent, so one backward serves the whole batch.
Tensor pick_target_sum(const Tensor& refined, RmmTarget target, int target_lead) {
  const int n = refined.shape()[0], l = refined.shape()[1];
  if (target_lead < 1 || target_lead > l) throw DataError("attribution: target lead out of range");
  const int t = target_lead - 1;
  const int c = static_cast<int>(target);
  std::vector<double> mask(static_cast<std::size_t>(n) * l * 2, 0.0);
  for (int i = 0; i < n; ++i) mask[(static_cast<std::size_t>(i) * l + t) * 2 + c] = 1.0;
  Tensor mask_t = Tensor::from_values({n, l, 2}, std::move(mask));
  return ad::sum_all(ad::mul(refined, mask_t));
}

double evaluate_output(const CorrectorModel& m, const AnomalyField& field, RmmTarget target,
                       int target_lead) {
  std::vector<double> vals = field.values;
  Tensor x = Tensor::from_values({1, kNumVars, field.n_leads, field.grid.n_lat, field.grid.n_lon},
                                 std::move(vals));
  Tensor refined = model_refined_forward(m, x);
  const int t = target_lead - 1;
  return refined.values()[(static_cast<std::size_t>(0) * field.n_leads + t) * 2 +
                          static_cast<int>(target)];
}

}  // namespace

AttributionMap integrated_gradients(const CorrectorModel& model, const AnomalyField& input,
                                    RmmTarget target, int target_lead, int steps) {
  if (!model.projection.defined()) throw ModelError("integrated_gradients: untrained model");
  if (steps < 16) throw DataError("integrated_gradients: need at least 16 steps");
  input.validate();

  AttributionMap map;
  map.target = target;
  map.target_lead = target_lead;
  map.steps = steps;
  map.grid = input.grid;
  map.n_leads = input.n_leads;

  const std::size_t n_elem = input.size();
  std::vector<double> grad_sum(n_elem, 0.0);
  FreezeParamsGuard freeze(model);

  // Midpoint-rule path points, processed in small batches; the sum of the
  // targets over a batch backpropagates each sample independently.
  constexpr int kBatch = 8;
  for (int k0 = 0; k0 < steps; k0 += kBatch) {
    const int b = std::min(kBatch, steps - k0);
    std::vector<double> values(static_cast<std::size_t>(b) * n_elem);
    for (int j = 0; j < b; ++j) {
      const double alpha = (static_cast<double>(k0 + j) + 0.5) / static_cast<double>(steps);
      double* dst = values.data() + static_cast<std::size_t>(j) * n_elem;
      for (std::size_t i = 0; i < n_elem; ++i) dst[i] = alpha * input.values[i];
    }
    Tensor x = Tensor::from_values({b, kNumVars, input.n_leads, input.grid.n_lat, input.grid.n_lon},
                                   std::move(values), /*requires_grad=*/true);
    Tensor refined = model_refined_forward(model, x);
    Tensor loss = pick_target_sum(refined, target, target_lead);
    loss.backward();
    auto g = x.grad();
    for (int j = 0; j < b; ++j) {
      const double* src = g.data() + static_cast<std::size_t>(j) * n_elem;
      for (std::size_t i = 0; i < n_elem; ++i) grad_sum[i] += src[i];
    }
  }

  map.values.resize(n_elem);
  const double inv_steps = 1.0 / static_cast<double>(steps);
  for (std::size_t i = 0; i < n_elem; ++i)
    map.values[i] = input.values[i] * grad_sum[i] * inv_steps;  // (x - x0) with x0 = 0

  map.output_at_input = evaluate_output(model, input, target, target_lead);
  const AnomalyField baseline = AnomalyField::zeros(input.grid, input.n_leads, input.init_date);
  map.output_at_baseline = evaluate_output(model, baseline, target, target_lead);

  for (double v : map.values)
    if (!std::isfinite(v)) throw ModelError("integrated_gradients: non-finite attribution");
  return map;
}

double AttributionMap::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double AttributionMap::completeness_residual() const {
  return std::fabs(sum() - (output_at_input - output_at_baseline));
}

AttributionMap composite_attributions(std::span<const AttributionMap> maps, RmmTarget target) {
  std::vector<const AttributionMap*> matching;
  for (const auto& m : maps)
    if (m.target == target) matching.push_back(&m);
  if (matching.empty()) throw DataError("composite_attributions: no maps for target");

  AttributionMap out = *matching.front();
  std::fill(out.values.begin(), out.values.end(), 0.0);
  out.output_at_input = 0.0;
  out.output_at_baseline = 0.0;
  for (const AttributionMap* m : matching) {
    if (m->values.size() != out.values.size())
      throw DataError("composite_attributions: map shape mismatch");
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += m->values[i];
    out.output_at_input += m->output_at_input;
    out.output_at_baseline += m->output_at_baseline;
  }
  const double inv = 1.0 / static_cast<double>(matching.size());
  for (double& v : out.values) v *= inv;
  out.output_at_input *= inv;
  out.output_at_baseline *= inv;
  return out;
}

AttributionMap flip_map(const AttributionMap& map) {
  AttributionMap out = map;
  for (double& v : out.values) v = -v;
  out.output_at_input = -out.output_at_input;
  out.output_at_baseline = -out.output_at_baseline;
  return out;
}

std::vector<double> meridional_attribution(const AttributionMap& map, const MeridionalBand& band) {
  const auto rows = map.grid.rows_within(band.south_deg, band.north_deg);
  if (rows.empty()) throw DataError("meridional_attribution: empty band");
  std::vector<double> profile(static_cast<std::size_t>(kNumVars) * map.grid.n_lon, 0.0);
  const double inv = 1.0 / (static_cast<double>(rows.size()) * map.n_leads);
  for (int v = 0; v < kNumVars; ++v)
    for (int lead = 0; lead < map.n_leads; ++lead)
      for (int r : rows)
        for (int lon = 0; lon < map.grid.n_lon; ++lon) {
          const std::size_t src =
              ((static_cast<std::size_t>(v) * map.n_leads + lead) * map.grid.n_lat + r) *
                  map.grid.n_lon + lon;
          profile[static_cast<std::size_t>(v) * map.grid.n_lon + lon] += map.values[src] * inv;
        }
  return profile;
}

double eof_congruence(std::span<const double> profile, const EofBasis& basis, RmmTarget target) {
  const std::vector<double>& mode = target == RmmTarget::Rmm1 ? basis.eof1 : basis.eof2;
  if (profile.size() != mode.size()) throw DataError("eof_congruence: profile length mismatch");
  const std::size_t n = profile.size();
  double mp = 0.0, mm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mp += profile[i];
    mm += mode[i];
  }
  mp /= static_cast<double>(n);
  mm /= static_cast<double>(n);
  double spm = 0.0, spp = 0.0, smm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dp = profile[i] - mp;
    const double dm = mode[i] - mm;
    spm += dp * dm;
    spp += dp * dp;
    smm += dm * dm;
  }
  if (!(spp > 0.0) || !(smm > 0.0)) throw DataError("eof_congruence: constant profile");
  return spm / (std::sqrt(spp) * std::sqrt(smm));
}

void AttributionMap::save(const std::filesystem::path& path) const {
  ArtifactWriter w("MJOA");
  w.add_scalar("target", static_cast<double>(static_cast<int>(target)));
  w.add_scalar("target_lead", target_lead);
  w.add_scalar("steps", steps);
  w.add("grid", {6},
        {static_cast<double>(grid.n_lat), static_cast<double>(grid.n_lon), grid.lat_start_deg,
         grid.lat_step_deg, grid.lon_start_deg, grid.lon_step_deg});
  w.add_scalar("n_leads", n_leads);
  w.add("values",
        {static_cast<std::uint64_t>(kNumVars), static_cast<std::uint64_t>(n_leads),
         static_cast<std::uint64_t>(grid.n_lat), static_cast<std::uint64_t>(grid.n_lon)},
        values);
  w.add("outputs", {2}, {output_at_input, output_at_baseline});
  w.save(path);
}

}  // namespace mjo
