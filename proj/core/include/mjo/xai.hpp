#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "mjo/pcc.hpp"

namespace mjo {

enum class RmmTarget : int { Rmm1 = 0, Rmm2 = 1 };

/// Integrated-gradients attribution of one refined RMM component at one
/// lead with respect to the full input anomaly field, zero-anomaly
/// baseline, midpoint Riemann rule.
struct AttributionMap {
  RmmTarget target = RmmTarget::Rmm1;
  int target_lead = 20;  // 1-based lead day
  int steps = 64;
  GridSpec grid;
  int n_leads = 0;
  std::vector<double> values;  // (var, lead, lat, lon)
  double output_at_input = 0.0;     // F(x)
  double output_at_baseline = 0.0;  // F(x0)

  double sum() const;
  double completeness_residual() const;  // |sum - (F(x) - F(x0))|
  void save(const std::filesystem::path& path) const;  // magic "MJOA"
};

AttributionMap integrated_gradients(const CorrectorModel& model, const AnomalyField& input,
                                    RmmTarget target, int target_lead, int steps);

/// Elementwise mean of maps sharing one target.
AttributionMap composite_attributions(std::span<const AttributionMap> maps, RmmTarget target);

/// Flips a map's sign; compositing aligned by the sign of the model
/// output keeps opposite-phase samples from cancelling.
AttributionMap flip_map(const AttributionMap& map);

/// Meridional mean over the band plus a mean over the lead axis:
/// per-variable longitude profiles, flattened (var, lon).
std::vector<double> meridional_attribution(const AttributionMap& map,
                                           const MeridionalBand& band = {});

/// Centered Pearson correlation between the concatenated profile and the
/// basis mode matching the target (eof1 for RMM1, eof2 for RMM2).
double eof_congruence(std::span<const double> profile, const EofBasis& basis, RmmTarget target);

}  // namespace mjo
