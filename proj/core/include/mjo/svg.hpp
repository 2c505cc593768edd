#pragma once

#include <string>
#include <vector>

#include "mjo/verify.hpp"

namespace mjo {

/// Self-contained SVG emitters for the standard diagnostic plots. Pure
/// functions of their inputs; byte-stable for identical data.
namespace svg {

/// COR-vs-lead curves (raw dashed, corrected solid) with the 0.5 skill
/// threshold, skillful-lead markers, and a difference bar strip shaded by
/// significance band.
std::string skill_curves(const SkillReport& report, const std::string& title);

/// RMSE and MSSS curves, raw vs corrected.
std::string error_curves(const SkillReport& report, const std::string& title);

/// Wheeler-Hendon phase wheel with the eight labeled octants, the unit
/// amplitude circle, and composite trajectories (observed black, raw
/// blue, corrected red).
std::string phase_wheel(const std::array<PhaseComposite, 8>& composites, const std::string& title);

/// Longitude-lead shaded matrix (blue-white-red), one panel per variable
/// triple, annotated with pattern correlations against the first matrix.
std::string hovmoller_panel(const std::vector<HovmollerMatrix>& matrices,
                            const std::vector<std::string>& labels, const std::string& title);

/// Stratified-skill difference heatmap (strata x leads), missing cells
/// hatched gray.
std::string stratified_heatmap(const StratifiedSkill& strat, bool by_phase,
                               const std::string& title);

/// Multi-line chart for ablation sweeps: one COR curve per variant.
std::string ablation_curves(const std::vector<std::vector<double>>& cor_curves,
                            const std::vector<std::string>& labels, const std::string& title);

}  // namespace svg
}  // namespace mjo
