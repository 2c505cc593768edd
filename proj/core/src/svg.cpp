#include "mjo/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mjo::svg {

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Canvas {
  std::string body;
  int width, height;

  Canvas(int w, int h) : width(w), height(h) {}

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double stroke_width = 1.0, const std::string& dash = "") {
    body += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) + "\" y2=\"" +
            fmt(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(stroke_width) + "\"";
    if (!dash.empty()) body += " stroke-dasharray=\"" + dash + "\"";
    body += "/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                double stroke_width = 1.5, const std::string& dash = "") {
    body += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
            fmt(stroke_width) + "\"";
    if (!dash.empty()) body += " stroke-dasharray=\"" + dash + "\"";
    body += " points=\"";
    for (const auto& [x, y] : pts) body += fmt(x) + "," + fmt(y) + " ";
    body += "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none") {
    body += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) + "\" height=\"" +
            fmt(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
  }
  void circle(double cx, double cy, double r, const std::string& stroke) {
    body += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" + fmt(r) +
            "\" fill=\"none\" stroke=\"" + stroke + "\"/>\n";
  }
  void text(double x, double y, const std::string& s, int size = 11,
            const std::string& anchor = "start", const std::string& fill = "#222") {
    body += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-size=\"" + std::to_string(size) +
            "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\">" +
            s + "</text>\n";
  }
  std::string finish() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
           " " + std::to_string(height) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
           body + "</svg>\n";
  }
};

/// Diverging blue-white-red fill for values in [-1, 1] after scaling.
std::string diverging_color(double v) {
  v = std::clamp(v, -1.0, 1.0);
  int r, g, b;
  if (v >= 0) {
    r = 255;
    g = static_cast<int>(255 * (1.0 - v));
    b = g;
  } else {
    b = 255;
    g = static_cast<int>(255 * (1.0 + v));
    r = g;
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

struct Axes {
  double x0, y0, x1, y1;  // plot box in canvas coordinates (y grows down)
  double xmin, xmax, ymin, ymax;

  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); }
  double py(double y) const { return y1 - (y - ymin) / (ymax - ymin) * (y1 - y0); }
};

void draw_axes(Canvas& c, const Axes& a, const std::string& xlabel, const std::string& ylabel,
               double x_tick, double y_tick) {
  c.line(a.x0, a.y1, a.x1, a.y1, "#222");
  c.line(a.x0, a.y0, a.x0, a.y1, "#222");
  for (double x = std::ceil(a.xmin / x_tick) * x_tick; x <= a.xmax + 1e-9; x += x_tick) {
    c.line(a.px(x), a.y1, a.px(x), a.y1 + 4, "#222");
    c.text(a.px(x), a.y1 + 16, fmt(x), 10, "middle");
  }
  for (double y = std::ceil(a.ymin / y_tick) * y_tick; y <= a.ymax + 1e-9; y += y_tick) {
    c.line(a.x0 - 4, a.py(y), a.x0, a.py(y), "#222");
    c.text(a.x0 - 7, a.py(y) + 3, fmt(y), 10, "end");
  }
  c.text((a.x0 + a.x1) / 2, a.y1 + 32, xlabel, 11, "middle");
  c.text(a.x0 - 38, (a.y0 + a.y1) / 2, ylabel, 11, "middle");
}

std::vector<std::pair<double, double>> curve_points(const Axes& a,
                                                    const std::vector<double>& values) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t t = 0; t < values.size(); ++t)
    pts.emplace_back(a.px(static_cast<double>(t + 1)), a.py(values[t]));
  return pts;
}

}  // namespace

std::string skill_curves(const SkillReport& rep, const std::string& title) {
  Canvas c(640, 480);
  Axes a{60, 40, 600, 330, 1.0, static_cast<double>(rep.n_leads), -0.2, 1.0};
  c.text(320, 22, title, 13, "middle");
  draw_axes(c, a, "forecast lead (days)", "COR", 5.0, 0.2);

  c.line(a.px(a.xmin), a.py(0.5), a.px(a.xmax), a.py(0.5), "#999", 1.0, "2,3");
  c.text(a.px(a.xmax) - 4, a.py(0.5) - 4, "COR = 0.5", 9, "end", "#777");
  if (rep.skillful_raw >= 1)
    c.line(a.px(rep.skillful_raw), a.y0, a.px(rep.skillful_raw), a.y1, "#6688cc", 1.0, "4,3");
  if (rep.skillful_corr >= 1)
    c.line(a.px(rep.skillful_corr), a.y0, a.px(rep.skillful_corr), a.y1, "#cc5555", 1.0, "4,3");

  c.polyline(curve_points(a, rep.cor_raw), "#3355bb", 1.8, "6,4");
  c.polyline(curve_points(a, rep.cor_corr), "#cc2222", 1.8);
  c.text(a.x1 - 4, a.y0 + 12, "raw (dashed)", 10, "end", "#3355bb");
  c.text(a.x1 - 4, a.y0 + 26, "corrected", 10, "end", "#cc2222");

  // Difference bars with significance shading underneath the main panel.
  Axes bars{60, 360, 600, 450, 1.0, static_cast<double>(rep.n_leads), 0.0, 1.0};
  double max_diff = 0.0;
  for (int t = 0; t < rep.n_leads; ++t)
    max_diff = std::max(max_diff, std::fabs(rep.cor_corr[t] - rep.cor_raw[t]));
  if (max_diff <= 0.0) max_diff = 1.0;
  const double bar_w = (bars.x1 - bars.x0) / rep.n_leads * 0.7;
  for (int t = 0; t < rep.n_leads; ++t) {
    const double diff = rep.cor_corr[t] - rep.cor_raw[t];
    const double h = std::fabs(diff) / max_diff * (bars.y1 - bars.y0 - 14);
    const std::string fill = rep.sig[t] == SigBand::P95   ? "#b03030"
                             : rep.sig[t] == SigBand::P90 ? "#d88a4a"
                                                          : "#bbbbbb";
    const double x = bars.px(static_cast<double>(t + 1)) - bar_w / 2;
    if (diff >= 0)
      c.rect(x, bars.y1 - 14 - h, bar_w, h, fill);
    else
      c.rect(x, bars.y1 - 14, bar_w, h, fill);
  }
  c.text(60, 358, "COR difference (corrected - raw); dark red >= 95%, orange 90-95%", 9, "start",
         "#555");
  return c.finish();
}

std::string error_curves(const SkillReport& rep, const std::string& title) {
  Canvas c(640, 480);
  c.text(320, 22, title, 13, "middle");

  double rmse_max = 0.0;
  for (int t = 0; t < rep.n_leads; ++t)
    rmse_max = std::max({rmse_max, rep.rmse_raw[t], rep.rmse_corr[t]});
  if (rmse_max <= 0) rmse_max = 1.0;
  Axes a{60, 40, 600, 220, 1.0, static_cast<double>(rep.n_leads), 0.0, rmse_max * 1.05};
  draw_axes(c, a, "", "RMSE", 5.0, rmse_max / 4);
  c.polyline(curve_points(a, rep.rmse_raw), "#3355bb", 1.8, "6,4");
  c.polyline(curve_points(a, rep.rmse_corr), "#cc2222", 1.8);

  Axes b{60, 260, 600, 440, 1.0, static_cast<double>(rep.n_leads), -0.5, 1.0};
  draw_axes(c, b, "forecast lead (days)", "MSSS", 5.0, 0.25);
  c.line(b.px(b.xmin), b.py(0.0), b.px(b.xmax), b.py(0.0), "#999", 1.0, "2,3");
  auto clamp_curve = [&](const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i], b.ymin);
    return out;
  };
  c.polyline(curve_points(b, clamp_curve(rep.msss_raw)), "#3355bb", 1.8, "6,4");
  c.polyline(curve_points(b, clamp_curve(rep.msss_corr)), "#cc2222", 1.8);
  return c.finish();
}

std::string phase_wheel(const std::array<PhaseComposite, 8>& comps, const std::string& title) {
  Canvas c(560, 580);
  c.text(280, 22, title, 13, "middle");
  const double cx = 280, cy = 300;
  double max_amp = 1.5;
  for (const auto& g : comps) {
    if (g.missing) continue;
    for (std::size_t t = 0; t < g.obs1.size(); ++t) {
      max_amp = std::max(max_amp, std::hypot(g.obs1[t], g.obs2[t]));
      max_amp = std::max(max_amp, std::hypot(g.raw1[t], g.raw2[t]));
      max_amp = std::max(max_amp, std::hypot(g.corr1[t], g.corr2[t]));
    }
  }
  const double scale = 230.0 / max_amp;
  auto px = [&](double rmm1) { return cx + rmm1 * scale; };
  auto py = [&](double rmm2) { return cy - rmm2 * scale; };

  // Octant boundaries every 45 degrees plus the unit amplitude circle.
  for (int k = 0; k < 8; ++k) {
    const double th = k * M_PI / 4.0;
    c.line(cx + std::cos(th) * scale * 1.0, cy - std::sin(th) * scale * 1.0,
           cx + std::cos(th) * scale * max_amp, cy - std::sin(th) * scale * max_amp, "#ccc");
  }
  c.circle(cx, cy, scale * 1.0, "#888");
  c.circle(cx, cy, scale * max_amp, "#ddd");
  // Wheeler-Hendon octants: phase 5 spans [0, 45) degrees, anticlockwise.
  static constexpr int kOctantPhase[8] = {5, 6, 7, 8, 1, 2, 3, 4};
  for (int k = 0; k < 8; ++k) {
    const double th = (k + 0.5) * M_PI / 4.0;
    c.text(cx + std::cos(th) * scale * max_amp * 0.92, cy - std::sin(th) * scale * max_amp * 0.92,
           std::to_string(kOctantPhase[k]), 13, "middle", "#555");
  }
  c.text(cx + scale * max_amp + 8, cy + 4, "RMM1", 11);
  c.text(cx, cy - scale * max_amp - 8, "RMM2", 11, "middle");

  auto draw_traj = [&](const std::vector<double>& r1, const std::vector<double>& r2,
                       const std::string& color, const std::string& dash) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t t = 0; t < r1.size(); ++t) pts.emplace_back(px(r1[t]), py(r2[t]));
    c.polyline(pts, color, 1.4, dash);
    if (!pts.empty())
      c.rect(pts.front().first - 2, pts.front().second - 2, 4, 4, color);  // start marker
  };
  for (const auto& g : comps) {
    if (g.missing) continue;
    draw_traj(g.obs1, g.obs2, "#111111", "");
    draw_traj(g.raw1, g.raw2, "#3355bb", "5,3");
    draw_traj(g.corr1, g.corr2, "#cc2222", "");
  }
  c.text(40, 560, "observed black, raw blue dashed, corrected red; squares mark lead 1", 10,
         "start", "#555");
  return c.finish();
}

std::string hovmoller_panel(const std::vector<HovmollerMatrix>& matrices,
                            const std::vector<std::string>& labels, const std::string& title) {
  if (matrices.empty()) throw DataError("hovmoller_panel: no matrices");
  const int n_panels = static_cast<int>(matrices.size());
  const int pw = 320, ph = 300, margin = 50;
  Canvas c(margin + n_panels * (pw + 30), ph + 120);
  c.text((margin + n_panels * (pw + 30)) / 2.0, 22, title, 13, "middle");

  double vmax = 0.0;
  for (const auto& m : matrices)
    for (double v : m.values) vmax = std::max(vmax, std::fabs(v));
  if (vmax <= 0.0) vmax = 1.0;

  for (int p = 0; p < n_panels; ++p) {
    const auto& m = matrices[p];
    const double x0 = margin + p * (pw + 30), y0 = 50;
    const double cell_w = static_cast<double>(pw) / m.n_lon;
    const double cell_h = static_cast<double>(ph) / m.n_leads;
    for (int t = 0; t < m.n_leads; ++t)
      for (int lon = 0; lon < m.n_lon; ++lon)
        c.rect(x0 + lon * cell_w, y0 + t * cell_h, cell_w + 0.5, cell_h + 0.5,
               diverging_color(m.at(t, lon) / vmax));
    c.rect(x0, y0, pw, ph, "none", "#222");
    c.text(x0 + pw / 2.0, y0 + ph + 16, "longitude (0-360E)", 10, "middle");
    if (p == 0) c.text(x0 - 8, y0 + ph / 2.0, "lead", 10, "end");
    std::string label = p < static_cast<int>(labels.size()) ? labels[p] : "";
    if (p > 0) {
      label += "  PCC=" + fmt(pattern_cc(matrices[0], m));
    }
    c.text(x0 + pw / 2.0, y0 - 8, label, 11, "middle");
  }
  return c.finish();
}

std::string stratified_heatmap(const StratifiedSkill& strat, bool by_phase,
                               const std::string& title) {
  const int n_strata = by_phase ? 8 : 12;
  const auto& diff = by_phase ? strat.by_phase_diff : strat.by_month_diff;
  const auto& sig = by_phase ? strat.by_phase_sig : strat.by_month_sig;
  const int pw = 520, ph = n_strata * 26;
  Canvas c(pw + 140, ph + 110);
  c.text((pw + 140) / 2.0, 22, title, 13, "middle");

  double vmax = 0.0;
  for (double v : diff)
    if (std::isfinite(v)) vmax = std::max(vmax, std::fabs(v));
  if (vmax <= 0.0) vmax = 1.0;

  const double x0 = 90, y0 = 45;
  const double cell_w = static_cast<double>(pw) / strat.n_leads;
  for (int g = 0; g < n_strata; ++g) {
    c.text(x0 - 8, y0 + g * 26 + 17, (by_phase ? "P" : "M") + std::to_string(g + 1), 10, "end");
    for (int t = 0; t < strat.n_leads; ++t) {
      const std::size_t cell = static_cast<std::size_t>(g) * strat.n_leads + t;
      const double v = diff[cell];
      if (!std::isfinite(v)) {
        c.rect(x0 + t * cell_w, y0 + g * 26, cell_w + 0.5, 26, "#e8e8e8");
        continue;
      }
      c.rect(x0 + t * cell_w, y0 + g * 26, cell_w + 0.5, 26, diverging_color(v / vmax));
      if (sig[cell] == SigBand::P95)
        c.rect(x0 + t * cell_w + cell_w / 2 - 1, y0 + g * 26 + 12, 2, 2, "#222");
    }
  }
  c.rect(x0, y0, pw, ph, "none", "#222");
  c.text(x0 + pw / 2.0, y0 + ph + 18, "forecast lead (days)", 11, "middle");
  c.text(x0 + pw / 2.0, y0 + ph + 36,
         "COR difference (corrected - raw), red = improvement; dots mark 95% significance", 9,
         "middle", "#555");
  return c.finish();
}

std::string ablation_curves(const std::vector<std::vector<double>>& cor_curves,
                            const std::vector<std::string>& labels, const std::string& title) {
  if (cor_curves.empty()) throw DataError("ablation_curves: no curves");
  static constexpr const char* kColors[] = {"#cc2222", "#3355bb", "#228833", "#888822",
                                            "#882288", "#228888", "#555555", "#cc7722"};
  Canvas c(640, 440);
  c.text(320, 22, title, 13, "middle");
  const int n_leads = static_cast<int>(cor_curves.front().size());
  Axes a{60, 40, 600, 360, 1.0, static_cast<double>(n_leads), -0.2, 1.0};
  draw_axes(c, a, "forecast lead (days)", "COR", 5.0, 0.2);
  c.line(a.px(a.xmin), a.py(0.5), a.px(a.xmax), a.py(0.5), "#999", 1.0, "2,3");
  for (std::size_t i = 0; i < cor_curves.size(); ++i) {
    const std::string color = kColors[i % 8];
    c.polyline(curve_points(a, cor_curves[i]), color, 1.6);
    c.text(a.x1 - 4, a.y0 + 12 + 13 * static_cast<double>(i),
           i < labels.size() ? labels[i] : "variant " + std::to_string(i), 10, "end", color);
  }
  return c.finish();
}

}  // namespace mjo::svg
