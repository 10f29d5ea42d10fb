#include "sphering/svg.hpp"

#include "sphering/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>

namespace sphering {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double nice_step(double range) {
  const double raw = range / 5.0;
  const double base = std::pow(10.0, std::floor(std::log10(raw)));
  for (double mult : {1.0, 2.0, 5.0, 10.0})
    if (raw <= mult * base) return mult * base;
  return 10.0 * base;
}

}  // namespace

std::string fdr_curve_svg(const std::map<std::string, Vector>& curves, const std::string& title, Index maxK) {
  if (curves.empty()) throw ParameterError("fdr_curve_svg: no curves");
  Index k_max = 0;
  for (const auto& [name, v] : curves) k_max = std::max(k_max, v.size());
  if (maxK > 0) k_max = std::min(k_max, maxK);
  if (k_max < 1) throw ParameterError("fdr_curve_svg: curves are empty");

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double k) { return kLeft + plot_w * (k_max > 1 ? (k - 1.0) / double(k_max - 1) : 0.5); };
  auto py = [&](double y) { return kTop + plot_h * (1.0 - std::clamp(y, 0.0, 1.0)); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n",
      kWidth, kHeight, kLeft + plot_w / 2.0, escape(title));

  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                     kTop, plot_w, plot_h);
  for (int i = 0; i <= 5; ++i) {
    const double y = i / 5.0;
    out += fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#dddddd\"/>\n"
        "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:.1f}</text>\n",
        kLeft, py(y), kLeft + plot_w, kLeft - 6.0, py(y) + 4.0, y);
  }
  const double step = k_max > 1 ? nice_step(double(k_max - 1)) : 1.0;
  for (double k = step; k <= double(k_max) + 1e-9; k += step) {
    out += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"black\"/>\n"
        "<text x=\"{0:.2f}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
        px(k), kTop + plot_h, kTop + plot_h + 5.0, kTop + plot_h + 18.0, static_cast<long>(k));
  }
  out += fmt::format(
      "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">Number of tests rejected</text>\n"
      "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">False discovery proportion</text>\n",
      kLeft + plot_w / 2.0, kHeight - 10.0, kTop + plot_h / 2.0, kTop + plot_h / 2.0);

  static constexpr std::array<const char*, 6> kColors = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e",
                                                         "#8c564b"};
  std::size_t color = 0;
  double legend_y = kTop + 10.0;
  auto draw = [&](const std::string& name, const Vector& v) {
    const bool truth = name == "true_fdp";
    const char* stroke = truth ? "black" : kColors[color++ % kColors.size()];
    std::string points;
    const Index count = std::min(v.size(), k_max);
    for (Index k = 0; k < count; ++k) {
      if (!std::isfinite(v(k))) continue;
      points += fmt::format("{:.2f},{:.2f} ", px(double(k + 1)), py(v(k)));
    }
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"{} points=\"{}\"/>\n", stroke,
                       truth ? 2.5 : 1.5, truth ? "" : " stroke-dasharray=\"6 3\"", points);
    const double lx = kLeft + plot_w + 12.0;
    out += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"{4}/>\n"
        "<text x=\"{5}\" y=\"{6}\">{7}</text>\n",
        lx, legend_y, lx + 24.0, stroke, truth ? "" : " stroke-dasharray=\"6 3\"", lx + 30.0, legend_y + 4.0,
        escape(name));
    legend_y += 18.0;
  };
  if (auto it = curves.find("true_fdp"); it != curves.end()) draw(it->first, it->second);
  for (const auto& [name, v] : curves)
    if (name != "true_fdp") draw(name, v);
  out += "</svg>\n";
  return out;
}

}  // namespace sphering
