#include "goldiprox/svg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "goldiprox/csv.hpp"

namespace goldiprox {

void write_svg_line_chart(const std::filesystem::path& path, const std::string& title,
                          const std::vector<double>& xs,
                          const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  if (xs.empty() || series.empty()) throw std::invalid_argument("svg chart: empty data");
  for (const auto& [name, ys] : series)
    if (ys.size() != xs.size()) throw std::invalid_argument("svg chart: series length mismatch");

  const double width = 640, height = 400;
  const double ml = 60, mr = 20, mt = 40, mb = 40;
  double xmin = xs.front(), xmax = xs.front();
  for (double x : xs) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  }
  double ymin = series.front().second.front(), ymax = ymin;
  for (const auto& [name, ys] : series)
    for (double y : ys) {
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
  const auto py = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
         "viewBox=\"0 0 640 400\">\n";
  svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">" + title + "</text>\n";
  // axes
  svg += "<line x1=\"" + format_double(ml) + "\" y1=\"" + format_double(mt) + "\" x2=\"" +
         format_double(ml) + "\" y2=\"" + format_double(height - mb) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + format_double(ml) + "\" y1=\"" + format_double(height - mb) + "\" x2=\"" +
         format_double(width - mr) + "\" y2=\"" + format_double(height - mb) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  // extent labels
  svg += "<text x=\"" + format_double(ml) + "\" y=\"" + format_double(height - mb + 16) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + format_double(xmin, 6) + "</text>\n";
  svg += "<text x=\"" + format_double(width - mr) + "\" y=\"" + format_double(height - mb + 16) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
         format_double(xmax, 6) + "</text>\n";
  svg += "<text x=\"" + format_double(ml - 6) + "\" y=\"" + format_double(height - mb) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
         format_double(ymin, 6) + "</text>\n";
  svg += "<text x=\"" + format_double(ml - 6) + "\" y=\"" + format_double(mt + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
         format_double(ymax, 6) + "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& [name, ys] = series[s];
    std::string points;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      points += format_double(px(xs[i]), 8);
      points += ',';
      points += format_double(py(ys[i]), 8);
      points += ' ';
    }
    const char* color = palette[s % 6];
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    svg += "<text x=\"" + format_double(width - mr - 4) + "\" y=\"" +
           format_double(mt + 14 + 14 * static_cast<double>(s)) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" + color +
           "\">" + name + "</text>\n";
  }
  svg += "</svg>\n";
  write_text_atomic(path, svg);
}

}  // namespace goldiprox
