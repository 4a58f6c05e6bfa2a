#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace goldiprox {

// Minimal dependency-free SVG line chart; one polyline per series over a
// shared x axis. Output text is deterministic.
void write_svg_line_chart(const std::filesystem::path& path, const std::string& title,
                          const std::vector<double>& xs,
                          const std::vector<std::pair<std::string, std::vector<double>>>& series);

}  // namespace goldiprox
