#include "goldiprox/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace goldiprox {

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("rename to " + path.string() + " failed: " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::string out = "step,test_accuracy,corrupted_frac,whitenoise_frac,mean_score\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step);
    out += ',';
    out += format_double(r.test_accuracy);
    out += ',';
    out += format_double(r.corrupted_frac);
    out += ',';
    out += format_double(r.whitenoise_frac);
    out += ',';
    out += format_double(r.mean_score);
    out += '\n';
  }
  return out;
}

std::string score_dump_to_csv(const std::vector<ScoreDumpRow>& rows) {
  std::string out = "step,id,kind,score\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step);
    out += ',';
    out += std::to_string(r.id);
    out += ',';
    out += to_string(r.kind);
    out += ',';
    out += format_double(r.score, 17);
    out += '\n';
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

std::vector<ScoreDumpRow> parse_score_dump_csv(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) !=
      std::vector<std::string>{"step", "id", "kind", "score"})
    throw std::runtime_error("score dump: missing or malformed header");
  std::vector<ScoreDumpRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4)
      throw std::runtime_error("score dump: line " + std::to_string(line_no) + ": expected 4 fields");
    ScoreDumpRow r;
    try {
      r.step = std::stoll(fields[0]);
      r.id = static_cast<std::uint32_t>(std::stoul(fields[1]));
      r.kind = acquisition_from_string(fields[2]);
      r.score = std::stod(fields[3]);
    } catch (const std::exception& e) {
      throw std::runtime_error("score dump: line " + std::to_string(line_no) + ": " + e.what());
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<ScoreDumpRow> read_score_dump(const std::filesystem::path& path) {
  return parse_score_dump_csv(read_text(path));
}

}  // namespace goldiprox
