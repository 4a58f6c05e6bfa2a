#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "goldiprox/trainer.hpp"

namespace goldiprox {

// Deterministic double formatting; identical config+seed must give
// byte-identical CSV artifacts.
std::string format_double(double v, int precision = 10);

// Temp file + rename; the rename is the publication point.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_text(const std::filesystem::path& path);

// metrics.csv: header `step,test_accuracy,corrupted_frac,whitenoise_frac,mean_score`
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

// score dump: header `step,id,kind,score`
std::string score_dump_to_csv(const std::vector<ScoreDumpRow>& rows);
std::vector<ScoreDumpRow> parse_score_dump_csv(const std::string& content);
std::vector<ScoreDumpRow> read_score_dump(const std::filesystem::path& path);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace goldiprox
