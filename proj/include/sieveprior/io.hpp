#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sieveprior/harness.hpp"

namespace sieveprior {

// %.17g rendering, lossless for doubles
std::string format_g17(double v);

// write-then-rename so no output file is ever left partially written
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// JSON round-trip for the run configuration (used for provenance echoes)
std::string experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const std::string& text);

std::string truth_spec_to_json(const TruthSpec& spec);
TruthSpec truth_spec_from_json(const std::string& text);

}  // namespace sieveprior
