#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace mfl {

/// Format a double with full round-trip precision (deterministic output).
std::string fmt_double(double v);

/// Line-oriented JSON writer.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path);
  void write(const nlohmann::json& record);

 private:
  std::ofstream out_;
};

/// CSV with a fixed header; cells are written with fmt_double.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);

 private:
  std::ofstream out_;
  size_t columns_;
};

/// Flat binary grid container: magic, JSON header, then row-major doubles.
void save_grid(const std::string& path, const nlohmann::json& header,
               const Eigen::ArrayXXd& data);
Eigen::ArrayXXd load_grid(const std::string& path, nlohmann::json* header);

void ensure_directory(const std::string& path);

/// FNV-1a over the canonical (sorted-key) JSON dump.
std::string config_hash(const nlohmann::json& j);

}  // namespace mfl
