#include "mfl/io.hpp"

#include <cstdio>
#include <filesystem>

namespace mfl {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

JsonlWriter::JsonlWriter(const std::string& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + path);
}

void JsonlWriter::write(const nlohmann::json& record) {
  out_ << record.dump() << '\n';
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + path);
  for (size_t i = 0; i < header.size(); ++i)
    out_ << header[i] << (i + 1 < header.size() ? "," : "\n");
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_)
    throw std::invalid_argument("csv row width mismatch");
  for (size_t i = 0; i < values.size(); ++i)
    out_ << fmt_double(values[i]) << (i + 1 < values.size() ? "," : "\n");
}

namespace {
constexpr char kGridMagic[9] = "MFLGRID1";
}

void save_grid(const std::string& path, const nlohmann::json& header,
               const Eigen::ArrayXXd& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write grid file: " + path);
  nlohmann::json h = header;
  h["rows"] = data.rows();
  h["cols"] = data.cols();
  const std::string hs = h.dump();
  const uint64_t len = hs.size();
  out.write(kGridMagic, 8);
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(hs.data(), static_cast<std::streamsize>(len));
  // row-major for external readability
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      const double v = data(i, j);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
}

Eigen::ArrayXXd load_grid(const std::string& path, nlohmann::json* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read grid file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 8) != std::string(kGridMagic, 8))
    throw std::runtime_error("not a grid file: " + path);
  uint64_t len;
  in.read(reinterpret_cast<char*>(&len), 8);
  std::string hs(len, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(len));
  const auto h = nlohmann::json::parse(hs);
  const Eigen::Index rows = h.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = h.at("cols").get<Eigen::Index>();
  Eigen::ArrayXXd data(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), 8);
      data(i, j) = v;
    }
  if (!in) throw std::runtime_error("truncated grid file: " + path);
  if (header) *header = h;
  return data;
}

void ensure_directory(const std::string& path) {
  std::filesystem::create_directories(path);
}

std::string config_hash(const nlohmann::json& j) {
  const std::string dump = j.dump();  // nlohmann keeps keys sorted
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mfl
