#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace trajcv::cli {

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(std::vector<std::string> row);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string num(double x);

// Writes the file, creating parent directories; raises Error naming the path.
void write_text_file(const std::filesystem::path& path, const std::string& content);

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  // Optional shaded band (same length as x when present).
  std::vector<double> lo;
  std::vector<double> hi;
};

struct LinePlot {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;

  // Self-contained SVG document. Non-positive values are dropped on log axes.
  std::string svg() const;
};

}  // namespace trajcv::cli
