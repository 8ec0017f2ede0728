#pragma once

#include <string>
#include <vector>

namespace mfl {

/// Minimal deterministic SVG line plots (fixed layout, fixed number
/// formatting, no timestamps), so regenerating from the same data is
/// bitwise identical.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel);

  void add_series(const std::string& name, const std::vector<double>& x,
                  const std::vector<double>& y);
  void set_log_y(bool on) { log_y_ = on; }

  void write(const std::string& path) const;

 private:
  struct Series {
    std::string name;
    std::vector<double> x, y;
  };
  std::string title_, xlabel_, ylabel_;
  std::vector<Series> series_;
  bool log_y_ = false;
};

}  // namespace mfl
