#include "mfl/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace mfl {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string xlabel, std::string ylabel)
    : title_(std::move(title)), xlabel_(std::move(xlabel)),
      ylabel_(std::move(ylabel)) {}

void SvgPlot::add_series(const std::string& name, const std::vector<double>& x,
                         const std::vector<double>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("svg series size mismatch");
  series_.push_back({name, x, y});
}

void SvgPlot::write(const std::string& path) const {
  const double W = 720, H = 480;
  const double ml = 70, mr = 160, mt = 40, mb = 55;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series_)
    for (size_t i = 0; i < s.x.size(); ++i) {
      double yv = s.y[i];
      if (log_y_) {
        if (!(yv > 0)) continue;
        yv = std::log10(yv);
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, yv);
      ymax = std::max(ymax, yv);
    }
  if (!(xmin < xmax)) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (!(ymin < ymax)) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  auto X = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  auto Y = [&](double y) {
    return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb);
  };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write plot: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-size=\"16\">" << title_ << "</text>\n";
  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
      << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  // ticks
  for (int i = 0; i <= 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 5.0;
    const double fy = ymin + (ymax - ymin) * i / 5.0;
    out << "<line x1=\"" << X(fx) << "\" y1=\"" << H - mb << "\" x2=\""
        << X(fx) << "\" y2=\"" << H - mb + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << X(fx) << "\" y=\"" << H - mb + 20
        << "\" text-anchor=\"middle\" font-size=\"11\">" << num(fx)
        << "</text>\n";
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << Y(fy) << "\" x2=\"" << ml
        << "\" y2=\"" << Y(fy) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << Y(fy) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">"
        << num(log_y_ ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel_
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 "
         "18 " << (mt + H - mb) / 2 << ")\">" << ylabel_ << "</text>\n";

  for (size_t si = 0; si < series_.size(); ++si) {
    const auto& s = series_[si];
    const char* color = kColors[si % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      double yv = s.y[i];
      if (log_y_) {
        if (!(yv > 0)) continue;
        yv = std::log10(yv);
      }
      out << num(X(s.x[i])) << "," << num(Y(yv)) << " ";
    }
    out << "\"/>\n";
    out << "<text x=\"" << W - mr + 10 << "\" y=\"" << mt + 18 * (si + 1)
        << "\" font-size=\"12\" fill=\"" << color << "\">" << s.name
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace mfl
