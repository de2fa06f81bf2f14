#include "streamcnn/svg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>

namespace streamcnn::svg {

std::string number(double v) {
  if (!std::isfinite(v)) return "0";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const std::string& color(std::size_t i) {
  static const std::array<std::string, 8> palette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return palette[i % palette.size()];
}

Document::Document(double width, double height) : width_(width), height_(height) {
  rect(0, 0, width, height, "white");
}

void Document::rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke,
                    double opacity) {
  body_ += "<rect x=\"" + number(x) + "\" y=\"" + number(y) + "\" width=\"" + number(w) + "\" height=\"" +
           number(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"";
  if (opacity < 1.0) body_ += " fill-opacity=\"" + number(opacity) + "\"";
  body_ += "/>\n";
}

void Document::line(double x1, double y1, double x2, double y2, const std::string& stroke, double width, bool dashed) {
  body_ += "<line x1=\"" + number(x1) + "\" y1=\"" + number(y1) + "\" x2=\"" + number(x2) + "\" y2=\"" + number(y2) +
           "\" stroke=\"" + stroke + "\" stroke-width=\"" + number(width) + "\"";
  if (dashed) body_ += " stroke-dasharray=\"4 3\"";
  body_ += "/>\n";
}

void Document::polyline(const std::vector<std::pair<double, double>>& points, const std::string& stroke, double width) {
  body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + number(width) + "\" points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) body_ += ' ';
    body_ += number(points[i].first) + "," + number(points[i].second);
  }
  body_ += "\"/>\n";
}

void Document::circle(double cx, double cy, double r, const std::string& fill) {
  body_ += "<circle cx=\"" + number(cx) + "\" cy=\"" + number(cy) + "\" r=\"" + number(r) + "\" fill=\"" + fill +
           "\"/>\n";
}

void Document::text(double x, double y, const std::string& s, double size, const std::string& anchor, double rotate) {
  body_ += "<text x=\"" + number(x) + "\" y=\"" + number(y) + "\" font-family=\"sans-serif\" font-size=\"" +
           number(size) + "\" text-anchor=\"" + anchor + "\"";
  if (rotate != 0) body_ += " transform=\"rotate(" + number(rotate) + " " + number(x) + " " + number(y) + ")\"";
  body_ += ">" + escape(s) + "</text>\n";
}

std::string Document::str() const {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + number(width_) + "\" height=\"" + number(height_) +
         "\" viewBox=\"0 0 " + number(width_) + " " + number(height_) + "\">\n" + body_ + "</svg>\n";
}

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series) {
  constexpr double W = 640, H = 420, left = 70, right = 170, top = 40, bottom = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  y0 = std::min(y0, 0.0);
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pw = W - left - right, ph = H - top - bottom;
  const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  const auto py = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

  Document doc(W, H);
  doc.text(W / 2, 22, title, 15, "middle");
  doc.line(left, top + ph, left + pw, top + ph, "black");
  doc.line(left, top, left, top + ph, "black");
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4, yv = y0 + (y1 - y0) * t / 4;
    doc.line(px(xv), top + ph, px(xv), top + ph + 4, "black");
    doc.text(px(xv), top + ph + 18, number(std::round(xv * 100) / 100), 10, "middle");
    doc.line(left - 4, py(yv), left, py(yv), "black");
    doc.line(left, py(yv), left + pw, py(yv), "#dddddd", 0.5);
    doc.text(left - 6, py(yv) + 3, number(std::round(yv * 100) / 100), 10, "end");
  }
  doc.text(left + pw / 2, H - 10, x_label, 12, "middle");
  doc.text(16, top + ph / 2, y_label, 12, "middle", -90);
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [x, y] : series[i].points) pts.emplace_back(px(x), py(y));
    doc.polyline(pts, color(i));
    for (const auto& [x, y] : pts) doc.circle(x, y, 2.5, color(i));
    doc.line(W - right + 15, top + 10 + 18.0 * static_cast<double>(i), W - right + 35,
             top + 10 + 18.0 * static_cast<double>(i), color(i), 2);
    doc.text(W - right + 40, top + 14 + 18.0 * static_cast<double>(i), series[i].label, 11);
  }
  return doc.str();
}

}  // namespace streamcnn::svg
