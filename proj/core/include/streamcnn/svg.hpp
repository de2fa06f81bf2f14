#pragma once

#include <string>
#include <utility>
#include <vector>

namespace streamcnn::svg {

/// Minimal deterministic SVG writer.
class Document {
 public:
  Document(double width, double height);

  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke = "none",
            double opacity = 1.0);
  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0,
            bool dashed = false);
  void polyline(const std::vector<std::pair<double, double>>& points, const std::string& stroke, double width = 1.5);
  void circle(double cx, double cy, double r, const std::string& fill);
  void text(double x, double y, const std::string& s, double size = 12, const std::string& anchor = "start",
            double rotate = 0);

  std::string str() const;

 private:
  double width_, height_;
  std::string body_;
};

/// Shortest round-trip decimal form of a double (no locale, no exponent
/// surprises between platforms).
std::string number(double v);

std::string escape(const std::string& s);

/// Categorical palette.
const std::string& color(std::size_t i);

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Line chart with linear axes and a legend.
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series);

}  // namespace streamcnn::svg
