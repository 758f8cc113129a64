#include "mckv/plot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mckv/errors.hpp"
#include "mckv/io.hpp"

namespace mckv {

namespace {

constexpr double kWidth = 640.0, kHeight = 400.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

std::string f(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void widen(double& lo, double& hi) {
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(lo))) {
    const double pad = std::max(0.5, 0.1 * std::abs(lo));
    lo -= pad;
    hi += pad;
  } else {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
}

std::string header(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << escape(title) << "</text>\n";
  return os.str();
}

std::string axes(const Frame& fr, bool log_y) {
  std::ostringstream os;
  os << "<g stroke=\"black\" stroke-width=\"1\">"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
     << kHeight - kBottom << "\"/>"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
     << "\"/></g>\n<g font-family=\"sans-serif\" font-size=\"11\">";
  for (int i = 0; i <= 4; ++i) {
    const double xv = fr.x0 + (fr.x1 - fr.x0) * i / 4.0;
    const double yv = fr.y0 + (fr.y1 - fr.y0) * i / 4.0;
    os << "<text x=\"" << f(fr.px(xv)) << "\" y=\"" << kHeight - kBottom + 18 << "\" text-anchor=\"middle\">" << f(xv)
       << "</text>";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << f(fr.py(yv) + 4) << "\" text-anchor=\"end\">"
       << f(log_y ? std::pow(10.0, yv) : yv) << "</text>";
  }
  os << "</g>\n";
  return os.str();
}

std::string polyline(const Frame& fr, const std::vector<double>& x, const std::vector<double>& y,
                     const std::string& style) {
  std::ostringstream os;
  if (x.size() == 1) {
    os << "<circle cx=\"" << f(fr.px(x[0])) << "\" cy=\"" << f(fr.py(y[0])) << "\" r=\"3\" " << style << "/>\n";
    return os.str();
  }
  os << "<polyline fill=\"none\" " << style << " points=\"";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? " " : "") << f(fr.px(x[i])) << ',' << f(fr.py(y[i]));
  os << "\"/>\n";
  return os.str();
}

PlotOutput mean_band(const PlotData& d) {
  const std::size_t n = d.y.size();
  if (d.x.size() != n || d.lower.size() != n || d.upper.size() != n) {
    throw ConstructionError("flow_mean_band: x, y, lower and upper must have equal length");
  }
  Frame fr{*std::min_element(d.x.begin(), d.x.end()), *std::max_element(d.x.begin(), d.x.end()),
           *std::min_element(d.lower.begin(), d.lower.end()), *std::max_element(d.upper.begin(), d.upper.end())};
  widen(fr.x0, fr.x1);
  widen(fr.y0, fr.y1);
  std::ostringstream svg;
  svg << header(d.title) << axes(fr, false);
  if (n > 1) {
    svg << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < n; ++i) svg << f(fr.px(d.x[i])) << ',' << f(fr.py(d.upper[i])) << ' ';
    for (std::size_t i = n; i-- > 0;) svg << f(fr.px(d.x[i])) << ',' << f(fr.py(d.lower[i])) << (i ? " " : "");
    svg << "\"/>\n";
  }
  svg << polyline(fr, d.x, d.y, "stroke=\"#08519c\" stroke-width=\"1.5\" fill=\"#08519c\"") << "</svg>\n";
  std::ostringstream csv;
  csv << "x,mean,lower,upper\n";
  for (std::size_t i = 0; i < n; ++i) {
    csv << io::format_double(d.x[i]) << ',' << io::format_double(d.y[i]) << ',' << io::format_double(d.lower[i])
        << ',' << io::format_double(d.upper[i]) << '\n';
  }
  return {svg.str(), csv.str()};
}

PlotOutput residual_history(const PlotData& d) {
  const std::size_t n = d.y.size();
  std::vector<double> x = d.x;
  if (x.empty())
    for (std::size_t i = 0; i < n; ++i) x.push_back(static_cast<double>(i + 1));
  if (x.size() != n) throw ConstructionError("residual_history: x and y must have equal length");
  std::vector<double> ly(n);
  for (std::size_t i = 0; i < n; ++i) ly[i] = std::log10(std::max(d.y[i], 1e-300));
  double lo = *std::min_element(ly.begin(), ly.end()), hi = *std::max_element(ly.begin(), ly.end());
  const bool has_ref = std::isfinite(d.reference) && d.reference > 0.0;
  if (has_ref) {
    lo = std::min(lo, std::log10(d.reference));
    hi = std::max(hi, std::log10(d.reference));
  }
  Frame fr{x.front(), x.back(), lo, hi};
  widen(fr.x0, fr.x1);
  widen(fr.y0, fr.y1);
  bool monotone = true;
  for (std::size_t i = 1; i < n; ++i) monotone = monotone && d.y[i] <= d.y[i - 1];
  std::ostringstream svg;
  svg << header(d.title) << axes(fr, true);
  if (has_ref) {
    const double y = fr.py(std::log10(d.reference));
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << f(y) << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << f(y)
        << "\" stroke=\"#cb181d\" stroke-dasharray=\"4 3\"/>\n";
  }
  svg << polyline(fr, x, ly, "stroke=\"#08519c\" stroke-width=\"1.5\" fill=\"#08519c\"");
  for (std::size_t i = 0; i < n && n > 1; ++i) {
    svg << "<circle cx=\"" << f(fr.px(x[i])) << "\" cy=\"" << f(fr.py(ly[i])) << "\" r=\"2.5\" fill=\"#08519c\"/>\n";
  }
  svg << "<text x=\"" << kWidth - kRight << "\" y=\"" << kTop + 12
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
      << (monotone ? "monotone decrease" : "non-monotone") << "</text>\n</svg>\n";
  std::ostringstream csv;
  csv << "iterate,residual,reference\n";
  for (std::size_t i = 0; i < n; ++i) {
    csv << io::format_double(x[i]) << ',' << io::format_double(d.y[i]) << ','
        << (has_ref ? io::format_double(d.reference) : std::string()) << '\n';
  }
  return {svg.str(), csv.str()};
}

PlotOutput heatmap(const PlotData& d) {
  if (d.rows == 0 || d.cols == 0 || d.values.size() != d.rows * d.cols) {
    throw ConstructionError("torus_heatmap: values must hold rows x cols entries");
  }
  const double vmin = *std::min_element(d.values.begin(), d.values.end());
  const double vmax = *std::max_element(d.values.begin(), d.values.end());
  const double span = vmax > vmin ? vmax - vmin : 1.0;
  const double x_ext = d.x.empty() ? static_cast<double>(d.cols) : d.x.front();
  const double y_ext = d.y.empty() ? static_cast<double>(d.rows) : d.y.front();
  Frame fr{0.0, x_ext, 0.0, y_ext};
  std::ostringstream svg;
  svg << header(d.title) << axes(fr, false);
  const double cw = (kWidth - kLeft - kRight) / static_cast<double>(d.cols);
  const double ch = (kHeight - kTop - kBottom) / static_cast<double>(d.rows);
  for (std::size_t r = 0; r < d.rows; ++r) {
    for (std::size_t c = 0; c < d.cols; ++c) {
      const double u = (d.values[r * d.cols + c] - vmin) / span;
      const int red = static_cast<int>(std::lround(255.0 * u));
      const int blue = 255 - red;
      svg << "<rect x=\"" << f(kLeft + cw * static_cast<double>(c)) << "\" y=\""
          << f(kHeight - kBottom - ch * static_cast<double>(r + 1)) << "\" width=\"" << f(cw) << "\" height=\"" << f(ch)
          << "\" fill=\"rgb(" << red << ",64," << blue << ")\"/>\n";
    }
  }
  svg << "<text x=\"" << kWidth - kRight << "\" y=\"" << kTop - 6
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">range " << f(vmin) << " .. " << f(vmax)
      << "</text>\n</svg>\n";
  std::ostringstream csv;
  csv << "row,col,value\n";
  for (std::size_t r = 0; r < d.rows; ++r)
    for (std::size_t c = 0; c < d.cols; ++c) csv << r << ',' << c << ',' << io::format_double(d.values[r * d.cols + c]) << '\n';
  return {svg.str(), csv.str()};
}

}  // namespace

PlotOutput render_plot(const PlotData& data, PlotKind kind) {
  switch (kind) {
    case PlotKind::flow_mean_band:
      if (data.y.empty()) throw ConstructionError("cannot plot an empty series");
      return mean_band(data);
    case PlotKind::residual_history:
      if (data.y.empty()) throw ConstructionError("cannot plot an empty series");
      return residual_history(data);
    case PlotKind::torus_heatmap:
      if (data.values.empty()) throw ConstructionError("cannot plot an empty series");
      return heatmap(data);
  }
  throw ConstructionError("unknown plot kind");
}

}  // namespace mckv
