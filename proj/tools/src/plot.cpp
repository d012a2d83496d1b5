#include "mfplan_app/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>

#include "mfplan/io.hpp"

namespace mfp::app {

namespace {

namespace fs = std::filesystem;

constexpr double kW = 640, kH = 420, kL = 60, kR = 20, kT = 40, kB = 50;

// Columns of a numeric CSV with a header line, keyed by header name.
std::map<std::string, std::vector<double>> read_columns(const fs::path& path) {
  std::map<std::string, std::vector<double>> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  if (!std::getline(in, line)) return out;
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string n;
    while (std::getline(ss, n, ',')) names.push_back(n);
  }
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t c = 0; c < names.size() && std::getline(ss, cell, ','); ++c)
      out[names[c]].push_back(std::strtod(cell.c_str(), nullptr));
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); }
  double py(double y) const { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); }
};

std::string header(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
     << "</text>\n";
  return os.str();
}

std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream os;
  os << "<g stroke=\"black\" fill=\"none\"><rect x=\"" << kL << "\" y=\"" << kT << "\" width=\""
     << kW - kL - kR << "\" height=\"" << kH - kT - kB << "\"/></g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    os << "<text x=\"" << f.px(x) << "\" y=\"" << kH - kB + 16 << "\" text-anchor=\"middle\">"
       << std::setprecision(3) << x << "</text>\n";
    os << "<text x=\"" << kL - 6 << "\" y=\"" << f.py(y) + 4 << "\" text-anchor=\"end\">"
       << std::setprecision(3) << y << "</text>\n";
  }
  os << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">"
     << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << (kT + kH - kB) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (kT + kH - kB) / 2 << ")\">" << ylabel << "</text>\n";
  return os.str();
}

// Histogram bars (density scale) plus an optional polyline overlay.
std::string histogram_svg(const std::string& title, const std::string& xlabel,
                          std::vector<double> x, const std::vector<std::pair<double, double>>& overlay) {
  std::sort(x.begin(), x.end());
  const double lo = x[static_cast<std::size_t>(0.001 * static_cast<double>(x.size() - 1))];
  double hi = x[static_cast<std::size_t>(0.999 * static_cast<double>(x.size() - 1))];
  if (!(hi > lo)) hi = lo + 1.0;
  const std::size_t bins = 60;
  const double width = (hi - lo) / bins;
  std::vector<double> count(bins, 0.0);
  for (double v : x) {
    if (v < lo || v > hi) continue;
    count[std::min(bins - 1, static_cast<std::size_t>((v - lo) / width))] += 1.0;
  }
  double top = 0.0;
  for (double& c : count) {
    c /= static_cast<double>(x.size()) * width;
    top = std::max(top, c);
  }
  for (const auto& [ox, oy] : overlay)
    if (ox >= lo && ox <= hi) top = std::max(top, oy);
  const Frame f{lo, hi, 0.0, top * 1.05};
  std::ostringstream os;
  os << header(title) << axes(f, xlabel, "density");
  os << "<g fill=\"#7aa6d6\" stroke=\"none\">\n";
  for (std::size_t b = 0; b < bins; ++b) {
    const double a = lo + b * width;
    os << "<rect x=\"" << f.px(a) << "\" y=\"" << f.py(count[b]) << "\" width=\""
       << f.px(a + width) - f.px(a) << "\" height=\"" << f.py(0) - f.py(count[b]) << "\"/>\n";
  }
  os << "</g>\n";
  if (!overlay.empty()) {
    os << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
    for (const auto& [ox, oy] : overlay)
      if (ox >= lo && ox <= hi) os << f.px(ox) << ',' << f.py(oy) << ' ';
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string color(double v, double scale) {
  const double s = std::clamp(v / scale, -1.0, 1.0);
  const int r = s > 0 ? 255 : static_cast<int>(255 * (1 + s));
  const int b = s < 0 ? 255 : static_cast<int>(255 * (1 - s));
  const int g = static_cast<int>(255 * (1 - std::abs(s)));
  std::ostringstream os;
  os << "rgb(" << r << ',' << g << ',' << b << ')';
  return os.str();
}

}  // namespace

std::vector<fs::path> render_plots(const fs::path& dir, const GridMeasure* mu1) {
  std::vector<fs::path> written;

  if (auto t = read_columns(dir / "terminal.csv"); !t["x"].empty()) {
    std::vector<std::pair<double, double>> overlay;
    if (mu1) {
      const double h = mu1->grid().spacing();
      for (std::size_t i = 0; i < mu1->size(); ++i)
        overlay.emplace_back(mu1->grid().node(i), mu1->weight(i) / h);
    }
    const auto path = dir / "terminal_hist.svg";
    write_atomic(path, histogram_svg("Terminal law vs target", "x", t["x"], overlay));
    written.push_back(path);
  }

  if (auto d = read_columns(dir / "drift.csv"); !d["beta"].empty()) {
    const double x0 = d["x0"].front();
    std::vector<double> ts, xs, bs;
    for (std::size_t r = 0; r < d["beta"].size(); ++r)
      if (d["x0"][r] == x0) {
        ts.push_back(d["t"][r]);
        xs.push_back(d["x"][r]);
        bs.push_back(d["beta"][r]);
      }
    std::vector<double> ut = ts, ux = xs;
    std::sort(ut.begin(), ut.end());
    ut.erase(std::unique(ut.begin(), ut.end()), ut.end());
    std::sort(ux.begin(), ux.end());
    ux.erase(std::unique(ux.begin(), ux.end()), ux.end());
    std::vector<double> mag;
    for (double b : bs) mag.push_back(std::abs(b));
    std::sort(mag.begin(), mag.end());
    const double scale = std::max(1e-12, mag[static_cast<std::size_t>(0.99 * (mag.size() - 1))]);
    const Frame f{ux.front(), ux.back(), 0.0, static_cast<double>(ut.size())};
    std::ostringstream os;
    os << header("Equilibrium drift, rows = time levels") << axes(f, "x", "time level index");
    const double cw = (kW - kL - kR) / static_cast<double>(ux.size());
    const double ch = (kH - kT - kB) / static_cast<double>(ut.size());
    for (std::size_t r = 0; r < bs.size(); ++r) {
      const auto ti = std::lower_bound(ut.begin(), ut.end(), ts[r]) - ut.begin();
      const auto xi = std::lower_bound(ux.begin(), ux.end(), xs[r]) - ux.begin();
      os << "<rect x=\"" << kL + cw * xi << "\" y=\"" << kH - kB - ch * (ti + 1) << "\" width=\""
         << cw + 0.5 << "\" height=\"" << ch + 0.5 << "\" fill=\"" << color(bs[r], scale) << "\"/>\n";
    }
    os << "<text x=\"" << kW - kR << "\" y=\"34\" text-anchor=\"end\">color scale +-" << scale
       << "</text>\n</svg>\n";
    const auto path = dir / "drift_heatmap.svg";
    write_atomic(path, os.str());
    written.push_back(path);
  }

  if (auto x = read_columns(dir / "xi.csv"); !x["xi"].empty()) {
    const auto path = dir / "xi_hist.svg";
    write_atomic(path, histogram_svg("Incentive values per path", "xi", x["xi"], {}));
    written.push_back(path);
  }

  for (const char* name : {"paths", "bass_paths"}) {
    auto p = read_columns(dir / (std::string(name) + ".csv"));
    if (p["x"].empty()) continue;
    const double lo = *std::min_element(p["x"].begin(), p["x"].end());
    const double hi = *std::max_element(p["x"].begin(), p["x"].end());
    const double tmax = *std::max_element(p["t"].begin(), p["t"].end());
    const Frame f{0.0, tmax, lo, hi > lo ? hi : lo + 1.0};
    std::ostringstream os;
    os << header(std::string("Sample paths (") + name + ")") << axes(f, "t", "x");
    double current = -1.0;
    int drawn = 0;
    bool open = false;
    for (std::size_t r = 0; r < p["x"].size(); ++r) {
      if (p["path"][r] != current) {
        if (open) os << "\"/>\n";
        open = false;
        current = p["path"][r];
        if (++drawn > 30) break;
        os << "<polyline fill=\"none\" stroke=\"#2c3e50\" stroke-opacity=\"0.5\" points=\"";
        open = true;
      }
      os << f.px(p["t"][r]) << ',' << f.py(p["x"][r]) << ' ';
    }
    if (open) os << "\"/>\n";
    os << "</svg>\n";
    const auto path = dir / (std::string(name) + ".svg");
    write_atomic(path, os.str());
    written.push_back(path);
  }
  return written;
}

}  // namespace mfp::app
