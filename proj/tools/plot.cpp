#include "plot.hpp"

#include "dynastep/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace dynastep::cli {

const std::vector<double>* CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return nullptr;
  return &columns[static_cast<std::size_t>(it - header.begin())];
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(line);
  while (std::getline(is, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string fmt(const char* pattern, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// Round step for about `n` ticks over [lo, hi].
double tick_step(double lo, double hi, int n) {
  const double raw = (hi - lo) / n;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};
constexpr std::size_t kMaxPoints = 2000;

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw ConfigError("CSV is empty");
  if (line.back() == '\r') line.pop_back();
  t.header = split(line);
  t.columns.assign(t.header.size(), {});
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ConfigError("CSV line " + std::to_string(number) + ": expected " +
                        std::to_string(t.header.size()) + " fields");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (end == cells[c].c_str() || *end != '\0') {
        throw ConfigError("CSV line " + std::to_string(number) + ": '" + cells[c] +
                          "' is not a number");
      }
      t.columns[c].push_back(v);
    }
  }
  return t;
}

std::string render_svg(const CsvTable& table, const std::vector<std::string>& channels,
                       const std::string& title) {
  if (table.rows() == 0) throw ConfigError("CSV has no data rows");
  if (channels.empty()) throw ConfigError("no channels requested");
  std::vector<const std::vector<double>*> series;
  for (const auto& name : channels) {
    const auto* col = table.column(name);
    if (col == nullptr) {
      std::string known;
      for (std::size_t c = 1; c < table.header.size(); ++c) {
        known += (known.empty() ? "" : ", ") + table.header[c];
      }
      throw ConfigError("unknown channel '" + name + "'; available: " + known);
    }
    series.push_back(col);
  }
  const std::vector<double>& t = table.columns.front();

  double y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto* s : series) {
    for (double v : *s) {
      if (std::isfinite(v)) {
        y_lo = std::min(y_lo, v);
        y_hi = std::max(y_hi, v);
      }
    }
  }
  if (!std::isfinite(y_lo)) y_lo = y_hi = 0.0;
  if (y_hi - y_lo < 1e-12 * std::max(1.0, std::abs(y_hi))) {
    y_lo -= 1.0;
    y_hi += 1.0;
  }
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;
  double t_lo = t.front(), t_hi = t.back();
  if (t_hi <= t_lo) t_hi = t_lo + 1.0;

  const double W = 800, H = 480, left = 80, right = 150, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  auto X = [&](double v) { return left + (v - t_lo) / (t_hi - t_lo) * pw; };
  auto Y = [&](double v) { return top + (y_hi - v) / (y_hi - y_lo) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(title) << "</text>\n";
  }
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  const double ty = tick_step(t_lo, t_hi, 8);
  for (double v = std::ceil(t_lo / ty) * ty; v <= t_hi + 1e-9 * ty; v += ty) {
    os << "<line x1=\"" << X(v) << "\" y1=\"" << top + ph << "\" x2=\"" << X(v) << "\" y2=\""
       << top + ph + 5 << "\" stroke=\"black\"/>";
    os << "<text x=\"" << X(v) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
       << fmt("%g", v) << "</text>\n";
  }
  const double vy = tick_step(y_lo, y_hi, 6);
  for (double v = std::ceil(y_lo / vy) * vy; v <= y_hi + 1e-9 * vy; v += vy) {
    const double shown = std::abs(v) < 1e-9 * vy ? 0.0 : v;
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << Y(v) << "\" x2=\"" << left + pw
       << "\" y2=\"" << Y(v) << "\" stroke=\"#ddd\"/>";
    os << "<text x=\"" << left - 8 << "\" y=\"" << Y(v) + 4 << "\" text-anchor=\"end\">"
       << fmt("%g", shown) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15
     << "\" text-anchor=\"middle\">" << escape(table.header.front()) << " [s]</text>\n";
  os << "<text transform=\"translate(18," << top + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">value</text>\n";

  const std::size_t n = t.size();
  const std::size_t stride = std::max<std::size_t>(1, (n + kMaxPoints - 1) / kMaxPoints);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = *series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline data-channel=\"" << escape(channels[k]) << "\" data-last=\""
       << fmt("%.17g", s.back()) << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; i += stride) {
      if (!std::isfinite(s[i])) continue;
      os << fmt("%.2f", X(t[i])) << ',' << fmt("%.2f", Y(s[i])) << ' ';
    }
    if ((n - 1) % stride != 0 && std::isfinite(s.back())) {
      os << fmt("%.2f", X(t.back())) << ',' << fmt("%.2f", Y(s.back()));
    }
    os << "\"/>\n";
    const double ly = top + 10 + 18 * static_cast<double>(k);
    os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
    os << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\">" << escape(channels[k])
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace dynastep::cli
