#include "moodyn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "moodyn/config.hpp"

namespace moodyn {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_cell(const std::string& s, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error("line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

std::string xml_escape(const std::string& s) {
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

// Pixel coordinates are for drawing only; three decimals keep the files small.
std::string px(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 3);
  (void)ec;
  std::string s(buf, ptr);
  if (s == "-0.000") s = "0.000";
  return s;
}

struct Scale {
  bool log = false;
  double lo = 0.0, hi = 1.0;  // in transformed units
  double a = 0.0, b = 1.0;    // pixel range

  double tr(double v) const { return log ? std::log10(v) : v; }
  double map(double v) const { return a + (tr(v) - lo) / (hi - lo) * (b - a); }
};

// 1, 2 or 5 times a power of ten, giving at most six intervals
double nice_step(double span) {
  double step = std::pow(10.0, std::floor(std::log10(span / 5.0)));
  for (double f : {1.0, 2.0, 5.0, 10.0})
    if (span / (step * f) <= 6.0) return step * f;
  return step * 10.0;
}

Scale make_scale(bool log, double lo, double hi, double a, double b) {
  Scale s;
  s.log = log;
  s.a = a;
  s.b = b;
  if (log) {
    s.lo = std::floor(std::log10(lo));
    s.hi = std::ceil(std::log10(hi));
    if (s.hi <= s.lo) s.hi = s.lo + 1.0;
  } else {
    if (hi <= lo) {
      double pad = lo == 0.0 ? 1.0 : 0.5 * std::abs(lo);
      lo -= pad;
      hi += pad;
    }
    double span = hi - lo;
    double step = nice_step(span);
    s.lo = std::floor(lo / step) * step;
    s.hi = std::ceil(hi / step) * step;
  }
  return s;
}

std::vector<double> ticks(const Scale& s) {
  std::vector<double> out;
  if (s.log) {
    int first = static_cast<int>(s.lo), last = static_cast<int>(s.hi);
    int stride = std::max(1, (last - first + 7) / 8);
    for (int e = first; e <= last; e += stride) out.push_back(std::pow(10.0, e));
  } else {
    double span = s.hi - s.lo;
    double step = nice_step(span);
    for (int k = 0;; ++k) {
      double v = s.lo + k * step;
      if (v > s.hi + 1e-9 * step) break;
      out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    }
  }
  return out;
}

std::string tick_label(double v, bool log) {
  if (log) {
    return "1e" + std::to_string(static_cast<int>(std::lround(std::log10(v))));
  }
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string table_to_csv(const Table& table) {
  std::string out;
  for (size_t j = 0; j < table.header.size(); ++j) {
    if (j) out += ',';
    out += table.header[j];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw std::invalid_argument("table row width differs from header");
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      if (!std::isnan(row[j])) out += format_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

std::string trajectory_to_csv(const Trajectory& trajectory, int n, int m) {
  std::string out = "t";
  for (int i = 1; i <= n; ++i) out += ",x_" + std::to_string(i);
  for (int i = 1; i <= n; ++i) out += ",v_" + std::to_string(i);
  for (int i = 1; i <= m; ++i) out += ",theta_" + std::to_string(i);
  out += ",flags\n";
  const auto& S = trajectory.states;
  for (size_t k = 0; k < S.size(); ++k) {
    out += format_double(S[k].t);
    for (int i = 0; i < n; ++i) out += ',' + format_double(S[k].x[i]);
    for (int i = 0; i < n; ++i) out += ',' + format_double(S[k].v[i]);
    const bool has_step = k < trajectory.weights.size();
    for (int i = 0; i < m; ++i) {
      out += ',';
      if (has_step) out += format_double(trajectory.weights[k][i]);
    }
    out += ',';
    if (k < trajectory.flags.size()) out += flags_to_string(trajectory.flags[k]);
    out += '\n';
  }
  return out;
}

Trajectory trajectory_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("line 1: empty trajectory file");
  std::vector<std::string> head = split(line, ',');
  int n = 0, m = 0;
  for (const auto& h : head) {
    if (h.rfind("x_", 0) == 0) ++n;
    if (h.rfind("theta_", 0) == 0) ++m;
  }
  const size_t width = static_cast<size_t>(1 + 2 * n + m + 1);
  if (n == 0 || head.size() != width || head.front() != "t" || head.back() != "flags")
    throw std::runtime_error("line 1: expected header t, x_*, v_*, theta_*, flags");

  Trajectory traj;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells = split(line, ',');
    if (cells.size() != width)
      throw std::runtime_error("line " + std::to_string(lineno) + ": expected " + std::to_string(width) + " cells");
    State s;
    s.t = parse_cell(cells[0], lineno);
    s.x.resize(n);
    s.v.resize(n);
    for (int i = 0; i < n; ++i) {
      s.x[i] = parse_cell(cells[static_cast<size_t>(1 + i)], lineno);
      s.v[i] = parse_cell(cells[static_cast<size_t>(1 + n + i)], lineno);
    }
    traj.states.push_back(std::move(s));
    const size_t th = static_cast<size_t>(1 + 2 * n);
    bool empty_theta = std::all_of(cells.begin() + static_cast<long>(th), cells.begin() + static_cast<long>(th + m),
                                   [](const std::string& c) { return c.empty(); });
    if (!empty_theta) {
      Vec w(m);
      for (int i = 0; i < m; ++i) w[i] = parse_cell(cells[th + static_cast<size_t>(i)], lineno);
      traj.weights.push_back(std::move(w));
      try {
        traj.flags.push_back(flags_from_string(cells.back()));
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  if (traj.states.empty()) throw std::runtime_error("trajectory file has no rows");
  for (size_t k = 1; k < traj.states.size(); ++k)
    if (!(traj.states[k].t > traj.states[k - 1].t))
      throw std::runtime_error("trajectory times must increase (row " + std::to_string(k + 1) + ")");
  return traj;
}

void write_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string emit_svg(const std::vector<PlotSeries>& series, const Axes& axes) {
  if (series.empty()) throw std::invalid_argument("emit_svg: no series");
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const PlotSeries& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size())
      throw std::invalid_argument("emit_svg: series '" + s.label + "' is empty or ragged");
    for (size_t k = 0; k < s.x.size(); ++k) {
      const double x = s.x[k], y = s.y[k];
      if (!std::isfinite(x) || !std::isfinite(y))
        throw std::invalid_argument("emit_svg: non-finite value in series '" + s.label + "'");
      if (k && !(x > s.x[k - 1]))
        throw std::invalid_argument("emit_svg: series '" + s.label + "' is not increasing in x");
      if ((axes.log_x && !(x > 0.0)) || (axes.log_y && !(y > 0.0)))
        throw std::invalid_argument("emit_svg: nonpositive value on a log axis in series '" + s.label + "'");
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  }

  const double left = 90, right = 770, top = 50, bottom = 530;
  Scale sx = make_scale(axes.log_x, xlo, xhi, left, right);
  Scale sy = make_scale(axes.log_y, ylo, yhi, bottom, top);

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">\n";
  o += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
  o += "<text x=\"400\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
       xml_escape(axes.title) + "</text>\n";
  o += "<rect x=\"" + px(left) + "\" y=\"" + px(top) + "\" width=\"" + px(right - left) + "\" height=\"" +
       px(bottom - top) + "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double v : ticks(sx)) {
    const std::string p = px(sx.map(v));
    o += "<line x1=\"" + p + "\" y1=\"" + px(bottom) + "\" x2=\"" + p + "\" y2=\"" + px(top) +
         "\" stroke=\"#dddddd\"/>\n";
    o += "<text x=\"" + p + "\" y=\"" + px(bottom + 18) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + tick_label(v, axes.log_x) +
         "</text>\n";
  }
  for (double v : ticks(sy)) {
    const std::string p = px(sy.map(v));
    o += "<line x1=\"" + px(left) + "\" y1=\"" + p + "\" x2=\"" + px(right) + "\" y2=\"" + p +
         "\" stroke=\"#dddddd\"/>\n";
    o += "<text x=\"" + px(left - 6) + "\" y=\"" + px(sy.map(v) + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" + tick_label(v, axes.log_y) +
         "</text>\n";
  }
  o += "<text x=\"400\" y=\"570\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
       xml_escape(axes.x_label) + "</text>\n";
  o += "<text x=\"20\" y=\"290\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
       "transform=\"rotate(-90 20 290)\">" +
       xml_escape(axes.y_label) + "</text>\n";

  for (size_t j = 0; j < series.size(); ++j) {
    const PlotSeries& s = series[j];
    const char* color = kPalette[j % (sizeof kPalette / sizeof kPalette[0])];
    std::string pts, data;
    for (size_t k = 0; k < s.x.size(); ++k) {
      if (k) {
        pts += ' ';
        data += ' ';
      }
      pts += px(sx.map(s.x[k])) + ',' + px(sy.map(s.y[k]));
      data += format_double(s.x[k]) + ',' + format_double(s.y[k]);
    }
    o += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" data-label=\"" +
         xml_escape(s.label) + "\" points=\"" + pts + "\" data-xy=\"" + data + "\"/>\n";
    const double ly = top + 20 + 18 * static_cast<double>(j);
    o += "<line x1=\"" + px(right - 170) + "\" y1=\"" + px(ly) + "\" x2=\"" + px(right - 145) + "\" y2=\"" +
         px(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + px(right - 140) + "\" y=\"" + px(ly + 4) + "\" font-family=\"sans-serif\" font-size=\"12\">" +
         xml_escape(s.label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

std::vector<PlotSeries> parse_svg_data(const std::string& svg) {
  std::vector<PlotSeries> out;
  const std::string label_key = "data-label=\"", data_key = "data-xy=\"";
  size_t pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    size_t end = svg.find("/>", pos);
    if (end == std::string::npos) throw std::runtime_error("unterminated polyline");
    std::string el = svg.substr(pos, end - pos);
    PlotSeries s;
    size_t l = el.find(label_key);
    if (l != std::string::npos) {
      l += label_key.size();
      s.label = el.substr(l, el.find('"', l) - l);
    }
    size_t d = el.find(data_key);
    if (d == std::string::npos) throw std::runtime_error("polyline without data-xy");
    d += data_key.size();
    std::string data = el.substr(d, el.find('"', d) - d);
    for (const std::string& pair : split(data, ' ')) {
      std::vector<std::string> xy = split(pair, ',');
      if (xy.size() != 2) throw std::runtime_error("bad data-xy pair '" + pair + "'");
      s.x.push_back(parse_cell(xy[0], 0));
      s.y.push_back(parse_cell(xy[1], 0));
    }
    out.push_back(std::move(s));
    pos = end;
  }
  return out;
}

}  // namespace moodyn
