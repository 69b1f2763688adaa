#include "core/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace lvggm::io {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double_token(const std::string& token, const std::string& path,
                          int line_no) {
  const std::string t = trim(token);
  if (t.empty()) {
    throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                             ": empty numeric token");
  }
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) {
    throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                             ": non-numeric token '" + t + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

}  // namespace

Mat read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("read_matrix: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": line 1: missing header");
  }
  const auto header = split(trim(line), ',');
  if (header.size() != 2) {
    throw std::runtime_error(path + ": line 1: header must be 'rows,cols'");
  }
  long rows = 0, cols = 0;
  try {
    rows = std::stol(trim(header[0]));
    cols = std::stol(trim(header[1]));
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": line 1: non-numeric header");
  }
  if (rows < 0 || cols < 0) {
    throw std::runtime_error(path + ": line 1: negative dimensions");
  }

  Mat M(rows, cols);
  for (long i = 0; i < rows; ++i) {
    const int line_no = static_cast<int>(i) + 2;
    if (!std::getline(in, line)) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": unexpected end of file (expected " +
                               std::to_string(rows) + " rows)");
    }
    const auto tokens = split(trim(line), ',');
    if (static_cast<long>(tokens.size()) != cols) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": expected " + std::to_string(cols) +
                               " values, got " + std::to_string(tokens.size()));
    }
    for (long j = 0; j < cols; ++j) {
      M(i, j) = parse_double_token(tokens[j], path, line_no);
    }
  }
  return M;
}

void write_matrix(const std::string& path, const Mat& M) {
  std::ostringstream out;
  out << M.rows() << ',' << M.cols() << '\n';
  for (long i = 0; i < M.rows(); ++i) {
    for (long j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
  atomic_write_text(path, out.str());
}

ConfigEntries parse_config(const std::string& text) {
  ConfigEntries entries;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": empty key");
    }
    entries.emplace_back(key, value);
  }
  return entries;
}

ConfigEntries read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("read_config: cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_get(const ConfigEntries& cfg, const std::string& key) {
  for (auto it = cfg.rbegin(); it != cfg.rend(); ++it) {
    if (it->first == key) return it->second;
  }
  throw std::runtime_error("config: missing required key '" + key + "'");
}

std::string config_get_or(const ConfigEntries& cfg, const std::string& key,
                          const std::string& fallback) {
  for (auto it = cfg.rbegin(); it != cfg.rend(); ++it) {
    if (it->first == key) return it->second;
  }
  return fallback;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& token : split(text, ',')) {
    const std::string t = trim(token);
    if (t.empty()) continue;
    size_t pos = 0;
    const int v = std::stoi(t, &pos);
    if (pos != t.size()) {
      throw std::runtime_error("expected integer, got '" + t + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& token : split(text, ',')) {
    const std::string t = trim(token);
    if (t.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) {
      throw std::runtime_error("expected number, got '" + t + "'");
    }
    out.push_back(v);
  }
  return out;
}

experiments::EffRankStudyConfig read_effrank_config(const std::string& path) {
  const ConfigEntries cfg = read_config(path);
  experiments::EffRankStudyConfig out;
  out.p_values = parse_int_list(config_get(cfg, "p_values"));
  out.ratios = parse_double_list(config_get(cfg, "ratios"));
  out.r_latent = std::stoi(config_get_or(cfg, "r_latent", "10"));
  out.reps_per_cell = std::stoi(config_get_or(cfg, "reps_per_cell", "10"));
  out.base_seed = std::stoull(config_get_or(cfg, "base_seed", "1"));
  out.conditional_density =
      std::stod(config_get_or(cfg, "conditional_density", "0.05"));
  out.validate();
  return out;
}

experiments::ErrorScalingConfig read_scaling_config(const std::string& path) {
  const ConfigEntries cfg = read_config(path);
  experiments::ErrorScalingConfig out;
  out.p_values = parse_int_list(config_get(cfg, "p_values"));
  out.r_fractions = parse_double_list(config_get(cfg, "r_fractions"));
  out.n_grid = parse_int_list(config_get(cfg, "n_grid"));
  out.reps = std::stoi(config_get_or(cfg, "reps", "10"));
  out.base_seed = std::stoull(config_get_or(cfg, "base_seed", "1"));
  out.Ca = std::stod(config_get_or(cfg, "Ca", "0.5"));
  out.Cb = std::stod(config_get_or(cfg, "Cb", "1.0"));
  out.chain_diag = std::stod(config_get_or(cfg, "chain_diag", "1.0"));
  out.validate();
  return out;
}

std::string canonicalize_config(const std::string& text) {
  std::ostringstream out;
  for (const auto& raw : split(text, '\n')) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      out << line << '\n';
      continue;
    }
    out << trim(line.substr(0, eq)) << '=' << trim(line.substr(eq + 1)) << '\n';
  }
  return out.str();
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::uint64_t config_digest(const std::string& raw_text) {
  return fnv1a64(canonicalize_config(raw_text));
}

void atomic_write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path() && !target.parent_path().empty()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  static std::atomic<unsigned> counter{0};
  const fs::path tmp = target.string() + ".tmp" +
                       std::to_string(counter.fetch_add(1)) + "-" +
                       std::to_string(static_cast<unsigned>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("atomic_write_text: cannot open " + tmp.string());
    }
    out << content;
    out.flush();
    if (!out) {
      throw std::runtime_error("atomic_write_text: write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("atomic_write_text: rename to " + path +
                             " failed: " + ec.message());
  }
}

namespace {

double record_field(const experiments::ExperimentRecord& rec,
                    const std::string& field) {
  if (field == "ratio") return rec.ratio;
  if (field == "rescaled_n") return rec.rescaled_n;
  if (field == "metric") return rec.metric;
  if (field == "n") return static_cast<double>(rec.n);
  throw std::invalid_argument("emit_scatter_svg: unknown field '" + field +
                              "' (expected ratio, rescaled_n, metric, or n)");
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

SvgResult emit_scatter_svg(
    const std::vector<experiments::ExperimentRecord>& records,
    const std::string& x_field, const std::string& y_field, bool log_axes,
    const std::string& path, bool with_fit) {
  if (records.empty()) {
    throw std::invalid_argument("emit_scatter_svg: empty record set");
  }

  struct Point {
    int p, r;
    double x, y;      // raw values
    double tx, ty;    // plotting coordinates (log10 if log_axes)
  };
  std::vector<Point> pts;
  int excluded = 0;
  for (const auto& rec : records) {
    const double x = record_field(rec, x_field);
    const double y = record_field(rec, y_field);
    if (!std::isfinite(x) || !std::isfinite(y) ||
        (log_axes && (x <= 0.0 || y <= 0.0))) {
      ++excluded;
      continue;
    }
    Point pt{rec.p, rec.r, x, y, x, y};
    if (log_axes) {
      pt.tx = std::log10(x);
      pt.ty = std::log10(y);
    }
    pts.push_back(pt);
  }
  if (pts.empty()) {
    throw std::runtime_error("emit_scatter_svg: no plottable records after guards");
  }

  double xmin = pts[0].tx, xmax = pts[0].tx, ymin = pts[0].ty, ymax = pts[0].ty;
  for (const auto& pt : pts) {
    xmin = std::min(xmin, pt.tx);
    xmax = std::max(xmax, pt.tx);
    ymin = std::min(ymin, pt.ty);
    ymax = std::max(ymax, pt.ty);
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pad_x = 0.04 * (xmax - xmin);
  const double pad_y = 0.06 * (ymax - ymin);
  xmin -= pad_x;
  xmax += pad_x;
  ymin -= pad_y;
  ymax += pad_y;

  const double width = 640, height = 480;
  const double ml = 70, mr = 24, mt = 24, mb = 52;
  const auto sx = [&](double t) {
    return ml + (t - xmin) / (xmax - xmin) * (width - ml - mr);
  };
  const auto sy = [&](double t) {
    return height - mb - (t - ymin) / (ymax - ymin) * (height - mt - mb);
  };

  // Series index by (p, r), in order of first appearance.
  std::map<std::pair<int, int>, int> series;
  for (const auto& pt : pts) {
    series.emplace(std::make_pair(pt.p, pt.r), static_cast<int>(series.size()));
  }

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes and ticks.
  svg << "<g stroke=\"#333\" stroke-width=\"1\">\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
      << width - mr << "\" y2=\"" << height - mb << "\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << height - mb << "\"/>\n";
  svg << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = xmin + (xmax - xmin) * t / 4.0;
    const double fy = ymin + (ymax - ymin) * t / 4.0;
    const double vx = log_axes ? std::pow(10.0, fx) : fx;
    const double vy = log_axes ? std::pow(10.0, fy) : fy;
    char labx[32], laby[32];
    std::snprintf(labx, sizeof(labx), "%.3g", vx);
    std::snprintf(laby, sizeof(laby), "%.3g", vy);
    svg << "<line x1=\"" << sx(fx) << "\" y1=\"" << height - mb << "\" x2=\""
        << sx(fx) << "\" y2=\"" << height - mb + 5
        << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << sx(fx) << "\" y=\"" << height - mb + 18
        << "\" text-anchor=\"middle\">" << labx << "</text>\n";
    svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << sy(fy) << "\" x2=\"" << ml
        << "\" y2=\"" << sy(fy) << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << sy(fy) + 4
        << "\" text-anchor=\"end\">" << laby << "</text>\n";
  }
  svg << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\">" << x_field
      << (log_axes ? " (log)" : "") << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (mt + height - mb) / 2 << ")\">" << y_field
      << (log_axes ? " (log)" : "") << "</text>\n";
  svg << "</g>\n";

  SvgResult result;
  result.excluded = excluded;

  // Optional least-squares reference line in plotting coordinates.
  if (with_fit && pts.size() >= 2) {
    double sxs = 0, sys = 0, sxx = 0, sxy = 0;
    for (const auto& pt : pts) {
      sxs += pt.tx;
      sys += pt.ty;
      sxx += pt.tx * pt.tx;
      sxy += pt.tx * pt.ty;
    }
    const double m = static_cast<double>(pts.size());
    const double denom = m * sxx - sxs * sxs;
    if (std::abs(denom) > 1e-12) {
      result.slope = (m * sxy - sxs * sys) / denom;
      result.intercept = (sys - result.slope * sxs) / m;
      result.fitted = true;
      const double y1 = result.slope * xmin + result.intercept;
      const double y2 = result.slope * xmax + result.intercept;
      svg << "<line class=\"fit\" x1=\"" << sx(xmin) << "\" y1=\"" << sy(y1)
          << "\" x2=\"" << sx(xmax) << "\" y2=\"" << sy(y2)
          << "\" stroke=\"#555\" stroke-dasharray=\"6 4\" stroke-width=\"1.5\"/>\n";
      char lab[64];
      std::snprintf(lab, sizeof(lab), "slope %.3f", result.slope);
      svg << "<text x=\"" << width - mr - 6 << "\" y=\"" << mt + 14
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
             "font-size=\"11\" fill=\"#555\">"
          << lab << "</text>\n";
    }
  }

  // Points, one <circle class="pt"> per included record.
  for (const auto& pt : pts) {
    const int s = series[{pt.p, pt.r}];
    svg << "<circle class=\"pt\" cx=\"" << sx(pt.tx) << "\" cy=\""
        << sy(pt.ty) << "\" r=\"3\" fill=\""
        << kPalette[s % 8] << "\" fill-opacity=\"0.75\"/>\n";
  }

  // Legend.
  int row = 0;
  svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (const auto& [key, idx] : series) {
    const double lx = width - mr - 110;
    const double ly = mt + 30 + 16 * row++;
    svg << "<circle cx=\"" << lx << "\" cy=\"" << ly - 4 << "\" r=\"4\" fill=\""
        << kPalette[idx % 8] << "\"/>\n";
    svg << "<text x=\"" << lx + 10 << "\" y=\"" << ly << "\">p=" << key.first
        << ", r=" << key.second << "</text>\n";
  }
  svg << "</g>\n</svg>\n";

  atomic_write_text(path, svg.str());

  // Sibling data file with the plotted tuples.
  std::string dat_path = path;
  const auto dot = dat_path.rfind(".svg");
  if (dot != std::string::npos && dot == dat_path.size() - 4) {
    dat_path = dat_path.substr(0, dot) + ".dat";
  } else {
    dat_path += ".dat";
  }
  std::ostringstream dat;
  dat << "# p r " << x_field << ' ' << y_field << '\n';
  for (const auto& pt : pts) {
    dat << pt.p << ' ' << pt.r << ' ' << format_double(pt.x) << ' '
        << format_double(pt.y) << '\n';
  }
  atomic_write_text(dat_path, dat.str());

  result.points = static_cast<int>(pts.size());
  return result;
}

}  // namespace lvggm::io
