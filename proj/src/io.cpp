#include "ganland/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace ganland {

namespace fs = std::filesystem;

namespace {

Json activation_json(const Activation& a) {
  Json j;
  j["name"] = a.name();
  if (a.kind == Activation::Kind::kLeakyRelu) j["slope"] = a.slope;
  return j;
}

Activation activation_from_json(const Json& j) {
  return Activation::parse(j.at("name").get<std::string>(), j.value("slope", 0.2));
}

Json matrix_json(const Tensor& t) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < t.cols(); ++c) row.push_back(t(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Tensor matrix_from_json(const Json& j, std::size_t rows, std::size_t cols, const std::string& what) {
  if (!j.is_array() || j.size() != rows) throw IoError("checkpoint: " + what + " has wrong row count");
  Tensor t(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw IoError("checkpoint: " + what + " has wrong column count");
    for (std::size_t c = 0; c < cols; ++c) t(r, c) = j[r][c].get<double>();
  }
  return t;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

double parse_cell(const std::string& cell, const fs::path& path, std::size_t line) {
  const std::string s = trim(cell);
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Evenly spaced "nice" tick values covering [lo, hi].
std::vector<double> ticks(double lo, double hi, int target = 5) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) out.push_back(t);
  return out;
}

// Piecewise-linear blue -> teal -> yellow ramp, t in [0, 1].
std::string ramp(double t) {
  static constexpr double stops[][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

}  // namespace

Json to_json(const Mlp& net) {
  Json j;
  j["layer_dims"] = net.layer_dims;
  j["activations"] = {{"hidden", activation_json(net.hidden_activation)},
                      {"output", activation_json(net.output_activation)}};
  Json w = Json::array();
  Json b = Json::array();
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    w.push_back(matrix_json(net.weights[l]));
    Json row = Json::array();
    for (double v : net.biases[l].data()) row.push_back(v);
    b.push_back(std::move(row));
  }
  j["weights"] = std::move(w);
  j["biases"] = std::move(b);
  j["seed"] = net.seed;
  j["meta"] = net.meta;
  return j;
}

Mlp mlp_from_json(const Json& j) {
  try {
    Mlp net;
    net.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    if (net.layer_dims.size() < 2) throw IoError("checkpoint: layer_dims needs at least two entries");
    net.hidden_activation = activation_from_json(j.at("activations").at("hidden"));
    net.output_activation = activation_from_json(j.at("activations").at("output"));
    const Json& w = j.at("weights");
    const Json& b = j.at("biases");
    const std::size_t layers = net.layer_dims.size() - 1;
    if (!w.is_array() || !b.is_array() || w.size() != layers || b.size() != layers) {
      throw IoError("checkpoint: weights/biases do not match layer_dims");
    }
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = net.layer_dims[l];
      const std::size_t out = net.layer_dims[l + 1];
      net.weights.push_back(matrix_from_json(w[l], out, in, "weights[" + std::to_string(l) + "]"));
      net.biases.push_back(matrix_from_json(Json::array({b[l]}), 1, out, "biases[" + std::to_string(l) + "]"));
    }
    net.seed = j.at("seed").get<std::uint64_t>();
    net.meta = j.value("meta", std::string());
    net.validate();
    return net;
  } catch (const Json::exception& e) {
    throw IoError(std::string("checkpoint: malformed JSON: ") + e.what());
  } catch (const ContractError& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  } catch (const DimensionError& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const fs::path& path, const Mlp& net) {
  write_file_atomic(path, to_json(net).dump(2) + "\n");
}

Mlp load_checkpoint(const fs::path& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return mlp_from_json(j);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string csv_text(const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw IoError("csv row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  write_file_atomic(path, csv_text(header, rows));
}

CsvTable read_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  for (auto& h : split(trim(line), ',')) t.header.push_back(trim(h));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != t.header.size()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(t.header.size()) + " columns");
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_cell(c, path, lineno));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<std::string> point_header(std::size_t dim) {
  std::vector<std::string> h;
  for (std::size_t i = 0; i < dim; ++i) h.push_back("x" + std::to_string(i));
  return h;
}

void write_points_csv(const fs::path& path, const Tensor& points) {
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < points.rows(); ++r) {
    const auto row = points.row(r);
    rows.emplace_back(row.begin(), row.end());
  }
  write_csv(path, point_header(points.cols()), rows);
}

Tensor read_points_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  std::vector<std::size_t> cols;
  for (std::size_t i = 0;; ++i) {
    const auto it = std::find(t.header.begin(), t.header.end(), "x" + std::to_string(i));
    if (it == t.header.end()) break;
    cols.push_back(static_cast<std::size_t>(it - t.header.begin()));
  }
  if (cols.empty()) throw IoError(path.string() + ": no x0,... columns");
  Tensor out(t.rows.size(), cols.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double v = t.rows[r][cols[c]];
      if (!std::isfinite(v)) throw IoError(path.string() + ": non-finite coordinate");
      out(r, c) = v;
    }
  }
  return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<double>& x,
                          const std::vector<LineSeries>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 60;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  double xlo = HUGE_VAL, xhi = -HUGE_VAL, ylo = HUGE_VAL, yhi = -HUGE_VAL;
  for (double v : x) {
    if (std::isfinite(v)) xlo = std::min(xlo, v), xhi = std::max(xhi, v);
  }
  for (const auto& s : series) {
    for (double v : s.y) {
      if (std::isfinite(v)) ylo = std::min(ylo, v), yhi = std::max(yhi, v);
    }
  }
  if (!(xlo <= xhi)) xlo = 0, xhi = 1;
  if (!(ylo <= yhi)) ylo = 0, yhi = 1;
  if (xhi == xlo) xlo -= 0.5, xhi += 0.5;
  if (yhi == ylo) ylo -= 0.5, yhi += 0.5;
  const double ypad = 0.05 * (yhi - ylo);
  ylo -= ypad;
  yhi += ypad;
  auto sx = [&](double v) { return L + (v - xlo) / (xhi - xlo) * (W - L - R); };
  auto sy = [&](double v) { return H - B - (v - ylo) / (yhi - ylo) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (double t : ticks(xlo, xhi)) {
    o << "<line x1=\"" << px(sx(t)) << "\" y1=\"" << H - B << "\" x2=\"" << px(sx(t)) << "\" y2=\"" << H - B + 5
      << "\" stroke=\"black\"/><text x=\"" << px(sx(t)) << "\" y=\"" << H - B + 18
      << "\" text-anchor=\"middle\">" << num(t) << "</text>\n";
  }
  for (double t : ticks(ylo, yhi)) {
    o << "<line x1=\"" << L - 5 << "\" y1=\"" << px(sy(t)) << "\" x2=\"" << L << "\" y2=\"" << px(sy(t))
      << "\" stroke=\"black\"/><text x=\"" << L - 8 << "\" y=\"" << px(sy(t) + 4)
      << "\" text-anchor=\"end\">" << num(t) << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  o << "<text transform=\"translate(18," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(y_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 6];
    std::string pts;
    for (std::size_t i = 0; i < x.size() && i < series[s].y.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      pts += px(sx(x[i])) + "," + px(sy(series[s].y[i])) + " ";
      o << "<circle cx=\"" << px(sx(x[i])) << "\" cy=\"" << px(sy(series[s].y[i])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts << "\"/>\n";
    const double ly = T + 10 + 18.0 * s;
    o << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << W - R + 36 << "\" y=\"" << ly + 4
      << "\">" << escape(series[s].name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string heatmap_svg(const std::string& title, const std::string& row_label,
                        const std::string& col_label, const std::vector<std::string>& row_names,
                        const std::vector<std::string>& col_names,
                        const std::vector<std::vector<double>>& values) {
  constexpr double cell = 70, L = 90, T = 50;
  const double W = L + cell * col_names.size() + 30;
  const double H = T + cell * row_names.size() + 60;
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (const auto& row : values) {
    for (double v : row) {
      if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
    }
  }
  if (!(lo <= hi)) lo = 0, hi = 1;
  lo = std::min(lo, 0.0);
  hi = std::max(hi, lo + 1e-12);

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
  for (std::size_t r = 0; r < row_names.size(); ++r) {
    const double y = T + cell * r;
    o << "<text x=\"" << L - 8 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">"
      << escape(row_names[r]) << "</text>\n";
    for (std::size_t c = 0; c < col_names.size(); ++c) {
      const double v = r < values.size() && c < values[r].size() ? values[r][c] : std::nan("");
      const double x = L + cell * c;
      const bool ok = std::isfinite(v);
      const double t = ok ? (v - lo) / (hi - lo) : 0.0;
      o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
        << "\" fill=\"" << (ok ? ramp(t) : std::string("#bbbbbb")) << "\" stroke=\"white\"/>\n";
      o << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
        << (ok && t > 0.6 ? "black" : "white") << "\">" << (ok ? num(v) : "nan") << "</text>\n";
    }
  }
  const double by = T + cell * row_names.size();
  for (std::size_t c = 0; c < col_names.size(); ++c) {
    o << "<text x=\"" << L + cell * c + cell / 2 << "\" y=\"" << by + 18 << "\" text-anchor=\"middle\">"
      << escape(col_names[c]) << "</text>\n";
  }
  o << "<text x=\"" << L + cell * col_names.size() / 2 << "\" y=\"" << by + 42
    << "\" text-anchor=\"middle\">" << escape(col_label) << "</text>\n";
  o << "<text transform=\"translate(18," << T + cell * row_names.size() / 2
    << ") rotate(-90)\" text-anchor=\"middle\">" << escape(row_label) << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

void RunManifest::add_artifact(const fs::path& path) {
  artifact_hashes[path.filename().string()] = hex64(fnv1a(read_file(path)));
}

Json RunManifest::to_json() const {
  Json j;
  j["tool_version"] = tool_version;
  j["command"] = command;
  j["config"] = config;
  Json hashes = Json::object();
  for (const auto& [name, h] : artifact_hashes) hashes[name] = h;
  j["artifacts"] = std::move(hashes);
  Json stages = Json::array();
  for (const auto& [name, s] : stage_seconds) stages.push_back({{"stage", name}, {"seconds", s}});
  j["stages"] = std::move(stages);
  return j;
}

void RunManifest::write(const fs::path& path) const { write_file_atomic(path, to_json().dump(2) + "\n"); }

}  // namespace ganland
