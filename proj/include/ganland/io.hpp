#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "ganland/mlp.hpp"

namespace ganland {

/// File could not be read, written or parsed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Json = nlohmann::ordered_json;

/// {layer_dims, activations, weights, biases, seed, meta}; weights are nested
/// row-major arrays. Doubles survive the round trip bit for bit.
Json to_json(const Mlp& net);
Mlp mlp_from_json(const Json& j);

void save_checkpoint(const std::filesystem::path& path, const Mlp& net);
Mlp load_checkpoint(const std::filesystem::path& path);

/// 17 significant digits, "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double v);

/// Writes `contents` to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// Header line plus one comma-separated row per entry.
std::string csv_text(const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

/// Points as `x0,...,x{d-1}`.
void write_points_csv(const std::filesystem::path& path, const Tensor& points);
/// Reads the x* columns of a CSV into an n x d tensor.
Tensor read_points_csv(const std::filesystem::path& path);
std::vector<std::string> point_header(std::size_t dim);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

struct LineSeries {
  std::string name;
  std::vector<double> y;
};

/// Minimal static line plot with axes, ticks and a legend.
std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<double>& x,
                          const std::vector<LineSeries>& series);

/// Grid of colored cells (rows top to bottom) annotated with their values.
/// Non-finite cells are drawn grey.
std::string heatmap_svg(const std::string& title, const std::string& row_label,
                        const std::string& col_label, const std::vector<std::string>& row_names,
                        const std::vector<std::string>& col_names,
                        const std::vector<std::vector<double>>& values);

/// Provenance record of one CLI invocation.
struct RunManifest {
  std::string tool_version;
  std::string command;
  Json config;
  std::map<std::string, std::string> artifact_hashes;  // file name -> fnv1a hex
  std::vector<std::pair<std::string, double>> stage_seconds;

  void add_artifact(const std::filesystem::path& path);
  Json to_json() const;
  void write(const std::filesystem::path& path) const;
};

}  // namespace ganland
