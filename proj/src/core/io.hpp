#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/experiments.hpp"
#include "core/numeric.hpp"

namespace lvggm::io {

// Matrix CSV: header line "rows,cols", then one comma-separated row per
// line, 17 significant digits on write so round trips are bit exact.
Mat read_matrix(const std::string& path);
void write_matrix(const std::string& path, const Mat& M);

// Flat key = value configuration. '#' starts a comment line; blank lines are
// skipped; keys keep file order. Duplicate keys: last one wins on lookup.
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;
ConfigEntries read_config(const std::string& path);
ConfigEntries parse_config(const std::string& text);

// Lookup helpers (throw on missing key / malformed value).
std::string config_get(const ConfigEntries& cfg, const std::string& key);
std::string config_get_or(const ConfigEntries& cfg, const std::string& key,
                          const std::string& fallback);
std::vector<int> parse_int_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

// Study configurations from flat config files. Required keys: p_values and
// ratios (effrank) / p_values, r_fractions, n_grid (scaling); the remaining
// fields fall back to their defaults.
experiments::EffRankStudyConfig read_effrank_config(const std::string& path);
experiments::ErrorScalingConfig read_scaling_config(const std::string& path);

// Whitespace- and comment-insensitive canonical form: "key=value" lines in
// file order. The 64-bit FNV-1a digest of this form identifies a run config.
std::string canonicalize_config(const std::string& text);
std::uint64_t fnv1a64(const std::string& text);
std::uint64_t config_digest(const std::string& raw_text);

// Writes to a temporary sibling and renames, so interrupted runs never leave
// truncated files that parse.
void atomic_write_text(const std::string& path, const std::string& content);

struct SvgResult {
  int points = 0;    // point elements drawn (= rows in the .dat sibling)
  int excluded = 0;  // records dropped by the log-domain or finiteness guard
  double slope = 0.0;
  double intercept = 0.0;
  bool fitted = false;
};

// Standalone SVG scatter of experiment records, points grouped and colored
// by (p, r) series, optional least-squares reference line in log-log space.
// x_field / y_field name record fields: "ratio", "rescaled_n", "metric", or
// "n". Also writes a sibling .dat file ("p r x y" rows) next to the SVG.
SvgResult emit_scatter_svg(const std::vector<experiments::ExperimentRecord>& records,
                           const std::string& x_field, const std::string& y_field,
                           bool log_axes, const std::string& path,
                           bool with_fit = false);

}  // namespace lvggm::io
