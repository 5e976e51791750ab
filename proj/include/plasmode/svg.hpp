#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace plasmode {

/// Self-contained SVG plot emission: fixed-size documents with axes, ticks
/// and a legend, no external resources or display dependency. Output is a
/// pure function of the inputs, so emitted files are byte-stable.

/// Overlaid histograms on shared bin edges (counts per series are
/// normalized to proportions so differently sized samples compare).
void svg_histogram_overlay(const std::vector<double>& bin_edges,
                           const std::vector<std::vector<long>>& counts,
                           const std::vector<std::string>& labels, const std::string& title,
                           const std::filesystem::path& path);

/// One box per labeled group: median, quartile box, whiskers at the last
/// point within 1.5 IQR, outliers as dots.
void svg_boxplot(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                 const std::string& title, const std::string& y_label,
                 const std::filesystem::path& path);

/// One polyline per labeled series, x running 1..length.
void svg_line_chart(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                    const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::filesystem::path& path);

}  // namespace plasmode
