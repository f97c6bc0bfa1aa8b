#pragma once

// Minimal deterministic SVG emitters for the report charts: grouped bar
// charts with stddev whiskers and an annotated heat map. Output is plain
// hand-built SVG text -- same inputs, same bytes.

#include <filesystem>
#include <string>
#include <vector>

namespace srl::svg {

struct Bar {
    std::string series;  // legend identity (bars of one series share a color)
    double mean = 0.0;
    double stddev = 0.0;  // whisker half-length; 0 draws no whisker
};

struct BarGroup {
    std::string label;  // x-axis label under the group
    std::vector<Bar> bars;
};

void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::string& y_label, const std::vector<BarGroup>& groups);

// cells[r][c]; NaN cells are drawn as "not measured".
void write_heatmap(const std::filesystem::path& path, const std::string& title,
                   const std::vector<std::string>& row_labels,
                   const std::vector<std::string>& col_labels,
                   const std::vector<std::vector<double>>& cells);

}  // namespace srl::svg
