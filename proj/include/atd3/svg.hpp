#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace atd3::svg {

struct Series {
    std::string name;
    std::string color;
    std::vector<double> y;
};

// Self-contained line chart, one x unit per sample.
void write_line_chart(const std::filesystem::path& file, const std::string& title,
                      const std::vector<Series>& series, const std::string& x_label = "step",
                      const std::string& y_label = "");

// Grid heatmap (rows x cols in [0, 1]); used for attention weights over time.
void write_heatmap(const std::filesystem::path& file, const std::string& title,
                   const std::vector<std::vector<double>>& rows,
                   const std::string& x_label = "step", const std::string& y_label = "window slot");

}  // namespace atd3::svg
