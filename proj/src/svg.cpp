#include "atd3/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace atd3::svg {

namespace {

constexpr int kW = 900, kH = 420;
constexpr int kPad = 55;

std::ofstream open(const std::filesystem::path& file) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("svg: cannot write " + file.string());
    return os;
}

}  // namespace

void write_line_chart(const std::filesystem::path& file, const std::string& title,
                      const std::vector<Series>& series, const std::string& x_label,
                      const std::string& y_label) {
    std::size_t n = 0;
    double lo = 0.0, hi = 1.0;
    bool first = true;
    for (const Series& s : series) {
        n = std::max(n, s.y.size());
        for (const double v : s.y) {
            if (first) { lo = hi = v; first = false; }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (n < 2) throw std::invalid_argument("svg: need at least two samples");
    if (hi - lo < 1e-12) hi = lo + 1.0;

    auto px = [n](std::size_t i) {
        return kPad + (kW - 2.0 * kPad) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    auto py = [lo, hi](double v) { return kH - kPad - (kH - 2.0 * kPad) * (v - lo) / (hi - lo); };

    auto os = open(file);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='" << kH << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << kW / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title
       << "</text>\n";
    os << "<line x1='" << kPad << "' y1='" << kH - kPad << "' x2='" << kW - kPad << "' y2='"
       << kH - kPad << "' stroke='black'/>\n";
    os << "<line x1='" << kPad << "' y1='" << kPad << "' x2='" << kPad << "' y2='" << kH - kPad
       << "' stroke='black'/>\n";
    os << "<text x='" << kW / 2 << "' y='" << kH - 12 << "' text-anchor='middle' font-size='12'>"
       << x_label << "</text>\n";
    os << "<text x='14' y='" << kH / 2 << "' font-size='12' transform='rotate(-90 14 " << kH / 2
       << ")' text-anchor='middle'>" << y_label << "</text>\n";
    os << "<text x='" << kPad - 6 << "' y='" << py(lo) + 4 << "' text-anchor='end' font-size='10'>"
       << lo << "</text>\n";
    os << "<text x='" << kPad - 6 << "' y='" << py(hi) + 4 << "' text-anchor='end' font-size='10'>"
       << hi << "</text>\n";

    int legend_y = kPad;
    for (const Series& s : series) {
        os << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < s.y.size(); ++i) os << px(i) << ',' << py(s.y[i]) << ' ';
        os << "'/>\n";
        os << "<text x='" << kW - kPad + 4 << "' y='" << legend_y << "' font-size='11' fill='"
           << s.color << "'>" << s.name << "</text>\n";
        legend_y += 15;
    }
    os << "</svg>\n";
}

void write_heatmap(const std::filesystem::path& file, const std::string& title,
                   const std::vector<std::vector<double>>& rows, const std::string& x_label,
                   const std::string& y_label) {
    if (rows.empty() || rows[0].empty()) throw std::invalid_argument("svg: empty heatmap");
    const std::size_t nr = rows.size(), nc = rows[0].size();
    const double cw = (kW - 2.0 * kPad) / static_cast<double>(nc);
    const double ch = (kH - 2.0 * kPad) / static_cast<double>(nr);

    auto os = open(file);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='" << kH << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << kW / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title
       << "</text>\n";
    for (std::size_t i = 0; i < nr; ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            const double v = std::clamp(rows[i][j], 0.0, 1.0);
            const int r = static_cast<int>(255 * v);
            const int b = static_cast<int>(255 * (1.0 - v));
            os << "<rect x='" << kPad + cw * static_cast<double>(j) << "' y='"
               << kPad + ch * static_cast<double>(i) << "' width='" << cw + 0.5 << "' height='"
               << ch + 0.5 << "' fill='rgb(" << r << ",40," << b << ")'/>\n";
        }
    }
    os << "<text x='" << kW / 2 << "' y='" << kH - 12 << "' text-anchor='middle' font-size='12'>"
       << x_label << "</text>\n";
    os << "<text x='14' y='" << kH / 2 << "' font-size='12' transform='rotate(-90 14 " << kH / 2
       << ")' text-anchor='middle'>" << y_label << "</text>\n";
    os << "</svg>\n";
}

}  // namespace atd3::svg
