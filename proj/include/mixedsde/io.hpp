#pragma once

// Text artifact emission: CSV, and a static SVG histogram. All numbers use
// the shortest decimal representation that round-trips to the same double,
// so repeated runs with the same inputs produce byte-identical files.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "core.hpp"
#include "kernel.hpp"
#include "pricing.hpp"
#include "viability.hpp"

namespace mixedsde {

inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline std::string format_size(std::size_t x) { return std::to_string(x); }

// Header t,x_1,...,x_d and one row per grid node.
inline std::string path_csv(const SamplePath& path) {
    std::string out = "t";
    for (std::size_t k = 1; k <= path.dim; ++k) {
        out += ",x_";
        out += std::to_string(k);
    }
    out += '\n';
    for (std::size_t i = 0; i <= path.grid.steps; ++i) {
        out += format_double(path.grid.node(i));
        for (std::size_t k = 0; k < path.dim; ++k) {
            out += ',';
            out += format_double(path.value(i, k));
        }
        out += '\n';
    }
    return out;
}

inline std::string price_report_csv(const PriceReport& rep) {
    std::string out = "sigma,K,mc_price,mc_stderr,upper_bound,n_paths,n_steps,seed,H\n";
    for (const PriceCell& c : rep.cells) {
        out += format_double(c.sigma);
        out += ',';
        out += format_double(c.strike);
        out += ',';
        out += format_double(c.mc_price);
        out += ',';
        out += format_double(c.mc_stderr);
        out += ',';
        out += format_double(c.upper_bound);
        out += ',';
        out += format_size(c.n_paths);
        out += ',';
        out += format_size(c.n_steps);
        out += ',';
        out += std::to_string(c.seed);
        out += ',';
        out += format_double(c.hurst);
        out += '\n';
    }
    return out;
}

inline std::string histogram_csv(const HittingStats& st) {
    std::string out = "bin_left,bin_right,count\n";
    const double width = st.horizon / static_cast<double>(st.bins());
    for (std::size_t b = 0; b < st.bins(); ++b) {
        out += format_double(width * static_cast<double>(b));
        out += ',';
        out += format_double(width * static_cast<double>(b + 1));
        out += ',';
        out += format_size(st.histogram[b]);
        out += '\n';
    }
    return out;
}

// Lower-triangle kernel values on the exposed full-grid nodes.
inline std::string kernel_csv(const KernelGrid& kg) {
    std::string out = "t,s,r\n";
    const TimeGrid& grid = kg.grid();
    for (std::size_t i = 1; i <= grid.steps; ++i) {
        for (std::size_t p = 0; p < i; ++p) {
            out += format_double(grid.node(i));
            out += ',';
            out += format_double(kg.col_time(p));
            out += ',';
            out += format_double(kg.value(i, p));
            out += '\n';
        }
    }
    return out;
}

// One summary row; per-path flags stay in memory.
inline std::string violation_csv(const ViolationStats& vs) {
    std::string out =
        "n_paths,n_nodes,violating_nodes,violating_paths,violation_fraction,max_violation,min_"
        "margin\n";
    out += format_size(vs.n_paths);
    out += ',';
    out += format_size(vs.n_nodes);
    out += ',';
    out += format_size(vs.violating_nodes);
    out += ',';
    out += format_size(vs.violating_paths);
    out += ',';
    out += format_double(vs.violation_fraction());
    out += ',';
    out += format_double(vs.max_violation);
    out += ',';
    out += format_double(vs.min_margin);
    out += '\n';
    return out;
}

// Static bar chart of the hit-time histogram. Censored paths are reported in
// the caption, not drawn.
inline std::string histogram_svg(const HittingStats& st, std::size_t width = 640,
                                 std::size_t height = 360) {
    require(width >= 160 && height >= 120, Errc::invalid_argument,
            "svg canvas too small", "width");
    const std::size_t nbins = st.bins();
    std::size_t peak = 1;
    for (std::size_t b = 0; b < nbins; ++b) peak = std::max(peak, st.histogram[b]);
    const double margin_l = 50.0, margin_r = 15.0, margin_t = 30.0, margin_b = 40.0;
    const double plot_w = static_cast<double>(width) - margin_l - margin_r;
    const double plot_h = static_cast<double>(height) - margin_t - margin_b;
    const double bar_w = plot_w / static_cast<double>(nbins);

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_size(width) +
         "\" height=\"" + format_size(height) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + format_double(margin_l) + "\" y=\"20\" font-family=\"sans-serif\" "
         "font-size=\"13\">hit times: " +
         format_size(st.hit_times.size()) + " of " + format_size(st.n_paths) + " paths (" +
         format_size(st.censored) + " censored)</text>\n";
    for (std::size_t b = 0; b < nbins; ++b) {
        const double h = plot_h * static_cast<double>(st.histogram[b]) /
                         static_cast<double>(peak);
        const double x = margin_l + bar_w * static_cast<double>(b);
        const double y = margin_t + plot_h - h;
        s += "<rect x=\"" + format_double(x) + "\" y=\"" + format_double(y) + "\" width=\"" +
             format_double(bar_w * 0.92) + "\" height=\"" + format_double(h) +
             "\" fill=\"#4878a8\"/>\n";
    }
    const double axis_y = margin_t + plot_h;
    s += "<line x1=\"" + format_double(margin_l) + "\" y1=\"" + format_double(axis_y) +
         "\" x2=\"" + format_double(margin_l + plot_w) + "\" y2=\"" + format_double(axis_y) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + format_double(margin_l) + "\" y=\"" + format_double(axis_y + 18.0) +
         "\" font-family=\"sans-serif\" font-size=\"12\">0</text>\n";
    s += "<text x=\"" + format_double(margin_l + plot_w - 30.0) + "\" y=\"" +
         format_double(axis_y + 18.0) + "\" font-family=\"sans-serif\" font-size=\"12\">" +
         format_double(st.horizon) + "</text>\n";
    s += "<text x=\"8\" y=\"" + format_double(margin_t + 12.0) +
         "\" font-family=\"sans-serif\" font-size=\"12\">" + format_size(peak) + "</text>\n";
    s += "</svg>\n";
    return s;
}

inline void write_text_file(const std::string& file, std::string_view content) {
    std::ofstream out(file, std::ios::binary);
    require(out.good(), Errc::io_failure, "cannot open output file", "output");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    require(out.good(), Errc::io_failure, "cannot write output file", "output");
}

inline std::string read_text_file(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    require(in.good(), Errc::io_failure, "cannot open input file", "input");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(!in.bad(), Errc::io_failure, "cannot read input file", "input");
    return content;
}

namespace detail {

inline double parse_csv_double(std::string_view cell) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto res = std::from_chars(first, last, v);
    require(res.ec == std::errc() && res.ptr == last, Errc::io_failure,
            "malformed numeric cell in path csv", "input");
    return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace detail

// Inverse of path_csv: expects the t,x_1,...,x_d header and uniformly spaced
// node times.
inline SamplePath parse_path_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        if (nl > start) lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    require(lines.size() >= 3, Errc::io_failure, "path csv needs a header and at least two rows",
            "input");
    const auto header = detail::split_csv_line(lines[0]);
    require(header.size() >= 2 && header[0] == "t", Errc::io_failure,
            "path csv header must be t,x_1,...", "input");
    const std::size_t dim = header.size() - 1;
    const std::size_t steps = lines.size() - 2;

    std::vector<double> times(steps + 1);
    std::vector<double> values((steps + 1) * dim);
    for (std::size_t i = 0; i <= steps; ++i) {
        const auto cells = detail::split_csv_line(lines[i + 1]);
        require(cells.size() == dim + 1, Errc::io_failure, "path csv row width mismatch",
                "input");
        times[i] = detail::parse_csv_double(cells[0]);
        for (std::size_t k = 0; k < dim; ++k)
            values[i * dim + k] = detail::parse_csv_double(cells[k + 1]);
    }
    require(times.front() == 0.0, Errc::io_failure, "path csv must start at t = 0", "input");
    require(times.back() > 0.0, Errc::io_failure, "path csv horizon must be positive", "input");
    SamplePath path(TimeGrid(times.back(), steps), dim);
    const double slack = 1e-9 * std::max(1.0, times.back());
    for (std::size_t i = 0; i <= steps; ++i)
        require(std::abs(times[i] - path.grid.node(i)) <= slack, Errc::io_failure,
                "path csv node times must be uniformly spaced", "input");
    path.data = std::move(values);
    return path;
}

inline SamplePath read_path_csv(const std::string& file) {
    return parse_path_csv(read_text_file(file));
}

}  // namespace mixedsde
