#include "coboost/io/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace coboost {

namespace {

struct Cell {
    bool present = false;
    double mean = 0.0;
    double stdev = 0.0;
    int count = 0;
};

Cell aggregate(const std::vector<double>& xs) {
    Cell c;
    if (xs.empty()) return c;
    c.present = true;
    c.count = static_cast<int>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    c.mean = sum / xs.size();
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - c.mean) * (x - c.mean);
        c.stdev = std::sqrt(ss / (xs.size() - 1));  // sample std over seeds
    }
    return c;
}

std::string format_cell(const Cell& c) {
    if (!c.present) return "-";
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << 100.0 * c.mean << "±" << 100.0 * c.stdev;
    return os.str();
}

const char* method_color(const std::string& m) {
    if (m == "co_boosting") return "#c0392b";
    if (m == "plain_distill") return "#2980b9";
    if (m == "fedens") return "#27ae60";
    if (m == "fedavg") return "#8e44ad";
    return "#7f8c8d";
}

}  // namespace

std::string emit_table(const std::vector<RunSeries>& runs,
                       const std::vector<std::string>& method_order) {
    std::map<std::string, std::vector<double>> server_by_method, ens_by_method;
    for (const auto& r : runs) {
        server_by_method[r.method].push_back(r.final_server_acc);
        if (r.final_ensemble_acc > 0.0) ens_by_method[r.method].push_back(r.final_ensemble_acc);
    }

    std::vector<std::string> headers{"metric"};
    std::vector<std::string> server_row{"server_acc"}, ens_row{"ensemble_acc"}, seeds_row{"seeds"};
    for (const auto& m : method_order) {
        headers.push_back(m);
        const Cell sc = aggregate(server_by_method[m]);
        const Cell ec = aggregate(ens_by_method[m]);
        server_row.push_back(format_cell(sc));
        ens_row.push_back(format_cell(ec));
        seeds_row.push_back(sc.present ? std::to_string(sc.count) : "-");
    }

    std::vector<size_t> widths(headers.size());
    auto widen = [&](const std::vector<std::string>& row) {
        for (size_t i = 0; i < row.size(); ++i) {
            size_t len = row[i].size();
            // the ± sign is 2 bytes of UTF-8 but one display column
            size_t adj = std::count(row[i].begin(), row[i].end(), '\xc2');
            widths[i] = std::max(widths[i], len - adj);
        }
    };
    widen(headers);
    widen(server_row);
    widen(ens_row);
    widen(seeds_row);

    std::ostringstream os;
    auto emit_row = [&](const std::vector<std::string>& row) {
        for (size_t i = 0; i < row.size(); ++i) {
            size_t adj = std::count(row[i].begin(), row[i].end(), '\xc2');
            os << row[i] << std::string(widths[i] + 2 - (row[i].size() - adj), ' ');
        }
        os << '\n';
    };
    emit_row(headers);
    os << std::string(std::accumulate(widths.begin(), widths.end(), widths.size() * 2), '-') << '\n';
    emit_row(server_row);
    emit_row(ens_row);
    emit_row(seeds_row);
    return os.str();
}

std::string emit_curves_svg(const std::vector<RunSeries>& runs, const std::string& title) {
    const int width = 720, height = 440, margin = 50;
    int max_epoch = 1;
    for (const auto& r : runs)
        for (const auto& p : r.server_curve) max_epoch = std::max(max_epoch, p.epoch);

    auto sx = [&](double e) { return margin + e / max_epoch * (width - 2 * margin); };
    auto sy = [&](double v) { return height - margin - v * (height - 2 * margin); };

    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(1);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
       << "</text>\n";
    // axes and gridlines at 0, 0.25, .., 1.0
    for (int i = 0; i <= 4; ++i) {
        const double v = i / 4.0;
        os << "<line x1=\"" << margin << "\" y1=\"" << sy(v) << "\" x2=\"" << width - margin
           << "\" y2=\"" << sy(v) << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << margin - 8 << "\" y=\"" << sy(v) + 4
           << "\" text-anchor=\"end\" font-size=\"10\">" << v << "</text>\n";
    }
    os << "<line x1=\"" << margin << "\" y1=\"" << sy(0) << "\" x2=\"" << width - margin << "\" y2=\""
       << sy(0) << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << sy(0) << "\" x2=\"" << margin << "\" y2=\""
       << sy(1) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\" font-size=\"11\">epoch (max " << max_epoch << ")</text>\n";

    for (const auto& r : runs) {
        if (r.server_curve.empty()) continue;
        os << "<polyline fill=\"none\" stroke=\"" << method_color(r.method)
           << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& p : r.server_curve) os << sx(p.epoch) << "," << sy(p.value) << " ";
        os << "\"/>\n";
    }
    // legend: unique methods in first-seen order
    std::vector<std::string> seen;
    int ly = 30;
    for (const auto& r : runs) {
        if (std::find(seen.begin(), seen.end(), r.method) != seen.end()) continue;
        seen.push_back(r.method);
        os << "<rect x=\"" << width - margin - 130 << "\" y=\"" << ly - 8
           << "\" width=\"10\" height=\"10\" fill=\"" << method_color(r.method) << "\"/>\n";
        os << "<text x=\"" << width - margin - 115 << "\" y=\"" << ly << "\" font-size=\"11\">"
           << r.method << "</text>\n";
        ly += 16;
    }
    os << "</svg>\n";
    return os.str();
}

std::string write_report(const std::vector<RunSeries>& runs,
                         const std::vector<std::string>& method_order, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::string table = emit_table(runs, method_order);
    {
        std::ofstream out(dir + "/summary.txt", std::ios::trunc);
        out << table;
    }
    {
        std::ofstream out(dir + "/server_accuracy.svg", std::ios::trunc);
        out << emit_curves_svg(runs, "server test accuracy vs epoch");
    }
    return table;
}

}  // namespace coboost
