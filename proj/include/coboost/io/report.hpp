#pragma once

#include <string>
#include <vector>

namespace coboost {

struct SeriesPoint {
    int epoch = 0;
    double value = 0.0;
};

// One run's worth of reportable results; assembled from RunResult or read
// back from a run directory's metrics file.
struct RunSeries {
    std::string run_id;
    std::string method;
    uint64_t seed = 0;
    double final_server_acc = 0.0;
    double final_ensemble_acc = 0.0;
    std::vector<SeriesPoint> server_curve;
    std::vector<SeriesPoint> ensemble_curve;
};

// Aligned text table, one column per method in the given order, cells are
// "mean±std" over seeds (percent). Methods with no runs get "-" cells.
std::string emit_table(const std::vector<RunSeries>& runs,
                       const std::vector<std::string>& method_order);

// Accuracy-vs-epoch line chart, one polyline per run, colored by method.
std::string emit_curves_svg(const std::vector<RunSeries>& runs, const std::string& title);

// Writes summary.txt and curve SVGs under dir; returns the table text.
std::string write_report(const std::vector<RunSeries>& runs,
                         const std::vector<std::string>& method_order, const std::string& dir);

}  // namespace coboost
