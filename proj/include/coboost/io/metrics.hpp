#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

namespace coboost {

struct MetricValue {
    bool is_vector = false;
    double scalar = 0.0;
    std::vector<double> vec;

    MetricValue() = default;
    MetricValue(double v) : scalar(v) {}  // NOLINT: implicit by design
    MetricValue(std::vector<double> v) : is_vector(true), vec(std::move(v)) {}

    bool operator==(const MetricValue& o) const {
        return is_vector == o.is_vector && scalar == o.scalar && vec == o.vec;
    }
};

struct MetricRecord {
    std::string run_id;
    int epoch = 0;
    std::string name;
    MetricValue value;
    uint64_t ts = 0;  // logical timestamp: append sequence number within the run

    bool operator==(const MetricRecord& o) const {
        return run_id == o.run_id && epoch == o.epoch && name == o.name && value == o.value &&
               ts == o.ts;
    }
};

// Append-only JSONL sink, one writer per run directory. Every append lands as
// one complete line followed by a flush, so a crash can only lose the line in
// flight, never corrupt earlier ones. (run_id, epoch, name) must be unique.
class MetricsSink {
public:
    MetricsSink(const std::string& path, std::string run_id);

    void append(int epoch, const std::string& name, const MetricValue& value);

    const std::string& run_id() const { return run_id_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::string run_id_;
    std::ofstream out_;
    std::set<std::pair<int, std::string>> seen_;
    uint64_t seq_ = 0;
};

// Reads back a metrics file. A trailing line without a newline (torn write)
// is ignored; any complete line that fails to parse raises.
std::vector<MetricRecord> read_metrics(const std::string& path);

std::string serialize_record(const MetricRecord& r);
MetricRecord parse_record(const std::string& line);

}  // namespace coboost
