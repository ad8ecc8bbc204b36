#include "coboost/io/metrics.hpp"

#include <filesystem>

#include "json.hpp"

namespace coboost {

using nlohmann::json;

MetricsSink::MetricsSink(const std::string& path, std::string run_id)
    : path_(path), run_id_(std::move(run_id)) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    out_.open(path, std::ios::trunc);
    if (!out_) throw std::runtime_error("MetricsSink: cannot open " + path);
}

void MetricsSink::append(int epoch, const std::string& name, const MetricValue& value) {
    if (!seen_.insert({epoch, name}).second)
        throw std::logic_error("MetricsSink: duplicate record (" + run_id_ + ", epoch " +
                               std::to_string(epoch) + ", " + name + ")");
    MetricRecord r{run_id_, epoch, name, value, seq_++};
    out_ << serialize_record(r) << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("MetricsSink: write failed for " + path_);
}

std::string serialize_record(const MetricRecord& r) {
    json j;
    j["run_id"] = r.run_id;
    j["epoch"] = r.epoch;
    j["name"] = r.name;
    if (r.value.is_vector)
        j["value"] = r.value.vec;
    else
        j["value"] = r.value.scalar;
    j["ts"] = r.ts;
    return j.dump();
}

MetricRecord parse_record(const std::string& line) {
    json j = json::parse(line);
    MetricRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.epoch = j.at("epoch").get<int>();
    r.name = j.at("name").get<std::string>();
    if (j.at("value").is_array())
        r.value = MetricValue(j["value"].get<std::vector<double>>());
    else
        r.value = MetricValue(j["value"].get<double>());
    r.ts = j.at("ts").get<uint64_t>();
    return r;
}

std::vector<MetricRecord> read_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_metrics: cannot open " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<MetricRecord> out;
    size_t start = 0;
    while (start < content.size()) {
        const size_t nl = content.find('\n', start);
        if (nl == std::string::npos) break;  // torn final line, not yet durable
        const std::string line = content.substr(start, nl - start);
        start = nl + 1;
        if (line.empty()) continue;
        out.push_back(parse_record(line));
    }
    return out;
}

}  // namespace coboost
