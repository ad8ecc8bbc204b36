#include "coboost/model/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace coboost {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'C', 'B', 'C', 'K'};
constexpr uint32_t kVersion = 1;

json spec_to_json(const ModelSpec& s) {
    return json{{"arch", s.arch},
                {"num_classes", s.num_classes},
                {"input_shape", {s.input_shape[0], s.input_shape[1], s.input_shape[2]}}};
}

ModelSpec spec_from_json(const json& j) {
    ModelSpec s;
    s.arch = j.at("arch").get<std::string>();
    s.num_classes = j.at("num_classes").get<int>();
    auto v = j.at("input_shape").get<std::vector<int>>();
    s.input_shape = {v.at(0), v.at(1), v.at(2)};
    return s;
}

struct Header {
    ModelSpec spec;
    uint64_t seed = 0;
    int client_id = -1;
    bool frozen = false;
    std::map<std::string, double> metadata;
    uint64_t num_floats = 0;
};

Header read_header(std::ifstream& in, const std::string& path) {
    char magic[4];
    uint32_t version = 0, header_len = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&header_len), 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version in " + path);
    std::string text(header_len, '\0');
    in.read(text.data(), header_len);
    if (!in) throw std::runtime_error("truncated checkpoint header: " + path);
    json j = json::parse(text);
    Header h;
    h.spec = spec_from_json(j.at("spec"));
    h.seed = j.at("seed").get<uint64_t>();
    h.client_id = j.value("client_id", -1);
    h.frozen = j.value("frozen", false);
    if (j.contains("metadata"))
        h.metadata = j["metadata"].get<std::map<std::string, double>>();
    h.num_floats = j.at("num_floats").get<uint64_t>();
    return h;
}

void restore_state(ClientModel& model, std::ifstream& in, uint64_t num_floats,
                   const std::string& path) {
    uint64_t expect = 0;
    auto params = model.net.params();
    auto buffers = model.net.buffers();
    for (Tensor* t : params) expect += static_cast<uint64_t>(t->numel());
    for (Tensor* t : buffers) expect += static_cast<uint64_t>(t->numel());
    if (expect != num_floats)
        throw std::runtime_error("checkpoint " + path + " holds " + std::to_string(num_floats) +
                                 " floats, model needs " + std::to_string(expect));
    auto read_tensor = [&](Tensor* t) {
        in.read(reinterpret_cast<char*>(t->data.data()),
                static_cast<std::streamsize>(t->data.size() * sizeof(float)));
    };
    for (Tensor* t : params) read_tensor(t);
    for (Tensor* t : buffers) read_tensor(t);
    if (!in) throw std::runtime_error("truncated checkpoint data: " + path);
}

}  // namespace

void save_checkpoint(ClientModel& model, uint64_t build_seed, const std::string& path) {
    auto params = model.net.params();
    auto buffers = model.net.buffers();
    uint64_t num_floats = 0;
    for (Tensor* t : params) num_floats += static_cast<uint64_t>(t->numel());
    for (Tensor* t : buffers) num_floats += static_cast<uint64_t>(t->numel());

    json j;
    j["spec"] = spec_to_json(model.spec);
    j["seed"] = build_seed;
    j["client_id"] = model.client_id;
    j["frozen"] = model.frozen;
    j["metadata"] = model.metadata;
    j["num_floats"] = num_floats;
    const std::string header = j.dump();

    const fs::path final_path(path);
    if (final_path.has_parent_path()) fs::create_directories(final_path.parent_path());
    const fs::path tmp_path = final_path.string() + ".tmp";
    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp_path.string());
        const uint32_t version = kVersion;
        const uint32_t header_len = static_cast<uint32_t>(header.size());
        out.write(kMagic, 4);
        out.write(reinterpret_cast<const char*>(&version), 4);
        out.write(reinterpret_cast<const char*>(&header_len), 4);
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        auto write_tensor = [&](Tensor* t) {
            out.write(reinterpret_cast<const char*>(t->data.data()),
                      static_cast<std::streamsize>(t->data.size() * sizeof(float)));
        };
        for (Tensor* t : params) write_tensor(t);
        for (Tensor* t : buffers) write_tensor(t);
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp_path.string());
    }
    fs::rename(tmp_path, final_path);
}

ClientModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    Header h = read_header(in, path);
    ClientModel model = build_model(h.spec, h.seed);
    model.client_id = h.client_id;
    model.metadata = h.metadata;
    restore_state(model, in, h.num_floats, path);
    model.frozen = h.frozen;
    return model;
}

void restore_checkpoint(ClientModel& model, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    Header h = read_header(in, path);
    if (h.spec.arch != model.spec.arch || h.spec.num_classes != model.spec.num_classes ||
        h.spec.input_shape != model.spec.input_shape)
        throw std::runtime_error("checkpoint " + path + " is for arch '" + h.spec.arch +
                                 "', incompatible with model arch '" + model.spec.arch + "'");
    restore_state(model, in, h.num_floats, path);
    model.client_id = h.client_id;
    model.metadata = h.metadata;
    model.frozen = h.frozen;
}

}  // namespace coboost
