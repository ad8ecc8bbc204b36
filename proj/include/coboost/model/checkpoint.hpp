#pragma once

#include <string>

#include "coboost/model/zoo.hpp"

namespace coboost {

// One archive per model: {spec, seed, parameter blob, training metadata}.
// Writes are atomic (temp file + rename).
void save_checkpoint(ClientModel& model, uint64_t build_seed, const std::string& path);

// Rebuilds the model from the stored spec and restores its state.
ClientModel load_checkpoint(const std::string& path);

// Restores into an existing model after verifying spec compatibility.
void restore_checkpoint(ClientModel& model, const std::string& path);

}  // namespace coboost
