#pragma once

#include "ssgcn/gcn.hpp"
#include "ssgcn/training.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace ssgcn {

nlohmann::json to_json(const TrainConfig& c);

// meta.json with shapes and config, plus w0.f32, head.f32 and optionally
// head_ss.f32 (little-endian float32, row-major).
void save_checkpoint(const std::filesystem::path& dir, const GcnParams<double>& params, const TrainConfig& cfg);

struct Checkpoint {
  GcnParams<double> params;
  nlohmann::json meta;
};

Checkpoint load_checkpoint(const std::filesystem::path& dir);

// FNV-1a over the float32 image of the parameters, as 16 hex digits.
std::string model_checksum(const GcnParams<double>& params);

}  // namespace ssgcn
