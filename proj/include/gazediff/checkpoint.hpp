#pragma once

#include <string>

#include <json.hpp>

#include "gazediff/nn.hpp"

namespace gazediff::checkpoint {

// Checkpoint = JSON manifest at `path` (tensor table + embedded configs)
// plus one binary blob of little-endian float32 values at `path` + ".bin".
void save(const std::string& path, const nn::ParamStore& params,
          const nlohmann::json& meta);

// Loads the manifest; fills `params` (already laid out via make_params)
// after verifying the tensor table matches. Returns the embedded meta.
nlohmann::json load(const std::string& path, nn::ParamStore& params);

// Reads just the manifest (to recover configs before building params).
nlohmann::json read_meta(const std::string& path);

}  // namespace gazediff::checkpoint
