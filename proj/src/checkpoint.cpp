#include "gazediff/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace gazediff::checkpoint {
namespace {

static_assert(std::endian::native == std::endian::little,
              "blob format is little-endian");

std::string blob_path(const std::string& manifest_path) {
  return manifest_path + ".bin";
}

}  // namespace

void save(const std::string& path, const nn::ParamStore& params,
          const nlohmann::json& meta) {
  nlohmann::json manifest;
  manifest["format"] = "gazediff-checkpoint-v1";
  // filename only: the blob always sits next to the manifest, and absolute
  // paths would make otherwise-identical checkpoints differ
  manifest["blob"] =
      std::filesystem::path(blob_path(path)).filename().string();
  manifest["meta"] = meta;
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& spec : params.tensors) {
    tensors.push_back({{"name", spec.name},
                       {"shape", spec.shape},
                       {"byte_offset", offset * sizeof(float)}});
    offset += spec.size;
  }
  manifest["tensors"] = tensors;

  std::ofstream blob(blob_path(path), std::ios::binary | std::ios::trunc);
  require(blob.good(), "checkpoint save: cannot open blob " + blob_path(path));
  std::vector<float> buf(params.data.size());
  for (std::size_t i = 0; i < params.data.size(); ++i)
    buf[i] = static_cast<float>(params.data[i]);
  blob.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
  require(blob.good(), "checkpoint save: blob write failed");
  blob.close();

  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "checkpoint save: cannot open " + path);
  out << manifest.dump(2) << "\n";
  require(out.good(), "checkpoint save: manifest write failed");
}

nlohmann::json read_meta(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "checkpoint load: cannot open " + path);
  nlohmann::json manifest = nlohmann::json::parse(in);
  require(manifest.value("format", "") == "gazediff-checkpoint-v1",
          "checkpoint load: unknown format in " + path);
  return manifest["meta"];
}

nlohmann::json load(const std::string& path, nn::ParamStore& params) {
  std::ifstream in(path);
  require(in.good(), "checkpoint load: cannot open " + path);
  nlohmann::json manifest = nlohmann::json::parse(in);
  require(manifest.value("format", "") == "gazediff-checkpoint-v1",
          "checkpoint load: unknown format in " + path);

  const auto& tensors = manifest["tensors"];
  require(tensors.size() == params.tensors.size(),
          "checkpoint load: tensor count mismatch");
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    require(tensors[i]["name"] == params.tensors[i].name,
            "checkpoint load: tensor name mismatch at index " +
                std::to_string(i));
    const auto shape = tensors[i]["shape"].get<std::vector<int>>();
    require(shape == params.tensors[i].shape,
            "checkpoint load: shape mismatch for " + params.tensors[i].name);
  }

  std::ifstream blob(blob_path(path), std::ios::binary);
  require(blob.good(), "checkpoint load: cannot open blob " + blob_path(path));
  std::vector<float> buf(params.data.size());
  blob.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  require(blob.gcount() ==
              static_cast<std::streamsize>(buf.size() * sizeof(float)),
          "checkpoint load: blob truncated");
  for (std::size_t i = 0; i < buf.size(); ++i)
    params.data[i] = static_cast<double>(buf[i]);
  return manifest["meta"];
}

}  // namespace gazediff::checkpoint
