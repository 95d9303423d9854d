#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "disentlab/neural/mlp.hpp"

namespace disentlab::neural {

/// Binary layout: 8-byte magic "DLABCKP1", u64 little-endian header length,
/// UTF-8 JSON header, then each block's parameters as little-endian f64 in
/// index-map order.
inline constexpr char kCheckpointMagic[9] = "DLABCKP1";

struct NamedBlock {
    std::string name;
    MlpSpec spec;
    ParamBlock params;
};

struct Checkpoint {
    std::uint64_t seed = 0;
    long step = 0;
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<NamedBlock> blocks;

    const NamedBlock& block(const std::string& name) const;
};

nlohmann::json spec_to_json(const MlpSpec& spec);
MlpSpec spec_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_f64_le(std::ostream& out, double v);
double read_f64_le(std::istream& in);
void write_f32_le(std::ostream& out, float v);
float read_f32_le(std::istream& in);
void write_u64_le(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64_le(std::istream& in);

}  // namespace disentlab::neural
