#include "disentlab/neural/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace disentlab::neural {

void write_u64_le(std::ostream& out, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

std::uint64_t read_u64_le(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw std::runtime_error("unexpected end of file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

void write_f64_le(std::ostream& out, double v) { write_u64_le(out, std::bit_cast<std::uint64_t>(v)); }

double read_f64_le(std::istream& in) { return std::bit_cast<double>(read_u64_le(in)); }

void write_f32_le(std::ostream& out, float v) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((u >> (8 * i)) & 0xff);
    out.write(bytes, 4);
}

float read_f32_le(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw std::runtime_error("unexpected end of file");
    std::uint32_t u = 0;
    for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return std::bit_cast<float>(u);
}

nlohmann::json spec_to_json(const MlpSpec& spec) {
    nlohmann::json acts = nlohmann::json::array();
    for (auto a : spec.activations) acts.push_back(to_string(a));
    return {{"layer_widths", spec.layer_widths}, {"activations", acts}, {"init_seed", spec.init_seed}};
}

MlpSpec spec_from_json(const nlohmann::json& j) {
    MlpSpec spec;
    spec.layer_widths = j.at("layer_widths").get<std::vector<int>>();
    for (const auto& a : j.at("activations")) spec.activations.push_back(activation_from_string(a.get<std::string>()));
    spec.init_seed = j.at("init_seed").get<std::uint64_t>();
    spec.validate();
    return spec;
}

const NamedBlock& Checkpoint::block(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return b;
    throw std::out_of_range("checkpoint has no block '" + name + "'");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    nlohmann::json header;
    header["version"] = 1;
    header["seed"] = ckpt.seed;
    header["step"] = ckpt.step;
    header["metadata"] = ckpt.metadata;
    header["blocks"] = nlohmann::json::array();
    for (const auto& b : ckpt.blocks)
        header["blocks"].push_back({{"name", b.name}, {"spec", spec_to_json(b.spec)}, {"count", b.params.size()}});
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(kCheckpointMagic, 8);
    write_u64_le(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& b : ckpt.blocks)
        for (Eigen::Index i = 0; i < b.params.size(); ++i) write_f64_le(out, b.params.values()(i));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw std::runtime_error(path.string() + ": not a checkpoint (bad magic)");
    const auto len = read_u64_le(in);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    const auto header = nlohmann::json::parse(text);
    if (header.at("version").get<int>() != 1) throw std::runtime_error("unsupported checkpoint version");

    Checkpoint ckpt;
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.step = header.at("step").get<long>();
    ckpt.metadata = header.value("metadata", nlohmann::json::object());
    for (const auto& jb : header.at("blocks")) {
        NamedBlock b{jb.at("name").get<std::string>(), spec_from_json(jb.at("spec")), {}};
        b.params = ParamBlock(b.spec);
        if (jb.at("count").get<Eigen::Index>() != b.params.size())
            throw std::runtime_error("checkpoint block '" + b.name + "' size does not match its spec");
        for (Eigen::Index i = 0; i < b.params.size(); ++i) b.params.values()(i) = read_f64_le(in);
        ckpt.blocks.push_back(std::move(b));
    }
    return ckpt;
}

}  // namespace disentlab::neural
