#include "psguard/nn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "psguard/error.hpp"

namespace psguard::nn {

namespace {

constexpr std::array<char, 8> kMagic{'P', 'S', 'G', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kMaxString = 1u << 20;

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                                static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw Error("checkpoint: truncated file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const std::uint32_t n = get_u32(in);
    if (n > kMaxString) throw Error("checkpoint: string field too long");
    std::string s(n, '\0');
    if (!in.read(s.data(), n)) throw Error("checkpoint: truncated file");
    return s;
}

nlohmann::ordered_json config_json(const ModelConfig& c) {
    return {{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim},       {"hidden_dim", c.hidden_dim},
            {"dense_dim", c.dense_dim},   {"dropout_rate", c.dropout_rate}, {"bidirectional", c.bidirectional},
            {"max_len", c.max_len}};
}

ModelConfig config_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        ModelConfig c;
        c.vocab_size = j.at("vocab_size").get<std::size_t>();
        c.embed_dim = j.at("embed_dim").get<std::size_t>();
        c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
        c.dense_dim = j.at("dense_dim").get<std::size_t>();
        c.dropout_rate = j.at("dropout_rate").get<double>();
        c.bidirectional = j.at("bidirectional").get<bool>();
        c.max_len = j.at("max_len").get<std::size_t>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("checkpoint: bad config: ") + e.what());
    }
}

}  // namespace

void save_checkpoint(std::ostream& out, const Model& model) {
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, kCheckpointVersion);
    put_string(out, config_json(model.config).dump());
    std::uint32_t count = 0;
    for_each_parameter(model.params, model.config.bidirectional, [&](const std::string&, const Matrix&) { ++count; });
    put_u32(out, count);
    for_each_parameter(model.params, model.config.bidirectional, [&](const std::string& name, const Matrix& m) {
        put_string(out, name);
        put_u32(out, 2);
        put_u32(out, static_cast<std::uint32_t>(m.rows()));
        put_u32(out, static_cast<std::uint32_t>(m.cols()));
        for (const double v : m.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    });
    if (!out) throw Error("checkpoint: write failed");
}

void save_checkpoint(const std::filesystem::path& file, const Model& model) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot write " + file.string());
    save_checkpoint(out, model);
}

Model load_checkpoint(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw Error("checkpoint: bad magic");
    const std::uint32_t version = get_u32(in);
    if (version != kCheckpointVersion) throw Error("checkpoint: unsupported version " + std::to_string(version));
    Model model = zero_model(config_from_json(get_string(in)));

    std::uint32_t expected = 0;
    for_each_parameter(model.params, model.config.bidirectional, [&](const std::string&, const Matrix&) { ++expected; });
    if (get_u32(in) != expected) throw Error("checkpoint: tensor count does not match the config");

    for_each_parameter(model.params, model.config.bidirectional, [&](const std::string& name, Matrix& m) {
        if (get_string(in) != name) throw Error("checkpoint: expected tensor " + name);
        if (get_u32(in) != 2) throw Error("checkpoint: tensor " + name + " has wrong rank");
        const std::uint32_t rows = get_u32(in);
        const std::uint32_t cols = get_u32(in);
        if (rows != m.rows() || cols != m.cols()) throw Error("checkpoint: tensor " + name + " has wrong shape");
        for (double& v : m.values()) v = static_cast<double>(std::bit_cast<float>(get_u32(in)));
    });
    return model;
}

Model load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot read " + file.string());
    return load_checkpoint(in);
}

}  // namespace psguard::nn
