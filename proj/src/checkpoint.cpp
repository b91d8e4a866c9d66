// SPDX-License-Identifier: Apache-2.0

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "mcan/config_json.hpp"
#include "mcan/errors.hpp"
#include "mcan/trainer.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace mcan {

namespace {

constexpr char kMagic[4] = {'M', 'C', 'A', 'N'};
constexpr uint32_t kVersion = 1;

uint32_t crc_of(const std::string& bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    size_t off = 0;
    while (off < bytes.size()) {
        const size_t chunk = std::min<size_t>(bytes.size() - off, 1u << 30);
        crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), (uInt)chunk);
        off += chunk;
    }
    return (uint32_t)crc;
}

void append_u32(std::string& out, uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

}  // namespace

void save_checkpoint(const MultiAttrNet& net, const TrainConfig& config,
                     const std::filesystem::path& path) {
    nlohmann::json header;
    header["net_config"] = net.config();
    header["train_config"] = config;

    nlohmann::json manifest = nlohmann::json::array();
    std::string payload;
    uint64_t offset = 0;
    const auto params = net.named_parameters();
    for (const auto& [name, p] : params) {
        nlohmann::json entry;
        entry["name"] = name;
        entry["shape"] = p.shape();
        entry["offset"] = offset;
        manifest.push_back(std::move(entry));
        const auto values = p.values();
        const size_t bytes = values.size() * sizeof(double);
        payload.append(reinterpret_cast<const char*>(values.data()), bytes);
        offset += bytes;
    }
    header["params"] = std::move(manifest);

    std::string blob;
    blob.append(kMagic, 4);
    append_u32(blob, kVersion);
    const std::string header_bytes = header.dump();
    append_u32(blob, (uint32_t)header_bytes.size());
    blob += header_bytes;
    blob += payload;
    append_u32(blob, crc_of(blob));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(blob.data(), (std::streamsize)blob.size());
    if (!out) throw IoError("short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    const std::string blob((std::istreambuf_iterator<char>(in)), {});

    if (blob.size() < 16) throw CheckpointTruncatedError(path.string() + " is too short");
    if (std::memcmp(blob.data(), kMagic, 4) != 0) {
        throw CheckpointVersionError(path.string() + " lacks the MCAN magic");
    }
    uint32_t version = 0, header_len = 0;
    std::memcpy(&version, blob.data() + 4, 4);
    std::memcpy(&header_len, blob.data() + 8, 4);
    if (version != kVersion) {
        throw CheckpointVersionError("unsupported checkpoint version " +
                                     std::to_string(version));
    }
    if (blob.size() < 12ull + header_len + 4) {
        throw CheckpointTruncatedError(path.string() + " ends inside the header");
    }

    uint32_t stored_crc = 0;
    std::memcpy(&stored_crc, blob.data() + blob.size() - 4, 4);
    const std::string body = blob.substr(0, blob.size() - 4);
    if (crc_of(body) != stored_crc) {
        throw CheckpointChecksumError(path.string() + " failed its CRC32 check");
    }

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(blob.substr(12, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointVersionError("unreadable checkpoint header: " + std::string(e.what()));
    }

    Checkpoint ckpt{MultiAttrNet::init(header.at("net_config").get<NetConfig>()),
                    header.at("train_config").get<TrainConfig>()};

    const size_t payload_start = 12 + header_len;
    const size_t payload_size = blob.size() - payload_start - 4;
    auto params = ckpt.net.named_parameters();
    const auto& manifest = header.at("params");
    if (manifest.size() != params.size()) {
        throw CheckpointVersionError("parameter manifest does not match the architecture");
    }
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& entry = manifest[i];
        if (entry.at("name").get<std::string>() != params[i].first ||
            entry.at("shape").get<Shape>() != params[i].second.shape()) {
            throw CheckpointVersionError("manifest entry " + std::to_string(i) +
                                         " does not match parameter " + params[i].first);
        }
        auto& values = params[i].second.raw_values();
        const uint64_t offset = entry.at("offset").get<uint64_t>();
        const size_t bytes = values.size() * sizeof(double);
        if (offset + bytes > payload_size) {
            throw CheckpointTruncatedError("payload ends inside parameter " + params[i].first);
        }
        std::memcpy(values.data(), blob.data() + payload_start + offset, bytes);
    }
    return ckpt;
}

}  // namespace mcan
