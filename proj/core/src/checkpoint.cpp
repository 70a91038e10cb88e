#include "tmsc/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace tmsc {

namespace {

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw std::runtime_error("checkpoint: truncated file " + path);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

float get_f32(std::istream& in, const std::string& path) {
    uint32_t bits = get_u32(in, path);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void write_tensor_file(const std::string& path,
                       const std::vector<std::pair<std::string, Tensor>>& entries) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("checkpoint: cannot open " + tmp + " for writing");
        out.write("TMSC", 4);
        put_u32(out, kCheckpointVersion);
        put_u32(out, static_cast<uint32_t>(entries.size()));
        for (const auto& [name, tensor] : entries) {
            put_u32(out, static_cast<uint32_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            const auto& shape = tensor.shape();
            put_u32(out, static_cast<uint32_t>(shape.size()));
            for (int d : shape) put_u32(out, static_cast<uint32_t>(d));
            for (float v : tensor.data()) put_f32(out, v);
        }
        if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::vector<std::pair<std::string, Tensor>> read_tensor_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);

    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "TMSC", 4) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path);
    }
    const uint32_t version = get_u32(in, path);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version) +
                                 " in " + path + ", expected " +
                                 std::to_string(kCheckpointVersion));
    }
    const uint32_t count = get_u32(in, path);

    std::vector<std::pair<std::string, Tensor>> entries;
    entries.reserve(count);
    for (uint32_t t = 0; t < count; ++t) {
        const uint32_t name_len = get_u32(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (in.gcount() != static_cast<std::streamsize>(name_len)) {
            throw std::runtime_error("checkpoint: truncated file " + path);
        }
        const uint32_t rank = get_u32(in, path);
        if (rank > 8) throw std::runtime_error("checkpoint: implausible rank in " + path);
        std::vector<int> shape(rank);
        int64_t numel = 1;
        for (uint32_t i = 0; i < rank; ++i) {
            shape[i] = static_cast<int>(get_u32(in, path));
            numel *= shape[i];
        }
        if (numel <= 0 || numel > (1 << 28)) {
            throw std::runtime_error("checkpoint: implausible tensor size in " + path);
        }
        std::vector<float> data(static_cast<size_t>(numel));
        for (auto& v : data) v = get_f32(in, path);
        entries.emplace_back(std::move(name), Tensor::from_data(shape, std::move(data)));
    }
    return entries;
}

}  // namespace tmsc
