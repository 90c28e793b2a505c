#include "zrudc/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace zrudc {

namespace {

constexpr char kMagic[4] = {'Z', 'R', 'U', 'D'};
constexpr uint32_t kVersion = 1;

void put_u16(std::string& buf, uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

class Reader {
public:
    Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw CheckpointError(CheckpointErrorKind::Io, "cannot open checkpoint: " + path);
    }

    void bytes(void* dst, size_t n, const char* what) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n))
            throw CheckpointError(CheckpointErrorKind::Truncated,
                                  "checkpoint truncated while reading " + std::string(what) + ": " + path_);
    }

    uint16_t u16(const char* what) {
        unsigned char b[2];
        bytes(b, 2, what);
        return static_cast<uint16_t>(b[0] | (b[1] << 8));
    }

    uint32_t u32(const char* what) {
        unsigned char b[4];
        bytes(b, 4, what);
        return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
               (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    }

    uint8_t u8(const char* what) {
        unsigned char b;
        bytes(&b, 1, what);
        return b;
    }

private:
    std::ifstream in_;
    std::string path_;
};

}  // namespace

void save_checkpoint(const GridNetParams& params, const std::string& path) {
    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<uint32_t>(params.tensors.size()));
    for (const auto& nt : params.tensors) {
        put_u16(buf, static_cast<uint16_t>(nt.name.size()));
        buf.append(nt.name);
        buf.push_back(static_cast<char>(nt.tensor.rank()));
        for (int d : nt.tensor.shape) put_u32(buf, static_cast<uint32_t>(d));
        for (float v : nt.tensor.data) put_f32(buf, v);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(CheckpointErrorKind::Io, "cannot write checkpoint: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw CheckpointError(CheckpointErrorKind::Io, "short write: " + path);
}

GridNetParams load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointError(CheckpointErrorKind::BadMagic, "not a checkpoint (bad magic): " + path);
    const uint32_t version = r.u32("version");
    if (version != kVersion)
        throw CheckpointError(CheckpointErrorKind::BadVersion,
                              "unsupported checkpoint version " + std::to_string(version) + ": " + path);
    const uint32_t count = r.u32("tensor count");

    GridNetParams params;
    params.tensors.reserve(count);
    for (uint32_t t = 0; t < count; ++t) {
        const uint16_t namelen = r.u16("name length");
        std::string name(namelen, '\0');
        r.bytes(name.data(), namelen, "name");
        const uint8_t rank = r.u8("rank");
        if (rank < 1)
            throw CheckpointError(CheckpointErrorKind::Malformed, "tensor '" + name + "' has rank 0");
        std::vector<int> shape(rank);
        int64_t numel = 1;
        for (auto& d : shape) {
            const uint32_t v = r.u32("dim");
            if (v < 1 || v > (1u << 30))
                throw CheckpointError(CheckpointErrorKind::Malformed,
                                      "tensor '" + name + "' has invalid dimension " + std::to_string(v));
            d = static_cast<int>(v);
            numel *= d;
        }
        std::vector<float> data(static_cast<size_t>(numel));
        static_assert(sizeof(float) == 4);
        r.bytes(data.data(), static_cast<size_t>(numel) * 4, "payload");
        params.tensors.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
    }

    static const char* kRequired[] = {
        "enc1.conv1.weight", "enc1.conv1.bias", "enc1.conv2.weight", "enc1.conv2.bias",
        "enc2.conv1.weight", "enc2.conv1.bias", "enc2.conv2.weight", "enc2.conv2.bias",
        "enc3.conv1.weight", "enc3.conv1.bias", "enc3.conv2.weight", "enc3.conv2.bias",
        "dec2.conv1.weight", "dec2.conv1.bias", "dec2.conv2.weight", "dec2.conv2.bias",
        "dec1.conv1.weight", "dec1.conv1.bias", "dec1.conv2.weight", "dec1.conv2.bias",
        "head.weight",       "head.bias",       "prelu.slope",
        "decompress.weight", "decompress.bias"};
    for (const char* name : kRequired)
        if (!params.has(name))
            throw CheckpointError(CheckpointErrorKind::Malformed,
                                  "checkpoint is missing tensor '" + std::string(name) + "': " + path);
    return params;
}

}  // namespace zrudc
