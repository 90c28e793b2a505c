#pragma once

#include <string>

#include "zrudc/gridnet.hpp"

namespace zrudc {

enum class CheckpointErrorKind {
    Io,
    BadMagic,
    BadVersion,
    Truncated,
    Malformed,  // structurally valid but not a usable parameter set
};

class CheckpointError : public Error {
public:
    CheckpointError(CheckpointErrorKind kind, const std::string& msg) : Error(msg), kind_(kind) {}
    CheckpointErrorKind kind() const { return kind_; }

private:
    CheckpointErrorKind kind_;
};

/// Checkpoint file layout (all integers little-endian):
///   magic "ZRUD" | u32 version = 1 | u32 tensor count |
///   per tensor: u16 name length, UTF-8 name, u8 rank, u32 dims..., payload
///   as little-endian 32-bit floats.
void save_checkpoint(const GridNetParams& params, const std::string& path);

GridNetParams load_checkpoint(const std::string& path);

}  // namespace zrudc
