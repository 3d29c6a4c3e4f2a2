#pragma once

#include "hamlift/training.hpp"

#include <filesystem>

namespace hamlift::io {

/// Versioned JSON manifest with the architecture and training snapshot; the
/// network parameter block is embedded as a base64 little-endian double array
/// in declared order (encoder, then decoder). Latent dynamics are stored as
/// raw alpha/S/T (or Koopman K) arrays.
void save_bundle(const training::ModelBundle& bundle, const std::filesystem::path& path);
training::ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace hamlift::io
