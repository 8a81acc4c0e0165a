#pragma once

#include <string>

#include "dawn/model.hpp"

namespace dawn {

/// Checkpoint files are a flat archive of named float32 arrays:
///   magic "DAWNCKPT" | u32 version | u32 entry count |
///   per entry: u32 name length | name | u32 ndim | u32 dims[ndim] | f32 data
/// All integers and floats little-endian. Trainable parameters come first in
/// model order, batch-norm running stats after them. Loading verifies every
/// name and shape against the model and fails with a diagnostic naming the
/// first mismatch.
inline constexpr uint32_t kCheckpointVersion = 1;

template <class T>
void save_checkpoint(DawnModel<T>& model, const std::string& path);

template <class T>
void load_checkpoint(DawnModel<T>& model, const std::string& path);

}  // namespace dawn
