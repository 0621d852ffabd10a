#pragma once

#include <filesystem>
#include <string_view>

namespace hnsynth::detail {

// Writes `bytes` to a temporary file next to `path` and renames it into
// place, so readers never observe a partial file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace hnsynth::detail
