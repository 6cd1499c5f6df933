#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace gswm {

/// Writes to "<path>.tmp-<pid>" and renames over the target, so readers never
/// observe a partial file.
void atomic_write_file(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace gswm
