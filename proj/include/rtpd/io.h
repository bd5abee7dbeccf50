// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace rtpd {

/// Writes to a sibling temp file and renames it over `path`, creating parent
/// directories as needed. Throws std::runtime_error with the path on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace rtpd
