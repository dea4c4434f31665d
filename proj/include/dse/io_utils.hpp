// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace dse {

// Writes via a temp file in the same directory, then renames. An interrupted
// run never leaves a partial file visible at the final path.
void atomic_write_text(const std::filesystem::path& path, std::string_view content);

// Throws SourceUnreachable if the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

}  // namespace dse
