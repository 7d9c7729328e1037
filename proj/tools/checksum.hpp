#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace heatcast::cli {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temporary file and renames it into place.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace heatcast::cli
