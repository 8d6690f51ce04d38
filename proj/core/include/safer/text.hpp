#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Small string and file helpers shared across modules.
namespace safer::text {

[[nodiscard]] std::string_view trim(std::string_view s) noexcept;
[[nodiscard]] std::string to_upper(std::string_view s);
[[nodiscard]] std::vector<std::string> split_lines(std::string_view s);
[[nodiscard]] std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Whole-file read; throws Error(IoFailure).
[[nodiscard]] std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames, creating parent dirs.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Lower-case hex SHA-256 of the bytes.
[[nodiscard]] std::string sha256_hex(std::string_view bytes);

/// Today's local date as YYYY-MM-DD.
[[nodiscard]] std::string today_iso();

/// Round half away from zero to two decimals.
[[nodiscard]] double round2(double value) noexcept;

/// Fixed two-decimal rendering ("71.43").
[[nodiscard]] std::string format2(double value);

}  // namespace safer::text
