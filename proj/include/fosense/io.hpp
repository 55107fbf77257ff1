#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fosense/waveform.hpp"

namespace fosense::io {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Parses a full token as a double; throws kIo naming `context` on failure.
double parse_double(std::string_view token, std::string_view context);

/// Splits text into lines, accepting both "\n" and "\r\n" endings.
std::vector<std::string> split_lines(std::string_view text);

std::string read_text(const std::filesystem::path& path);

/// Writes to a sibling temp file then renames over `path`.
void write_text_atomic(const std::filesystem::path& path,
                       std::string_view content);

// Waveform CSV:
//   # sample_rate_hz=<float> t0_s=<float> [lowpass_hz=<float>]
//   <sample>
//   ...
std::string waveform_to_csv(const Waveform& w);
Waveform waveform_from_csv(std::string_view text, std::string_view source);

Waveform read_waveform(const std::filesystem::path& path);
void write_waveform(const std::filesystem::path& path, const Waveform& w);

}  // namespace fosense::io
