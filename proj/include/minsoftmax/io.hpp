#pragma once

// Text output helpers shared by the library and the CLI.

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

namespace minsoftmax {

/// 12 significant digits, shortest of fixed/scientific ("%.12g").
std::string format_real(double v);

/// Writes through a temporary sibling file and renames it over `path`, so
/// readers never observe a partial file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& body);

}  // namespace minsoftmax
