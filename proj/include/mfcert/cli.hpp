#pragma once

#include <string>

namespace mfcert::cli {

/// Entry point of the `mfcert` tool. Exit codes: 0 ok, 1 error, 2 gate
/// failure, 3 acceptance failure.
int run(int argc, const char* const* argv);

/// FNV-1a 64-bit hash of a file's bytes as 16 hex digits. Errors: Io.
std::string fnv1a64_file(const std::string& path);

}  // namespace mfcert::cli
