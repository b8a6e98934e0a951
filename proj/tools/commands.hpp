#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace jjfab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

/// Entry point behind the jjfab binary. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a, recorded per file in the run manifest.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace jjfab::cli
