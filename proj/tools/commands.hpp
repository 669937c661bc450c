#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace virtview::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kInternal = 3 };

/// Environment variable naming the default dataset root.
inline constexpr const char* kDataRootEnv = "VIRTVIEW_DATA_ROOT";

/// Parses `args` (without the program name) and runs one subcommand.
/// Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace virtview::cli
