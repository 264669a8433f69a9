#pragma once

#include "anisostokes/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace anisostokes {

inline const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names{"mesh",         "solve-stokes", "potential", "transmit",
                                                "navier-stokes", "infsup",      "verify"};
    return names;
}

/// Config file first, then `key=value` overrides in order. The thread count falls back to
/// ANISOSTOKES_THREADS when neither the file nor an override sets it.
[[nodiscard]] RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                                       const std::vector<std::pair<std::string, std::string>>& overrides,
                                       const char* env_threads);

struct CommandResult {
    int exit_code = 0;
    std::vector<std::filesystem::path> artifacts;
};

/// Runs one subcommand and writes its artifacts below cfg.out_dir. Library errors propagate.
[[nodiscard]] CommandResult dispatch(const std::string& command, const RunConfig& cfg, std::ostream& log);

/// Exit code used for an error category.
[[nodiscard]] int exit_code(ErrorCategory c);

} // namespace anisostokes
