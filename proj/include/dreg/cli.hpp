#ifndef DREG_CLI_HPP
#define DREG_CLI_HPP

#include <string>

namespace dreg {

// Exit status: 0 success, 1 validation error, 2 runtime failure.
int cli_main(int argc, const char* const* argv);

// Rendered --help text for a subcommand ("" for the top level).
std::string cli_help(const std::string& subcommand);

} // namespace dreg

#endif
