#pragma once
// Runs the artai binary through the shell and captures exit status and output.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "artai/io.hpp"

namespace artai::testing {

inline std::filesystem::path cli_path() { return ARTAI_CLI_PATH; }

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

inline std::string shell_quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

// `args` is appended verbatim; quote paths with shell_quote.
inline CliResult run_cli(const std::string& args, const std::filesystem::path& scratch) {
    const auto out = scratch / "cli.stdout";
    const auto err = scratch / "cli.stderr";
    const std::string cmd = shell_quote(cli_path().string()) + " " + args + " >" + shell_quote(out.string()) + " 2>" +
                            shell_quote(err.string());
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = io::read_file(out);
    r.err = io::read_file(err);
    return r;
}

}  // namespace artai::testing
