#pragma once

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tmpdir.hpp"

namespace testutil {

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

inline std::string cli_path() {
    if (const char* p = std::getenv("ZRUDC_CLI"); p && *p) return p;
    // fallbacks for running test binaries by hand
    for (const char* guess : {"./build/tools/zrudc", "../tools/zrudc", "tools/zrudc"})
        if (std::filesystem::is_regular_file(guess)) return guess;
    throw std::runtime_error("ZRUDC_CLI env var not set (run through ctest)");
}

/// Runs the CLI with the given argument string, capturing stdout/stderr.
inline CmdResult run_cli(const std::string& args) {
    static TmpDir capture("cli_capture");
    static int invocation = 0;
    const std::string out_path = capture.file("out" + std::to_string(invocation));
    const std::string err_path = capture.file("err" + std::to_string(invocation));
    ++invocation;

    const std::string cmd = cli_path() + " " + args + " >" + out_path + " 2>" + err_path;
    const int status = std::system(cmd.c_str());

    CmdResult r;
    if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

}  // namespace testutil
