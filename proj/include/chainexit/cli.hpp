#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chainexit::cli
{

//! Exit statuses of the command-line tool.
enum Status : int
{
    ok = 0,
    usage = 1,
    config_error = 2,
    numeric_error = 3,
};

//! Runs one command line (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chainexit::cli
