#pragma once

#include <ostream>

namespace sfgof {

// Entry point of the `sfgof` tool. Exit codes: 0 success, 1 bad usage or
// config, 2 model / numerical failure, 3 replicate exclusions above 1%.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sfgof
