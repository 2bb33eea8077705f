#pragma once

namespace selfqa {

// Entry point behind the selfqa binary. Exit codes: 0 success,
// 1 operational error, 2 usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace selfqa
