#pragma once

namespace frsum {

// Full command dispatch. Maps errors to exit codes: 0 success, 2 config
// error, 3 data error, 4 numeric failure.
int run_cli(int argc, char** argv);

}  // namespace frsum
