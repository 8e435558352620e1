#pragma once

namespace covsamp {

/// Entry point of the covsamp command line. Returns the process exit
/// status: 0 success, 2 config error, 3 numeric error, 4 resource cap.
int run_cli(int argc, char** argv);

}  // namespace covsamp
