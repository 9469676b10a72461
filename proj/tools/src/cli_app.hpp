#pragma once

namespace codym::cli {

// Entry point shared by the binary and the tests. Returns a process exit
// code; never throws.
int run(int argc, const char* const* argv);

}  // namespace codym::cli
