#pragma once

namespace cab {

/// Entry point of the `cab` tool. Returns 0 on success, 1 on usage or
/// configuration errors and 2 on runtime failures.
int cli_main(int argc, const char* const* argv);

}  // namespace cab
