#pragma once

namespace csqn {

/// Entry point for the conseqnet binary.  Returns 0 on success, 1 on usage
/// errors (bad flags, missing files), 2 on data errors (malformed inputs).
int run_cli(int argc, const char* const* argv);

}  // namespace csqn
