#pragma once

#include <iosfwd>

namespace sensorimotor {

/// Entry point of the `smctl` tool. Returns 0 on success, 1 on a usage error
/// and 2 when the run itself fails.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sensorimotor
