#pragma once

#include <iosfwd>
#include <string>

namespace kstab {

enum ExitCode { kExitOk = 0, kExitInvalid = 1, kExitTolerance = 2 };

// Runs one kstab command. Tables go to `out` unless --out names a file.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::string help_text();

}  // namespace kstab
