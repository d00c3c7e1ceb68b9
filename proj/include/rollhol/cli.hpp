#ifndef ROLLHOL_CLI_HPP
#define ROLLHOL_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace rollhol {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes: 0 success, 1 input error, 2 a verification residual exceeded
/// its tolerance. The report JSON goes to `--out` (default "-" = stdout).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rollhol

#endif
