#pragma once

#include <ostream>

namespace caprob {

/// Exit codes: 0 success, 1 bound violations, 2 usage or configuration errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace caprob
