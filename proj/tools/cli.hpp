#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace alaam::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kDegenerate = 2,  // divergence, non-existent MLE, singular statistic covariance
    kInput = 3,
    kInternal = 4,    // kernel inconsistency or other internal failure
};

// Runs the command line (without the program name). Reports go to `out`,
// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace alaam::cli
