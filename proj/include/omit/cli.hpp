#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace omit::cli {

// Every failure path maps to one of these.
enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kConfigError = 2,     // usage, config, dataset parse or input file errors
  kSingular = 3,        // model singularity / parametric instability
  kNotConverged = 4,
  kInsufficientData = 5,
  kFeatureNotFound = 6,  // also under-resolved features
  kOutputError = 7,      // cannot write an output file
};

/// Runs one workbench command. args excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace omit::cli
