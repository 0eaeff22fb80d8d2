#pragma once

#include <string>
#include <vector>

namespace tubekit::cli {

enum ExitCode : int {
  kOk = 0,
  kParameterError = 2,
  kIoError = 3,
  kDomainError = 4,
};

int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace tubekit::cli
