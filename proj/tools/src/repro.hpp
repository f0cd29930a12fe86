#pragma once

#include <string>
#include <vector>

namespace sticky::cli {

struct ReproItem {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Both published divergence tables and both figure replica-count claims.
std::vector<ReproItem> run_repro();

}  // namespace sticky::cli
