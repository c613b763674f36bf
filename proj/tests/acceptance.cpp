#include "flexsyn/validation.hpp"

#include <cstdio>
#include <cstdlib>

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 0;
  const std::vector<flexsyn::validation::OracleReport> reports =
      flexsyn::validation::acceptance_suites(seed);
  int failed = 0;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    std::printf("criterion %zu: %s\n", k + 1, reports[k].line().c_str());
    if (!reports[k].passed()) ++failed;
  }
  std::printf("%zu criteria, %d failed\n", reports.size(), failed);
  return failed == 0 ? 0 : 1;
}
