#include <cstdio>

#include "subexp/version.hpp"

int main() {
  std::printf("subexp %s\n", subexp::version_string);
  return 0;
}
