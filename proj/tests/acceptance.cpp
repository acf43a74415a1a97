// Acceptance suite: one pass/fail line per criterion.
// Placeholder while the library is under construction; every criterion
// reports FAIL until implemented.

#include <cstdio>

int main() {
  std::printf("acceptance suite not yet implemented\n");
  return 1;
}
