#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "fedspace/common/log.hpp"

int main(int argc, char** argv) {
  // Expected failures log warnings by the hundred; keep test output readable.
  fedspace::log::set_level(fedspace::log::Level::Error);
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
