#include <string>
#include <vector>

#include "mfplan_app/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mfp::app::run(args);
}
