// Runs the acceptance suite from configs/acceptance.yaml and prints one line per criterion.
#include "tfprop/runner.hpp"

#include <fmt/format.h>

#include <cstdlib>
#include <exception>

int main(int argc, char** argv) {
  using namespace tfprop;
  try {
    const std::string path = argc > 1 ? argv[1] : TFPROP_ACCEPTANCE_CONFIG;
    auto c = load_config(path);
    const char* env = std::getenv("TFPROP_OUT");
    const std::filesystem::path out = env && *env ? env : "acceptance_out";
    const auto res = run(c, out);
    int failed = 0, total = 0;
    for (const auto& ch : res.checks) {
      if (ch.id < 1 || ch.id > 13) continue;
      fmt::print("criterion {:2d} {}: {} ({})\n", ch.id, ch.pass ? "PASS" : "FAIL", ch.name, ch.detail);
      ++total;
      if (!ch.pass) ++failed;
    }
    fmt::print("{} of {} criteria failed; artifacts in {}\n", failed, total, out.string());
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
}
