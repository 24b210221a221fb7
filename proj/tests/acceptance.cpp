// Runs AC-1..AC-10 and prints one PASS/FAIL line each; exit status is nonzero if any fails.

#include <cstdlib>
#include <iostream>
#include <string>

#include "sheafcx/acceptance.hpp"

int main(int argc, char** argv) {
  namespace acc = sheafcx::acceptance;
  acc::Options opt;
  std::string corpus = SHEAFCX_CORPUS_PATH;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--threads" && i + 1 < argc) opt.threads = static_cast<unsigned>(std::stoul(argv[++i]));
    else if (a == "--corpus" && i + 1 < argc) corpus = argv[++i];
  }
  opt.corpus = acc::read_lines(corpus);

  using Check = acc::CheckResult (*)(const acc::Options&);
  const Check checks[] = {[](const acc::Options&) { return acc::ac1(); }, acc::ac2, acc::ac3, acc::ac4, acc::ac5,
                          acc::ac6, acc::ac7, acc::ac8, acc::ac9, acc::ac10};
  int failed = 0;
  for (Check c : checks) {
    const auto r = c(opt);
    std::cout << acc::format_line(r) << std::endl;
    failed += r.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all acceptance criteria passed" : std::to_string(failed) + " acceptance criteria failed") << std::endl;
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
