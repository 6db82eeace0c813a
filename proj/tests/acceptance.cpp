// Acceptance suite: runs every verification criterion and prints one
// pass/fail line per criterion. Exit code 0 iff all pass.

#include <chrono>
#include <cstdio>

#include "gradflow/verify.hpp"

int main() {
  auto start = std::chrono::steady_clock::now();
  gradflow::VerifyOptions opts;
  auto verdicts = gradflow::run_verification(opts);

  bool all_pass = true;
  for (const auto& v : verdicts) {
    all_pass = all_pass && v.pass;
    std::printf("[%s] %-4s %s (%.2fs) — %s\n", v.pass ? "PASS" : "FAIL",
                v.id.c_str(), v.name.c_str(), v.seconds, v.detail.c_str());
  }
  double total = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  std::printf("%s: %zu checks in %.1fs (budget 300s)\n",
              all_pass && total < 300.0 ? "ALL PASS" : "FAILURES",
              verdicts.size(), total);
  if (total >= 300.0) {
    std::printf("[FAIL] wall-clock budget exceeded\n");
    return 1;
  }
  return all_pass ? 0 : 1;
}
