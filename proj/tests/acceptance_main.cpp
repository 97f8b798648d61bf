#include <fstream>
#include <iostream>
#include <string>

#include "ssle/acceptance.hpp"

int main(int argc, char** argv) {
  std::string filter;
  std::string report_path;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--filter") filter = argv[i + 1];
    if (flag == "--report") report_path = argv[i + 1];
  }
  const auto report = ssle::run_acceptance(filter, std::cout);
  if (!report_path.empty()) std::ofstream(report_path) << report.dump(2) << '\n';
  const bool ok = report.at("all_passed").get<bool>();
  std::cout << (ok ? "all acceptance criteria passed" : "some acceptance criteria failed") << std::endl;
  return ok ? 0 : 1;
}
