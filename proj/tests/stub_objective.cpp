// Test stand-in for an external objective: reads {"h":[..],"x":[..]} lines
// and answers {"f": sum(x)}.
//
//   stub_objective [--log FILE] [--fail-after N] [--garbage]
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

int main(int argc, char** argv) {
  std::string log_path;
  long fail_after = -1;
  bool garbage = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--log" && i + 1 < argc) log_path = argv[++i];
    else if (arg == "--fail-after" && i + 1 < argc) fail_after = std::atol(argv[++i]);
    else if (arg == "--garbage") garbage = true;
  }
  std::ofstream log;
  if (!log_path.empty()) log.open(log_path, std::ios::app);

  long served = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (fail_after >= 0 && served >= fail_after) return 3;
    if (log.is_open()) log << line << '\n' << std::flush;
    if (garbage) {
      std::cout << "not json" << std::endl;
      continue;
    }
    const auto request = nlohmann::json::parse(line);
    double f = 0.0;
    for (const auto& v : request.at("x")) f += v.get<double>();
    std::cout << nlohmann::json{{"f", f}}.dump() << std::endl;
    ++served;
  }
  return 0;
}
