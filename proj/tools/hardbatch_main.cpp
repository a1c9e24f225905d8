#include <iostream>
#include <string>
#include <vector>

#include "hardbatch/experiment.hpp"

int main(int argc, char** argv) {
  using namespace hardbatch;
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const ExperimentSpec spec = parse_config(args);
    return run_experiment(spec);
  } catch (const HelpRequested& help) {
    std::cout << help.text;
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
