// Bundled baseline classifier behind the external line protocol, so the
// external adapter path can be checked against the in-process baseline.
//
//   nexcv-engine [--l2 X] [--epochs N]

#include <iostream>

#include <CLI11.hpp>

#include "nexcv/baseline.hpp"
#include "nexcv/external.hpp"

int main(int argc, char** argv) {
  nexcv::BaselineHyper hyper;
  CLI::App app{"Serve the baseline classifier over the nex-cv line protocol"};
  app.add_option("--l2", hyper.l2_strength, "L2 strength")->check(CLI::NonNegativeNumber);
  app.add_option("--epochs", hyper.max_epochs, "maximum training epochs")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  std::ios::sync_with_stdio(false);
  nexcv::serve_line_protocol(std::cin, std::cout, nexcv::baseline_factory(hyper));
  return 0;
}
