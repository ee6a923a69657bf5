// Seconds-scale comparison of VGDF, Mix and Zero-shot on one domain pair.
// Usage: quick_compare [config] (default: configs/smoke.cfg)

#include <iostream>

#include "vgdf/bench/experiment.hpp"
#include "vgdf/core/heap.hpp"

using namespace vgdf;

int main(int argc, char** argv) {
  keep_heap_warm();
  const std::string path = argc > 1 ? argv[1] : std::string(VGDF_CONFIG_DIR) + "/smoke.cfg";
  bench::ExperimentConfig cfg = bench::ExperimentConfig::load(path);
  std::cout << cfg.env << " / " << cfg.shift << ", " << cfg.target_steps << " target steps, gamma ratio "
            << cfg.vgdf.gamma_ratio << '\n';
  for (std::string method : {"vgdf", "mix", "zero_shot"}) {
    cfg.method = method;
    for (const auto& r : bench::run_experiment(cfg))
      std::cout << "  " << method << " seed " << r.seed << ": final target return " << r.final_return << " ("
                << r.seconds << " s)\n";
  }
}
