// Trains a short VGDF run on the point mass whose target clamps negative
// x-acceleration, then scores fresh source transitions: those the clamp
// would have changed should get a lower fictitious value proximity and be
// selected less often.

#include <iostream>

#include "vgdf/bench/experiment.hpp"
#include "vgdf/core/heap.hpp"

using namespace vgdf;

int main() {
  keep_heap_warm();
  bench::ExperimentConfig cfg;
  cfg.env = "point_mass";
  cfg.shift = "clamp_large";
  cfg.target_steps = 1500;
  cfg.eval_every = 500;
  cfg.eval_episodes = 2;
  cfg.vgdf.batch_size = 64;
  cfg.vgdf.hidden_width = 64;
  cfg.vgdf.warm_start = 5000;
  cfg.vgdf.ensemble_width = 64;
  cfg.vgdf.ensemble_depth = 3;
  cfg.vgdf.ensemble_batch = 128;
  cfg.vgdf.ensemble_every = 5;
  std::cout << "training " << cfg.method << " on " << cfg.env << " / " << cfg.shift << " for " << cfg.target_steps
            << " target steps...\n";
  bench::RunResult run = bench::run_seed(cfg, 0);
  const auto& agent = *run.agent;

  // Random-action source transitions; dimension 0 of the action is the x push.
  SeededRng rng(1);
  auto source = envs::make_env(cfg.env);
  bench::Rollout ro(source->clone(), rng.fork());
  std::vector<Transition> ts;
  for (int i = 0; i < 512; ++i) ts.push_back(ro.step(ro.random_action(), Domain::Source));
  auto b = nn::make_batch<bench::Real>(ts);
  auto est = algo::fvp_batch(b.s, b.a, b.s2, agent.model, agent.pi, agent.critics, rng);
  auto mask = algo::select(est, cfg.vgdf.xi);

  double log_l[2] = {0, 0}, picked[2] = {0, 0}, count[2] = {0, 0};
  for (std::size_t j = 0; j < ts.size(); ++j) {
    int g = ts[j].action[0] < 0.0 ? 1 : 0;
    log_l[g] += est[j].log_likelihood;
    picked[g] += mask.flags[j];
    count[g] += 1;
  }
  const char* names[2] = {"push x >= 0 (same in target)", "push x < 0  (clamped in target)"};
  for (int g = 0; g < 2; ++g)
    std::cout << names[g] << ": " << count[g] << " transitions, mean log Lambda " << log_l[g] / count[g]
              << ", selected " << picked[g] / count[g] * 100.0 << "%\n";
  std::cout << "overall selection " << mask.selected_count << " of " << ts.size() << " (xi = " << cfg.vgdf.xi
            << "%)\n";
}
