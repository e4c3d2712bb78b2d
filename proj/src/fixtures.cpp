#include "rdmdp/fixtures.hpp"

#include <ostream>

#include "rdmdp/csv.hpp"
#include "rdmdp/resampling.hpp"

namespace rdmdp {

ResampleDemoFixture resample_demo_fixture() {
  OneDWorldOptions opts;
  opts.num_cells = 7;
  opts.start = 4;
  OneDWorld env(opts);
  const Action left = discrete_action(0);
  const ActionBuffer lll(3, left);
  auto state = [&](int cell, int alpha, int beta) {
    return AugmentedState{env.observe(cell), lll, alpha, beta, std::nullopt};
  };
  Trajectory tr(state(4, 1, 2), "always-left");
  tr.append(TrajectoryRecord{state(3, 1, 1), 0.0, false});
  tr.append(TrajectoryRecord{state(1, 0, 2), 0.0, false});
  tr.append(TrajectoryRecord{state(0, 0, 1), 0.0, false});
  return ResampleDemoFixture{env, std::move(tr), Policy{ConstantPolicy{left}, "always-left"},
                             Policy{ConstantPolicy{discrete_action(1)}, "always-right"}};
}

std::string buffer_letters(const ActionBuffer& u) {
  std::string s = "(";
  for (std::size_t i = 1; i <= u.capacity(); ++i) {
    if (i > 1) s += ',';
    s += action_index(u[i]) == 1 ? 'R' : 'L';
  }
  return s + ")";
}

void write_resample_demo(std::ostream& out, std::uint64_t seed) {
  ResampleDemoFixture f = resample_demo_fixture();
  const std::size_t n = validity_length(f.trajectory, 0);
  ValidSubTrajectory frag = fragment_at(f.trajectory, 0, n);
  Rng rng(seed);
  ResampledFragment res = resample_partial(f.pi, frag.start, frag, rng);
  out << "t,obs,alpha,beta,reward,buffer_before,buffer_after\n";
  auto row = [&](std::size_t t, const AugmentedState& before, const AugmentedState& after, double reward) {
    out << t << ',' << f.env.position(before.obs) << ',' << before.obs_delay << ',' << before.act_delay << ','
        << format_double(reward) << ',' << buffer_letters(before.buffer) << ',' << buffer_letters(after.buffer) << '\n';
  };
  row(0, frag.start, res.fragment.start, 0.0);
  for (std::size_t t = 1; t <= n; ++t)
    row(t, frag.steps[t - 1].state, res.fragment.steps[t - 1].state, frag.steps[t - 1].reward);
  out << "n=" << n << '\n';
}

}  // namespace rdmdp
