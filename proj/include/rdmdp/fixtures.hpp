#pragma once

#include <iosfwd>

#include "rdmdp/envs.hpp"
#include "rdmdp/policy.hpp"
#include "rdmdp/trajectory.hpp"

namespace rdmdp {

/// Seven-cell 1D world with K = 3, recorded under "always left" while the
/// delays drift down. Resampling it under "always right" is valid for two steps.
struct ResampleDemoFixture {
  OneDWorld env;
  Trajectory trajectory;
  Policy mu;
  Policy pi;
};

ResampleDemoFixture resample_demo_fixture();

/// Before/after table of the demo fragment as CSV
/// `t,obs,alpha,beta,reward,buffer_before,buffer_after` plus a trailing `n=` line.
void write_resample_demo(std::ostream& out, std::uint64_t seed);

/// Compact buffer rendering for discrete left/right actions, e.g. "(R,L,L)".
std::string buffer_letters(const ActionBuffer& u);

}  // namespace rdmdp
