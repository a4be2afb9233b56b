#ifndef ISACSIM_BASELINES_HPP
#define ISACSIM_BASELINES_HPP

#include <string>

#include "isacsim/env.hpp"
#include "isacsim/metrics.hpp"
#include "isacsim/rng.hpp"
#include "isacsim/scenario.hpp"

namespace isacsim {

enum class PolicyKind { kRandom, kGreedy, kExhaustive, kAgent };

PolicyKind policy_kind_from_string(const std::string& name);
std::string to_string(PolicyKind kind);

// Uniform draw over the U * N_B feasible codes.
ActionCode random_policy(int num_users, const ScenarioConfig& cfg, Rng& rng);

// Oracle-information baseline: tries every single-column substitution of the
// environment's current precoder against the true current-subframe channel,
// keeps the substitutions whose SINR entries all clear the threshold, and of
// those returns the one with the smallest instantaneous angle CRLB. With no
// feasible substitution it returns the one with the largest worst-case SINR.
// Ties keep the lexicographically first (user, codeword).
ActionCode greedy_policy(const Environment& env, const ScenarioConfig& cfg);

// Same selection rule over all N_B^U full precoders. Refuses when the
// enumeration would exceed `budget` candidates.
Precoder exhaustive_policy(const Environment& env, const ScenarioConfig& cfg,
                           int64_t budget = 4096);

}  // namespace isacsim

#endif  // ISACSIM_BASELINES_HPP
