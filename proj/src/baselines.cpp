#include "isacsim/baselines.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

namespace isacsim {

PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "random") return PolicyKind::kRandom;
  if (name == "greedy") return PolicyKind::kGreedy;
  if (name == "exhaustive") return PolicyKind::kExhaustive;
  if (name == "agent") return PolicyKind::kAgent;
  throw std::invalid_argument("unknown policy: " + name);
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kGreedy: return "greedy";
    case PolicyKind::kExhaustive: return "exhaustive";
    case PolicyKind::kAgent: return "agent";
  }
  throw std::invalid_argument("unknown policy kind");
}

ActionCode random_policy(int num_users, const ScenarioConfig& cfg, Rng& rng) {
  if (num_users < 1 || num_users > cfg.u_max) {
    throw std::invalid_argument("random_policy: num_users outside [1, u_max]");
  }
  const int user = static_cast<int>(rng.uniform_int(static_cast<uint32_t>(num_users)));
  const int code = static_cast<int>(rng.uniform_int(static_cast<uint32_t>(cfg.n_b)));
  ActionCode out;
  out.user_index = user;
  out.codeword_index = code;
  out.raw = encode_action(user, code, cfg);
  return out;
}

namespace {

struct CandidateScore {
  double min_sinr = std::numeric_limits<double>::infinity();
  double crlb = std::numeric_limits<double>::infinity();
};

CandidateScore score_candidate(const std::vector<std::vector<ComplexMatrix>>& blocks,
                               const TargetState& target, const ComplexMatrix& f,
                               const ScenarioConfig& cfg) {
  CandidateScore s;
  for (const auto& symbol_blocks : blocks) {
    const RealMatrix table = sinr_table(symbol_blocks, f, cfg);
    s.min_sinr = std::min(s.min_sinr, table.minCoeff());
  }
  s.crlb = crlb_angle(f, target, cfg);
  return s;
}

// Feasibility-first selection state shared by greedy and exhaustive.
struct Selector {
  double threshold;
  bool any_feasible = false;
  double best_crlb = std::numeric_limits<double>::infinity();
  double best_margin = -std::numeric_limits<double>::infinity();
  bool take(const CandidateScore& s) {
    if (s.min_sinr >= threshold) {
      const bool better = !any_feasible || s.crlb < best_crlb;
      any_feasible = true;
      if (better) {
        best_crlb = s.crlb;
        return true;
      }
      return false;
    }
    if (!any_feasible && s.min_sinr > best_margin) {
      best_margin = s.min_sinr;
      return true;
    }
    return false;
  }
};

}  // namespace

ActionCode greedy_policy(const Environment& env, const ScenarioConfig& cfg) {
  const int num_users = cfg.num_users;
  const auto& blocks = env.oracle_subframe_blocks();
  const TargetState& target = env.oracle_target();
  const ComplexMatrix& codebook = env.codebook();
  const Precoder& base = env.precoder();
  if (base.num_users() != num_users) {
    throw std::invalid_argument("greedy_policy: config and environment disagree on U");
  }

  Selector pick{cfg.sinr_threshold};
  int best_user = 0;
  int best_code = 0;
  for (int u = 0; u < num_users; ++u) {
    Precoder cand = base;
    for (int b = 0; b < cfg.n_b; ++b) {
      cand.set_column(u, b, codebook);
      if (pick.take(score_candidate(blocks, target, cand.f, cfg))) {
        best_user = u;
        best_code = b;
      }
    }
  }

  ActionCode out;
  out.user_index = best_user;
  out.codeword_index = best_code;
  out.raw = encode_action(best_user, best_code, cfg);
  return out;
}

Precoder exhaustive_policy(const Environment& env, const ScenarioConfig& cfg,
                           int64_t budget) {
  const int num_users = cfg.num_users;
  const auto& blocks = env.oracle_subframe_blocks();
  const TargetState& target = env.oracle_target();
  const ComplexMatrix& codebook = env.codebook();
  if (env.precoder().num_users() != num_users) {
    throw std::invalid_argument("exhaustive_policy: config and environment disagree on U");
  }

  int64_t combos = 1;
  for (int u = 0; u < num_users; ++u) {
    combos *= cfg.n_b;
    if (combos > budget) {
      throw std::invalid_argument("exhaustive_policy: N_B^U exceeds the candidate budget");
    }
  }

  Selector pick{cfg.sinr_threshold};
  std::vector<int> codes(static_cast<size_t>(num_users), 0);
  std::vector<int> best_codes = codes;
  while (true) {
    const Precoder cand = Precoder::from_codewords(codes, codebook);
    if (pick.take(score_candidate(blocks, target, cand.f, cfg))) {
      best_codes = codes;
    }
    // Odometer increment, least-significant user last for lexicographic order.
    int pos = num_users - 1;
    while (pos >= 0) {
      if (++codes[static_cast<size_t>(pos)] < cfg.n_b) break;
      codes[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return Precoder::from_codewords(best_codes, codebook);
}

}  // namespace isacsim
