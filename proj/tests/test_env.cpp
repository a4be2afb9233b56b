#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "isacsim/env.hpp"
#include "isacsim/metrics.hpp"
#include "isacsim/rng.hpp"
#include "isacsim/scenario.hpp"
#include "isacsim/steering.hpp"

using namespace isacsim;

namespace {

ScenarioConfig env_cfg() {
  ScenarioConfig cfg;
  cfg.n_t = 4;
  cfg.n_r = 4;
  cfg.m_subcarriers = 4;
  cfg.l_cp = 4;
  cfg.l_symbols = 2;
  cfg.t_subframes = 2;
  cfg.num_users = 2;
  cfg.u_max = 4;
  cfg.n_b = 8;
  cfg.g_t = 8;
  cfg.n_d = 4;
  cfg.p_u = 2;
  cfg.n_x = 8;
  cfg.n_y = 6;
  cfg.reward_scale_samples = 4;
  return cfg;
}

int count_cells(const Spectrum& p, uint8_t code) {
  int n = 0;
  for (uint8_t c : p) n += (c == code) ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("episode budget is the discounted geometric sum") {
  ScenarioConfig cfg = env_cfg();
  cfg.discount = 0.6;
  cfg.t_subframes = 2;
  const EpisodeBudget b = episode_budget(cfg);
  CHECK(b.gamma == doctest::Approx(0.6));
  CHECK(b.eta_c == doctest::Approx(cfg.eta_c()).epsilon(1e-15));
  CHECK(b.gamma_c == doctest::Approx(-1.6 * cfg.eta_c()).epsilon(1e-12));

  cfg.t_subframes = 100;
  double geo = 0.0;
  double w = 1.0;
  for (int t = 0; t < 100; ++t) {
    geo += w;
    w *= 0.6;
  }
  CHECK(episode_budget(cfg).gamma_c == doctest::Approx(-cfg.eta_c() * geo).epsilon(1e-12));

  cfg.discount = 1.0;
  cfg.t_subframes = 7;
  CHECK(episode_budget(cfg).gamma_c == doctest::Approx(-7.0 * cfg.eta_c()).epsilon(1e-12));
}

TEST_CASE("action decoding splits the bit fields big endian") {
  ScenarioConfig cfg;
  cfg.u_max = 16;  // 4 user bits
  cfg.n_b = 32;    // 5 codeword bits
  REQUIRE(cfg.action_dim() == 9);

  const std::vector<double> raw{0, 0, 1, 1, 0, 0, 1, 0, 1};
  const ActionCode a = decode_action(raw, 16, cfg);
  CHECK(a.user_index == 3);
  CHECK(a.codeword_index == 5);
  CHECK(a.raw == raw);

  // Out-of-range fields reduce modulo their valid counts.
  const ActionCode b = decode_action(raw, 2, cfg);
  CHECK(b.user_index == 1);

  const std::vector<double> all_ones(9, 1.0);
  const ActionCode c = decode_action(all_ones, 4, cfg);
  CHECK(c.user_index == 15 % 4);
  CHECK(c.codeword_index == 31);

  // Coordinates at exactly one half round up to bit 1.
  std::vector<double> half(9, 0.49999);
  half[3] = 0.5;
  const ActionCode d = decode_action(half, 16, cfg);
  CHECK(d.user_index == 1);
  CHECK(d.codeword_index == 0);

  CHECK_THROWS_AS(decode_action(std::vector<double>(8, 0.0), 4, cfg),
                  std::invalid_argument);
  CHECK_THROWS_AS(decode_action(raw, 0, cfg), std::invalid_argument);
}

TEST_CASE("encode and decode are inverse on the feasible grid") {
  ScenarioConfig cfg;
  cfg.u_max = 4;
  cfg.n_b = 8;
  for (int u = 0; u < 4; ++u) {
    for (int c = 0; c < 8; ++c) {
      const std::vector<double> raw = encode_action(u, c, cfg);
      REQUIRE(static_cast<int>(raw.size()) == cfg.action_dim());
      const ActionCode back = decode_action(raw, 4, cfg);
      CHECK(back.user_index == u);
      CHECK(back.codeword_index == c);
    }
  }
  CHECK_THROWS_AS(encode_action(4, 0, cfg), std::out_of_range);
  CHECK_THROWS_AS(encode_action(0, 8, cfg), std::out_of_range);
  CHECK_THROWS_AS(encode_action(-1, 0, cfg), std::out_of_range);
}

TEST_CASE("spectrum cells quantize and clamp polar positions") {
  ScenarioConfig cfg;  // 64 x 50 grid over [-pi, pi) x [0, 50)
  CHECK(spectrum_cell(cfg.theta_min, 0.0, cfg) == std::pair<int, int>{0, 0});
  CHECK(spectrum_cell(0.0, 25.0, cfg) == std::pair<int, int>{32, 25});
  CHECK(spectrum_cell(cfg.theta_max - 1e-9, 49.999, cfg) == std::pair<int, int>{63, 49});
  // Outside positions clamp to the border cells.
  CHECK(spectrum_cell(10.0, 120.0, cfg) == std::pair<int, int>{63, 49});
  CHECK(spectrum_cell(-10.0, -5.0, cfg) == std::pair<int, int>{0, 0});
}

TEST_CASE("position spectra mark users and let targets win collisions") {
  ScenarioConfig cfg = env_cfg();
  const std::vector<std::pair<double, double>> users{{-1.0, 10.0}, {1.0, 30.0}};
  const std::vector<std::pair<double, double>> targets{{2.0, 40.0}};
  const Spectrum p = build_position_spectrum(users, targets, cfg);
  REQUIRE(static_cast<int>(p.size()) == cfg.n_x * cfg.n_y);
  CHECK(count_cells(p, kSpectrumUser) == 2);
  CHECK(count_cells(p, kSpectrumTarget) == 1);
  CHECK(count_cells(p, kSpectrumEmpty) == cfg.n_x * cfg.n_y - 3);

  const auto [ix, iy] = spectrum_cell(2.0, 40.0, cfg);
  CHECK(p[static_cast<size_t>(ix) * cfg.n_y + iy] == kSpectrumTarget);

  // A target painted over a user keeps the target code.
  const Spectrum clash = build_position_spectrum({{2.0, 40.0}}, {{2.0, 40.0}}, cfg);
  CHECK(count_cells(clash, kSpectrumUser) == 0);
  CHECK(count_cells(clash, kSpectrumTarget) == 1);
}

TEST_CASE("beamspace state isolates on-grid departure angles") {
  ScenarioConfig cfg = env_cfg();
  cfg.g_t = cfg.n_t;  // orthogonal sine grid
  const ComplexMatrix dict = angular_dictionary(cfg.n_t, cfg.g_t);
  const RealVector angles = dictionary_angles(cfg.g_t);

  const int pick = 2;
  std::vector<ComplexMatrix> taps(static_cast<size_t>(cfg.n_d),
                                  ComplexMatrix::Zero(cfg.num_users, cfg.n_t));
  taps[1].row(0) = steering_vector(angles[pick], cfg.n_t).transpose();

  const Tensor s_h = build_channel_state(taps, dict, cfg.u_max, cfg);
  REQUIRE(s_h.shape() == std::vector<int>{cfg.n_d, cfg.u_max, cfg.g_t});
  for (int d = 0; d < cfg.n_d; ++d) {
    for (int u = 0; u < cfg.u_max; ++u) {
      for (int g = 0; g < cfg.g_t; ++g) {
        const double v = s_h.data()[(static_cast<int64_t>(d) * cfg.u_max + u) * cfg.g_t + g];
        if (d == 1 && u == 0 && g == pick) {
          CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
        } else {
          CHECK(std::abs(v) < 1e-12);
        }
      }
    }
  }

  CHECK_THROWS_AS(build_channel_state({taps[0]}, dict, cfg.u_max, cfg),
                  std::invalid_argument);
  std::vector<ComplexMatrix> wide(static_cast<size_t>(cfg.n_d),
                                  ComplexMatrix::Zero(cfg.u_max + 1, cfg.n_t));
  CHECK_THROWS_AS(build_channel_state(wide, dict, cfg.u_max, cfg), std::invalid_argument);
}

TEST_CASE("environment resets deterministically per (seed, episode)") {
  const ScenarioConfig cfg = env_cfg();
  Environment a(cfg, 11);
  Environment b(cfg, 11);

  const EnvState sa = a.reset();
  const EnvState sb = b.reset();

  REQUIRE(sa.s_h->size() == sb.s_h->size());
  for (int64_t i = 0; i < sa.s_h->size(); ++i) CHECK((*sa.s_h)[i] == (*sb.s_h)[i]);
  CHECK(*sa.s_p[2] == *sb.s_p[2]);
  CHECK(a.precoder().codeword == b.precoder().codeword);
  CHECK(a.reward_scale() == b.reward_scale());
  CHECK(a.oracle_target().kin.angle_rad == b.oracle_target().kin.angle_rad);
  CHECK(a.subframe() == 0);
  CHECK_FALSE(a.done());
  CHECK(a.started());

  // The next episode is a different scene.
  const EnvState sa2 = a.reset();
  bool differs = false;
  for (int64_t i = 0; i < sa.s_h->size() && !differs; ++i) {
    differs = (*sa.s_h)[i] != (*sa2.s_h)[i];
  }
  CHECK(differs);

  // A fresh environment replays episode 0 then episode 1.
  Environment c(cfg, 11);
  (void)c.reset();
  const EnvState sc2 = c.reset();
  for (int64_t i = 0; i < sa2.s_h->size(); ++i) CHECK((*sa2.s_h)[i] == (*sc2.s_h)[i]);

  Environment other(cfg, 12);
  const EnvState so = other.reset();
  bool seed_differs = false;
  for (int64_t i = 0; i < sa.s_h->size() && !seed_differs; ++i) {
    seed_differs = (*sa.s_h)[i] != (*so.s_h)[i];
  }
  CHECK(seed_differs);
}

TEST_CASE("reset state shares one spectrum across the three slots") {
  Environment env(env_cfg(), 3);
  const EnvState s0 = env.reset();
  CHECK(s0.s_p[0] == s0.s_p[1]);
  CHECK(s0.s_p[1] == s0.s_p[2]);
  CHECK(count_cells(*s0.s_p[2], kSpectrumTarget) == 1);
  CHECK(count_cells(*s0.s_p[2], kSpectrumUser) <= env.config().num_users);

  const StepOutcome out = env.step(decode_action(encode_action(0, 3, env.config()),
                                                 env.config().num_users, env.config()));
  // The history window slides: two old slots survive, one fresh slot enters.
  CHECK(out.next_state.s_p[0] == s0.s_p[1]);
  CHECK(out.next_state.s_p[1] == s0.s_p[2]);
  CHECK(out.next_state.s_p[2] != s0.s_p[2]);

  const Tensor sp = out.next_state.s_p_tensor(env.config().n_x, env.config().n_y);
  REQUIRE(sp.shape() == std::vector<int>{3, env.config().n_x, env.config().n_y});
  double total = 0.0;
  for (int64_t i = 0; i < sp.size(); ++i) total += sp[i];
  double expect = 0.0;
  for (const auto& slot : out.next_state.s_p) {
    for (uint8_t c : *slot) expect += static_cast<double>(c);
  }
  CHECK(total == doctest::Approx(expect));
}

TEST_CASE("step reports the metrics it rewarded") {
  ScenarioConfig cfg = env_cfg();
  Environment env(cfg, 21);
  (void)env.reset();
  REQUIRE(env.reward_scale() > 0.0);

  const ActionCode action = decode_action(encode_action(1, 5, cfg), cfg.num_users, cfg);
  const StepOutcome out = env.step(action);

  CHECK(out.reward == -(out.info.crlb / env.reward_scale()));
  CHECK(out.cost == -out.info.se);
  CHECK(out.info.se == doctest::Approx(spectral_efficiency(out.info.sinr, cfg)).epsilon(1e-15));
  REQUIRE(static_cast<int>(out.info.sinr.size()) == cfg.l_symbols);

  // The executed action lands in the precoder.
  CHECK(env.precoder().codeword[1] == 5);

  // Constraint audit agrees with a recount of the reported tables.
  int violations = 0;
  double min_sinr = std::numeric_limits<double>::infinity();
  int entries = 0;
  for (const RealMatrix& t : out.info.sinr) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      for (Eigen::Index i = 0; i < t.rows(); ++i) {
        ++entries;
        min_sinr = std::min(min_sinr, t(i, j));
        if (t(i, j) < cfg.sinr_threshold) ++violations;
      }
    }
  }
  CHECK(out.info.constraints.entries == entries);
  CHECK(out.info.constraints.violations == violations);
  CHECK(out.info.constraints.min_sinr == doctest::Approx(min_sinr));
  CHECK(out.info.fisher.size() == cfg.m_subcarriers);
  CHECK_FALSE(out.done);
  CHECK(env.subframe() == 1);
}

TEST_CASE("unnormalized rewards are the negated crlb") {
  ScenarioConfig cfg = env_cfg();
  cfg.normalize_reward = false;
  Environment env(cfg, 21);
  (void)env.reset();
  CHECK(env.reward_scale() == 1.0);
  const StepOutcome out =
      env.step(decode_action(encode_action(0, 0, cfg), cfg.num_users, cfg));
  CHECK(out.reward == -out.info.crlb);
}

TEST_CASE("episodes end after t_subframes steps") {
  ScenarioConfig cfg = env_cfg();  // two subframes
  Environment env(cfg, 37);

  const ActionCode action = decode_action(encode_action(0, 0, cfg), cfg.num_users, cfg);
  CHECK_THROWS_AS(env.step(action), std::logic_error);
  CHECK_THROWS_AS(env.oracle_channel(), std::logic_error);

  (void)env.reset();
  CHECK_FALSE(env.step(action).done);
  const StepOutcome last = env.step(action);
  CHECK(last.done);
  CHECK(env.done());
  CHECK_THROWS_AS(env.step(action), std::logic_error);

  ActionCode bad = action;
  (void)env.reset();
  bad.user_index = cfg.num_users;
  CHECK_THROWS_AS(env.step(bad), std::out_of_range);
}

TEST_CASE("scene evolution ignores the actions taken") {
  const ScenarioConfig cfg = env_cfg();
  Environment a(cfg, 77);
  Environment b(cfg, 77);
  (void)a.reset();
  (void)b.reset();

  const ActionCode first = decode_action(encode_action(0, 0, cfg), cfg.num_users, cfg);
  const ActionCode second = decode_action(encode_action(1, 7, cfg), cfg.num_users, cfg);

  const StepOutcome oa = a.step(first);
  const StepOutcome ob = b.step(second);

  CHECK(a.oracle_target().kin.angle_rad == b.oracle_target().kin.angle_rad);
  CHECK(a.oracle_target().kin.range_m == b.oracle_target().kin.range_m);
  CHECK(*oa.next_state.s_p[2] == *ob.next_state.s_p[2]);

  // Rewards differ because the precoders differ, not the scene.
  const auto& blocks_a = a.oracle_subframe_blocks();
  const auto& blocks_b = b.oracle_subframe_blocks();
  REQUIRE(blocks_a.size() == blocks_b.size());
  for (size_t l = 0; l < blocks_a.size(); ++l) {
    for (size_t i = 0; i < blocks_a[l].size(); ++i) {
      CHECK((blocks_a[l][i] - blocks_b[l][i]).norm() == 0.0);
    }
  }
}

TEST_CASE("oracle accessors do not advance the environment") {
  const ScenarioConfig cfg = env_cfg();
  Environment a(cfg, 99);
  Environment b(cfg, 99);
  (void)a.reset();
  (void)b.reset();

  // Touch the oracles on one instance only.
  (void)a.oracle_channel();
  (void)a.oracle_subframe_blocks();
  (void)a.oracle_target();

  const ActionCode action = decode_action(encode_action(1, 2, cfg), cfg.num_users, cfg);
  const StepOutcome oa = a.step(action);
  const StepOutcome ob = b.step(action);
  CHECK(oa.reward == ob.reward);
  CHECK(oa.cost == ob.cost);
  CHECK(oa.info.crlb == ob.info.crlb);
}

TEST_CASE("step_with_precoder validates its input") {
  const ScenarioConfig cfg = env_cfg();
  Environment env(cfg, 5);
  (void)env.reset();

  Precoder good = Precoder::from_codewords({3, 4}, env.codebook());
  const StepOutcome out = env.step_with_precoder(good);
  CHECK(std::isfinite(out.cost));
  CHECK(env.precoder().codeword == std::vector<int>{3, 4});

  Precoder wrong_shape = Precoder::from_codewords({3}, env.codebook());
  CHECK_THROWS_AS(env.step_with_precoder(wrong_shape), std::invalid_argument);

  Precoder scaled = good;
  scaled.f *= 0.3;
  CHECK_THROWS_AS(env.step_with_precoder(scaled), std::invalid_argument);
}

TEST_CASE("csi noise perturbs only the beamspace observation") {
  ScenarioConfig clean_cfg = env_cfg();
  ScenarioConfig noisy_cfg = clean_cfg;
  noisy_cfg.csi_error_std = 0.5;

  Environment clean(clean_cfg, 13);
  Environment noisy(noisy_cfg, 13);
  const EnvState sc = clean.reset();
  const EnvState sn = noisy.reset();

  bool differs = false;
  for (int64_t i = 0; i < sc.s_h->size() && !differs; ++i) {
    differs = (*sc.s_h)[i] != (*sn.s_h)[i];
  }
  CHECK(differs);
  // The scene itself is untouched.
  CHECK(clean.oracle_target().kin.angle_rad == noisy.oracle_target().kin.angle_rad);
  CHECK(*sc.s_p[2] == *sn.s_p[2]);
}

TEST_CASE("full misdetection inverts the occupancy map") {
  ScenarioConfig clean_cfg = env_cfg();
  ScenarioConfig flipped_cfg = clean_cfg;
  flipped_cfg.spectrum_flip_prob = 1.0;

  Environment clean(clean_cfg, 29);
  Environment flipped(flipped_cfg, 29);
  const EnvState sc = clean.reset();
  const EnvState sf = flipped.reset();

  const Spectrum& p = *sc.s_p[2];
  const Spectrum& q = *sf.s_p[2];
  REQUIRE(p.size() == q.size());
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] == kSpectrumEmpty) {
      CHECK(q[i] == kSpectrumUser);
    } else {
      CHECK(q[i] == kSpectrumEmpty);
    }
  }
}
