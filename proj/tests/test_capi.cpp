#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "isacsim/isacsim.h"

namespace fs = std::filesystem;

namespace {

// Small enough to train in milliseconds; mirrors the library defaults
// everywhere it stays silent.
const char* kTinyJson = R"json({
  "scenario": {
    "n_t": 4, "n_r": 4, "m_subcarriers": 2, "l_cp": 4, "l_symbols": 2,
    "t_subframes": 2, "num_users": 2, "u_max": 4, "n_b": 4, "g_t": 4,
    "n_d": 2, "p_u": 2, "n_x": 4, "n_y": 4, "reward_scale_samples": 2
  },
  "agent": {
    "conv_filters": [2], "hidden": [8], "batch_size": 4,
    "replay_capacity": 64, "knn_k": 4
  },
  "campaign": {
    "episodes": 2, "eval_episodes": 1, "seeds": [1],
    "policies": ["random"], "axis": "snr", "values": [10.0],
    "out_dir": "PLACEHOLDER"
  }
})json";

struct ConfigHandle {
  isacsim_config* ptr;
  explicit ConfigHandle(isacsim_config* p) : ptr(p) {}
  ~ConfigHandle() { isacsim_config_destroy(ptr); }
  ConfigHandle(const ConfigHandle&) = delete;
  ConfigHandle& operator=(const ConfigHandle&) = delete;
};

struct EnvHandle {
  isacsim_env* ptr;
  explicit EnvHandle(isacsim_env* p) : ptr(p) {}
  ~EnvHandle() { isacsim_env_destroy(ptr); }
  EnvHandle(const EnvHandle&) = delete;
  EnvHandle& operator=(const EnvHandle&) = delete;
};

isacsim_config* tiny_config(const std::string& out_dir) {
  isacsim_config* cfg = isacsim_config_parse(kTinyJson);
  REQUIRE(cfg != nullptr);
  const std::string quoted = "\"" + out_dir + "\"";
  REQUIRE(isacsim_config_set(cfg, "campaign.out_dir", quoted.c_str()) == ISACSIM_OK);
  return cfg;
}

fs::path fresh_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("version and error strings are always readable") {
  const char* v = isacsim_version();
  REQUIRE(v != nullptr);
  CHECK(std::strcmp(v, "0.1.0") == 0);
  REQUIRE(isacsim_last_error() != nullptr);
}

TEST_CASE("config lifecycle through the c interface") {
  isacsim_config* cfg = isacsim_config_default();
  REQUIRE(cfg != nullptr);
  ConfigHandle guard(cfg);

  char* dump = isacsim_config_dump(cfg);
  REQUIRE(dump != nullptr);
  const std::string text(dump);
  isacsim_free(dump);
  CHECK(text.find("\"scenario\"") != std::string::npos);
  CHECK(text.find("\"agent\"") != std::string::npos);
  CHECK(text.find("\"campaign\"") != std::string::npos);
  CHECK(text.find("\"n_t\": 32") != std::string::npos);

  SUBCASE("dump parses back") {
    isacsim_config* back = isacsim_config_parse(text.c_str());
    REQUIRE(back != nullptr);
    ConfigHandle guard2(back);
    char* dump2 = isacsim_config_dump(back);
    REQUIRE(dump2 != nullptr);
    CHECK(text == dump2);
    isacsim_free(dump2);
  }

  SUBCASE("dotted set rewrites one field") {
    REQUIRE(isacsim_config_set(cfg, "scenario.num_users", "3") == ISACSIM_OK);
    REQUIRE(isacsim_config_set(cfg, "campaign.seeds", "[7,9]") == ISACSIM_OK);
    char* dump2 = isacsim_config_dump(cfg);
    REQUIRE(dump2 != nullptr);
    const std::string text2(dump2);
    isacsim_free(dump2);
    CHECK(text2.find("\"num_users\": 3") != std::string::npos);
    CHECK(text2.find("[\n      7,\n      9\n    ]") != std::string::npos);
  }

  SUBCASE("bad keys and bad values fail with a message") {
    CHECK(isacsim_config_set(cfg, "scenario.n_T", "4") ==
          ISACSIM_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(isacsim_last_error()) > 0);
    CHECK(isacsim_config_set(cfg, "scenario.num_users", "not json") ==
          ISACSIM_ERR_INVALID_ARGUMENT);
    CHECK(isacsim_config_set(nullptr, "scenario.num_users", "4") ==
          ISACSIM_ERR_BAD_HANDLE);
  }

  SUBCASE("parse and load report failures") {
    CHECK(isacsim_config_parse("{ definitely not json") == nullptr);
    CHECK(std::strlen(isacsim_last_error()) > 0);
    CHECK(isacsim_config_parse("{\"scenario\": {\"n_T\": 4}}") == nullptr);
    CHECK(isacsim_config_load("/nonexistent/isacsim.json") == nullptr);
  }
}

TEST_CASE("environment episodes through the c interface") {
  const fs::path dir = fresh_dir("isacsim_capi_env");
  ConfigHandle cfg(tiny_config(dir.string()));

  isacsim_env* env = isacsim_env_create(cfg.ptr, 5);
  REQUIRE(env != nullptr);
  EnvHandle guard(env);

  int32_t sh_dims[4] = {0, 0, 0, 0};
  int32_t sp_dims[4] = {0, 0, 0, 0};
  int32_t action_dim = 0;
  REQUIRE(isacsim_env_state_dims(env, sh_dims, sp_dims, &action_dim) == ISACSIM_OK);
  CHECK(sh_dims[0] == 1);
  CHECK(sh_dims[1] == 2);   // N_d
  CHECK(sh_dims[2] == 4);   // U_max
  CHECK(sh_dims[3] == 4);   // G_t
  CHECK(sp_dims[0] == 1);
  CHECK(sp_dims[1] == 3);
  CHECK(sp_dims[2] == 4);   // N_x
  CHECK(sp_dims[3] == 4);   // N_y
  CHECK(action_dim == 4);   // ceil(log2 4) + ceil(log2 4)

  const int64_t sh_len = int64_t{1} * sh_dims[1] * sh_dims[2] * sh_dims[3];
  const int64_t sp_len = int64_t{1} * sp_dims[1] * sp_dims[2] * sp_dims[3];
  std::vector<double> sh(static_cast<size_t>(sh_len));
  std::vector<double> sp(static_cast<size_t>(sp_len));

  SUBCASE("observation requires a live episode") {
    CHECK(isacsim_env_observe(env, sh.data(), sh_len, sp.data(), sp_len) ==
          ISACSIM_ERR_RUNTIME);
  }

  SUBCASE("full episode") {
    double gamma = 0.0, eta_c = 0.0, gamma_c = 0.0;
    REQUIRE(isacsim_env_budget(env, &gamma, &eta_c, &gamma_c) == ISACSIM_OK);
    CHECK(gamma == 0.6);
    CHECK(eta_c > 0.0);
    CHECK(gamma_c == doctest::Approx(-eta_c * (1.0 + 0.6)).epsilon(1e-12));

    REQUIRE(isacsim_env_reset(env) == ISACSIM_OK);
    REQUIRE(isacsim_env_observe(env, sh.data(), sh_len, sp.data(), sp_len) ==
            ISACSIM_OK);
    for (double v : sp) CHECK((v == 0.0 || v == 1.0 || v == 2.0));

    const std::vector<double> action = {1.0, 0.0, 0.0, 1.0};
    isacsim_step_info info;
    REQUIRE(isacsim_env_step(env, action.data(), 4, &info) == ISACSIM_OK);
    CHECK(info.done == 0);
    CHECK(std::isfinite(info.reward));
    CHECK(info.cost == -info.se);
    CHECK(info.user_index >= 0);
    CHECK(info.user_index < 2);
    CHECK(info.codeword_index >= 0);
    CHECK(info.codeword_index < 4);
    CHECK(info.min_sinr >= 0.0);
    CHECK(info.sinr_violations >= 0);

    REQUIRE(isacsim_env_step(env, action.data(), 4, &info) == ISACSIM_OK);
    CHECK(info.done == 1);

    // Stepping past the end is a runtime error until the next reset.
    CHECK(isacsim_env_step(env, action.data(), 4, &info) == ISACSIM_ERR_RUNTIME);
    REQUIRE(isacsim_env_reset(env) == ISACSIM_OK);
    REQUIRE(isacsim_env_step(env, action.data(), 4, nullptr) == ISACSIM_OK);
  }

  SUBCASE("argument validation") {
    REQUIRE(isacsim_env_reset(env) == ISACSIM_OK);
    const std::vector<double> action = {1.0, 0.0, 0.0, 1.0};
    isacsim_step_info info;
    CHECK(isacsim_env_step(env, action.data(), 3, &info) ==
          ISACSIM_ERR_INVALID_ARGUMENT);
    CHECK(isacsim_env_step(env, nullptr, 4, &info) == ISACSIM_ERR_INVALID_ARGUMENT);
    CHECK(isacsim_env_observe(env, sh.data(), sh_len - 1, sp.data(), sp_len) ==
          ISACSIM_ERR_INVALID_ARGUMENT);
    CHECK(isacsim_env_step(nullptr, action.data(), 4, &info) ==
          ISACSIM_ERR_BAD_HANDLE);
    CHECK(isacsim_env_reset(nullptr) == ISACSIM_ERR_BAD_HANDLE);
  }

  SUBCASE("invalid scenario fails at creation") {
    ConfigHandle bad(tiny_config(dir.string()));
    REQUIRE(isacsim_config_set(bad.ptr, "scenario.n_d", "9") == ISACSIM_OK);
    // l_cp = 4 cannot cover 9 taps.
    CHECK(isacsim_env_create(bad.ptr, 1) == nullptr);
    CHECK(std::strlen(isacsim_last_error()) > 0);
  }
}

TEST_CASE("campaign entry points through the c interface") {
  const fs::path dir = fresh_dir("isacsim_capi_run");
  ConfigHandle cfg(tiny_config((dir / "run").string()));

  REQUIRE(isacsim_run_training(cfg.ptr) == ISACSIM_OK);
  CHECK(fs::exists(dir / "run" / "train_log_seed1.csv"));
  CHECK(fs::exists(dir / "run" / "eval_log_seed1.csv"));
  CHECK(fs::exists(dir / "run" / "summary.json"));
  CHECK(fs::exists(dir / "run" / "checkpoint_seed1.bin"));
  CHECK(fs::exists(dir / "run" / "plot" / "learning_curves.csv"));

  REQUIRE(isacsim_run_eval(cfg.ptr, "greedy") == ISACSIM_OK);
  CHECK(fs::exists(dir / "run" / "eval_log_greedy_seed1.csv"));
  CHECK(isacsim_run_eval(cfg.ptr, "oracle") == ISACSIM_ERR_INVALID_ARGUMENT);
  CHECK(isacsim_run_eval(nullptr, "greedy") == ISACSIM_ERR_BAD_HANDLE);

  const double snrs[2] = {0.0, 10.0};
  REQUIRE(isacsim_run_sweep(cfg.ptr, "snr", snrs, 2) == ISACSIM_OK);
  CHECK(fs::exists(dir / "run" / "sweep_snr.csv"));
  // NULL axis and values fall back to the campaign block (axis snr, value 10).
  REQUIRE(isacsim_run_sweep(cfg.ptr, nullptr, nullptr, 0) == ISACSIM_OK);
  CHECK(isacsim_run_sweep(cfg.ptr, "power", snrs, 2) == ISACSIM_ERR_INVALID_ARGUMENT);

  const fs::path replot = dir / "replot";
  REQUIRE(isacsim_export_plotdata((dir / "run").string().c_str(),
                                  replot.string().c_str()) == ISACSIM_OK);
  CHECK(fs::exists(replot / "learning_curves.csv"));
  CHECK(fs::exists(replot / "crlb_vs_snr.csv"));
  CHECK(isacsim_export_plotdata((dir / "absent").string().c_str(),
                                replot.string().c_str()) != ISACSIM_OK);
}
