#include "isacsim/isacsim.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <ios>
#include <limits>
#include <string>
#include <vector>

#include "isacsim/baselines.hpp"
#include "isacsim/env.hpp"
#include "isacsim/harness.hpp"

struct isacsim_config {
  isacsim::ExperimentConfig cfg;
};

struct isacsim_env {
  isacsim::ExperimentConfig cfg;
  isacsim::Environment env;

  isacsim_env(const isacsim::ExperimentConfig& c, uint64_t seed)
      : cfg(c), env(c.scenario, seed) {}
};

namespace {

thread_local std::string g_last_error;

void set_error(const char* what) { g_last_error = what ? what : ""; }

template <typename Fn>
isacsim_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    g_last_error.clear();
    return ISACSIM_OK;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return ISACSIM_ERR_INVALID_ARGUMENT;
  } catch (const nlohmann::json::exception& e) {
    // All JSON reaching the library is caller input.
    set_error(e.what());
    return ISACSIM_ERR_INVALID_ARGUMENT;
  } catch (const std::ios_base::failure& e) {
    set_error(e.what());
    return ISACSIM_ERR_IO;
  } catch (const std::exception& e) {
    set_error(e.what());
    return ISACSIM_ERR_RUNTIME;
  } catch (...) {
    set_error("unknown error");
    return ISACSIM_ERR_RUNTIME;
  }
}

template <typename Fn>
auto guarded_ptr(Fn&& fn) noexcept -> decltype(fn()) {
  try {
    auto* p = fn();
    g_last_error.clear();
    return p;
  } catch (const std::exception& e) {
    set_error(e.what());
    return nullptr;
  } catch (...) {
    set_error("unknown error");
    return nullptr;
  }
}

isacsim_status bad_handle(const char* what) {
  set_error(what);
  return ISACSIM_ERR_BAD_HANDLE;
}

}  // namespace

extern "C" {

const char* isacsim_version(void) { return "0.1.0"; }

const char* isacsim_last_error(void) { return g_last_error.c_str(); }

void isacsim_free(void* ptr) { std::free(ptr); }

isacsim_config* isacsim_config_default(void) {
  return guarded_ptr([] { return new isacsim_config{}; });
}

isacsim_config* isacsim_config_load(const char* path) {
  return guarded_ptr([&]() -> isacsim_config* {
    if (path == nullptr) throw std::invalid_argument("config_load: null path");
    return new isacsim_config{isacsim::load_experiment_config(path)};
  });
}

isacsim_config* isacsim_config_parse(const char* json_text) {
  return guarded_ptr([&]() -> isacsim_config* {
    if (json_text == nullptr) throw std::invalid_argument("config_parse: null text");
    const nlohmann::json j = nlohmann::json::parse(json_text);
    return new isacsim_config{j.get<isacsim::ExperimentConfig>()};
  });
}

isacsim_status isacsim_config_set(isacsim_config* config, const char* dotted_path,
                                  const char* json_value) {
  if (config == nullptr) return bad_handle("config_set: null config");
  return guarded([&] {
    if (dotted_path == nullptr || json_value == nullptr) {
      throw std::invalid_argument("config_set: null argument");
    }
    std::string pointer = "/";
    for (const char* c = dotted_path; *c != '\0'; ++c) {
      pointer += (*c == '.') ? '/' : *c;
    }
    nlohmann::json j = config->cfg;
    j[nlohmann::json::json_pointer(pointer)] = nlohmann::json::parse(json_value);
    // Round-trip through the typed config so unknown keys and types fail here.
    config->cfg = j.get<isacsim::ExperimentConfig>();
  });
}

char* isacsim_config_dump(const isacsim_config* config) {
  return guarded_ptr([&]() -> char* {
    if (config == nullptr) throw std::invalid_argument("config_dump: null config");
    const nlohmann::json j = config->cfg;
    const std::string text = j.dump(2);
    char* out = static_cast<char*>(std::malloc(text.size() + 1));
    if (out == nullptr) throw std::runtime_error("config_dump: allocation failed");
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
  });
}

void isacsim_config_destroy(isacsim_config* config) { delete config; }

isacsim_env* isacsim_env_create(const isacsim_config* config, uint64_t seed) {
  return guarded_ptr([&]() -> isacsim_env* {
    if (config == nullptr) throw std::invalid_argument("env_create: null config");
    return new isacsim_env(config->cfg, seed);
  });
}

isacsim_status isacsim_env_reset(isacsim_env* env) {
  if (env == nullptr) return bad_handle("env_reset: null env");
  return guarded([&] { env->env.reset(); });
}

isacsim_status isacsim_env_state_dims(const isacsim_env* env, int32_t* sh_dims,
                                      int32_t* sp_dims, int32_t* action_dim) {
  if (env == nullptr) return bad_handle("env_state_dims: null env");
  return guarded([&] {
    const isacsim::ScenarioConfig& sc = env->env.config();
    if (sh_dims != nullptr) {
      sh_dims[0] = 1;
      sh_dims[1] = sc.n_d;
      sh_dims[2] = sc.u_max;
      sh_dims[3] = sc.g_t;
    }
    if (sp_dims != nullptr) {
      sp_dims[0] = 1;
      sp_dims[1] = 3;
      sp_dims[2] = sc.n_x;
      sp_dims[3] = sc.n_y;
    }
    if (action_dim != nullptr) *action_dim = sc.action_dim();
  });
}

isacsim_status isacsim_env_observe(const isacsim_env* env, double* sh_out,
                                   int64_t sh_len, double* sp_out, int64_t sp_len) {
  if (env == nullptr) return bad_handle("env_observe: null env");
  return guarded([&] {
    if (!env->env.started() || env->env.done()) {
      throw std::runtime_error("env_observe: no live episode; call env_reset");
    }
    const isacsim::ScenarioConfig& sc = env->env.config();
    const isacsim::EnvState& s = env->env.state();
    const int64_t want_sh = static_cast<int64_t>(sc.n_d) * sc.u_max * sc.g_t;
    const int64_t want_sp = static_cast<int64_t>(3) * sc.n_x * sc.n_y;
    if (sh_out != nullptr) {
      if (sh_len != want_sh) throw std::invalid_argument("env_observe: sh_len mismatch");
      std::memcpy(sh_out, s.s_h->data(), sizeof(double) * static_cast<size_t>(want_sh));
    }
    if (sp_out != nullptr) {
      if (sp_len != want_sp) throw std::invalid_argument("env_observe: sp_len mismatch");
      const isacsim::Tensor sp = s.s_p_tensor(sc.n_x, sc.n_y);
      std::memcpy(sp_out, sp.data(), sizeof(double) * static_cast<size_t>(want_sp));
    }
  });
}

isacsim_status isacsim_env_step(isacsim_env* env, const double* action_raw,
                                int64_t action_len, isacsim_step_info* info) {
  if (env == nullptr) return bad_handle("env_step: null env");
  return guarded([&] {
    const isacsim::ScenarioConfig& sc = env->env.config();
    if (action_raw == nullptr) throw std::invalid_argument("env_step: null action");
    if (action_len != sc.action_dim()) {
      throw std::invalid_argument("env_step: action length mismatch");
    }
    const std::vector<double> raw(action_raw, action_raw + action_len);
    const isacsim::ActionCode code = isacsim::decode_action(raw, sc.num_users, sc);
    const isacsim::StepOutcome out = env->env.step(code);
    if (info != nullptr) {
      info->reward = out.reward;
      info->cost = out.cost;
      info->se = out.info.se;
      info->crlb = out.info.crlb;
      info->min_sinr = out.info.constraints.min_sinr;
      info->user_index = code.user_index;
      info->codeword_index = code.codeword_index;
      info->sinr_violations = out.info.constraints.violations;
      info->done = out.done ? 1 : 0;
    }
  });
}

isacsim_status isacsim_env_budget(const isacsim_env* env, double* gamma,
                                  double* eta_c, double* gamma_c) {
  if (env == nullptr) return bad_handle("env_budget: null env");
  return guarded([&] {
    const isacsim::EpisodeBudget b = isacsim::episode_budget(env->env.config());
    if (gamma != nullptr) *gamma = b.gamma;
    if (eta_c != nullptr) *eta_c = b.eta_c;
    if (gamma_c != nullptr) *gamma_c = b.gamma_c;
  });
}

void isacsim_env_destroy(isacsim_env* env) { delete env; }

isacsim_status isacsim_run_training(const isacsim_config* config) {
  if (config == nullptr) return bad_handle("run_training: null config");
  return guarded([&] {
    const isacsim::RunRecord record = isacsim::run_training(config->cfg);
    isacsim::export_plotdata(record, config->cfg.campaign.out_dir + "/plot");
  });
}

isacsim_status isacsim_run_eval(const isacsim_config* config, const char* policy) {
  if (config == nullptr) return bad_handle("run_eval: null config");
  return guarded([&] {
    if (policy == nullptr) throw std::invalid_argument("run_eval: null policy");
    isacsim::run_eval(config->cfg, isacsim::policy_kind_from_string(policy));
  });
}

isacsim_status isacsim_run_sweep(const isacsim_config* config, const char* axis,
                                 const double* values, int64_t n) {
  if (config == nullptr) return bad_handle("run_sweep: null config");
  return guarded([&] {
    const std::string axis_name = axis != nullptr ? axis : config->cfg.campaign.axis;
    std::vector<double> vals;
    if (values != nullptr && n > 0) {
      vals.assign(values, values + n);
    } else {
      vals = config->cfg.campaign.values;
    }
    isacsim::run_sweep(config->cfg, axis_name, vals);
  });
}

isacsim_status isacsim_export_plotdata(const char* run_dir, const char* out_dir) {
  return guarded([&] {
    if (run_dir == nullptr || out_dir == nullptr) {
      throw std::invalid_argument("export_plotdata: null directory");
    }
    const isacsim::RunRecord record = isacsim::load_run_record(run_dir);
    isacsim::export_plotdata(record, out_dir);
  });
}

}  // extern "C"
