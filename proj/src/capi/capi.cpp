#include "ce2/ce2.h"

#include <cstdio>
#include <cstring>
#include <string>

#include "ce2/env.hpp"
#include "ce2/runner.hpp"

namespace {

void write_err(char* err, size_t err_len, const char* message) {
    if (err == nullptr || err_len == 0) return;
    std::snprintf(err, err_len, "%s", message);
}

struct EnvHandle {
    ce2::Env env;
};

const ce2::Env& unwrap(const ce2_env* env) {
    return reinterpret_cast<const EnvHandle*>(env)->env;
}

ce2::Env& unwrap(ce2_env* env) { return reinterpret_cast<EnvHandle*>(env)->env; }

ce2_status step_impl(ce2_env* env, const ce2::ActionVec& action, double* next_state_out,
                     int* reached_out, char* err, size_t err_len) {
    try {
        const ce2::StepResult r = unwrap(env).step(action);
        if (next_state_out != nullptr) {
            std::memcpy(next_state_out, r.next_state.data(),
                        r.next_state.size() * sizeof(double));
        }
        if (reached_out != nullptr) *reached_out = r.reached ? 1 : 0;
        return CE2_OK;
    } catch (const ce2::EpisodeExhausted& e) {
        write_err(err, err_len, e.what());
        return CE2_ERR_STATE;
    } catch (const std::exception& e) {
        write_err(err, err_len, e.what());
        return CE2_ERR_ARG;
    }
}

}  // namespace

extern "C" {

const char* ce2_version(void) { return "0.1.0"; }

ce2_status ce2_run(const char* config_path, const char* out_dir_override, char* err,
                   size_t err_len) {
    if (config_path == nullptr) {
        write_err(err, err_len, "config_path is null");
        return CE2_ERR_ARG;
    }
    try {
        ce2::ExperimentConfig config = ce2::parse_config_file(config_path);
        if (out_dir_override != nullptr && *out_dir_override != '\0') {
            config.out_dir = out_dir_override;
        }
        const ce2::RunResult result = ce2::run(config);
        if (result.exit_code != 0) {
            write_err(err, err_len, result.error.c_str());
            return result.exit_code == 2 ? CE2_ERR_CONFIG : CE2_ERR_RUN;
        }
        return CE2_OK;
    } catch (const ce2::ConfigError& e) {
        write_err(err, err_len, e.what());
        return CE2_ERR_CONFIG;
    } catch (const std::exception& e) {
        write_err(err, err_len, e.what());
        return CE2_ERR_RUN;
    }
}

ce2_status ce2_eval(const char* config_path, const char* policy_path, double* success_out,
                    char* err, size_t err_len) {
    if (config_path == nullptr || policy_path == nullptr || success_out == nullptr) {
        write_err(err, err_len, "null argument");
        return CE2_ERR_ARG;
    }
    try {
        const ce2::ExperimentConfig config = ce2::parse_config_file(config_path);
        *success_out = ce2::eval_saved_policy(config, policy_path);
        return CE2_OK;
    } catch (const ce2::ConfigError& e) {
        write_err(err, err_len, e.what());
        return CE2_ERR_CONFIG;
    } catch (const std::exception& e) {
        write_err(err, err_len, e.what());
        return CE2_ERR_RUN;
    }
}

ce2_status ce2_compare(const char* const* summary_paths, size_t n_paths, const char* out_path,
                       char* err, size_t err_len) {
    if (summary_paths == nullptr || n_paths == 0) {
        write_err(err, err_len, "no summary paths");
        return CE2_ERR_ARG;
    }
    try {
        std::vector<std::string> paths(summary_paths, summary_paths + n_paths);
        const std::string table = ce2::compare_summaries(paths);
        if (out_path == nullptr) {
            std::fputs(table.c_str(), stdout);
        } else {
            std::FILE* f = std::fopen(out_path, "w");
            if (f == nullptr) {
                write_err(err, err_len, "cannot open output file");
                return CE2_ERR_RUN;
            }
            std::fputs(table.c_str(), f);
            std::fclose(f);
        }
        return CE2_OK;
    } catch (const std::exception& e) {
        write_err(err, err_len, e.what());
        return CE2_ERR_RUN;
    }
}

ce2_status ce2_export_snapshots(const char* snapshots_path, const char* csv_path, char* err,
                                size_t err_len) {
    if (snapshots_path == nullptr || csv_path == nullptr) {
        write_err(err, err_len, "null path");
        return CE2_ERR_ARG;
    }
    try {
        ce2::export_snapshots_csv(snapshots_path, csv_path);
        return CE2_OK;
    } catch (const std::exception& e) {
        write_err(err, err_len, e.what());
        return CE2_ERR_RUN;
    }
}

ce2_env* ce2_env_create(const char* name, char* err, size_t err_len) {
    if (name == nullptr) {
        write_err(err, err_len, "name is null");
        return nullptr;
    }
    try {
        auto* handle = new EnvHandle{ce2::Env(ce2::builtin_spec(name))};
        return reinterpret_cast<ce2_env*>(handle);
    } catch (const std::exception& e) {
        write_err(err, err_len, e.what());
        return nullptr;
    }
}

ce2_env* ce2_env_create_from_map(const char* kind, const char* map_text, int max_episode_len,
                                 double success_radius, char* err, size_t err_len) {
    if (kind == nullptr || map_text == nullptr) {
        write_err(err, err_len, "null argument");
        return nullptr;
    }
    try {
        const ce2::GridLayout layout = ce2::GridLayout::from_text(map_text);
        ce2::EnvSpec spec;
        if (std::strcmp(kind, "grid") == 0) {
            spec = ce2::make_grid_maze("custom_grid", layout, max_episode_len, success_radius);
        } else if (std::strcmp(kind, "point") == 0) {
            spec = ce2::make_point_maze("custom_point", layout, max_episode_len, success_radius);
        } else {
            write_err(err, err_len, "kind must be \"grid\" or \"point\"");
            return nullptr;
        }
        auto* handle = new EnvHandle{ce2::Env(spec)};
        return reinterpret_cast<ce2_env*>(handle);
    } catch (const std::exception& e) {
        write_err(err, err_len, e.what());
        return nullptr;
    }
}

void ce2_env_destroy(ce2_env* env) { delete reinterpret_cast<EnvHandle*>(env); }

int ce2_env_state_dim(const ce2_env* env) { return unwrap(env).spec().state_dim; }
int ce2_env_action_dim(const ce2_env* env) { return unwrap(env).spec().action_dim; }
int ce2_env_action_count(const ce2_env* env) { return unwrap(env).spec().action_count; }
int ce2_env_max_episode_len(const ce2_env* env) { return unwrap(env).spec().max_episode_len; }

ce2_status ce2_env_reset(ce2_env* env, uint64_t seed, double* state_out) {
    if (env == nullptr || state_out == nullptr) return CE2_ERR_ARG;
    const ce2::Vec state = unwrap(env).reset(seed);
    std::memcpy(state_out, state.data(), state.size() * sizeof(double));
    return CE2_OK;
}

ce2_status ce2_env_step(ce2_env* env, const double* action, size_t action_dim,
                        double* next_state_out, int* reached_out, char* err, size_t err_len) {
    if (env == nullptr || action == nullptr) {
        write_err(err, err_len, "null argument");
        return CE2_ERR_ARG;
    }
    ce2::ActionVec a;
    a.values.assign(action, action + action_dim);
    return step_impl(env, a, next_state_out, reached_out, err, err_len);
}

ce2_status ce2_env_step_discrete(ce2_env* env, int action_index, double* next_state_out,
                                 int* reached_out, char* err, size_t err_len) {
    if (env == nullptr) {
        write_err(err, err_len, "null argument");
        return CE2_ERR_ARG;
    }
    try {
        const ce2::ActionVec a = ce2::action_vector(unwrap(env).spec(), action_index);
        return step_impl(env, a, next_state_out, reached_out, err, err_len);
    } catch (const std::exception& e) {
        write_err(err, err_len, e.what());
        return CE2_ERR_ARG;
    }
}

ce2_status ce2_env_set_goal(ce2_env* env, const double* goal, size_t dim) {
    if (env == nullptr || goal == nullptr) return CE2_ERR_ARG;
    if (static_cast<int>(dim) != unwrap(env).spec().state_dim) return CE2_ERR_ARG;
    unwrap(env).set_goal(ce2::Vec(goal, goal + dim));
    return CE2_OK;
}

ce2_status ce2_env_clear_goal(ce2_env* env) {
    if (env == nullptr) return CE2_ERR_ARG;
    unwrap(env).clear_goal();
    return CE2_OK;
}

ce2_status ce2_env_success(const ce2_env* env, const double* state, const double* goal,
                           size_t dim, int* out) {
    if (env == nullptr || state == nullptr || goal == nullptr || out == nullptr) {
        return CE2_ERR_ARG;
    }
    try {
        *out = ce2::success(ce2::Vec(state, state + dim), ce2::Vec(goal, goal + dim),
                            unwrap(env).spec())
                   ? 1
                   : 0;
        return CE2_OK;
    } catch (const std::exception&) {
        return CE2_ERR_ARG;
    }
}

ce2_status ce2_env_discretize(const ce2_env* env, const double* state, size_t dim,
                              int* cell_out) {
    if (env == nullptr || state == nullptr || cell_out == nullptr) return CE2_ERR_ARG;
    try {
        *cell_out = ce2::discretize(ce2::Vec(state, state + dim), unwrap(env).spec());
        return CE2_OK;
    } catch (const std::exception&) {
        return CE2_ERR_ARG;
    }
}

}  // extern "C"
