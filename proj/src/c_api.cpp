#include "epg/epg.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "epg/scenario.hpp"

struct epg_scenario {
  epg::Scenario value;
};

struct epg_trajectory {
  epg::SimulationResult value;
};

namespace {

thread_local std::string g_message;
thread_local std::string g_kind;

epg_status status_for(epg::ErrorCode code) {
  using epg::ErrorCode;
  switch (code) {
    case ErrorCode::StepSizeUnderflow:
    case ErrorCode::InvariantBreach:
    case ErrorCode::NSViolation:
    case ErrorCode::DissipationViolation:
      return EPG_ERR_INTEGRATION;
    case ErrorCode::PreconditionViolated:
    case ErrorCode::TargetBelowFloor:
      return EPG_ERR_PRECONDITION;
    case ErrorCode::IoError:
      return EPG_ERR_IO;
    default:
      return EPG_ERR_VALIDATION;
  }
}

epg_status fail(epg_status status, std::string kind, std::string message) {
  g_kind = std::move(kind);
  g_message = std::move(message);
  return status;
}

template <class F>
epg_status guarded(F&& body) {
  try {
    return body();
  } catch (const epg::Error& e) {
    return fail(status_for(e.code()), std::string(epg::to_string(e.code())), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(EPG_ERR_VALIDATION, "ParseError", e.what());
  } catch (const std::bad_alloc&) {
    return fail(EPG_ERR_INTERNAL, "Internal", "out of memory");
  } catch (const std::exception& e) {
    return fail(EPG_ERR_INTERNAL, "Internal", e.what());
  }
}

epg_status null_argument(const char* what) {
  return fail(EPG_ERR_ARGUMENT, "InvalidArgument", std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::ofstream open_out(const char* path) {
  std::ofstream out(path);
  if (!out) throw epg::Error(epg::ErrorCode::IoError, std::string("cannot write ") + path);
  return out;
}

}  // namespace

extern "C" {

const char* epg_version(void) { return "1.0.0"; }
const char* epg_last_error(void) { return g_message.c_str(); }
const char* epg_last_error_kind(void) { return g_kind.c_str(); }
void epg_string_free(char* s) { std::free(s); }

epg_status epg_scenario_load(const char* path, epg_scenario** out) {
  if (path == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    *out = new epg_scenario{epg::Scenario::load(path)};
    return EPG_OK;
  });
}

epg_status epg_scenario_parse(const char* json_text, epg_scenario** out) {
  if (json_text == nullptr) return null_argument("json_text");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    *out = new epg_scenario{epg::Scenario::parse(json_text)};
    return EPG_OK;
  });
}

void epg_scenario_free(epg_scenario* scenario) { delete scenario; }

epg_status epg_scenario_clone(const epg_scenario* scenario, epg_scenario** out) {
  if (scenario == nullptr) return null_argument("scenario");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    *out = new epg_scenario{scenario->value};
    return EPG_OK;
  });
}

epg_status epg_scenario_set_number(epg_scenario* scenario, const char* key, double value) {
  if (scenario == nullptr) return null_argument("scenario");
  if (key == nullptr) return null_argument("key");
  return guarded([&] {
    scenario->value = epg::with_number(scenario->value, key, value);
    return EPG_OK;
  });
}

epg_status epg_scenario_get_number(const epg_scenario* scenario, const char* key, double* value) {
  if (scenario == nullptr) return null_argument("scenario");
  if (key == nullptr) return null_argument("key");
  if (value == nullptr) return null_argument("value");
  const auto v = epg::lookup_number(scenario->value.tree, key);
  if (!v) return fail(EPG_ERR_ARGUMENT, "InvalidArgument", std::string("no numeric value at ") + key);
  *value = *v;
  return EPG_OK;
}

epg_status epg_scenario_to_json(const epg_scenario* scenario, char** json_out) {
  if (scenario == nullptr) return null_argument("scenario");
  if (json_out == nullptr) return null_argument("json_out");
  return guarded([&] {
    *json_out = dup_string(scenario->value.tree.dump(2));
    return EPG_OK;
  });
}

epg_status epg_scenario_save(const epg_scenario* scenario, const char* path) {
  if (scenario == nullptr) return null_argument("scenario");
  if (path == nullptr) return null_argument("path");
  return guarded([&] {
    auto out = open_out(path);
    out << scenario->value.tree.dump(2) << '\n';
    return EPG_OK;
  });
}

epg_status epg_design_report(const epg_scenario* scenario, char** json_out) {
  if (scenario == nullptr) return null_argument("scenario");
  if (json_out == nullptr) return null_argument("json_out");
  return guarded([&] {
    const auto& s = scenario->value;
    *json_out = dup_string(epg::design_report(s, s.design()).dump(2));
    return EPG_OK;
  });
}

epg_status epg_design_embed(const epg_scenario* scenario, const char* path) {
  if (scenario == nullptr) return null_argument("scenario");
  if (path == nullptr) return null_argument("path");
  return guarded([&] {
    const auto& s = scenario->value;
    auto tree = s.tree;
    tree["design_report"] = epg::design_report(s, s.design());
    auto out = open_out(path);
    out << tree.dump(2) << '\n';
    return EPG_OK;
  });
}

epg_status epg_simulate(const epg_scenario* scenario, epg_trajectory** out) {
  if (scenario == nullptr) return null_argument("scenario");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    *out = new epg_trajectory{epg::simulate(scenario->value)};
    return EPG_OK;
  });
}

void epg_trajectory_free(epg_trajectory* trajectory) { delete trajectory; }

size_t epg_trajectory_size(const epg_trajectory* trajectory) {
  return trajectory == nullptr ? 0 : trajectory->value.trajectory.samples.size();
}

epg_status epg_trajectory_sample(const epg_trajectory* trajectory, size_t index, epg_sample* out) {
  if (trajectory == nullptr) return null_argument("trajectory");
  if (out == nullptr) return null_argument("out");
  const auto& samples = trajectory->value.trajectory.samples;
  if (index >= samples.size()) {
    return fail(EPG_ERR_ARGUMENT, "InvalidArgument", "sample index out of range");
  }
  const auto& s = samples[index];
  *out = epg_sample{s.t, s.state.I, s.state.R, s.B, s.state.q, s.reward_cost, s.lyapunov};
  return EPG_OK;
}

epg_status epg_trajectory_write_csv(const epg_trajectory* trajectory, const char* path) {
  if (trajectory == nullptr) return null_argument("trajectory");
  if (path == nullptr) return null_argument("path");
  return guarded([&] {
    auto out = open_out(path);
    epg::write_trajectory_csv(out, trajectory->value.trajectory);
    return EPG_OK;
  });
}

epg_status epg_trajectory_write_svg(const epg_trajectory* trajectory, const char* path,
                                    const char* title) {
  if (trajectory == nullptr) return null_argument("trajectory");
  if (path == nullptr) return null_argument("path");
  return guarded([&] {
    auto out = open_out(path);
    epg::write_trajectory_svg(out, trajectory->value, title ? title : "trajectory");
    return EPG_OK;
  });
}

epg_status epg_trajectory_summary(const epg_trajectory* trajectory, char** json_out) {
  if (trajectory == nullptr) return null_argument("trajectory");
  if (json_out == nullptr) return null_argument("json_out");
  return guarded([&] {
    *json_out = dup_string(epg::summary_report(trajectory->value).dump(2));
    return EPG_OK;
  });
}

epg_status epg_pi_star(const epg_scenario* scenario, double upsilon, double alpha, double tol,
                       double* out) {
  if (scenario == nullptr) return null_argument("scenario");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    const auto& s = scenario->value;
    const auto problem = epg::make_bound_problem(s.params, s.profile, s.design(), upsilon);
    *out = epg::pi_star(problem, alpha, tol > 0.0 ? tol : 1e-4);
    return EPG_OK;
  });
}

epg_status epg_bound_table(const epg_scenario* scenario, const double* upsilons, size_t count,
                           const epg_bound_options* options, const char* csv_path,
                           const char* svg_path, char** json_out) {
  if (scenario == nullptr) return null_argument("scenario");
  if (upsilons == nullptr && count > 0) return null_argument("upsilons");
  return guarded([&] {
    const double tol = options && options->tol > 0.0 ? options->tol : 1e-4;
    const int grid = options ? options->oracle_grid : 0;
    std::optional<double> beta_tilde;
    if (options && options->use_beta_tilde) beta_tilde = options->beta_tilde;
    const auto rows = epg::bound_table(scenario->value, {upsilons, count}, tol, grid, beta_tilde);
    if (csv_path != nullptr) {
      auto out = open_out(csv_path);
      epg::write_bound_csv(out, rows);
    }
    if (svg_path != nullptr) {
      auto out = open_out(svg_path);
      const epg::BoundCurve curve{scenario->value.name, rows};
      epg::write_bound_svg(out, std::span(&curve, 1), "anytime bound on I/I*", std::nullopt);
    }
    if (json_out != nullptr) {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& r : rows) {
        j.push_back({{"upsilon", r.upsilon},
                     {"alpha", r.alpha},
                     {"pi_star", r.pi_star},
                     {"floor", r.floor},
                     {"oracle_value", r.oracle ? nlohmann::json(*r.oracle) : nlohmann::json()}});
      }
      *json_out = dup_string(j.dump(2));
    }
    return EPG_OK;
  });
}

epg_status epg_select_upsilon(const epg_scenario* scenario, double target, double* upsilon,
                              double* bound, double* floor) {
  if (scenario == nullptr) return null_argument("scenario");
  if (upsilon == nullptr) return null_argument("upsilon");
  return guarded([&] {
    const auto sel = epg::select_upsilon(scenario->value, target);
    *upsilon = sel.upsilon;
    if (bound) *bound = sel.bound;
    if (floor) *floor = sel.floor;
    return EPG_OK;
  });
}

epg_status epg_sweep(const char* manifest_path, const char* out_dir, unsigned threads,
                     char** json_out) {
  if (manifest_path == nullptr) return null_argument("manifest_path");
  if (out_dir == nullptr) return null_argument("out_dir");
  return guarded([&] {
    const auto result = epg::run_sweep(manifest_path, out_dir, threads);
    if (json_out != nullptr) {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& job : result.jobs) {
        j.push_back({{"name", job.name}, {"ok", job.ok}, {"error", job.error}, {"metrics", job.metrics}});
      }
      *json_out = dup_string(j.dump(2));
    }
    if (!result.all_ok()) {
      return fail(EPG_ERR_INTEGRATION, "SweepJobFailed", "one or more sweep jobs failed");
    }
    return EPG_OK;
  });
}

}  // extern "C"
