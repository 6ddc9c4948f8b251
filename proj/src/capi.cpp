#include "sandboost/sandboost.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <iostream>
#include <new>
#include <string>

#include "sandboost/config.hpp"
#include "sandboost/grouped_data.hpp"
#include "sandboost/numeric.hpp"
#include "sandboost/plm.hpp"
#include "sandboost/report.hpp"

struct sb_dataset {
  sboost::GroupedDataset data;
};

struct sb_report {
  sboost::EstimateReport report;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_code;

template <class F>
sb_status guard(F&& f) {
  g_error.clear();
  g_code.clear();
  try {
    f();
    return SB_OK;
  } catch (const sboost::ConfigError& e) {
    g_code = e.code();
    g_error = e.what();
    return SB_ERR_CONFIG;
  } catch (const sboost::DataError& e) {
    g_code = e.code();
    g_error = e.what();
    return SB_ERR_DATA;
  } catch (const sboost::NumericError& e) {
    g_code = e.code();
    g_error = e.what();
    return SB_ERR_NUMERIC;
  } catch (const std::bad_alloc&) {
    g_code = "OutOfMemory";
    g_error = "out of memory";
    return SB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_code = "Internal";
    g_error = e.what();
    return SB_ERR_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

sboost::CsvSchema schema(const char* group_col, const char* y_col, const char* d_col, const char* const* x_cols,
                         size_t n_x, const char* subgroup_col) {
  if (!group_col || !y_col || !d_col) throw sboost::ConfigError("MissingColumn", "group, response and treatment columns are required");
  if (n_x > 0 && !x_cols) throw sboost::ConfigError("MissingColumn", "covariate list is NULL");
  sboost::CsvSchema s;
  s.group_col = group_col;
  s.y_col = y_col;
  s.d_col = d_col;
  for (size_t i = 0; i < n_x; ++i) s.x_cols.emplace_back(x_cols[i]);
  if (subgroup_col) s.subgroup_col = subgroup_col;
  return s;
}

void need(const void* p, const char* what) {
  if (!p) throw sboost::ConfigError("NullArgument", std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* sb_last_error(void) { return g_error.c_str(); }
const char* sb_last_error_code(void) { return g_code.c_str(); }
const char* sb_version(void) { return "0.1.0"; }

sb_status sb_dataset_load_csv(const char* path, const char* group_col, const char* y_col, const char* d_col,
                              const char* const* x_cols, size_t n_x, const char* subgroup_col, sb_dataset** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto* ds = new sb_dataset{sboost::load_csv(path, schema(group_col, y_col, d_col, x_cols, n_x, subgroup_col))};
    *out = ds;
  });
}

sb_status sb_dataset_parse_csv(const char* text, const char* group_col, const char* y_col, const char* d_col,
                               const char* const* x_cols, size_t n_x, const char* subgroup_col, sb_dataset** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = nullptr;
    *out = new sb_dataset{sboost::parse_csv(text, schema(group_col, y_col, d_col, x_cols, n_x, subgroup_col))};
  });
}

int sb_dataset_n_groups(const sb_dataset* data) { return data ? data->data.n_groups() : 0; }
int sb_dataset_n_obs(const sb_dataset* data) { return data ? data->data.n_obs() : 0; }
void sb_dataset_free(sb_dataset* data) { delete data; }

sb_status sb_fit(const sb_dataset* data, const char* options_json, sb_report** out) {
  return guard([&] {
    need(data, "data");
    need(out, "out");
    *out = nullptr;
    const sboost::PlmOptions opt = sboost::parse_fit_options(options_json ? options_json : "");
    *out = new sb_report{sboost::fit_plm(data->data, opt)};
  });
}

double sb_report_beta(const sb_report* r) { return r ? r->report.beta_hat : 0.0; }
double sb_report_variance(const sb_report* r) { return r ? r->report.v_hat : 0.0; }

void sb_report_ci(const sb_report* r, double* lower, double* upper) {
  if (!r) return;
  if (lower) *lower = r->report.ci_lower;
  if (upper) *upper = r->report.ci_upper;
}

sb_status sb_report_json(const sb_report* r, char** json_out) {
  return guard([&] {
    need(r, "report");
    need(json_out, "json_out");
    *json_out = dup(sboost::to_json(r->report));
  });
}

void sb_report_free(sb_report* r) { delete r; }

sb_status sb_simulate(const char* options_json, char** json_out, char** csv_out) {
  return guard([&] {
    need(json_out, "json_out");
    *json_out = nullptr;
    if (csv_out) *csv_out = nullptr;
    const sboost::SimulateOptions o = sboost::parse_simulate_options(options_json ? options_json : "");
    const sboost::ExperimentResult res =
        sboost::run_experiment(o.spec, sboost::build_methods(o), o.K, o.alpha, o.threads);
    std::cerr << "simulate: " << res.wall_seconds << " s wall time\n";
    std::string j = sboost::to_json(res);
    std::string c = sboost::experiment_csv(res);
    *json_out = dup(j);
    if (csv_out) *csv_out = dup(c);
  });
}

sb_status sb_population(const char* options_json, char** json_out, char** csv_out) {
  return guard([&] {
    need(json_out, "json_out");
    *json_out = nullptr;
    if (csv_out) *csv_out = nullptr;
    const sboost::PopulationOutput p =
        sboost::run_population(sboost::parse_population_options(options_json ? options_json : ""));
    *json_out = dup(p.json);
    if (csv_out) *csv_out = dup(p.csv);
  });
}

void sb_string_free(char* s) { std::free(s); }

}  // extern "C"
