#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sandboost/sandboost.h"

namespace {

using nlohmann::json;

// Options forwarded to the library only when given on the command line or in a config file.
class Forward {
public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto v = std::make_shared<T>();
    CLI::Option* o = app->add_option(flag, *v, help);
    collect_.push_back([o, v, key](json& j) {
      if (o->count() > 0) j[key] = *v;
    });
    return o;
  }
  CLI::Option* flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto v = std::make_shared<bool>(false);
    CLI::Option* o = app->add_flag(flag, *v, help);
    collect_.push_back([o, v, key](json& j) {
      if (o->count() > 0) j[key] = *v;
    });
    return o;
  }
  json build() const {
    json j = json::object();
    for (const auto& c : collect_) c(j);
    return j;
  }

private:
  std::vector<std::function<void(json&)>> collect_;
};

void add_boost_options(CLI::App* app, Forward& f) {
  const std::string g = "Sandwich boosting";
  f.add<int>(app, "--m-stop", "m_stop", "Maximum boosting iterations (CV searches 0..m-stop)")->group(g);
  f.add<double>(app, "--lambda-s", "lambda_s", "Fixed s step size")->group(g);
  f.add<double>(app, "--lambda-theta", "lambda_theta", "Projected-gradient step for theta")->group(g);
  f.add<std::string>(app, "--step", "step", "Step mode: fixed | variable")->group(g);
  f.add<double>(app, "--lambda-lo", "lambda_lo", "Lower end of the variable step interval")->group(g);
  f.add<double>(app, "--lambda-hi", "lambda_hi", "Upper end of the variable step interval")->group(g);
  f.add<double>(app, "--shrinkage", "shrinkage", "Shrinkage applied to variable steps")->group(g);
  f.add<double>(app, "--s-floor", "s_floor", "Lower bound on s")->group(g);
  f.add<int>(app, "--cv-folds", "cv_folds", "Folds for m_stop selection (< 2 disables)")->group(g);
  f.add<std::string>(app, "--learner", "learner", "Base learner: tree | knn")->group(g);
  f.add<int>(app, "--learner-depth", "learner_depth", "Tree depth of the base learner")->group(g);
  f.add<int>(app, "--learner-min-leaf", "learner_min_leaf", "Minimum leaf size of the base learner")->group(g);
  f.add<int>(app, "--learner-k", "learner_k", "Neighbours for the knn base learner")->group(g);
}

void add_nuisance_options(CLI::App* app, Forward& f) {
  const std::string g = "Nuisance regression";
  f.add<std::string>(app, "--nuisance", "nuisance", "Nuisance regressor: l2boost | knn | mean | zero")->group(g);
  f.add<int>(app, "--nuisance-rounds", "nuisance_rounds", "L2Boost rounds")->group(g);
  f.add<int>(app, "--nuisance-depth", "nuisance_depth", "L2Boost tree depth")->group(g);
  f.add<int>(app, "--nuisance-min-leaf", "nuisance_min_leaf", "L2Boost minimum leaf size")->group(g);
  f.add<double>(app, "--nuisance-shrinkage", "nuisance_shrinkage", "L2Boost shrinkage")->group(g);
  f.add<int>(app, "--nuisance-k", "nuisance_k", "Neighbours for knn nuisance fits")->group(g);
}

int fail(sb_status st) {
  std::cerr << "error [" << sb_last_error_code() << "]: " << sb_last_error() << "\n";
  return static_cast<int>(st);
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) {
    std::cerr << "error [WriteFailed]: cannot write '" << path << "'\n";
    return false;
  }
  return true;
}

struct Owned {
  char* p = nullptr;
  ~Owned() { sb_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

char fmt_buf[64];
const char* g10(double v) {
  std::snprintf(fmt_buf, sizeof fmt_buf, "%.10g", v);
  return fmt_buf;
}

// Expands "--config FILE" into long flags; flags already on the command line win.
bool expand_config(const CLI::App& app, std::vector<std::string>& args) {
  if (args.empty()) return true;
  const CLI::App* sub = nullptr;
  for (const CLI::App* s : app.get_subcommands([](const CLI::App*) { return true; }))
    if (s->get_name() == args[0]) sub = s;
  if (sub == nullptr) return true;
  std::string path;
  for (std::size_t k = 1; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
    if (args[k].rfind("--config=", 0) == 0) path = args[k].substr(9);
  }
  if (path.empty()) return true;
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error [ConfigError]: cannot read config file '" << path << "'\n";
    return false;
  }
  auto trim = [](std::string t) {
    const auto b = t.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return t.substr(b, t.find_last_not_of(" \t\r") - b + 1);
  };
  std::vector<std::string> extra;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error [ConfigError]: malformed config line '" << line << "'\n";
      return false;
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    const std::string flag = "--" + key;
    const CLI::Option* o = sub->get_option_no_throw(flag);
    if (o == nullptr || key == "config" || o->get_positional()) {
      std::cerr << "error [ConfigError]: unknown config key '" << key << "'\n";
      return false;
    }
    bool given = false;
    for (std::size_t k = 1; k < args.size(); ++k)
      if (args[k] == flag || args[k].rfind(flag + "=", 0) == 0) given = true;
    if (given) continue;
    if (o->get_type_size() == 0) {
      if (value == "true" || value == "1") extra.push_back(flag);
      else if (value != "false" && value != "0") {
        std::cerr << "error [ConfigError]: flag '" << key << "' expects true or false\n";
        return false;
      }
      continue;
    }
    extra.push_back(flag);
    extra.push_back(value);
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sandwich-boosted weighted estimation for grouped partially linear models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sb_version()));

  std::string config_path;

  // fit
  CLI::App* fit = app.add_subcommand("fit", "Estimate beta with cross-fitting on a CSV dataset");
  fit->add_option("--config", config_path, "Key-value config file (keys are long flag names)");
  Forward ff;
  std::string data_path, group_col, y_col, d_col, subgroup_col, fit_out = "report.json";
  std::vector<std::string> x_cols;
  bool multi_split = false;
  fit->add_option("--data", data_path, "Input CSV file")->required();
  fit->add_option("--group-col", group_col, "Group identifier column")->required();
  fit->add_option("--response", y_col, "Response column Y")->required();
  fit->add_option("--treatment", d_col, "Treatment column D")->required();
  fit->add_option("--covariates", x_cols, "Covariate columns X")->delimiter(',');
  fit->add_option("--subgroup-col", subgroup_col, "Subgroup column (nested correlation)");
  fit->add_option("--output", fit_out, "Report JSON path")->capture_default_str();
  ff.add<std::string>(fit, "--weights", "weights", "unweighted | sandwich-boost | ml | gee | het-gee");
  ff.add<std::string>(fit, "--correlation", "correlation", "equicorrelated | ar1 | nested");
  ff.add<int>(fit, "--folds", "folds", "Cross-fitting folds K (default 5)");
  CLI::Option* splits = ff.add<int>(fit, "--splits", "splits", "Number of sample splits S (default 1)");
  fit->add_flag("--multi-split", multi_split, "Use S = 50 sample splits unless --splits is given");
  ff.add<double>(fit, "--alpha", "alpha", "CI level is 1 - alpha (default 0.05)");
  ff.add<std::uint64_t>(fit, "--seed", "seed", "Master seed (default 1)");
  ff.add<int>(fit, "--threads", "threads", "Worker threads (1 = bitwise deterministic)");
  add_nuisance_options(fit, ff);
  add_boost_options(fit, ff);

  // simulate
  CLI::App* sim = app.add_subcommand("simulate", "Monte-Carlo experiment on a simulated scenario");
  sim->add_option("--config", config_path, "Key-value config file (keys are long flag names)");
  Forward sf;
  std::string scenario, sim_out;
  sim->add_option("scenario", scenario, "complexity | misspecification | corr-misspec | var-misspec")->required();
  sim->add_option("--output", sim_out, "Write <output>.json and <output>.csv");
  sf.add<double>(sim, "--lambda", "lambda", "Complexity: frequency of the variance function");
  sf.add<double>(sim, "--eta", "eta", "Misspecification: confounding strength (>= 1)");
  sf.add<int>(sim, "--n", "n", "Group size");
  sf.add<int>(sim, "--groups", "groups", "Number of groups I");
  sf.add<int>(sim, "--reps", "reps", "Monte-Carlo repetitions");
  sf.add<std::uint64_t>(sim, "--seed", "seed", "Master seed");
  sf.add<int>(sim, "--folds", "folds", "Cross-fitting folds K (default 2)");
  sf.add<double>(sim, "--alpha", "alpha", "CI level is 1 - alpha");
  sf.add<int>(sim, "--threads", "threads", "Worker threads (1 = bitwise deterministic)");
  sf.flag(sim, "--full", "full", "Use the full published group counts and 500 repetitions");
  sf.add<std::vector<std::string>>(sim, "--methods", "methods", "Subset of methods, comma separated")
      ->delimiter(',');
  add_nuisance_options(sim, sf);
  add_boost_options(sim, sf);

  // population
  CLI::App* pop = app.add_subcommand("population", "Exact population-level loss comparisons");
  pop->add_option("--config", config_path, "Key-value config file (keys are long flag names)");
  Forward pf;
  std::string example, pop_csv, pop_json;
  pop->add_option("example", example, "example21 (ARMA correlation) | example22 (step variance)")->required();
  pop->add_option("--csv", pop_csv, "Write the objective scan table to this file");
  pop->add_option("--json", pop_json, "Write the minimiser summary to this file");
  pf.add<std::string>(pop, "--setting", "setting", "example21 setting: a | b");
  pf.add<int>(pop, "--resolution", "resolution", "Number of scan points");
  pf.add<double>(pop, "--lambda", "lambda", "example22 slope lambda");
  pf.add<double>(pop, "--mu", "mu", "example22 location mu");
  pf.add<std::string>(pop, "--convention", "convention", "example22: variance | sd");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (!expand_config(app, args)) return SB_ERR_CONFIG;
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error [" << e.get_name() << "]: " << e.what() << "\n";
    return SB_ERR_CONFIG;
  }

  if (fit->parsed()) {
    json opts = ff.build();
    if (multi_split && splits->count() == 0) opts["splits"] = 50;
    std::vector<const char*> xs;
    for (const auto& c : x_cols) xs.push_back(c.c_str());
    sb_dataset* data = nullptr;
    sb_status st = sb_dataset_load_csv(data_path.c_str(), group_col.c_str(), y_col.c_str(), d_col.c_str(), xs.data(),
                                       xs.size(), subgroup_col.c_str(), &data);
    if (st != SB_OK) return fail(st);
    std::unique_ptr<sb_dataset, void (*)(sb_dataset*)> data_guard(data, sb_dataset_free);
    sb_report* rep = nullptr;
    st = sb_fit(data, opts.dump().c_str(), &rep);
    if (st != SB_OK) return fail(st);
    std::unique_ptr<sb_report, void (*)(sb_report*)> rep_guard(rep, sb_report_free);
    Owned j;
    st = sb_report_json(rep, &j.p);
    if (st != SB_OK) return fail(st);
    if (!write_file(fit_out, j.str() + "\n")) return 1;
    double lo = 0.0, hi = 0.0;
    sb_report_ci(rep, &lo, &hi);
    const double alpha = opts.contains("alpha") ? opts["alpha"].get<double>() : 0.05;
    std::cout << "beta_hat " << g10(sb_report_beta(rep)) << "\n";
    std::cout << "ci_" << g10(100.0 * (1.0 - alpha)) << " [" << g10(lo);
    std::cout << ", " << g10(hi) << "]\n";
    std::cout << "v_hat " << g10(sb_report_variance(rep)) << "\n";
    return 0;
  }

  if (sim->parsed()) {
    json opts = sf.build();
    opts["scenario"] = scenario;
    Owned j, c;
    const sb_status st = sb_simulate(opts.dump().c_str(), &j.p, &c.p);
    if (st != SB_OK) return fail(st);
    if (!sim_out.empty()) {
      if (!write_file(sim_out + ".json", j.str() + "\n")) return 1;
      if (!write_file(sim_out + ".csv", c.str())) return 1;
    }
    std::cout << c.str();
    return 0;
  }

  if (pop->parsed()) {
    json opts = pf.build();
    opts["example"] = example;
    Owned j, c;
    const sb_status st = sb_population(opts.dump().c_str(), &j.p, &c.p);
    if (st != SB_OK) return fail(st);
    if (!pop_csv.empty() && !write_file(pop_csv, c.str())) return 1;
    if (!pop_json.empty() && !write_file(pop_json, j.str() + "\n")) return 1;
    std::cout << j.str() << "\n";
    return 0;
  }
  return SB_ERR_CONFIG;
}
