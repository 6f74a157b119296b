#include "cltlab/cli.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cltlab/error.hpp"
#include "cltlab/gallery.hpp"

namespace cltlab {

namespace {

const std::set<std::string> kRunKeys = {
    "command", "gallery", "model", "model_file", "n", "max_n", "m", "u", "reps", "seed",
    "centering", "tolerance", "workers", "format", "experiment", "output", "statistics_output"};

const std::map<std::string, std::set<std::string>> kPresetKeys = {
    {"two_state", {"a", "b", "f"}},
    {"iid", {"p", "f"}},
    {"iid_rademacher", {}},
    {"flip_flop", {}},
    {"truncated_renewal", {"N", "log_exponent"}},
    {"product_chain", {"components"}},
    {"block_diagonal", {"components", "weights"}},
};

const std::set<std::string> kPresetParameters = {"a", "b", "f", "p", "N",
                                                 "log_exponent", "components", "weights"};

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  throw_validation("BadConfig", "config key \"" + key + "\" " + why);
}

std::size_t count_of(const Json& json, const std::string& key) {
  const Json& v = json.at(key);
  if (!v.is_number_unsigned()) bad_key(key, "must be a non-negative integer");
  return v.get<std::size_t>();
}

std::string string_of(const Json& json, const std::string& key) {
  const Json& v = json.at(key);
  if (!v.is_string()) bad_key(key, "must be a string");
  return v.get<std::string>();
}

double number_of(const Json& json, const std::string& key) {
  const Json& v = json.at(key);
  if (!v.is_number()) bad_key(key, "must be a number");
  return v.get<double>();
}

Vector numbers_of(const Json& json, const std::string& key) {
  const Json& v = json.at(key);
  if (!v.is_array()) bad_key(key, "must be an array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) bad_key(key, "must be an array of numbers");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

void check_preset_keys(const Json& spec, const std::string& name) {
  const auto preset = kPresetKeys.find(name);
  if (preset == kPresetKeys.end()) {
    std::string known;
    for (const auto& [key, unused] : kPresetKeys) known += (known.empty() ? "" : ", ") + key;
    throw_validation("UnknownPreset",
                     "gallery preset \"" + name + "\" is not one of: " + known);
  }
  for (const auto& item : spec.items()) {
    if (item.key() == "gallery") continue;
    if (!preset->second.count(item.key())) {
      if (kPresetParameters.count(item.key())) {
        bad_key(item.key(), "does not apply to gallery preset \"" + name + "\"");
      }
      bad_key(item.key(), "is not recognised");
    }
  }
}

std::vector<Model> component_models(const Json& spec) {
  if (!spec.contains("components")) bad_key("components", "is required");
  const Json& list = spec.at("components");
  if (!list.is_array() || list.empty()) bad_key("components", "must be a non-empty array");
  std::vector<Model> models;
  for (const Json& item : list) models.push_back(gallery_model(item));
  return models;
}

}  // namespace

Model gallery_model(const Json& spec) {
  if (!spec.is_object()) throw_validation("BadConfig", "model source must be an object");
  if (spec.contains("model")) {
    if (spec.size() != 1) {
      throw_validation("BadConfig", "a model component takes no other keys");
    }
    return model_from_json(spec.at("model"));
  }
  if (!spec.contains("gallery")) {
    throw_validation("BadConfig", "component needs \"gallery\" or \"model\"");
  }
  const std::string name = string_of(spec, "gallery");
  check_preset_keys(spec, name);
  auto require = [&](const char* key) {
    if (!spec.contains(key)) bad_key(key, "is required by gallery preset \"" + name + "\"");
  };
  if (name == "two_state") {
    require("a");
    require("b");
    double f0 = -1.0, f1 = 1.0;
    if (spec.contains("f")) {
      const Vector f = numbers_of(spec, "f");
      if (f.size() != 2) bad_key("f", "must have 2 entries for two_state");
      f0 = f(0);
      f1 = f(1);
    }
    return two_state(number_of(spec, "a"), number_of(spec, "b"), f0, f1);
  }
  if (name == "iid") {
    require("p");
    require("f");
    return iid_chain(numbers_of(spec, "p"), numbers_of(spec, "f"));
  }
  if (name == "iid_rademacher") return iid_rademacher();
  if (name == "flip_flop") return flip_flop();
  if (name == "truncated_renewal") {
    require("N");
    const double e = spec.contains("log_exponent") ? number_of(spec, "log_exponent") : 2.0;
    return truncated_renewal(count_of(spec, "N"), e).model;
  }
  if (name == "product_chain") {
    const auto models = component_models(spec);
    if (models.size() != 2) bad_key("components", "must list exactly 2 models for product_chain");
    return product_chain(models[0], models[1]);
  }
  // block_diagonal
  const auto models = component_models(spec);
  require("weights");
  const Vector weights = numbers_of(spec, "weights");
  if (static_cast<std::size_t>(weights.size()) != models.size()) {
    bad_key("weights", "must have one entry per component");
  }
  std::vector<std::pair<double, Model>> parts;
  for (std::size_t i = 0; i < models.size(); ++i) {
    parts.emplace_back(weights(static_cast<Eigen::Index>(i)), models[i]);
  }
  return block_diagonal(parts);
}

RunConfig parse_run_config(const Json& json) {
  if (!json.is_object()) throw_validation("BadConfig", "config must be a JSON object");
  for (const auto& item : json.items()) {
    if (!kRunKeys.count(item.key()) && !kPresetParameters.count(item.key())) {
      throw_validation("UnknownKey", "unknown config key \"" + item.key() + "\"");
    }
  }
  RunConfig config;
  if (!json.contains("command")) bad_key("command", "is required");
  config.command = string_of(json, "command");
  if (std::find(kCommands.begin(), kCommands.end(), config.command) == kCommands.end()) {
    bad_key("command", "has unknown value \"" + config.command + "\"");
  }

  const int sources = static_cast<int>(json.contains("gallery")) +
                      static_cast<int>(json.contains("model")) +
                      static_cast<int>(json.contains("model_file"));
  if (sources != 1) {
    throw_validation("BadConfig",
                     "exactly one model source (gallery, model, model_file) is required, got " +
                         std::to_string(sources));
  }
  if (json.contains("gallery")) {
    Json spec = Json::object();
    spec["gallery"] = string_of(json, "gallery");
    for (const auto& item : json.items()) {
      if (kPresetParameters.count(item.key())) spec[item.key()] = item.value();
    }
    check_preset_keys(spec, spec["gallery"].get<std::string>());
    config.gallery = spec;
  } else {
    for (const auto& item : json.items()) {
      if (kPresetParameters.count(item.key())) {
        bad_key(item.key(), "is a gallery parameter but no gallery preset is selected");
      }
    }
    if (json.contains("model")) {
      if (!json.at("model").is_object()) bad_key("model", "must be an object");
      config.model = json.at("model");
    } else {
      config.model_file = string_of(json, "model_file");
    }
  }

  if (json.contains("n")) config.n = count_of(json, "n");
  if (json.contains("max_n")) config.max_n = count_of(json, "max_n");
  if (json.contains("m")) config.m = count_of(json, "m");
  if (json.contains("u")) config.u = count_of(json, "u");
  if (json.contains("reps")) config.reps = count_of(json, "reps");
  if (json.contains("seed")) {
    if (!json.at("seed").is_number_unsigned()) bad_key("seed", "must be a non-negative integer");
    config.seed = json.at("seed").get<std::uint64_t>();
  }
  if (json.contains("centering")) config.centering = parse_centering(string_of(json, "centering"));
  if (json.contains("tolerance")) {
    config.tolerance = number_of(json, "tolerance");
    if (!(config.tolerance > 0.0)) bad_key("tolerance", "must be positive");
  }
  if (json.contains("workers")) config.workers = count_of(json, "workers");
  if (json.contains("format")) config.format = string_of(json, "format");
  if (config.format != "json" && config.format != "csv") {
    bad_key("format", "must be \"json\" or \"csv\", got \"" + config.format + "\"");
  }
  if (json.contains("experiment")) config.experiment = string_of(json, "experiment");
  if (config.experiment != "clt" && config.experiment != "mixture" &&
      config.experiment != "abs_mean") {
    bad_key("experiment",
            "must be \"clt\", \"mixture\" or \"abs_mean\", got \"" + config.experiment + "\"");
  }
  if (json.contains("output")) config.output = string_of(json, "output");
  if (json.contains("statistics_output")) {
    config.statistics_output = string_of(json, "statistics_output");
  }
  for (const char* key : {"n", "max_n", "m", "u", "workers"}) {
    if (json.contains(key) && json.at(key).get<std::size_t>() == 0) bad_key(key, "must be >= 1");
  }
  return config;
}

Json resolved_config(const RunConfig& config) {
  Json out = Json::object();
  out["command"] = config.command;
  if (config.gallery) {
    for (const auto& item : config.gallery->items()) out[item.key()] = item.value();
  } else if (config.model) {
    out["model"] = *config.model;
  } else if (config.model_file) {
    out["model_file"] = *config.model_file;
  }
  out["n"] = config.n;
  out["max_n"] = config.max_n;
  out["m"] = config.m;
  out["u"] = config.u;
  out["reps"] = config.reps;
  out["seed"] = config.seed;
  out["centering"] = to_string(config.centering);
  out["tolerance"] = config.tolerance;
  out["workers"] = config.workers;
  out["format"] = config.format;
  out["experiment"] = config.experiment;
  return out;
}

Model build_model(const RunConfig& config) {
  if (config.gallery) return gallery_model(*config.gallery);
  if (config.model) return model_from_json(*config.model);
  std::ifstream in(*config.model_file);
  if (!in) {
    throw_validation("BadConfig", "cannot read model_file \"" + *config.model_file + "\"");
  }
  Json json;
  try {
    json = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw_validation("BadConfig",
                     "model_file \"" + *config.model_file + "\" is not JSON: " + e.what());
  }
  return model_from_json(json);
}

namespace {

std::string emit_json(const Json& json) { return json.dump(2) + "\n"; }

std::string key_value_csv(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ostringstream out;
  write_csv_row(out, {"key", "value"});
  for (const auto& [k, v] : rows) write_csv_row(out, {k, v});
  return out.str();
}

std::optional<SeriesSum> try_sigma_series(const Model& model, double tolerance,
                                          std::string& failure) {
  try {
    return sigma_series(model, tolerance);
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::invariant) throw;
    failure = e.code() + ": " + e.what();
    return std::nullopt;
  }
}

std::string run_validate(const RunConfig& config, const Model& model) {
  const double mean = model.pi().probs.dot(model.f());
  if (config.format == "csv") {
    return key_value_csv({{"size", std::to_string(model.size())},
                          {"checksum", model_checksum(model)},
                          {"stationary_residual", format_double(model.pi().residual)},
                          {"closed_classes", std::to_string(model.pi().closed_classes)},
                          {"unique", model.pi().unique ? "1" : "0"},
                          {"observable_mean", format_double(mean)}});
  }
  return emit_json(Json{{"valid", true},
                        {"size", model.size()},
                        {"checksum", model_checksum(model)},
                        {"stationary_residual", model.pi().residual},
                        {"closed_classes", model.pi().closed_classes},
                        {"unique", model.pi().unique},
                        {"observable_mean", mean}});
}

std::string run_stationary(const RunConfig& config, const Model& model) {
  if (config.format == "csv") {
    std::ostringstream out;
    write_csv_row(out, {"state", "pi", "f"});
    for (std::size_t x = 0; x < model.size(); ++x) {
      const auto i = static_cast<Eigen::Index>(x);
      write_csv_row(out, {std::to_string(x), format_double(model.pi().probs(i)),
                          format_double(model.f()(i))});
    }
    return out.str();
  }
  Json out = to_json(model.pi());
  out["f"] = model_to_json(model)["f"];
  return emit_json(out);
}

std::string run_ergodicity(const RunConfig& config, const Model& model) {
  const ErgodicityReport report = ergodicity_report(model.kernel(), model.pi());
  if (config.format == "csv") {
    return key_value_csv({{"support_size", std::to_string(report.support.size())},
                          {"irreducible", report.irreducible ? "1" : "0"},
                          {"period", std::to_string(report.period)},
                          {"totally_ergodic", report.totally_ergodic ? "1" : "0"}});
  }
  return emit_json(to_json(report));
}

std::string run_moments(const RunConfig& config, const Model& model) {
  const auto gammas = autocovariances(model, config.max_n);
  const VarianceProfile profile = varsup_profile(model, config.max_n);
  std::string failure;
  const auto series = try_sigma_series(model, config.tolerance, failure);
  if (config.format == "csv") {
    std::ostringstream out;
    write_csv_row(out, {"k", "autocovariance", "variance_per_step"});
    for (std::size_t k = 0; k <= config.max_n; ++k) {
      write_csv_row(out, {std::to_string(k), format_double(gammas[k]),
                          k == 0 ? "" : format_double(profile.values[k - 1])});
    }
    if (series) {
      out << "# sigma_series: " << format_double(series->value) << " (" << series->terms
          << " lags, tail bound " << format_double(series->tail_bound) << ")\n";
    } else {
      out << "# sigma_series: " << failure << '\n';
    }
    return out.str();
  }
  Json out{{"autocovariances", gammas}, {"variance_profile", to_json(profile)}};
  out["sigma_series"] = series ? to_json(*series) : Json{{"error", failure}};
  return emit_json(out);
}

std::string run_bridge(const RunConfig& config, const Model& model) {
  const BridgeTable table = bridge_sum_table(model, config.n, config.workers);
  const double second = partial_sum_variance(model, config.n) / static_cast<double>(config.n);
  Json summary{{"n", config.n},
               {"checksum", model_checksum(model)},
               {"variance_per_step", second},
               {"centered_sigma", centered_sigma(model, table)},
               {"endpoint_projection_norm", endpoint_projection_norm(model, table)}};
  if (config.format == "csv") {
    std::ostringstream out;
    write_bridge_csv(out, table, summary);
    return out.str();
  }
  summary["table"] = to_json(table)["values"];
  return emit_json(summary);
}

std::string run_conditions(const RunConfig& config, const Model& model) {
  const MixingProfile profile = clt_condition_report(model, config.max_n);
  const auto verdicts = condition_verdicts(model, profile);
  if (config.format == "csv") {
    std::ostringstream out;
    write_mixing_csv(out, profile);
    for (const auto& v : verdicts) out << verdict_line(v) << '\n';
    return out.str();
  }
  Json list = Json::array();
  for (const auto& v : verdicts) list.push_back(to_json(v));
  return emit_json(Json{{"profile", to_json(profile)}, {"verdicts", list}});
}

std::string run_blocks(const RunConfig& config, const Model& model) {
  const std::size_t length = config.u * config.m;
  const auto path = sample_path(model, length, SeedSpec{config.seed}.stream(0));
  const BlockDecomposition blocks = block_decompose(model, path, config.m);
  const IdentityCheck identity = identity_check(model, config.m, config.u);
  const OrthogonalityCheck orthogonal = orthogonality_check(
      model, config.m, config.u, config.reps, SeedSpec{config.seed}, config.workers);
  if (config.format == "csv") {
    std::ostringstream out;
    write_blocks_csv(out, blocks);
    out << "# M_u: " << format_double(blocks.martingale_total) << '\n';
    out << "# R_u: " << format_double(blocks.remainder_total) << '\n';
    out << "# tail: " << format_double(blocks.tail_sum) << '\n';
    out << "# identity residual: " << format_double(identity.residual) << '\n';
    out << "# orthogonality: " << format_double(orthogonal.value) << " +/- "
        << format_double(orthogonal.half_width) << (orthogonal.ok ? " ok" : " FAILED") << '\n';
    return out.str();
  }
  Json json = to_json(blocks);
  json["blocks"] = Json::array();
  for (std::size_t k = 0; k < blocks.u; ++k) {
    json["blocks"].push_back(Json{{"k", k},
                                  {"Y", blocks.block_sums[k]},
                                  {"D", blocks.martingale[k]},
                                  {"Z", blocks.remainder[k]}});
  }
  json["identity"] = to_json(identity);
  json["orthogonality"] = to_json(orthogonal);
  return emit_json(json);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_validation("BadConfig", "cannot write \"" + path + "\"");
  out << text;
}

ExperimentReport clt_run(const RunConfig& config, const Model& model) {
  ExperimentOptions options;
  options.n = config.n;
  options.reps = config.reps;
  options.seed = SeedSpec{config.seed};
  options.centering = config.experiment == "mixture" ? Centering::endpoint : config.centering;
  options.workers = config.workers;
  std::optional<BridgeTable> table;
  if (options.centering == Centering::endpoint) {
    table = bridge_sum_table(model, config.n, config.workers);
  }
  const BridgeTable* t = table ? &*table : nullptr;
  ReferenceChoice reference = config.experiment == "mixture"
                                  ? ReferenceChoice{class_mixture_reference(model, config.n),
                                                    "centered_sigma"}
                                  : default_reference(model, config.n, options.centering, t);
  if (config.statistics_output) {
    std::ostringstream raw;
    write_statistics_csv(raw, experiment_statistics(model, options, t));
    write_text_file(*config.statistics_output, raw.str());
  }
  return clt_experiment(model, options, t, reference.law, reference.provenance);
}

std::string run_simulate(const RunConfig& config, const Model& model) {
  if (config.experiment == "abs_mean") {
    const bool exact = lattice_step(model.f()).has_value();
    const AbsMeanResult result =
        abs_mean_sigma(model, config.n, exact ? AbsMeanMode::exact : AbsMeanMode::monte_carlo,
                       config.reps, SeedSpec{config.seed}, config.workers);
    const std::string mode = exact ? "exact" : "monte_carlo";
    if (config.format == "csv") {
      std::ostringstream out;
      write_csv_row(out, {"n", "mode", "value", "abs_mean", "half_width"});
      write_csv_row(out, {std::to_string(config.n), mode, format_double(result.value),
                          format_double(result.abs_mean), format_double(result.half_width)});
      return out.str();
    }
    Json json = to_json(result);
    json["n"] = config.n;
    json["mode"] = mode;
    return emit_json(json);
  }
  const ExperimentReport report = clt_run(config, model);
  if (config.format == "csv") {
    std::ostringstream out;
    write_experiment_csv(out, report);
    return out.str();
  }
  return emit_json(to_json(report));
}

std::string run_report(const RunConfig& config, const Model& model) {
  Json dossier = Json::object();
  dossier["config"] = resolved_config(config);
  dossier["model"] = Json{{"size", model.size()}, {"checksum", model_checksum(model)}};
  dossier["stationary"] = to_json(model.pi());
  dossier["ergodicity"] = to_json(ergodicity_report(model.kernel(), model.pi()));
  std::string failure;
  const auto series = try_sigma_series(model, config.tolerance, failure);
  dossier["sigma_series"] = series ? to_json(*series) : Json{{"error", failure}};
  const VarianceProfile profile = varsup_profile(model, config.max_n);
  dossier["variance_sup"] = Json{{"sup", profile.sup}, {"argsup", profile.argsup}};

  const BridgeTable table = bridge_sum_table(model, config.n, config.workers);
  dossier["bridge"] =
      Json{{"n", config.n},
           {"variance_per_step",
            partial_sum_variance(model, config.n) / static_cast<double>(config.n)},
           {"centered_sigma", centered_sigma(model, table)},
           {"endpoint_projection_norm", endpoint_projection_norm(model, table)}};

  const MixingProfile mixing = clt_condition_report(model, config.max_n);
  Json verdicts = Json::array();
  for (const auto& v : condition_verdicts(model, mixing)) verdicts.push_back(to_json(v));
  dossier["conditions"] = verdicts;

  try {
    dossier["identity"] = to_json(identity_check(model, config.m, config.u));
  } catch (const Error& e) {
    if (e.category() != ErrorCategory::budget) throw;
    dossier["identity"] = Json{{"skipped", e.code() + ": " + e.what()}};
  }
  dossier["experiment"] = to_json(clt_run(config, model));

  if (config.format == "csv") {
    std::vector<std::pair<std::string, std::string>> rows;
    auto add = [&](const std::string& key, const Json& value) {
      if (value.is_number_float()) {
        rows.emplace_back(key, format_double(value.get<double>()));
      } else if (value.is_string()) {
        rows.emplace_back(key, value.get<std::string>());
      } else {
        rows.emplace_back(key, value.dump());
      }
    };
    add("checksum", dossier["model"]["checksum"]);
    add("size", dossier["model"]["size"]);
    if (series) add("sigma_series", series->value);
    add("variance_sup", profile.sup);
    for (const auto& item : dossier["bridge"].items()) add("bridge." + item.key(), item.value());
    for (const auto& v : dossier["conditions"]) add(v["condition"].get<std::string>(), v["verdict"]);
    if (dossier["identity"].contains("residual")) {
      add("identity_residual", dossier["identity"]["residual"]);
    }
    for (const auto& item : dossier["experiment"].items()) {
      if (item.key() != "reference_components") add("experiment." + item.key(), item.value());
    }
    return key_value_csv(rows);
  }
  return emit_json(dossier);
}

}  // namespace

std::string execute(const RunConfig& config, std::ostream& err) {
  set_warning_sink([&err](const std::string& message) { err << "warning: " << message << '\n'; });
  struct Restore {
    ~Restore() { set_warning_sink(nullptr); }
  } restore;
  const Model model = build_model(config);
  if (config.command == "validate") return run_validate(config, model);
  if (config.command == "stationary") return run_stationary(config, model);
  if (config.command == "ergodicity") return run_ergodicity(config, model);
  if (config.command == "moments") return run_moments(config, model);
  if (config.command == "bridge") return run_bridge(config, model);
  if (config.command == "conditions") return run_conditions(config, model);
  if (config.command == "blocks") return run_blocks(config, model);
  if (config.command == "simulate") return run_simulate(config, model);
  return run_report(config, model);
}

namespace {

int exit_status(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::validation:
      return 2;
    case ErrorCategory::budget:
      return 3;
    case ErrorCategory::invariant:
      return 4;
  }
  return 4;
}

Json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_validation("BadConfig", "cannot read config file \"" + path + "\"");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw_validation("BadConfig", "config file \"" + path + "\" is not JSON: " + e.what());
  }
}

std::uint64_t parse_seed(const std::string& text, const char* where) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    throw_validation("BadSeed", std::string(where) + " \"" + text +
                                    "\" is not a non-negative integer");
  }
  errno = 0;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(text.c_str(), &end, 10);
  if (errno == ERANGE) throw_validation("BadSeed", std::string(where) + " overflows 64 bits");
  return value;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Markov chain additive functional CLT laboratory", "cltlab"};
  std::string command;
  std::optional<std::string> config_path, gallery, model_text, model_file, centering, format,
      experiment, output, statistics_output, seed;
  std::optional<double> a, b, log_exponent, tolerance;
  std::optional<std::size_t> big_n, n, max_n, m, u, reps, workers;
  std::vector<double> f, p;

  app.add_option("command", command, "validate | stationary | ergodicity | moments | bridge | "
                                     "conditions | blocks | simulate | report");
  app.add_option("--config", config_path, "JSON run configuration file");
  app.add_option("--gallery", gallery, "gallery preset name");
  app.add_option("--a", a, "two_state: probability of leaving state 0");
  app.add_option("--b", b, "two_state: probability of leaving state 1");
  app.add_option("--f", f, "observable values, comma separated")->delimiter(',');
  app.add_option("--p", p, "iid: state probabilities, comma separated")->delimiter(',');
  app.add_option("--N", big_n, "truncated_renewal: largest jump");
  app.add_option("--log-exponent", log_exponent, "truncated_renewal: log exponent");
  app.add_option("--model", model_text, "inline model JSON");
  app.add_option("--model-file", model_file, "model JSON file");
  app.add_option("--n", n, "horizon");
  app.add_option("--max-n", max_n, "largest horizon for profiles");
  app.add_option("--m", m, "block length");
  app.add_option("--u", u, "block count");
  app.add_option("--reps", reps, "Monte Carlo replications");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--centering", centering, "endpoint | none");
  app.add_option("--tolerance", tolerance, "series tolerance");
  app.add_option("--workers", workers, "worker threads");
  app.add_option("--format", format, "json | csv");
  app.add_option("--experiment", experiment, "clt | mixture | abs_mean");
  app.add_option("--output", output, "output file (default stdout)");
  app.add_option("--statistics-output", statistics_output, "one-column CSV of raw statistics");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: [validation] BadArguments: " << e.what() << '\n';
    return 2;
  }

  try {
    Json json = config_path ? read_config_file(*config_path) : Json::object();
    if (!json.is_object()) throw_validation("BadConfig", "config must be a JSON object");
    auto set = [&json](const char* key, const auto& value) {
      if (value) json[key] = *value;
    };
    if (!command.empty()) json["command"] = command;
    set("gallery", gallery);
    set("a", a);
    set("b", b);
    if (!f.empty()) json["f"] = f;
    if (!p.empty()) json["p"] = p;
    set("N", big_n);
    set("log_exponent", log_exponent);
    if (model_text) {
      try {
        json["model"] = Json::parse(*model_text);
      } catch (const Json::parse_error& e) {
        throw_validation("BadConfig", std::string("--model is not JSON: ") + e.what());
      }
    }
    set("model_file", model_file);
    set("n", n);
    set("max_n", max_n);
    set("m", m);
    set("u", u);
    set("reps", reps);
    if (seed) json["seed"] = parse_seed(*seed, "--seed");
    if (const char* env = std::getenv("CLTLAB_SEED")) json["seed"] = parse_seed(env, "CLTLAB_SEED");
    set("centering", centering);
    set("tolerance", tolerance);
    set("workers", workers);
    set("format", format);
    set("experiment", experiment);
    set("output", output);
    set("statistics_output", statistics_output);

    const RunConfig config = parse_run_config(json);
    const std::string text = execute(config, err);
    if (config.output) {
      write_text_file(*config.output, text);
    } else {
      out << text;
    }
    return 0;
  } catch (const Error& e) {
    err << "error: [" << to_string(e.category()) << "] " << e.what() << '\n';
    return exit_status(e.category());
  } catch (const std::exception& e) {
    err << "error: [invariant] Internal: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace cltlab
