#include "cltlab/io.hpp"

#include <cmath>
#include <cstdio>

#include "cltlab/error.hpp"

namespace cltlab {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

namespace {

Json number_or_null(double value) {
  return std::isfinite(value) ? Json(value) : Json(nullptr);
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json vector_json(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(number_or_null(x));
  return out;
}

Vector vector_from_json(const Json& json, const char* what) {
  if (!json.is_array()) throw_validation("BadConfig", std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(json.size()));
  for (std::size_t i = 0; i < json.size(); ++i) {
    if (!json[i].is_number()) {
      throw_validation("BadConfig", std::string(what) + "[" + std::to_string(i) +
                                        "] is not a number");
    }
    v(static_cast<Eigen::Index>(i)) = json[i].get<double>();
  }
  return v;
}

void reject_unknown(const Json& json, std::initializer_list<const char*> allowed,
                    const char* where) {
  for (const auto& item : json.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) {
      throw_validation("UnknownKey",
                       "unknown key \"" + item.key() + "\" in " + std::string(where));
    }
  }
}

}  // namespace

Json kernel_to_json(const Kernel& kernel) {
  Json rows = Json::array();
  for (Eigen::Index x = 0; x < kernel.rows().rows(); ++x) {
    rows.push_back(vector_json(Vector(kernel.rows().row(x).transpose())));
  }
  return Json{{"size", kernel.size()}, {"rows", rows}};
}

Kernel kernel_from_json(const Json& json) {
  if (!json.is_object()) throw_validation("BadConfig", "kernel must be an object");
  reject_unknown(json, {"size", "rows"}, "kernel");
  if (!json.contains("rows")) throw_validation("BadConfig", "kernel needs \"rows\"");
  const Json& rows = json.at("rows");
  if (!rows.is_array() || rows.empty()) {
    throw_validation("BadConfig", "kernel rows must be a non-empty array");
  }
  if (json.contains("size")) {
    if (!json.at("size").is_number_unsigned() || json.at("size").get<std::size_t>() != rows.size()) {
      throw_validation("SizeMismatch", "kernel size does not match the number of rows (" +
                                           std::to_string(rows.size()) + ")");
    }
  }
  std::vector<std::vector<double>> table;
  for (std::size_t x = 0; x < rows.size(); ++x) {
    const Vector row = vector_from_json(rows[x], "kernel row");
    table.emplace_back(row.data(), row.data() + row.size());
  }
  return validate_kernel(table);
}

Json model_to_json(const Model& model) {
  return Json{{"kernel", kernel_to_json(model.kernel())},
              {"pi", vector_json(model.pi().probs)},
              {"f", vector_json(model.f())}};
}

Model model_from_json(const Json& json) {
  if (!json.is_object()) throw_validation("BadConfig", "model must be an object");
  reject_unknown(json, {"kernel", "pi", "f"}, "model");
  if (!json.contains("kernel") || !json.contains("f")) {
    throw_validation("BadConfig", "model needs \"kernel\" and \"f\"");
  }
  Kernel kernel = kernel_from_json(json.at("kernel"));
  const Vector raw = vector_from_json(json.at("f"), "f");
  StationaryLaw law = json.contains("pi")
                          ? make_stationary_law(kernel, vector_from_json(json.at("pi"), "pi"))
                          : stationary_law(kernel);
  Vector f = center_observable(raw, law);
  return Model(std::move(kernel), std::move(law), std::move(f));
}

std::string model_checksum(const Model& model) {
  const std::string text = model_to_json(model).dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

Json to_json(const StationaryLaw& law) {
  return Json{{"pi", vector_json(law.probs)},
              {"unique", law.unique},
              {"closed_classes", law.closed_classes},
              {"residual", law.residual}};
}

Json to_json(const ErgodicityReport& report) {
  return Json{{"support", report.support},
              {"irreducible", report.irreducible},
              {"period", report.period},
              {"totally_ergodic", report.totally_ergodic}};
}

Json to_json(const VarianceProfile& profile) {
  Json out{{"sup", profile.sup},
           {"argsup", profile.argsup},
           {"tail_settled", profile.tail_settled},
           {"converged_estimate", profile.converged_estimate
                                      ? number_or_null(*profile.converged_estimate)
                                      : Json(nullptr)}};
  out["values"] = vector_json(profile.values);
  return out;
}

Json to_json(const SeriesSum& series) {
  return Json{{"value", series.value}, {"terms", series.terms}, {"tail_bound", series.tail_bound}};
}

Json to_json(const MixingProfile& profile) {
  Json out{{"horizon", profile.horizon}};
  out["beta"] = vector_json(profile.beta);
  out["beta_two_sided"] = vector_json(profile.beta_two_sided);
  out["rho"] = vector_json(profile.rho);
  out["n_quantile_integral"] = vector_json(profile.n_quantile_integral);
  out["quantile_integral_sum"] = vector_json(profile.quantile_integral_sum);
  out["x0_norm"] = vector_json(profile.x0_norm);
  out["n_x0_norm"] = vector_json(profile.n_x0_norm);
  out["x0_norm_sum"] = vector_json(profile.x0_norm_sum);
  Json ok = Json::array();
  for (bool b : profile.rio_ok) ok.push_back(b);
  out["rio_ok"] = ok;
  return out;
}

Json to_json(const ConditionVerdict& verdict) {
  return Json{{"condition", verdict.condition},
              {"verdict", to_string(verdict.verdict)},
              {"reading", verdict.reading},
              {"last_value", number_or_null(verdict.last_value)}};
}

Json to_json(const BlockDecomposition& blocks) {
  return Json{{"m", blocks.m},
              {"u", blocks.u},
              {"martingale_total", blocks.martingale_total},
              {"remainder_total", blocks.remainder_total},
              {"tail_sum", blocks.tail_sum}};
}

Json to_json(const IdentityCheck& check) {
  return Json{{"lhs", check.lhs}, {"rhs", check.rhs}, {"residual", check.residual}};
}

Json to_json(const OrthogonalityCheck& check) {
  return Json{{"mode", check.mode == CheckMode::exact ? "exact" : "monte_carlo"},
              {"value", check.value},
              {"half_width", check.half_width},
              {"reps", check.reps},
              {"ok", check.ok}};
}

Json to_json(const ExperimentReport& report) {
  Json components = Json::array();
  for (const auto& c : report.reference_components) {
    components.push_back(Json{{"weight", c.weight}, {"variance", c.variance}});
  }
  return Json{{"n", report.n},
              {"reps", report.reps},
              {"centering", to_string(report.centering)},
              {"seed", report.master_seed},
              {"mean", report.mean},
              {"mean_half_width", report.mean_half_width},
              {"variance", report.variance},
              {"variance_half_width", report.variance_half_width},
              {"degenerate", report.degenerate},
              {"ks", number_or_null(report.ks)},
              {"max_abs", report.max_abs},
              {"reference_variance", report.reference_variance},
              {"reference_provenance", report.reference_provenance},
              {"reference_components", components},
              {"centering_mean", report.centering_mean},
              {"centering_half_width", report.centering_half_width}};
}

Json to_json(const AbsMeanResult& result) {
  return Json{{"value", result.value},
              {"abs_mean", result.abs_mean},
              {"half_width", result.half_width}};
}

Json to_json(const BridgeTable& table) {
  Json rows = Json::array();
  for (Eigen::Index x = 0; x < table.values.rows(); ++x) {
    Json row = Json::array();
    for (Eigen::Index y = 0; y < table.values.cols(); ++y) {
      row.push_back(number_or_null(table.values(x, y)));
    }
    rows.push_back(row);
  }
  return Json{{"n", table.n}, {"values", rows}};
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out << ',';
    out << cells[i];
  }
  out << '\n';
}

void write_bridge_csv(std::ostream& out, const BridgeTable& table, const Json& header) {
  out << "# " << header.dump() << '\n';
  write_csv_row(out, {"x", "y", "reachable", "B_n"});
  for (Eigen::Index x = 0; x < table.values.rows(); ++x) {
    for (Eigen::Index y = 0; y < table.values.cols(); ++y) {
      const bool live = table.support_mask(x, y);
      write_csv_row(out, {std::to_string(x), std::to_string(y), live ? "1" : "0",
                          live ? format_double(table.values(x, y)) : ""});
    }
  }
}

void write_mixing_csv(std::ostream& out, const MixingProfile& profile) {
  write_csv_row(out, {"n", "beta", "beta2s", "rho", "n_qint", "qint_sum", "x0norm", "n_x0norm",
                      "x0norm_sum", "rio_ok"});
  for (std::size_t i = 0; i < profile.horizon; ++i) {
    write_csv_row(out, {std::to_string(i + 1), format_double(profile.beta[i]),
                        format_double(profile.beta_two_sided[i]), format_double(profile.rho[i]),
                        format_double(profile.n_quantile_integral[i]),
                        format_double(profile.quantile_integral_sum[i]),
                        format_double(profile.x0_norm[i]), format_double(profile.n_x0_norm[i]),
                        format_double(profile.x0_norm_sum[i]), profile.rio_ok[i] ? "1" : "0"});
  }
}

void write_blocks_csv(std::ostream& out, const BlockDecomposition& blocks) {
  write_csv_row(out, {"k", "Y_k", "D_k", "Z_k"});
  for (std::size_t k = 0; k < blocks.u; ++k) {
    write_csv_row(out, {std::to_string(k), format_double(blocks.block_sums[k]),
                        format_double(blocks.martingale[k]), format_double(blocks.remainder[k])});
  }
}

void write_experiment_csv(std::ostream& out, const ExperimentReport& report) {
  write_csv_row(out, {"n", "reps", "centering", "seed", "mean", "mean_half_width", "variance",
                      "variance_half_width", "degenerate", "ks", "max_abs", "reference_variance",
                      "reference_provenance"});
  write_csv_row(out, {std::to_string(report.n), std::to_string(report.reps),
                      to_string(report.centering), std::to_string(report.master_seed),
                      format_double(report.mean), format_double(report.mean_half_width),
                      format_double(report.variance), format_double(report.variance_half_width),
                      report.degenerate ? "1" : "0", format_double(report.ks),
                      format_double(report.max_abs), format_double(report.reference_variance),
                      report.reference_provenance});
}

void write_statistics_csv(std::ostream& out, const std::vector<double>& statistics) {
  write_csv_row(out, {"T"});
  for (double t : statistics) out << format_double(t) << '\n';
}

std::string verdict_line(const ConditionVerdict& verdict) {
  return "# " + verdict.condition + ": " + to_string(verdict.verdict) + " (" + verdict.reading +
         ")";
}

}  // namespace cltlab
