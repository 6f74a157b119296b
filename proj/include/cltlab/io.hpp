#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cltlab/blocks.hpp"
#include "cltlab/bridge.hpp"
#include "cltlab/mixing.hpp"
#include "cltlab/montecarlo.hpp"

namespace cltlab {

using Json = nlohmann::ordered_json;

// printf "%.17g": 17 significant digits, enough to parse back to the same
// binary64 value. "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double value);

// {"size": S, "rows": [[...], ...]}; "size" is optional on input.
Json kernel_to_json(const Kernel& kernel);
Kernel kernel_from_json(const Json& json);

// {"kernel": ..., "pi": [...] (optional), "f": [...]}. Without "pi" the
// stationary law is solved; f is centered under pi on input.
Json model_to_json(const Model& model);
Model model_from_json(const Json& json);

// 64-bit FNV-1a of the compact model JSON, as 16 hex digits.
std::string model_checksum(const Model& model);

Json to_json(const StationaryLaw& law);
Json to_json(const ErgodicityReport& report);
Json to_json(const VarianceProfile& profile);
Json to_json(const SeriesSum& series);
Json to_json(const MixingProfile& profile);
Json to_json(const ConditionVerdict& verdict);
Json to_json(const BlockDecomposition& blocks);
Json to_json(const IdentityCheck& check);
Json to_json(const OrthogonalityCheck& check);
Json to_json(const ExperimentReport& report);
Json to_json(const AbsMeanResult& result);
Json to_json(const BridgeTable& table);

// CSV writers: comma separated, header row, LF line endings, doubles via
// format_double.
void write_csv_row(std::ostream& out, const std::vector<std::string>& cells);
void write_bridge_csv(std::ostream& out, const BridgeTable& table, const Json& header);
void write_mixing_csv(std::ostream& out, const MixingProfile& profile);
void write_blocks_csv(std::ostream& out, const BlockDecomposition& blocks);
void write_experiment_csv(std::ostream& out, const ExperimentReport& report);
void write_statistics_csv(std::ostream& out, const std::vector<double>& statistics);

// "# (cond beta): PASS (n·∫Q² → 0)"
std::string verdict_line(const ConditionVerdict& verdict);

}  // namespace cltlab
