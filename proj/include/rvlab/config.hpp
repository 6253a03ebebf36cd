#pragma once

#include <string>

#include <json.hpp>

#include "rvlab/markov.hpp"
#include "rvlab/rv_core.hpp"
#include "rvlab/series.hpp"
#include "rvlab/tail_chain.hpp"

namespace rvlab {

using Json = nlohmann::json;

// Builders from the JSON forms documented in configs/config.schema.json.
// `where` is the key path used in ConfigError messages.
Vector parse_vector(const Json& j, const std::string& where);
Matrix parse_matrix(const Json& j, const std::string& where);
AngularLaw parse_angular(const Json& j, int dim_hint, const std::string& where);
RegVarLaw parse_regvar(const Json& j, const std::string& where);
GaugeSet parse_gauge(const Json& j, const std::string& where);
MatrixLaw parse_matrix_law(const Json& j, const std::string& where);
VectorLaw parse_vector_law(const Json& j, const std::string& where);
RdeModel parse_rde(const Json& j, const std::string& where);
TailLimitModel parse_tail_limits(const Json& j, const std::string& where);
SeriesModel parse_series(const Json& j, SeriesMode mode, const std::string& where);

}  // namespace rvlab
