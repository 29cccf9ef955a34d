#pragma once

#include <json.hpp>

#include "hoverid/excitation.hpp"

namespace hoverid {

nlohmann::json signal_to_json(const SignalSpec& s);
// Unknown keys and missing required fields are BadConfig errors.
SignalSpec signal_from_json(const nlohmann::json& j);

}  // namespace hoverid
