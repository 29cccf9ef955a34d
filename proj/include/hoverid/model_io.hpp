#pragma once

#include <filesystem>

#include <json.hpp>

#include "hoverid/mrc.hpp"
#include "hoverid/sysid.hpp"

namespace hoverid {

using Json = nlohmann::ordered_json;

Json to_json(const Mlp& mlp);
Mlp mlp_from_json(const Json& j);

Json to_json(const Normalizer& n);
Normalizer normalizer_from_json(const Json& j);

Json to_json(const ModeSplit& m);
ModeSplit mode_from_json(const Json& j);

Json to_json(const FitResult& fit);  // iteration log omitted

// {role: "plant", mode, narx, layer_sizes, weights, biases, y_norm, u_norm, training}
Json to_json(const PlantModel& model);
PlantModel plant_model_from_json(const Json& j);

// {role: "controller", ...}; training metadata is written when given.
Json to_json(const Controller& c, const TrainedController* training = nullptr);
Controller controller_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
void write_json(const Json& j, const std::filesystem::path& path);

void save_plant_model(const PlantModel& model, const std::filesystem::path& path);
PlantModel load_plant_model(const std::filesystem::path& path);
void save_controller(const Controller& c, const std::filesystem::path& path, const TrainedController* training = nullptr);
Controller load_controller(const std::filesystem::path& path);

}  // namespace hoverid
