#pragma once

#include <string>

#include <json.hpp>

#include "relnet/dedup.hpp"
#include "relnet/head.hpp"
#include "relnet/relation.hpp"
#include "relnet/synthgen.hpp"
#include "relnet/trainer.hpp"

namespace relnet {

// JSON (de)serialization for all configs. Reading starts from the defaults
// and overrides only the keys present, so config files can stay minimal.

nlohmann::json to_json(const RelationConfig& c);
nlohmann::json to_json(const HeadConfig& c);
nlohmann::json to_json(const DedupConfig& c);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const GenConfig& c);

RelationConfig relation_config_from_json(const nlohmann::json& j, RelationConfig base = {});
HeadConfig head_config_from_json(const nlohmann::json& j, HeadConfig base = {});
DedupConfig dedup_config_from_json(const nlohmann::json& j, DedupConfig base = {});
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
GenConfig gen_config_from_json(const nlohmann::json& j, GenConfig base = {});

nlohmann::json load_json_file(const std::string& path);

}  // namespace relnet
