// SPDX-License-Identifier: Apache-2.0
//
// JSON bindings for the configuration structs (checkpoint headers and run
// configuration files). Field names are part of the on-disk format.

#pragma once

#include "json.hpp"
#include "mcan/network.hpp"
#include "mcan/objective.hpp"
#include "mcan/robustness.hpp"
#include "mcan/trainer.hpp"

namespace mcan {

void to_json(nlohmann::json& j, const NetConfig& c);
void from_json(const nlohmann::json& j, NetConfig& c);

void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

void to_json(nlohmann::json& j, const DatasetSpec& s);
void from_json(const nlohmann::json& j, DatasetSpec& s);

void to_json(nlohmann::json& j, const SweepSpec& s);
void from_json(const nlohmann::json& j, SweepSpec& s);

}  // namespace mcan
