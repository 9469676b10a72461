#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "codym/classify.hpp"
#include "codym/context.hpp"
#include "codym/emotion.hpp"
#include "codym/model.hpp"
#include "codym/null_models.hpp"
#include "codym/temporal.hpp"

#include <json.hpp>

namespace codym {

using Json = nlohmann::json;

// {order, event_count, stratum, transitions: [{state, label, count, pct}],
//  states: [{state, pct}]}
Json model_to_json(const CodymModel& model);
CodymModel model_from_json(const Json& j);

// {order, deltas: [{state, label, delta}], states: [{state, pct}]}
Json delta_to_json(const DeltaModel& model);
DeltaModel delta_from_json(const Json& j);

// {seed, replicates, alpha, mean: model, ci: [{state, label, low, high}],
//  state_ci: [{state, low, high}]}
Json ensemble_to_json(const NullEnsemble& ensemble);

Json report_to_json(const SignificanceReport& report, int order);
SignificanceReport report_from_json(const Json& j);

Json turn_study_to_json(const EmotionTurnStudy& study);
Json conversation_study_to_json(const EmotionConversationStudy& study);
Json classification_to_json(const ClassificationReport& report);

// One CSV row per replicate; transition columns then state columns.
void write_ensemble_samples_csv(const NullEnsemble& ensemble, std::ostream& out);

// Header "conversation,label,<slot names>"; stratified slots carry P:/C:.
void write_feature_csv(const FeatureTable& table, std::ostream& out);

void write_json_file(const Json& j, const std::filesystem::path& path);
Json read_json_file(const std::filesystem::path& path);

}  // namespace codym
