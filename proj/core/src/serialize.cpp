#include "codym/serialize.hpp"

#include <fstream>
#include <ostream>

namespace codym {

namespace {

Json stratum_to_json(const std::optional<Role>& stratum) {
  if (!stratum) return nullptr;
  return std::string(role_name(*stratum));
}

std::optional<Role> stratum_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  auto role = parse_role(j.get<std::string>());
  if (!role) throw ParseError("unknown stratum: " + j.get<std::string>());
  return role;
}

}  // namespace

Json model_to_json(const CodymModel& model) {
  Json j;
  j["order"] = model.order;
  j["event_count"] = model.event_count;
  j["stratum"] = stratum_to_json(model.stratum);
  if (!model.metadata.empty()) j["metadata"] = model.metadata;

  Json transitions = Json::array();
  for (int slot = 0; slot < transition_count_for(model.order); ++slot) {
    Json t;
    t["state"] = state_name(slot_state(slot), model.order);
    t["label"] = std::string(1, label_char(slot_label(slot)));
    t["count"] = model.transition_counts[std::size_t(slot)];
    t["pct"] = model.transition_freq[std::size_t(slot)];
    transitions.push_back(std::move(t));
  }
  j["transitions"] = std::move(transitions);

  Json states = Json::array();
  for (int s = 0; s < state_count(model.order); ++s) {
    Json st;
    st["state"] = state_name(StateIndex(s), model.order);
    st["pct"] = model.state_freq[std::size_t(s)];
    states.push_back(std::move(st));
  }
  j["states"] = std::move(states);
  return j;
}

CodymModel model_from_json(const Json& j) {
  const int order = j.at("order").get<int>();
  check_order(order);
  CodymModel model = make_empty_model(order);
  model.event_count = j.at("event_count").get<std::int64_t>();
  model.stratum = stratum_from_json(j.value("stratum", Json()));
  model.metadata = j.value("metadata", std::string());

  for (const auto& t : j.at("transitions")) {
    const auto state = parse_state(t.at("state").get<std::string>(), order);
    if (!state) throw ParseError("bad state string: " + t.at("state").get<std::string>());
    const std::string label = t.at("label").get<std::string>();
    if (label != "S" && label != "L") throw ParseError("bad label: " + label);
    const int slot = slot_of(*state, label == "L" ? TurnLabel::L : TurnLabel::S);
    model.transition_freq[std::size_t(slot)] = t.at("pct").get<double>();
    model.transition_counts[std::size_t(slot)] = t.value("count", std::int64_t(0));
  }
  for (std::size_t s = 0; s < model.state_freq.size(); ++s)
    model.state_freq[s] = model.transition_freq[2 * s] + model.transition_freq[2 * s + 1];
  model.transition_weight = model.transition_freq;
  model.total_weight = 100.0;
  return model;
}

Json delta_to_json(const DeltaModel& model) {
  Json j;
  j["order"] = model.order;
  Json deltas = Json::array();
  for (int slot = 0; slot < transition_count_for(model.order); ++slot) {
    Json t;
    t["state"] = state_name(slot_state(slot), model.order);
    t["label"] = std::string(1, label_char(slot_label(slot)));
    t["delta"] = model.delta[std::size_t(slot)];
    deltas.push_back(std::move(t));
  }
  j["deltas"] = std::move(deltas);
  Json states = Json::array();
  for (int s = 0; s < state_count(model.order); ++s) {
    Json st;
    st["state"] = state_name(StateIndex(s), model.order);
    st["pct"] = model.state_obs[std::size_t(s)];
    states.push_back(std::move(st));
  }
  j["states"] = std::move(states);
  return j;
}

DeltaModel delta_from_json(const Json& j) {
  DeltaModel model;
  model.order = j.at("order").get<int>();
  check_order(model.order);
  model.delta.assign(std::size_t(transition_count_for(model.order)), 0.0);
  model.state_obs.assign(std::size_t(state_count(model.order)), 0.0);
  for (const auto& t : j.at("deltas")) {
    const auto state = parse_state(t.at("state").get<std::string>(), model.order);
    if (!state) throw ParseError("bad state string in delta model");
    const std::string label = t.at("label").get<std::string>();
    const int slot = slot_of(*state, label == "L" ? TurnLabel::L : TurnLabel::S);
    model.delta[std::size_t(slot)] = t.at("delta").get<double>();
  }
  for (const auto& st : j.at("states")) {
    const auto state = parse_state(st.at("state").get<std::string>(), model.order);
    if (!state) throw ParseError("bad state string in delta model");
    model.state_obs[std::size_t(*state)] = st.at("pct").get<double>();
  }
  return model;
}

Json ensemble_to_json(const NullEnsemble& ensemble) {
  Json j;
  j["seed"] = ensemble.seed;
  j["replicates"] = ensemble.replicates;
  j["alpha"] = ensemble.alpha;
  j["mean"] = model_to_json(ensemble.mean);

  Json ci = Json::array();
  for (int slot = 0; slot < transition_count_for(ensemble.order); ++slot) {
    Json c;
    c["state"] = state_name(slot_state(slot), ensemble.order);
    c["label"] = std::string(1, label_char(slot_label(slot)));
    c["low"] = ensemble.ci_low[std::size_t(slot)];
    c["high"] = ensemble.ci_high[std::size_t(slot)];
    ci.push_back(std::move(c));
  }
  j["ci"] = std::move(ci);

  Json state_ci = Json::array();
  for (int s = 0; s < state_count(ensemble.order); ++s) {
    Json c;
    c["state"] = state_name(StateIndex(s), ensemble.order);
    c["low"] = ensemble.state_ci_low[std::size_t(s)];
    c["high"] = ensemble.state_ci_high[std::size_t(s)];
    state_ci.push_back(std::move(c));
  }
  j["state_ci"] = std::move(state_ci);
  return j;
}

namespace {

Json slot_report_json(const SlotSignificance& s, const std::string& state,
                      const std::string& label) {
  Json j;
  j["state"] = state;
  if (!label.empty()) j["label"] = label;
  j["observed"] = s.observed;
  j["expected"] = s.expected;
  j["low"] = s.ci_low;
  j["high"] = s.ci_high;
  j["delta"] = s.delta;
  j["significant"] = s.significant;
  return j;
}

}  // namespace

Json report_to_json(const SignificanceReport& report, int order) {
  Json j;
  j["order"] = order;
  j["alpha"] = report.alpha;
  Json transitions = Json::array();
  for (int slot = 0; slot < transition_count_for(order); ++slot)
    transitions.push_back(slot_report_json(report.transitions[std::size_t(slot)],
                                           state_name(slot_state(slot), order),
                                           std::string(1, label_char(slot_label(slot)))));
  j["transitions"] = std::move(transitions);
  Json states = Json::array();
  for (int s = 0; s < state_count(order); ++s)
    states.push_back(
        slot_report_json(report.states[std::size_t(s)], state_name(StateIndex(s), order), ""));
  j["states"] = std::move(states);
  return j;
}

SignificanceReport report_from_json(const Json& j) {
  SignificanceReport report;
  report.order = j.at("order").get<int>();
  check_order(report.order);
  report.alpha = j.at("alpha").get<double>();
  report.transitions.resize(std::size_t(transition_count_for(report.order)));
  report.states.resize(std::size_t(state_count(report.order)));

  auto fill = [](const Json& e) {
    SlotSignificance s;
    s.observed = e.at("observed").get<double>();
    s.expected = e.at("expected").get<double>();
    s.ci_low = e.at("low").get<double>();
    s.ci_high = e.at("high").get<double>();
    s.delta = e.at("delta").get<double>();
    s.significant = e.at("significant").get<bool>();
    return s;
  };
  for (const auto& e : j.at("transitions")) {
    const auto state = parse_state(e.at("state").get<std::string>(), report.order);
    if (!state) throw ParseError("bad state string in report");
    const std::string label = e.at("label").get<std::string>();
    const int slot = slot_of(*state, label == "L" ? TurnLabel::L : TurnLabel::S);
    report.transitions[std::size_t(slot)] = fill(e);
  }
  for (const auto& e : j.at("states")) {
    const auto state = parse_state(e.at("state").get<std::string>(), report.order);
    if (!state) throw ParseError("bad state string in report");
    report.states[std::size_t(*state)] = fill(e);
  }
  return report;
}

Json turn_study_to_json(const EmotionTurnStudy& study) {
  Json j;
  j["emotion"] = study.emotion;
  j["order"] = study.order;
  j["n_events"] = study.n_events;
  j["n_long"] = study.n_long;
  j["long_rate"] = study.long_rate;
  j["context_tagged_fraction"] = study.context_tagged_fraction;
  j["observed"] = model_to_json(study.observed);
  j["ensemble"] = ensemble_to_json(study.ensemble);
  j["report"] = report_to_json(study.report, study.order);
  return j;
}

Json conversation_study_to_json(const EmotionConversationStudy& study) {
  Json j;
  j["tags"] = study.tags;
  j["order"] = study.order;
  j["stratified"] = study.stratified;
  j["alpha"] = study.alpha;
  j["group_a_size"] = study.group_a_ids.size();
  j["group_b_size"] = study.group_b_ids.size();
  j["group_a_ids"] = study.group_a_ids;
  j["group_b_ids"] = study.group_b_ids;
  Json slots = Json::array();
  for (const auto& slot : study.slots) {
    Json s;
    s["name"] = slot.name;
    s["d"] = slot.d;
    s["p"] = slot.p;
    s["mean_a"] = slot.mean_a;
    s["mean_b"] = slot.mean_b;
    s["delta"] = slot.delta;
    s["significant"] = slot.significant;
    slots.push_back(std::move(s));
  }
  j["slots"] = std::move(slots);
  return j;
}

Json classification_to_json(const ClassificationReport& report) {
  Json j;
  j["order"] = report.order;
  j["stratified"] = report.stratified;
  j["repeats"] = report.repeats;
  j["mu"] = report.mu;
  j["sigma"] = report.sigma;
  j["p"] = report.p_value;
  j["accuracies"] = report.accuracies;
  return j;
}

void write_ensemble_samples_csv(const NullEnsemble& ensemble, std::ostream& out) {
  out << "replicate";
  for (int slot = 0; slot < transition_count_for(ensemble.order); ++slot)
    out << ',' << transition_name(slot, ensemble.order);
  for (int s = 0; s < state_count(ensemble.order); ++s)
    out << ",state:" << state_name(StateIndex(s), ensemble.order);
  out << "\n";
  for (int r = 0; r < ensemble.replicates; ++r) {
    out << r;
    for (const auto& samples : ensemble.transition_samples)
      out << ',' << samples[std::size_t(r)];
    for (const auto& samples : ensemble.state_samples) out << ',' << samples[std::size_t(r)];
    out << "\n";
  }
}

void write_feature_csv(const FeatureTable& table, std::ostream& out) {
  out << "conversation,label";
  for (const auto& name : table.feature_names) out << ',' << name;
  out << "\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    out << table.ids[i] << ',' << table.labels[i];
    for (double v : table.rows[i]) out << ',' << v;
    out << "\n";
  }
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace codym
