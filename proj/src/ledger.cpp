#include <istream>
#include <ostream>

#include "darkspec/engine.hpp"
#include "darkspec/errors.hpp"
#include "json.hpp"

namespace darkspec {

namespace {

using nlohmann::json;

json estimate_json(const RiskEstimate& e) {
  json j;
  j["component_id"] = e.component_id;
  j["source"] = e.source == EstimateSource::ObservedHistory ? "observed" : "underwriting";
  j["round"] = e.round;
  j["lambda_hat"] = e.lambda_hat;
  j["xi_hat"] = e.xi_hat ? json(*e.xi_hat) : json(nullptr);
  j["severity_var"] = e.severity_variance_hat;
  j["window"] = e.window;
  j["n_events"] = e.event_count;
  j["jump_total"] = e.jump_total ? json(*e.jump_total) : json(nullptr);
  return j;
}

RiskEstimate estimate_from(const json& j) {
  RiskEstimate e;
  e.component_id = j.at("component_id").get<std::string>();
  const auto src = j.at("source").get<std::string>();
  if (src == "observed")
    e.source = EstimateSource::ObservedHistory;
  else if (src == "underwriting")
    e.source = EstimateSource::UnderwritingRound;
  else
    throw ConfigError("ledger: unknown estimate source '" + src + "'");
  e.round = j.at("round").get<int>();
  e.lambda_hat = j.at("lambda_hat").get<double>();
  if (!j.at("xi_hat").is_null()) e.xi_hat = j.at("xi_hat").get<double>();
  e.severity_variance_hat = j.at("severity_var").get<double>();
  e.window = j.at("window").get<double>();
  e.event_count = j.at("n_events").get<long long>();
  if (!j.at("jump_total").is_null()) e.jump_total = j.at("jump_total").get<double>();
  return e;
}

json record_json(const RoundRecord& r) {
  json j;
  j["schema"] = RoundLedger::kSchemaVersion;
  j["round"] = r.inputs.round;
  j["risk"] = r.inputs.risk;
  j["narrative_round"] = r.inputs.narrative_round;
  j["happenings"] = r.inputs.happenings;
  j["underwriting"] = estimate_json(r.inputs.underwriting);
  j["observed"] = json::array();
  for (const auto& e : r.inputs.observed) j["observed"].push_back(estimate_json(e));
  j["mitigation_benefit"] = r.inputs.mitigation_benefit;
  j["option_value"] = r.inputs.option_value;
  j["sponsored"] = r.inputs.sponsored;
  j["imagined_count"] = r.imagined_count;
  j["pkre_observed"] = r.pkre_observed;
  j["pkre_imagined"] = r.pkre_imagined;
  j["pkre_total"] = r.pkre_total;
  j["pkre_variance"] = r.pkre_variance;
  j["pi"] = r.pi;
  j["sigma2_eps"] = r.sigma2_eps;
  j["cost_write"] = r.cost_write;
  j["cost_spec"] = r.cost_spec;
  j["cost_obs"] = r.cost_obs;
  j["cost_total"] = r.cost_total;
  j["statistical_loss"] = r.statistical_loss;
  j["delta_L2"] = r.deltas.dL2;
  j["delta_M"] = r.deltas.dM;
  j["delta_O"] = r.deltas.dO;
  j["decision"] = std::string(to_string(r.decision));
  j["red_line"] = r.red_line;
  return j;
}

RoundRecord record_from(const json& j) {
  if (j.at("schema").get<int>() != RoundLedger::kSchemaVersion)
    throw ConfigError("ledger: unsupported schema version " + j.at("schema").dump());
  RoundRecord r;
  r.inputs.round = j.at("round").get<int>();
  r.inputs.risk = j.at("risk").get<std::string>();
  r.inputs.narrative_round = j.at("narrative_round").get<int>();
  r.inputs.happenings = j.at("happenings").get<long long>();
  r.inputs.underwriting = estimate_from(j.at("underwriting"));
  for (const auto& e : j.at("observed")) r.inputs.observed.push_back(estimate_from(e));
  r.inputs.mitigation_benefit = j.at("mitigation_benefit").get<double>();
  r.inputs.option_value = j.at("option_value").get<double>();
  r.inputs.sponsored = j.at("sponsored").get<bool>();
  r.imagined_count = j.at("imagined_count").get<std::size_t>();
  r.pkre_observed = j.at("pkre_observed").get<double>();
  r.pkre_imagined = j.at("pkre_imagined").get<double>();
  r.pkre_total = j.at("pkre_total").get<double>();
  r.pkre_variance = j.at("pkre_variance").get<double>();
  r.pi = j.at("pi").get<double>();
  r.sigma2_eps = j.at("sigma2_eps").get<double>();
  r.cost_write = j.at("cost_write").get<double>();
  r.cost_spec = j.at("cost_spec").get<double>();
  r.cost_obs = j.at("cost_obs").get<double>();
  r.cost_total = j.at("cost_total").get<double>();
  r.statistical_loss = j.at("statistical_loss").get<double>();
  r.deltas.dL2 = j.at("delta_L2").get<double>();
  r.deltas.dM = j.at("delta_M").get<double>();
  r.deltas.dO = j.at("delta_O").get<double>();
  const auto d = j.at("decision").get<std::string>();
  if (d == "continue")
    r.decision = Decision::Continue;
  else if (d == "stop")
    r.decision = Decision::Stop;
  else
    throw ConfigError("ledger: unknown decision '" + d + "'");
  r.red_line = j.at("red_line").get<bool>();
  return r;
}

}  // namespace

void RoundLedger::write_ndjson(std::ostream& out) const {
  for (const auto& r : records_) out << record_json(r).dump() << '\n';
}

RoundLedger RoundLedger::read_ndjson(std::istream& in) {
  RoundLedger ledger;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      ledger.append(record_from(json::parse(line)));
    } catch (const json::exception& e) {
      throw ConfigError("ledger line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return ledger;
}

}  // namespace darkspec
