#include <json.hpp>

#include "mdtk/common.hpp"
#include "mdtk/model.hpp"

namespace mdtk {

namespace {

using nlohmann::json;

json base_to_json(const BaseVariableSpec& b) {
  switch (b.kind()) {
    case BaseVariableSpec::Kind::bernoulli:
      return json{{"kind", "bernoulli"}, {"p", b.bernoulli_p()}};
    case BaseVariableSpec::Kind::rademacher:
      return json{{"kind", "rademacher"}};
    case BaseVariableSpec::Kind::finite: {
      json support = json::array();
      for (int i = 0; i < b.support_size(); ++i) {
        support.push_back(json::array({b.value(i), b.prob(i)}));
      }
      return json{{"kind", "finite"}, {"support", support}};
    }
  }
  throw Error::invalid_model("unknown base kind");
}

BaseVariableSpec base_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "bernoulli") return BaseVariableSpec::bernoulli(j.at("p").get<double>());
  if (kind == "rademacher") return BaseVariableSpec::rademacher();
  if (kind == "finite") {
    std::vector<std::pair<double, double>> support;
    for (const auto& entry : j.at("support")) {
      support.emplace_back(entry.at(0).get<double>(), entry.at(1).get<double>());
    }
    return BaseVariableSpec::finite(std::move(support));
  }
  throw Error::invalid_model("unknown base kind: " + kind);
}

}  // namespace

std::string model_to_json(const LocalStatisticModel& model) {
  json j;
  j["m"] = model.num_base();
  j["n"] = model.num_summands();
  json base = json::array();
  for (int a = 0; a < model.num_base(); ++a) base.push_back(base_to_json(model.base(a)));
  j["base"] = std::move(base);
  json sets = json::array();
  for (int i = 0; i < model.num_summands(); ++i) sets.push_back(model.index_set(i));
  j["index_sets"] = std::move(sets);

  const auto& s = model.summand_spec();
  switch (s.kind) {
    case SummandSpec::Kind::product:
      j["summand"] = "builtin:" + s.builtin;
      j["summand_params"] = json{{"offset", s.offset}, {"scale", s.scale}};
      break;
    case SummandSpec::Kind::centered_identity:
      j["summand"] = "builtin:centered-identity";
      j["summand_params"] = json{{"mean", s.mean}, {"scale", s.scale}};
      break;
    case SummandSpec::Kind::table:
      j["summand"] = json{{"tables", s.tables}};
      break;
  }
  if (model.delta_bound().has_value()) j["delta_bound"] = *model.delta_bound();
  return j.dump(2);
}

LocalStatisticModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error::io(std::string("model JSON parse error: ") + e.what());
  }
  try {
    std::vector<BaseVariableSpec> base;
    for (const auto& b : j.at("base")) base.push_back(base_from_json(b));
    std::vector<std::vector<int>> sets;
    for (const auto& is : j.at("index_sets")) sets.push_back(is.get<std::vector<int>>());
    if (j.contains("m") && j.at("m").get<int>() != static_cast<int>(base.size())) {
      throw Error::invalid_model("m does not match the number of base entries");
    }
    if (j.contains("n") && j.at("n").get<int>() != static_cast<int>(sets.size())) {
      throw Error::invalid_model("n does not match the number of index sets");
    }

    SummandSpec spec;
    const auto& sm = j.at("summand");
    if (sm.is_string()) {
      const std::string name = sm.get<std::string>();
      constexpr const char* kPrefix = "builtin:";
      if (name.rfind(kPrefix, 0) != 0) {
        throw Error::invalid_model("summand string must be builtin:<name>");
      }
      const std::string builtin = name.substr(std::string(kPrefix).size());
      const json params = j.value("summand_params", json::object());
      if (builtin == "kruns" || builtin == "ustat-product" || builtin == "subgraph-indicator") {
        spec = SummandSpec::product(builtin, params.value("offset", 0.0),
                                    params.value("scale", 1.0));
      } else if (builtin == "centered-identity") {
        spec = SummandSpec::centered_identity(params.value("mean", 0.0),
                                              params.value("scale", 1.0));
      } else {
        throw Error::invalid_model("unknown builtin summand: " + builtin);
      }
    } else if (sm.is_object() && sm.contains("tables")) {
      spec = SummandSpec::table(sm.at("tables").get<std::vector<std::vector<double>>>());
    } else {
      throw Error::invalid_model("summand must be builtin:<name> or {\"tables\": ...}");
    }

    std::optional<double> delta;
    if (j.contains("delta_bound")) delta = j.at("delta_bound").get<double>();
    return LocalStatisticModel(std::move(base), std::move(sets), std::move(spec), delta);
  } catch (const json::exception& e) {
    throw Error::io(std::string("model JSON structure error: ") + e.what());
  }
}

}  // namespace mdtk
