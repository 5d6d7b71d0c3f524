#include "autm/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "autm/error.hpp"

namespace autm {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json solver_json(const SolverConfig& s) {
  return {{"scheme", std::string(to_string(s.scheme))}, {"steps", s.steps}, {"guard", s.guard}};
}

SolverConfig solver_from(const json& j) {
  SolverConfig s;
  s.scheme = parse_scheme(j.at("scheme").get<std::string>());
  s.steps = j.at("steps").get<int>();
  if (j.contains("guard")) s.guard = j.at("guard").get<double>();
  s.validate();
  return s;
}

json net_json(const ConditionerNet& net) {
  const auto p = net.params();
  return {{"layer_dims", net.layer_dims()},
          {"activation", std::string(to_string(net.activation()))},
          {"masked", net.masked()},
          {"params", std::vector<double>(p.begin(), p.end())}};
}

ConditionerNet net_from(const json& j, std::vector<BinaryMatrix> masks) {
  ConditionerNet net(j.at("layer_dims").get<std::vector<int>>(), parse_activation(j.at("activation").get<std::string>()),
                     std::move(masks));
  const auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.num_params())
    throw ConfigError("conditioner has " + std::to_string(params.size()) + " parameters, expected " +
                      std::to_string(net.num_params()));
  std::copy(params.begin(), params.end(), net.params().begin());
  return net;
}

std::vector<int> hidden_of(const std::vector<int>& dims) { return {dims.begin() + 1, dims.end() - 1}; }

}  // namespace

std::string checkpoint_to_json(const FlowModel& model) {
  json layers = json::array();
  for (const auto& layer : model.layers) {
    if (const auto* c = std::get_if<CouplingLayer>(&layer)) {
      layers.push_back({{"kind", "coupling"},
                        {"split", c->split},
                        {"side", c->side == CouplingSide::Upper ? "upper" : "lower"},
                        {"family", std::string(to_string(c->family))},
                        {"solver", solver_json(c->solver)},
                        {"c_bound", c->c_bound},
                        {"conditioner", net_json(c->net)}});
    } else if (const auto* a = std::get_if<AutoregressiveLayer>(&layer)) {
      layers.push_back({{"kind", "autoregressive"},
                        {"family", std::string(to_string(a->family))},
                        {"solver", solver_json(a->solver)},
                        {"c_bound", a->c_bound},
                        {"ordering", identity_ordering(a->dim)},
                        {"conditioner", net_json(a->net)}});
    } else {
      layers.push_back({{"kind", "permutation"}, {"perm", std::get<PermutationLayer>(layer).perm}});
    }
  }
  json doc{{"format", "autm-flow"}, {"version", kFormatVersion}, {"dim", model.dim}, {"layers", layers}};
  return doc.dump(2) + "\n";
}

FlowModel checkpoint_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what(), 0);
  }
  FlowModel model;
  try {
    if (doc.value("format", "") != "autm-flow") throw ConfigError("not an autm-flow checkpoint");
    model.dim = doc.at("dim").get<int>();
    for (const auto& j : doc.at("layers")) {
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "coupling") {
        CouplingLayer c;
        c.dim = model.dim;
        c.split = j.at("split").get<int>();
        const auto side = j.at("side").get<std::string>();
        if (side != "upper" && side != "lower") throw ConfigError("coupling side must be upper or lower");
        c.side = side == "upper" ? CouplingSide::Upper : CouplingSide::Lower;
        c.family = parse_family(j.at("family").get<std::string>());
        c.solver = solver_from(j.at("solver"));
        c.c_bound = j.value("c_bound", 0.0);
        c.net = net_from(j.at("conditioner"), {});
        model.layers.emplace_back(std::move(c));
      } else if (kind == "autoregressive") {
        AutoregressiveLayer a;
        a.dim = model.dim;
        a.family = parse_family(j.at("family").get<std::string>());
        a.solver = solver_from(j.at("solver"));
        a.c_bound = j.value("c_bound", 0.0);
        const auto& cj = j.at("conditioner");
        const auto ordering = j.at("ordering").get<std::vector<int>>();
        auto masks = build_masks(model.dim, hidden_of(cj.at("layer_dims").get<std::vector<int>>()), ordering);
        a.net = net_from(cj, std::move(masks));
        model.layers.emplace_back(std::move(a));
      } else if (kind == "permutation") {
        model.layers.emplace_back(PermutationLayer{j.at("perm").get<std::vector<int>>()});
      } else {
        throw ConfigError("unknown layer kind '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
  model.validate();
  return model;
}

void save_checkpoint(const FlowModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << checkpoint_to_json(model);
  if (!out) throw IoError("failed writing " + path.string());
}

FlowModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace autm
