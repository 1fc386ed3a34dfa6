#include "typomerge/adapter_io.hpp"
#include "typomerge/digest.hpp"
#include "typomerge/error.hpp"
#include "typomerge/proxy.hpp"

namespace typomerge {

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::Tipa: return "tipa";
    case Method::Uniform: return "uniform";
    case Method::Closest: return "closest";
    case Method::Ntbg: return "ntbg";
  }
  return "tipa";
}

std::optional<Method> parse_method(std::string_view name) noexcept {
  for (auto m : {Method::Tipa, Method::Uniform, Method::Closest, Method::Ntbg}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

namespace {

nlohmann::json ids(const std::vector<LanguageId>& langs) {
  auto arr = nlohmann::json::array();
  for (const auto& l : langs) arr.push_back(l.str());
  return arr;
}

template <typename T, typename F>
nlohmann::json optional_json(const std::optional<T>& v, F f) {
  return v ? nlohmann::json(f(*v)) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const ProxyReport& r) {
  nlohmann::json j;
  j["tool"] = kToolName;
  j["version"] = r.tool_version;
  j["timestamp"] = r.timestamp;
  j["target"] = r.target.str();
  j["method"] = to_string(r.method);
  j["distance_kind"] = optional_json(r.distance_kind, [](DistanceKind k) { return std::string(to_string(k)); });
  j["policy"] = optional_json(r.policy, [](const PruningPolicy& p) { return p.to_string(); });
  if (r.weights) {
    nlohmann::json w = nlohmann::json::object();
    for (const auto& [lang, value] : r.weights->weights) w[lang.str()] = value;
    j["weights"] = std::move(w);
  } else {
    j["weights"] = nullptr;
  }
  j["pool"] = ids(r.pool);
  j["sources"] = ids(r.sources);
  j["closest"] = optional_json(r.closest, [](const LanguageId& l) { return l.str(); });
  if (r.method == Method::Ntbg) {
    j["ntbg"] = {
        {"english", r.english ? r.english->str() : ""},
        {"mode", r.ntbg_mode ? std::string(to_string(*r.ntbg_mode)) : ""},
        {"lambda", r.lambda.value_or(0.0)},
    };
  }
  j["output"] = {{"path", r.output.path}, {"sha256", r.output.sha256}};
  j["manifest"] = optional_json(r.manifest, [](const FileDigest& d) {
    return nlohmann::json{{"path", d.path}, {"sha256", d.sha256}};
  });
  return j;
}

DistanceVector distances_for(const DistanceSource& distances, const LanguageId& target,
                             const std::set<LanguageId>& pool, FeatureCategory category,
                             const DistanceOptions& options) {
  if (const auto* table = std::get_if<const TypologyTable*>(&distances); table && *table) {
    return distance_vector(**table, target, pool, category, options);
  }
  if (const auto* matrix = std::get_if<const DistanceMatrix*>(&distances); matrix && *matrix) {
    return distance_vector(**matrix, target, pool);
  }
  throw Error(ErrorCode::InvalidArgument, "this method needs a typology table or a distance matrix");
}

ProxyResult build_proxy(const AdapterPool& pool, const std::optional<LanguageId>& english,
                        const DistanceSource& distances, const ProxySpec& spec) {
  std::set<LanguageId> members;
  for (const auto& [lang, _] : pool) {
    if (lang != spec.target) members.insert(lang);
  }
  if (members.empty()) {
    throw Error(ErrorCode::EmptyPool, "no source adapters besides target '" + spec.target.str() + "'");
  }

  ProxyResult result;
  ProxyReport& report = result.report;
  report.target = spec.target;
  report.method = spec.method;
  report.pool.assign(members.begin(), members.end());

  AggregateOptions agg;
  agg.target = spec.target.str();
  agg.skip_tensors = spec.skip_tensors;
  agg.threads = spec.threads;

  switch (spec.method) {
    case Method::Tipa: {
      const auto dv = distances_for(distances, spec.target, members, spec.category, spec.distance_options);
      const auto weights = similarity_weights(apply_pruning(dv, spec.policy), spec.policy);
      agg.method = "tipa";
      result.checkpoint = aggregate(pool, weights.weights, agg);
      report.distance_kind = dv.kind;
      report.policy = spec.policy;
      for (const auto& [lang, _] : weights.weights) report.sources.push_back(lang);
      report.weights = weights;
      break;
    }
    case Method::Uniform: {
      const double w = 1.0 / static_cast<double>(members.size());
      std::vector<WeightedSource> sources;
      for (const auto& lang : members) sources.push_back({lang, &pool.at(lang), w});
      agg.method = "uniform";
      result.checkpoint = aggregate(sources, agg);
      report.sources = report.pool;
      break;
    }
    case Method::Closest: {
      const auto dv = distances_for(distances, spec.target, members, spec.category, spec.distance_options);
      const auto closest = closest_adapter(dv);
      agg.method = "closest";
      result.checkpoint = aggregate(pool, {{closest, 1.0}}, agg);
      report.distance_kind = dv.kind;
      report.closest = closest;
      report.sources = {closest};
      break;
    }
    case Method::Ntbg: {
      if (!english || !members.contains(*english)) {
        throw Error(ErrorCode::InvalidArgument, "ntbg needs an English adapter in the pool");
      }
      // The English adapter is one side of the combination; look for the
      // closest partner among the others when there are any.
      std::set<LanguageId> partners = members;
      if (partners.size() > 1) partners.erase(*english);
      const auto dv = distances_for(distances, spec.target, partners, spec.category, spec.distance_options);
      const auto closest = closest_adapter(dv);
      AdditiveOptions add{spec.lambda, spec.ntbg_mode, spec.target.str()};
      result.checkpoint =
          additive_combination(*english, pool.at(*english), closest, pool.at(closest), add);
      report.distance_kind = dv.kind;
      report.closest = closest;
      report.english = *english;
      report.ntbg_mode = spec.ntbg_mode;
      report.lambda = spec.lambda;
      report.sources = {*english};
      if (closest != *english) report.sources.push_back(closest);
      break;
    }
  }
  report.output.sha256 = sha256_hex(serialize_container(result.checkpoint));
  return result;
}

}  // namespace typomerge
