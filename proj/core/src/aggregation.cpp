#include "typomerge/aggregation.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "typomerge/error.hpp"

namespace typomerge {

namespace {

bool matches_any(const std::string& name, const std::vector<std::string>& globs) {
  return std::any_of(globs.begin(), globs.end(),
                     [&](const std::string& g) { return ::fnmatch(g.c_str(), name.c_str(), 0) == 0; });
}

AdapterManifest derived_manifest(const AdapterManifest& base, const std::string& target) {
  AdapterManifest m = base;
  m.language = target.empty() ? "proxy" : target;
  m.provenance = nlohmann::json::object();
  return m;
}

// Runs `fn(i)` for i in [0, n) on up to `threads` workers. Each index is
// processed by exactly one worker, so per-index results are schedule-free.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

AdapterCheckpoint aggregate(std::span<const WeightedSource> sources, const AggregateOptions& options) {
  if (sources.empty()) throw Error(ErrorCode::EmptyPool, "nothing to aggregate");

  std::vector<WeightedSource> ordered(sources.begin(), sources.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.language < b.language; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i].language == ordered[i - 1].language) {
      throw Error(ErrorCode::DuplicateLanguage, "source '" + ordered[i].language.str() + "' appears twice");
    }
  }

  double total = 0.0;
  for (const auto& s : ordered) {
    if (s.checkpoint == nullptr) throw Error(ErrorCode::InvalidArgument, "null checkpoint for '" + s.language.str() + "'");
    if (!(s.weight > 0.0) || !std::isfinite(s.weight)) {
      throw Error(ErrorCode::WeightSumInvalid, "weight for '" + s.language.str() + "' must be positive");
    }
    total += s.weight;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw Error(ErrorCode::WeightSumInvalid, "weights sum to " + std::to_string(total) + ", expected 1");
  }

  const auto schema = schema_of(*ordered.front().checkpoint);
  for (const auto& s : ordered) {
    require_same_schema(schema, ordered.front().language.str(), schema_of(*s.checkpoint), s.language.str());
    try {
      s.checkpoint->validate();
    } catch (const Error& e) {
      throw e.with_context("source '" + s.language.str() + "'");
    }
  }

  std::vector<double> weights;
  weights.reserve(ordered.size());
  for (const auto& s : ordered) weights.push_back(s.weight / total);

  // Skipped tensors come from the heaviest source; stable max keeps the
  // lexicographically first on ties.
  std::size_t heaviest = 0;
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i].weight > ordered[heaviest].weight) heaviest = i;
  }

  AdapterCheckpoint out;
  out.manifest = derived_manifest(ordered.front().checkpoint->manifest, options.target);
  std::vector<std::pair<const std::string*, Tensor*>> jobs;
  for (const auto& [name, spec] : schema) {
    auto& t = out.tensors[name];
    t.shape = spec.shape;
    t.data.resize(element_count(spec.shape));
  }
  for (auto& [name, t] : out.tensors) jobs.emplace_back(&name, &t);

  parallel_for(jobs.size(), options.threads, [&](std::size_t j) {
    const std::string& name = *jobs[j].first;
    Tensor& dst = *jobs[j].second;
    if (matches_any(name, options.skip_tensors)) {
      dst.data = ordered[heaviest].checkpoint->tensors.at(name).data;
      return;
    }
    std::vector<const float*> inputs;
    inputs.reserve(ordered.size());
    for (const auto& s : ordered) inputs.push_back(s.checkpoint->tensors.at(name).data.data());
    for (std::size_t i = 0; i < dst.data.size(); ++i) {
      // Seeded with the first term so a lone source keeps signed zeros intact.
      double acc = weights[0] * static_cast<double>(inputs[0][i]);
      for (std::size_t s = 1; s < inputs.size(); ++s) acc += weights[s] * static_cast<double>(inputs[s][i]);
      dst.data[i] = static_cast<float>(acc);
    }
  });

  auto& prov = out.manifest.provenance;
  prov["method"] = options.method;
  prov["sources"] = nlohmann::json::array();
  for (const auto& s : ordered) prov["sources"].push_back({{"language", s.language.str()}, {"weight", s.weight}});
  if (!options.skip_tensors.empty()) prov["skipped_tensors_from"] = ordered[heaviest].language.str();
  return out;
}

AdapterCheckpoint aggregate(const AdapterPool& pool, const std::map<LanguageId, double>& weights,
                            const AggregateOptions& options) {
  std::vector<WeightedSource> sources;
  sources.reserve(weights.size());
  for (const auto& [lang, w] : weights) {
    auto it = pool.find(lang);
    if (it == pool.end()) throw Error(ErrorCode::UnknownLanguage, "no adapter for '" + lang.str() + "' in pool");
    sources.push_back({lang, &it->second, w});
  }
  return aggregate(sources, options);
}

AdapterCheckpoint uniform_average(const AdapterPool& pool, AggregateOptions options) {
  if (pool.empty()) throw Error(ErrorCode::EmptyPool, "nothing to average");
  const double w = 1.0 / static_cast<double>(pool.size());
  std::vector<WeightedSource> sources;
  sources.reserve(pool.size());
  for (const auto& [lang, ckpt] : pool) sources.push_back({lang, &ckpt, w});
  options.method = "uniform";
  return aggregate(sources, options);
}

LanguageId closest_adapter(const DistanceVector& dv) {
  if (dv.entries.empty()) {
    throw Error(ErrorCode::EmptyPool, "no source languages for target '" + dv.target.str() + "'");
  }
  auto best = dv.entries.begin();
  for (auto it = dv.entries.begin(); it != dv.entries.end(); ++it) {
    if (it->second.normalized < best->second.normalized) best = it;
  }
  return best->first;
}

std::string_view to_string(CombinationMode mode) noexcept {
  return mode == CombinationMode::Convex ? "convex" : "sum";
}

AdapterCheckpoint additive_combination(const LanguageId& english_id, const AdapterCheckpoint& english,
                                       const LanguageId& closest_id, const AdapterCheckpoint& closest,
                                       const AdditiveOptions& options) {
  const double lambda = options.lambda;
  if (!std::isfinite(lambda)) throw Error(ErrorCode::LambdaOutOfRange, "lambda must be finite");
  if (options.mode == CombinationMode::Convex && !(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::LambdaOutOfRange, "convex combination requires lambda in [0,1]");
  }
  require_same_schema(schema_of(english), english_id.str(), schema_of(closest), closest_id.str());
  english.validate();
  closest.validate();

  const double a = options.mode == CombinationMode::Convex ? 1.0 - lambda : 1.0;
  const double b = lambda;

  AdapterCheckpoint out;
  out.manifest = derived_manifest(english.manifest, options.target);
  for (const auto& [name, e] : english.tensors) {
    const auto& c = closest.tensors.at(name);
    Tensor t{e.shape, std::vector<float>(e.data.size())};
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      const double x = static_cast<double>(e.data[i]);
      const double y = static_cast<double>(c.data[i]);
      // Zero coefficients drop their term entirely, so the boundaries reproduce
      // one input bit-for-bit.
      const double v = a == 0.0 ? b * y : b == 0.0 ? a * x : a * x + b * y;
      t.data[i] = static_cast<float>(v);
    }
    out.tensors.emplace(name, std::move(t));
  }
  out.manifest.provenance = {
      {"method", "ntbg"},
      {"mode", std::string(to_string(options.mode))},
      {"lambda", lambda},
      {"english", english_id.str()},
      {"closest", closest_id.str()},
  };
  return out;
}

}  // namespace typomerge
