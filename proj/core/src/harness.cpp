#include "typomerge/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "typomerge/error.hpp"

namespace typomerge::harness {

namespace {

constexpr double kFeatureSharpness = 6.0;

Error invalid(const std::string& what) { return Error(ErrorCode::InvalidConfig, what); }

double euclidean(const LatentPoint& a, const LatentPoint& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> flatten(const AdapterCheckpoint& ckpt) {
  std::vector<double> out;
  for (const auto& [_, t] : ckpt.tensors) out.insert(out.end(), t.data.begin(), t.data.end());
  return out;
}

// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(std::vector<double> v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cumulative += u[i];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  for (auto& x : v) x = std::max(x - theta, 0.0);
  return v;
}

double residual_l2(const std::vector<std::vector<double>>& sources, const std::vector<double>& w,
                   const std::vector<double>& target) {
  double s = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    double mix = 0.0;
    for (std::size_t i = 0; i < sources.size(); ++i) mix += w[i] * sources[i][k];
    s += (mix - target[k]) * (mix - target[k]);
  }
  return std::sqrt(s);
}

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

CheckpointSchema default_tensor_schema() {
  return {
      {"adapter.down.bias", {{8}, DType::F32}},
      {"adapter.down.weight", {{8, 8}, DType::F32}},
      {"adapter.up.bias", {{8}, DType::F32}},
      {"adapter.up.weight", {{8, 8}, DType::F32}},
  };
}

void WorldConfig::validate() const {
  if (n_languages < 3) throw invalid("n_languages must be >= 3");
  if (n_languages > 999) throw invalid("n_languages must be <= 999");
  if (latent_dim < 1) throw invalid("latent_dim must be >= 1");
  if (n_features < latent_dim) throw invalid("n_features must be >= latent_dim");
  if (!(feature_noise >= 0.0) || !std::isfinite(feature_noise)) throw invalid("feature_noise must be >= 0");
  if (!(adapter_noise >= 0.0) || !std::isfinite(adapter_noise)) throw invalid("adapter_noise must be >= 0");
  if (tensor_schema.empty()) throw invalid("tensor_schema must not be empty");
  for (const auto& [name, spec] : tensor_schema) {
    if (spec.dtype != DType::F32) throw invalid("tensor '" + name + "' must be F32");
    try {
      element_count(spec.shape);
    } catch (const Error&) {
      throw invalid("tensor '" + name + "' has an invalid shape");
    }
  }
  if (!latent_points.empty()) {
    if (latent_points.size() != static_cast<std::size_t>(n_languages)) {
      throw invalid("latent_points must hold one point per language");
    }
    for (const auto& p : latent_points) {
      if (p.size() != static_cast<std::size_t>(latent_dim)) throw invalid("latent point has wrong dimension");
    }
  }
}

std::vector<LanguageId> world_language_ids(int n) {
  std::vector<LanguageId> ids;
  ids.emplace_back("en");
  const int width = n > 100 ? 3 : 2;
  for (int i = 1; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "l%0*d", width, i);
    ids.emplace_back(buf);
  }
  return ids;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nan("");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

SyntheticWorld generate_world(const WorldConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_languages);
  const auto dim = static_cast<std::size_t>(cfg.latent_dim);
  const auto n_features = static_cast<std::size_t>(cfg.n_features);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto ids = world_language_ids(cfg.n_languages);
  std::vector<LatentPoint> points = cfg.latent_points;
  if (points.empty()) {
    points.assign(n, LatentPoint(dim));
    for (auto& p : points) {
      for (auto& x : p) x = unit(rng);
    }
  }

  // Feature j fires on one side of a random hyperplane through the unit cube.
  static constexpr FeatureCategory kCycle[] = {FeatureCategory::Morphological, FeatureCategory::Syntactic,
                                               FeatureCategory::Phonological, FeatureCategory::Inventory};
  std::vector<Feature> features;
  std::vector<std::vector<double>> directions(n_features, std::vector<double>(dim));
  std::vector<double> offsets(n_features);
  for (std::size_t j = 0; j < n_features; ++j) {
    char name[32];
    std::snprintf(name, sizeof(name), "f%03zu", j);
    features.push_back({name, kCycle[j % 4]});
    double offset = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      directions[j][d] = normal(rng);
      offset += directions[j][d] * unit(rng);
    }
    offsets[j] = offset;
  }
  std::map<LanguageId, FeatureValues> vectors;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureValues values(n_features);
    for (std::size_t j = 0; j < n_features; ++j) {
      double s = -offsets[j];
      for (std::size_t d = 0; d < dim; ++d) s += directions[j][d] * points[i][d];
      const double v = 1.0 / (1.0 + std::exp(-kFeatureSharpness * s)) + cfg.feature_noise * normal(rng);
      values[j] = std::clamp(v, 0.0, 1.0);
    }
    vectors.emplace(ids[i], std::move(values));
  }

  // theta_k(z) = base_k + slope_k . (z - 0.5) + adapter_noise * eps
  struct AffineElement {
    double base;
    std::vector<double> slope;
  };
  std::map<std::string, std::vector<AffineElement>> maps;
  for (const auto& [name, spec] : cfg.tensor_schema) {
    auto& elems = maps[name];
    elems.resize(element_count(spec.shape));
    for (auto& e : elems) {
      e.base = normal(rng);
      e.slope.resize(dim);
      for (auto& s : e.slope) s = normal(rng);
    }
  }
  AdapterPool oracles;
  for (std::size_t i = 0; i < n; ++i) {
    AdapterCheckpoint ckpt;
    ckpt.manifest.language = ids[i].str();
    ckpt.manifest.architecture = "synthetic-affine";
    ckpt.manifest.hidden_size = 8;
    ckpt.manifest.reduction_factor = 1.0;
    ckpt.manifest.layer_count = 1;
    ckpt.manifest.provenance = {{"generator", "harness"}, {"seed", cfg.seed}};
    for (const auto& [name, spec] : cfg.tensor_schema) {
      const auto& elems = maps.at(name);
      Tensor t{spec.shape, std::vector<float>(elems.size())};
      for (std::size_t k = 0; k < elems.size(); ++k) {
        double v = elems[k].base;
        for (std::size_t d = 0; d < dim; ++d) v += elems[k].slope[d] * (points[i][d] - 0.5);
        v += cfg.adapter_noise * normal(rng);
        t.data[k] = static_cast<float>(v);
      }
      ckpt.tensors.emplace(name, std::move(t));
    }
    oracles.emplace(ids[i], std::move(ckpt));
  }

  SyntheticWorld world{cfg, ids, {}, TypologyTable(std::move(features), std::move(vectors)), std::move(oracles), 0.0};
  for (std::size_t i = 0; i < n; ++i) world.latent.emplace(ids[i], points[i]);

  std::vector<double> latent_d, typo_d;
  try {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        latent_d.push_back(euclidean(points[i], points[j]));
        typo_d.push_back(distance(world.typology, ids[i], ids[j]));
      }
    }
  } catch (const Error& e) {
    throw invalid(std::string("generated typology is unusable: ") + e.what());
  }
  world.typology_spearman = spearman(latent_d, typo_d);
  if (!(world.typology_spearman > 0.0)) {
    throw invalid("generated typology does not correlate with latent distance (spearman " +
                  format_g(world.typology_spearman) + ")");
  }
  return world;
}

std::vector<std::vector<double>> probe_inputs(std::uint64_t seed, std::size_t probes, std::size_t dim) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(dim)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> out(probes, std::vector<double>(dim));
  for (auto& x : out) {
    for (auto& v : x) v = normal(rng);
  }
  return out;
}

Scores evaluate_proxy(const AdapterCheckpoint& proxy, const AdapterCheckpoint& oracle, std::size_t probes,
                      std::uint64_t seed) {
  require_same_schema(schema_of(proxy), "proxy", schema_of(oracle), "oracle");

  Scores scores;
  double sq = 0.0;
  std::size_t elements = 0;
  for (const auto& [name, p] : proxy.tensors) {
    const auto& o = oracle.tensors.at(name);
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double d = static_cast<double>(p.data[i]) - static_cast<double>(o.data[i]);
      sq += d * d;
    }
    elements += p.data.size();
  }
  scores.param_l2 = std::sqrt(sq);

  double fsq = 0.0;
  std::size_t outputs = 0;
  bool any_map = false;
  for (const auto& [name, w_proxy] : proxy.tensors) {
    if (w_proxy.shape.size() != 2) continue;
    any_map = true;
    const auto rows = static_cast<std::size_t>(w_proxy.shape[0]);
    const auto cols = static_cast<std::size_t>(w_proxy.shape[1]);
    const auto& w_oracle = oracle.tensors.at(name);

    const float* b_proxy = nullptr;
    const float* b_oracle = nullptr;
    if (name.size() >= 6 && name.ends_with("weight")) {
      const auto bias = name.substr(0, name.size() - 6) + "bias";
      auto it = proxy.tensors.find(bias);
      if (it != proxy.tensors.end() && it->second.shape == Shape{w_proxy.shape[0]}) {
        b_proxy = it->second.data.data();
        b_oracle = oracle.tensors.at(bias).data.data();
      }
    }
    for (const auto& x : probe_inputs(seed, probes, cols)) {
      for (std::size_t r = 0; r < rows; ++r) {
        double diff = b_proxy ? static_cast<double>(b_proxy[r]) - static_cast<double>(b_oracle[r]) : 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          diff += (static_cast<double>(w_proxy.data[r * cols + c]) - static_cast<double>(w_oracle.data[r * cols + c])) *
                  x[c];
        }
        fsq += diff * diff;
      }
      outputs += rows;
    }
  }
  if (any_map) {
    scores.functional_mse = outputs ? fsq / static_cast<double>(outputs) : 0.0;
  } else {
    scores.functional_mse = elements ? sq / static_cast<double>(elements) : 0.0;
  }
  return scores;
}

double best_convex_l2(const AdapterPool& pool, const AdapterCheckpoint& oracle) {
  if (pool.empty()) throw Error(ErrorCode::EmptyPool, "no sources for the convex reference");
  const auto reference = schema_of(oracle);
  std::vector<std::vector<double>> sources;
  for (const auto& [lang, ckpt] : pool) {
    require_same_schema(reference, "oracle", schema_of(ckpt), lang.str());
    sources.push_back(flatten(ckpt));
  }
  const auto target = flatten(oracle);
  const std::size_t n = sources.size();

  // Minimize w'Gw - 2b'w over the simplex with accelerated projected gradient.
  std::vector<double> gram(n * n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    b[i] = std::inner_product(sources[i].begin(), sources[i].end(), target.begin(), 0.0);
    for (std::size_t j = i; j < n; ++j) {
      gram[i * n + j] = gram[j * n + i] =
          std::inner_product(sources[i].begin(), sources[i].end(), sources[j].begin(), 0.0);
    }
  }
  std::vector<double> v(n, 1.0);
  double lambda_max = 0.0;
  for (int it = 0; it < 200; ++it) {
    std::vector<double> gv(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) gv[i] += gram[i * n + j] * v[j];
    }
    const double norm = std::sqrt(std::inner_product(gv.begin(), gv.end(), gv.begin(), 0.0));
    if (norm == 0.0) break;
    lambda_max = norm / std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i] = gv[i] / norm;
  }
  const double step = 1.0 / (2.0 * std::max(lambda_max, 1e-12) * 1.01);

  std::vector<double> w(n, 1.0 / static_cast<double>(n)), y = w, prev = w;
  double t = 1.0;
  for (int it = 0; it < 5000; ++it) {
    std::vector<double> grad(n);
    for (std::size_t i = 0; i < n; ++i) {
      double g = -b[i];
      for (std::size_t j = 0; j < n; ++j) g += gram[i * n + j] * y[j];
      grad[i] = 2.0 * g;
    }
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = y[i] - step * grad[i];
    prev = w;
    w = project_simplex(std::move(z));
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < n; ++i) y[i] = w[i] + ((t - 1.0) / t_next) * (w[i] - prev[i]);
    t = t_next;
  }

  double best = residual_l2(sources, w, target);
  // Vertices are feasible too; guards against slow convergence.
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    best = std::min(best, residual_l2(sources, e, target));
  }
  return best;
}

ComparisonReport run_comparison(const SyntheticWorld& world, const LanguageId& target,
                                const ComparisonOptions& options) {
  if (!world.oracles.contains(target)) {
    throw Error(ErrorCode::UnknownLanguage, "unknown language '" + target.str() + "'");
  }
  std::set<LanguageId> members = options.pool;
  if (members.empty()) {
    for (const auto& lang : world.languages) {
      if (lang != target) members.insert(lang);
    }
  }
  if (members.contains(target)) {
    throw Error(ErrorCode::InvalidArgument, "the target's oracle must stay out of the pool");
  }
  AdapterPool pool;
  for (const auto& lang : members) {
    auto it = world.oracles.find(lang);
    if (it == world.oracles.end()) throw Error(ErrorCode::UnknownLanguage, "unknown language '" + lang.str() + "'");
    pool.emplace(lang, it->second);
  }
  std::optional<LanguageId> english;
  if (pool.contains(LanguageId("en"))) english = LanguageId("en");

  const auto& oracle = world.oracles.at(target);
  ComparisonReport report;
  report.seed = world.config.seed;
  report.target = target;
  for (auto method : options.methods) {
    ProxySpec spec;
    spec.target = target;
    spec.method = method;
    spec.category = options.category;
    spec.policy = options.policy;
    spec.lambda = options.lambda;
    spec.ntbg_mode = options.ntbg_mode;
    auto result = build_proxy(pool, english, &world.typology, spec);
    report.rows.push_back({method, evaluate_proxy(result.checkpoint, oracle, options.probes, world.config.seed)});
    report.reports.push_back(std::move(result.report));
  }
  report.best_convex_l2 = best_convex_l2(pool, oracle);
  return report;
}

ComparisonReport run_comparison(const WorldConfig& cfg, const LanguageId& target, const ComparisonOptions& options) {
  return run_comparison(generate_world(cfg), target, options);
}

std::string comparison_csv_header() { return "seed,target,method,param_l2,functional_mse,best_convex_l2\n"; }

std::string comparison_csv_rows(const ComparisonReport& report) {
  std::string out;
  for (const auto& row : report.rows) {
    out += std::to_string(report.seed) + "," + report.target.str() + "," + std::string(to_string(row.method)) + "," +
           format_g(row.scores.param_l2) + "," + format_g(row.scores.functional_mse) + "," +
           format_g(report.best_convex_l2) + "\n";
  }
  return out;
}

std::string comparison_table(const std::vector<ComparisonReport>& reports) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %-8s %-8s %14s %16s %16s\n", "seed", "target", "method", "param_l2",
                "functional_mse", "best_convex_l2*");
  out += line;
  std::map<Method, std::vector<double>> by_method;
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      std::snprintf(line, sizeof(line), "%-8llu %-8s %-8s %14.6f %16.6f %16.6f\n",
                    static_cast<unsigned long long>(r.seed), r.target.str().c_str(),
                    std::string(to_string(row.method)).c_str(), row.scores.param_l2, row.scores.functional_mse,
                    r.best_convex_l2);
      out += line;
      by_method[row.method].push_back(row.scores.param_l2);
    }
  }
  out += "\nmedian param_l2 by method:\n";
  for (auto& [method, values] : by_method) {
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    const double median = m % 2 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
    std::snprintf(line, sizeof(line), "  %-8s %14.6f\n", std::string(to_string(method)).c_str(), median);
    out += line;
  }
  out += "* best_convex_l2 is a simplex least-squares reference, not a method under test.\n";
  return out;
}

}  // namespace typomerge::harness
