#include "typomerge_cli/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "typomerge/adapter_io.hpp"
#include "typomerge/digest.hpp"
#include "typomerge/harness.hpp"
#include "typomerge/proxy.hpp"

namespace typomerge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::AllPruned: return kExitAllPruned;
    case ErrorCode::SchemaMismatch: return kExitSchema;
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidPolicy:
    case ErrorCode::InvalidConfig:
    case ErrorCode::LambdaOutOfRange: return kExitUsage;
    default: return kExitData;
  }
}

std::string format_utc(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string timestamp_now() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    long long value = 0;
    const char* end = epoch + std::char_traits<char>::length(epoch);
    auto [ptr, ec] = std::from_chars(epoch, end, value);
    if (ec == std::errc() && ptr == end) return format_utc(static_cast<std::time_t>(value));
  }
  return format_utc(std::time(nullptr));
}

namespace {

std::uint64_t parse_u64(std::string_view text) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidArgument, "'" + std::string(text) + "' is not a seed");
  }
  return value;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  if (auto dots = spec.find(".."); dots != std::string::npos) {
    const auto lo = parse_u64(std::string_view(spec).substr(0, dots));
    const auto hi = parse_u64(std::string_view(spec).substr(dots + 2));
    if (hi < lo) throw Error(ErrorCode::InvalidArgument, "empty seed range '" + spec + "'");
    if (hi - lo >= 1'000'000) throw Error(ErrorCode::InvalidArgument, "seed range '" + spec + "' is too long");
    for (auto s = lo;; ++s) {
      seeds.push_back(s);
      if (s == hi) break;
    }
  } else {
    for (const auto& item : split_commas(spec)) seeds.push_back(parse_u64(item));
  }
  if (seeds.empty()) throw Error(ErrorCode::InvalidArgument, "no seeds given");
  return seeds;
}

namespace {

const std::vector<std::string> kCategories = {"featural", "morphological", "syntactic"};
const std::vector<std::string> kMethods = {"tipa", "uniform", "closest", "ntbg"};
const std::vector<std::string> kModes = {"convex", "sum"};

struct DistanceArgs {
  std::string typology;
  std::string matrix;
  std::string category = "featural";
  std::size_t min_shared = 1;
};

struct PolicyArgs {
  std::optional<std::size_t> top_k;
  std::optional<double> threshold;

  PruningPolicy policy() const {
    if (top_k) return PruningPolicy::top_k(*top_k);
    if (threshold) return PruningPolicy::threshold(*threshold);
    return {};
  }
};

void add_distance_options(CLI::App& cmd, DistanceArgs& args) {
  auto* typology = cmd.add_option("--typology", args.typology, "Typology CSV")->check(CLI::ExistingFile);
  auto* matrix = cmd.add_option("--matrix", args.matrix, "Precomputed distance CSV")->check(CLI::ExistingFile);
  typology->excludes(matrix);
  cmd.add_option("--category", args.category, "Feature category for typology distances")
      ->check(CLI::IsMember(kCategories))
      ->capture_default_str();
  cmd.add_option("--min-shared", args.min_shared, "Minimum jointly non-missing features")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_policy_options(CLI::App& cmd, PolicyArgs& args) {
  auto* k = cmd.add_option("--top-k", args.top_k, "Keep the k nearest sources")->check(CLI::PositiveNumber);
  auto* t = cmd.add_option("--threshold", args.threshold, "Keep sources with similarity above T")
                ->check(CLI::Range(0.0, 1.0));
  k->excludes(t);
}

struct LoadedDistances {
  std::optional<TypologyTable> table;
  std::optional<DistanceMatrix> matrix;

  DistanceSource view() const {
    if (table) return &*table;
    if (matrix) return &*matrix;
    return std::monostate{};
  }
  std::vector<LanguageId> languages() const {
    if (table) return table->languages();
    if (matrix) return matrix->languages();
    return {};
  }
};

LoadedDistances load_distances(const DistanceArgs& args) {
  LoadedDistances out;
  if (!args.typology.empty()) out.table = load_typology(args.typology);
  if (!args.matrix.empty()) out.matrix = load_precomputed_distances(args.matrix);
  return out;
}

FeatureCategory category_of(const DistanceArgs& args) { return *parse_category(args.category); }

json file_entry(const fs::path& path) { return {{"path", path.string()}, {"sha256", sha256_file(path)}}; }

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// distances -----------------------------------------------------------------

struct DistancesCmd {
  DistanceArgs dist;
  std::string target;
  std::string pool;
  bool as_json = false;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("distances", "Print target-to-source typological distances");
    add_distance_options(*cmd, dist);
    cmd->add_option("--target", target, "Target language id")->required();
    cmd->add_option("--pool", pool, "Comma-separated ids or a pool directory (default: every other language)");
    cmd->add_flag("--json", as_json, "Emit JSON");
  }

  int run(std::ostream& out) const {
    if (dist.typology.empty() && dist.matrix.empty()) {
      throw Error(ErrorCode::InvalidArgument, "one of --typology or --matrix is required");
    }
    const auto data = load_distances(dist);
    const LanguageId target_id(target);

    std::set<LanguageId> members;
    if (pool.empty()) {
      for (const auto& lang : data.languages()) members.insert(lang);
    } else if (fs::is_directory(pool)) {
      for (const auto& [lang, _] : scan_pool(pool).members) members.insert(lang);
    } else {
      for (const auto& id : split_commas(pool)) members.insert(LanguageId(id));
    }
    members.erase(target_id);

    const auto dv = distances_for(data.view(), target_id, members, category_of(dist),
                                  DistanceOptions{dist.min_shared});
    if (as_json) {
      json entries = json::array();
      for (const auto& [lang, e] : dv.entries) {
        entries.push_back(
            {{"lang", lang.str()}, {"raw", e.raw}, {"normalized", e.normalized}, {"similarity", 1.0 - e.normalized}});
      }
      json j{{"target", dv.target.str()}, {"kind", to_string(dv.kind)}, {"entries", std::move(entries)}};
      out << j.dump(2) << "\n";
      return kExitOk;
    }
    char line[128];
    std::snprintf(line, sizeof(line), "%-8s  %10s  %10s  %10s\n", "lang", "raw", "normalized", "similarity");
    out << line;
    for (const auto& [lang, e] : dv.entries) {
      std::snprintf(line, sizeof(line), "%-8s  %10s  %10s  %10s\n", lang.str().c_str(), fixed(e.raw).c_str(),
                    fixed(e.normalized).c_str(), fixed(1.0 - e.normalized).c_str());
      out << line;
    }
    return kExitOk;
  }
};

// build-proxy ---------------------------------------------------------------

struct BuildProxyCmd {
  DistanceArgs dist;
  PolicyArgs policy;
  std::string pool;
  std::string target;
  std::string method = "tipa";
  double lambda = 0.5;
  std::string ntbg_mode = "convex";
  std::vector<std::string> skip_tensors;
  bool cast_f32 = false;
  bool allow_nonfinite = false;
  unsigned threads = 1;
  std::string output;
  std::string report;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("build-proxy", "Construct a proxy adapter for a target language");
    cmd->add_option("--pool", pool, "Pool directory (<lang>/adapter.bin or <lang>.bin)")
        ->required()
        ->check(CLI::ExistingDirectory);
    cmd->add_option("--target", target, "Target language id")->required();
    add_distance_options(*cmd, dist);
    add_policy_options(*cmd, policy);
    cmd->add_option("--method", method, "Aggregation method")->check(CLI::IsMember(kMethods))->capture_default_str();
    cmd->add_option("--lambda", lambda, "ntbg interpolation coefficient")->capture_default_str();
    cmd->add_option("--ntbg-mode", ntbg_mode, "ntbg combination rule")
        ->check(CLI::IsMember(kModes))
        ->capture_default_str();
    cmd->add_option("--skip-tensors", skip_tensors, "Glob of tensors copied from the heaviest source instead")
        ->delimiter(',');
    cmd->add_flag("--cast-f32", cast_f32, "Up-cast F16/BF16 inputs to F32");
    cmd->add_flag("--allow-nonfinite", allow_nonfinite, "Accept NaN/Inf values in inputs");
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
    cmd->add_option("--output", output, "Output checkpoint path")->required();
    cmd->add_option("--report", report, "Report path (default: <output stem>.report.json)");
  }

  int run(std::ostream& out) const {
    const fs::path out_path(output);
    if (out_path.extension() == ".json") {
      throw Error(ErrorCode::InvalidArgument, "--output must not end in .json; that name is used by the manifest");
    }
    const auto m = *parse_method(method);
    if (m != Method::Uniform && dist.typology.empty() && dist.matrix.empty()) {
      throw Error(ErrorCode::InvalidArgument, "--method " + method + " needs --typology or --matrix");
    }

    ProxySpec spec;
    spec.target = LanguageId(target);
    spec.method = m;
    spec.category = category_of(dist);
    spec.policy = policy.policy();
    spec.distance_options.min_shared_features = dist.min_shared;
    spec.lambda = lambda;
    spec.ntbg_mode = ntbg_mode == "sum" ? CombinationMode::Sum : CombinationMode::Convex;
    spec.skip_tensors = skip_tensors;
    spec.threads = threads;

    const auto data = load_distances(dist);
    ReadOptions read_options;
    read_options.cast_f32 = cast_f32;
    read_options.allow_nonfinite = allow_nonfinite;
    const auto loaded = load_pool(pool, read_options);

    auto result = build_proxy(loaded.adapters, loaded.descriptor.english, data.view(), spec);
    write_checkpoint(result.checkpoint, out_path);

    const auto written = sha256_file(out_path);
    if (written != result.report.output.sha256) {
      throw Error(ErrorCode::IoError, "digest of " + out_path.string() + " does not match the serialized proxy");
    }
    result.report.output.path = out_path.string();
    const auto manifest_path = sidecar_path(out_path);
    result.report.manifest = FileDigest{manifest_path.string(), sha256_file(manifest_path)};
    result.report.timestamp = timestamp_now();

    const auto report_json = to_json(result.report);
    fs::path report_path(report);
    if (report_path.empty()) report_path = fs::path(out_path).replace_extension(".report.json");
    write_json(report_path, report_json);
    out << report_json.dump(2) << "\n";
    return kExitOk;
  }
};

// harness -------------------------------------------------------------------

struct HarnessCmd {
  std::string seeds = "1..20";
  int languages = 16;
  int latent_dim = 2;
  int features = 32;
  double feature_noise = 0.05;
  double adapter_noise = 0.5;
  std::string methods = "tipa,uniform,closest,ntbg";
  PolicyArgs policy;
  std::string category = "featural";
  std::string target;
  std::size_t probes = 64;
  double lambda = 0.5;
  std::string ntbg_mode = "convex";
  std::string output;
  bool table = false;
  std::string dump_world;
  std::string report;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("harness", "Score proxies against held-out oracles in synthetic worlds");
    cmd->add_option("--seeds", seeds, "Seed range a..b or list a,b,c")->capture_default_str();
    cmd->add_option("--languages", languages, "Languages per world")->capture_default_str();
    cmd->add_option("--latent-dim", latent_dim, "Latent dimension")->capture_default_str();
    cmd->add_option("--features", features, "Typology features per language")->capture_default_str();
    cmd->add_option("--feature-noise", feature_noise, "Typology jitter")->capture_default_str();
    cmd->add_option("--adapter-noise", adapter_noise, "Oracle parameter noise")->capture_default_str();
    cmd->add_option("--methods", methods, "Comma-separated methods")->capture_default_str();
    add_policy_options(*cmd, policy);
    cmd->add_option("--category", category, "Feature category for TIPA distances")
        ->check(CLI::IsMember(kCategories))
        ->capture_default_str();
    cmd->add_option("--target", target, "Held-out language (default: last language of each world)");
    cmd->add_option("--probes", probes, "Probe inputs for functional_mse")->capture_default_str();
    cmd->add_option("--lambda", lambda, "ntbg interpolation coefficient")->capture_default_str();
    cmd->add_option("--ntbg-mode", ntbg_mode, "ntbg combination rule")
        ->check(CLI::IsMember(kModes))
        ->capture_default_str();
    cmd->add_option("--output", output, "CSV path (default: stdout)");
    cmd->add_flag("--table", table, "Print a median summary table to stdout");
    cmd->add_option("--dump-world", dump_world, "Write each world's pool and typology under DIR/seed-<n>");
    cmd->add_option("--report", report, "Run report path when files are written");
  }

  int run(std::ostream& out) const {
    harness::ComparisonOptions options;
    options.methods.clear();
    for (const auto& name : split_commas(methods)) {
      auto m = parse_method(name);
      if (!m) throw Error(ErrorCode::InvalidArgument, "unknown method '" + name + "'");
      options.methods.insert(*m);
    }
    if (options.methods.empty()) throw Error(ErrorCode::InvalidArgument, "--methods is empty");
    options.policy = policy.policy();
    options.category = *parse_category(category);
    options.probes = probes;
    options.lambda = lambda;
    options.ntbg_mode = ntbg_mode == "sum" ? CombinationMode::Sum : CombinationMode::Convex;

    harness::WorldConfig cfg;
    cfg.n_languages = languages;
    cfg.latent_dim = latent_dim;
    cfg.n_features = features;
    cfg.feature_noise = feature_noise;
    cfg.adapter_noise = adapter_noise;

    const auto seed_list = parse_seed_list(seeds);
    std::vector<harness::ComparisonReport> reports;
    std::string csv = harness::comparison_csv_header();
    std::vector<fs::path> written;
    for (auto seed : seed_list) {
      cfg.seed = seed;
      const auto world = harness::generate_world(cfg);
      const LanguageId target_id = target.empty() ? world.languages.back() : LanguageId(target);
      auto report_for_seed = harness::run_comparison(world, target_id, options);
      csv += harness::comparison_csv_rows(report_for_seed);
      reports.push_back(std::move(report_for_seed));
      if (!dump_world.empty()) {
        const fs::path dir = fs::path(dump_world) / ("seed-" + std::to_string(seed));
        write_pool(world.oracles, dir / "pool");
        write_file_atomic(dir / "typology.csv", format_typology(world.typology));
      }
    }

    if (!output.empty()) {
      write_file_atomic(output, csv);
      written.emplace_back(output);
    }
    if (!dump_world.empty()) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::recursive_directory_iterator(dump_world)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      written.insert(written.end(), files.begin(), files.end());
    }

    if (table) {
      out << harness::comparison_table(reports);
    } else if (output.empty()) {
      out << csv;
    }

    if (!written.empty()) {
      fs::path report_path(report);
      if (report_path.empty()) {
        report_path = !output.empty() ? fs::path(output).replace_extension(".report.json")
                                      : fs::path(dump_world) / "report.json";
      }
      std::erase(written, report_path);
      json files = json::array();
      for (const auto& f : written) files.push_back(file_entry(f));
      json seeds_json = json::array();
      for (auto s : seed_list) seeds_json.push_back(s);
      json method_names = json::array();
      for (auto m : options.methods) method_names.push_back(to_string(m));
      json j{{"tool", kToolName},
             {"version", kToolVersion},
             {"timestamp", timestamp_now()},
             {"command", "harness"},
             {"world",
              {{"languages", languages},
               {"latent_dim", latent_dim},
               {"features", features},
               {"feature_noise", feature_noise},
               {"adapter_noise", adapter_noise}}},
             {"seeds", std::move(seeds_json)},
             {"methods", std::move(method_names)},
             {"policy", options.policy.to_string()},
             {"category", category},
             {"files", std::move(files)}};
      write_json(report_path, j);
    }
    return kExitOk;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Typology-weighted adapter merging", "typomerge"};
  app.set_version_flag("--version", std::string(kToolName) + " " + std::string(kToolVersion));
  app.set_config("--config", "", "Read options from a key=value file ([<subcommand>] sections)");
  app.require_subcommand(1);
  app.fallthrough();

  DistancesCmd distances;
  BuildProxyCmd build;
  HarnessCmd harness_cmd;
  distances.attach(app);
  build.attach(app);
  harness_cmd.attach(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error[Usage]: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const auto* selected = app.get_subcommands().front();
    if (selected->get_name() == "distances") return distances.run(out);
    if (selected->get_name() == "build-proxy") return build.run(out);
    return harness_cmd.run(out);
  } catch (const Error& e) {
    err << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error[Internal]: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace typomerge::cli
