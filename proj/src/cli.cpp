#include "holonomy/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "holonomy/experiments.hpp"
#include "holonomy/parallel.hpp"

namespace holonomy {

namespace {

struct Common {
  std::string spec, out_dir = "reports", config, seed, threads, steps, samples;
};

std::uint64_t parse_seed(const std::string& text, const std::string& field) {
  std::uint64_t v = 0;
  std::size_t used = 0;
  try {
    if (!text.empty() && text[0] != '-') v = std::stoull(text, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError(field, "expected an unsigned 64-bit integer, got '" + text + "'");
  return v;
}

Json parse_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception&) {
    return text;  // bare words such as --hyph circle
  }
}

Json read_json_file(const std::string& path, const std::string& field) {
  std::ifstream f(path);
  if (!f) throw ConfigError(field, "cannot open '" + path + "'");
  try {
    return Json::parse(f);
  } catch (const Json::exception& e) {
    throw ConfigError(field, std::string("malformed JSON: ") + e.what());
  }
}

int run_experiment_command(const ExperimentInfo& info, const Common& c, const std::map<std::string, std::string>& flags,
                           std::ostream& out) {
  Json overrides = Json::object();
  auto has_param = [&](const std::string& key) {
    for (const auto& p : info.params)
      if (p.name == key) return true;
    return false;
  };
  if (!c.spec.empty()) {
    if (!has_param("spec")) throw ConfigError("spec", info.name + " takes no group");
    try {
      overrides["spec"] = Json::parse(c.spec);
    } catch (const Json::exception& e) {
      throw ConfigError("spec", std::string("malformed JSON: ") + e.what());
    }
  }
  auto set_count = [&](const std::string& key, const std::string& text, const std::string& flag) {
    if (key.empty() || !has_param(key)) throw ConfigError(flag, info.name + " does not use it");
    overrides[key] = static_cast<std::int64_t>(parse_seed(text, flag));
  };
  if (!c.steps.empty()) set_count("steps", c.steps, "steps");
  if (!c.samples.empty()) set_count(info.samples_param, c.samples, "samples");
  for (const auto& [key, text] : flags) overrides[key] = parse_value(text);

  std::string seed_text = c.seed, threads = c.threads, out_dir = c.out_dir;
  std::string seed_field = "seed";
  if (seed_text.empty())
    if (const char* env = std::getenv("HOLONOMY_SEED")) {
      seed_text = env;
      seed_field = "HOLONOMY_SEED";
    }
  if (!c.config.empty()) {
    const Json cfg = read_json_file(c.config, "json-config");
    if (!cfg.is_object()) throw ConfigError("json-config", "top level must be an object");
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
      const std::string& k = it.key();
      const Json& v = it.value();
      auto text = [&] { return v.is_string() ? v.get<std::string>() : v.dump(); };
      if (k == "seed") {
        seed_text = text();
        seed_field = "seed";
      } else if (k == "threads") {
        threads = text();
      } else if (k == "out") {
        if (!v.is_string()) throw ConfigError("out", "expected a directory name");
        out_dir = v.get<std::string>();
      } else if (k == "samples") {
        if (info.samples_param.empty()) throw ConfigError("samples", info.name + " does not use it");
        overrides[info.samples_param] = v;
      } else if (has_param(k)) {
        overrides[k] = v;
      } else {
        throw ConfigError(k, "unknown field for " + info.name);
      }
    }
  }
  const std::uint64_t seed = seed_text.empty() ? 0 : parse_seed(seed_text, seed_field);
  if (!threads.empty()) set_thread_limit(static_cast<unsigned>(parse_seed(threads, "threads")));

  const ExperimentReport r = info.run(resolve_params(info, overrides), seed);
  const auto path = r.write(out_dir);
  out << r.name << " seed=" << r.seed << ' ' << (r.pass ? "PASS" : "FAIL") << '\n';
  for (const auto& [k, v] : r.metrics) out << "  " << k << " = " << format_number(v) << '\n';
  for (const auto& n : r.notes) out << "  note: " << n << '\n';
  out << "  report: " << path.string() << '\n';
  return r.pass ? 0 : 1;
}

int run_validate(const std::string& file, const std::string& bs_levels, const std::string& save, std::ostream& out) {
  if (file.empty() == bs_levels.empty()) throw ConfigError("hyph", "give exactly one of --hyph FILE or --baez-sawin J");
  Hyph h;
  if (!file.empty()) {
    try {
      h = Hyph::from_json(read_json_file(file, "hyph"));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("hyph", e.what());
    }
  } else {
    const auto J = parse_seed(bs_levels, "baez-sawin");
    if (J < 1 || J > 40) throw ConfigError("baez-sawin", "J must lie in [1, 40]");
    h = build_baez_sawin(static_cast<int>(J)).hyph;
  }
  const HyphReport rep = validate_hyph(h);
  if (!rep.ok) {
    out << "not a hyph: edge " << rep.offending << ": " << rep.message << '\n';
    return 1;
  }
  out << "hyph with " << h.size() << " edges and " << h.vertices().size() << " vertices\n";
  for (std::size_t i = 0; i < rep.witnesses.size(); ++i) {
    const auto& w = rep.witnesses[i];
    out << "  edge " << i + 1 << ": free point on letter " << w.letter << " at t = " << format_number(w.t)
        << ", dir " << (w.dir > 0 ? "+1" : "-1") << '\n';
  }
  if (!save.empty()) {
    std::vector<std::optional<FreePointWitness>> wit(rep.witnesses.begin(), rep.witnesses.end());
    const Hyph annotated(h.registry_ptr(), h.edges(), wit);
    std::ofstream f(save, std::ios::binary);
    if (!f) throw ConfigError("save", "cannot write '" + save + "'");
    f << annotated.to_json().dump() << '\n';
    out << "  saved: " << save << '\n';
  }
  return 0;
}

std::string describe_default(const Json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Seeded holonomy experiments on compact structure groups.\n"
               "Exit status: 0 pass, 1 fail, 2 usage or configuration error."};
  app.require_subcommand(1);
  Common c;
  std::map<std::string, std::map<std::string, std::string>> flags;
  std::map<std::string, const ExperimentInfo*> by_name;

  for (const auto& info : experiment_registry()) {
    CLI::App* sub = app.add_subcommand(info.name, info.summary);
    by_name[info.name] = &info;
    bool has_spec = false, has_steps = false;
    for (const auto& p : info.params) {
      has_spec = has_spec || p.name == "spec";
      has_steps = has_steps || p.name == "steps";
    }
    if (has_spec) sub->add_option("--spec", c.spec, "group spec as JSON (default: " + info.params[0].fallback.dump() + ")");
    sub->add_option("--seed", c.seed, "64-bit seed (fallback: $HOLONOMY_SEED, then 0)");
    sub->add_option("--out", c.out_dir, "report directory")->capture_default_str();
    sub->add_option("--threads", c.threads, "worker cap (0 = all cores)");
    if (has_steps) sub->add_option("--steps", c.steps, "integrator step override");
    if (!info.samples_param.empty())
      sub->add_option("--samples", c.samples, "sets " + info.samples_param);
    sub->add_option("--json-config", c.config, "JSON file of parameters; overrides flags");
    auto& slot = flags[info.name];
    for (const auto& p : info.params) {
      if (p.name == "spec" || p.name == "steps" || p.name == "samples") continue;
      std::string names = "--" + p.name;
      std::string dashed = p.name;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != p.name) names += ",--" + dashed;
      sub->add_option_function<std::string>(
          names, [&slot, key = p.name](const std::string& v) { slot[key] = v; },
          p.help + " (default: " + describe_default(p.fallback) + ")");
    }
  }
  std::string hyph_file, bs_levels, save;
  CLI::App* validate = app.add_subcommand("validate", "check a hyph and print free-point witnesses");
  validate->add_option("--hyph", hyph_file, "hyph JSON file");
  validate->add_option("--baez-sawin", bs_levels, "validate the built-in four-loop hyph with J levels instead");
  validate->add_option("--save", save, "write the hyph with its witnesses to this file");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "validate") return run_validate(hyph_file, bs_levels, save, out);
    return run_experiment_command(*by_name.at(name), c, flags[name], out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 2;
}

}  // namespace holonomy
