// gaugeopt: run, verify and classify convex shape optimization problems.

#include "gaugeopt/analyze.hpp"
#include "gaugeopt/io.hpp"
#include "gaugeopt/problem.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace gaugeopt;

namespace {

void print_schema_error(const SchemaError& e) {
  std::cerr << "schema error:\n";
  for (const auto& issue : e.issues()) std::cerr << "  " << issue << '\n';
}

int report_run(ProblemDocument doc, const fs::path& base_dir, const std::string& out_dir) {
  if (!out_dir.empty()) doc.outputs.dir = fs::absolute(out_dir).string();
  RunOutcome r = run_problem(doc, base_dir, true);
  const fs::path dir = fs::path(doc.outputs.dir).is_absolute() ? fs::path(doc.outputs.dir) : base_dir / doc.outputs.dir;
  const Json& res = r.report["result"];
  std::cout << doc.name << ": " << res.value("status", std::string("?"));
  if (res.contains("objective")) std::cout << ", objective " << res["objective"].get<double>();
  if (r.verdict) std::cout << ", verdict " << to_string(r.verdict->kind) << " (" << r.verdict->atoms.size() << " atoms)";
  if (doc.analysis.report_mu_sign && r.report["kkt"].contains("mu_sign"))
    std::cout << ", sign(mu) " << r.report["kkt"]["mu_sign"].get<std::string>();
  std::cout << "\nreport: " << (dir / doc.outputs.report).string() << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape optimization over convex planar bodies in gauge form"};
  app.require_subcommand(1);

  std::string file, out_dir, preset_name, gauge_file, param;
  std::vector<std::string> values;
  bool emit = false;
  int workers = 0;

  auto* run = app.add_subcommand("run", "Optimize, classify and check a problem file");
  run->add_option("file", file, "Problem document (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (overrides outputs.dir)");

  auto* pre = app.add_subcommand("preset", "Run a built-in problem, or print it with --emit");
  pre->add_option("name", preset_name, "Preset name")->required()->check(CLI::IsMember(preset_names()));
  pre->add_flag("--emit", emit, "Print the resolved document instead of running it");
  pre->add_option("--out", out_dir, "Output directory (overrides outputs.dir)");

  auto* verify = app.add_subcommand("verify", "Derivative checks at the initial gauge only");
  verify->add_option("file", file, "Problem document (JSON)")->required();

  auto* cls = app.add_subcommand("classify", "Classify a sampled gauge as Smooth or Polygonal");
  cls->add_option("gauge", gauge_file, "CSV of theta,u")->required()->check(CLI::ExistingFile);

  auto* sw = app.add_subcommand("sweep", "Run a problem for several values of one parameter");
  sw->add_option("file", file, "Problem document (JSON)")->required();
  sw->add_option("--param", param, "Dotted path, e.g. objective.terms.1.coefficient")->required();
  sw->add_option("--values", values, "Values (JSON literals or plain strings)")->required();
  sw->add_option("--workers", workers, "Worker threads (0: hardware concurrency)")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitSchema;
  }

  try {
    if (*run) {
      const ProblemDocument doc = load_problem(file);
      return report_run(doc, fs::absolute(file).parent_path(), out_dir);
    }
    if (*pre) {
      const ProblemDocument doc = preset(preset_name);
      if (emit) {
        std::cout << to_json(doc).dump(2) << '\n';
        return kExitOk;
      }
      return report_run(doc, fs::current_path(), out_dir);
    }
    if (*verify) {
      const ProblemDocument doc = load_problem(file);
      std::cout << verify_problem(doc, fs::absolute(file).parent_path()).dump(2) << '\n';
      return kExitOk;
    }
    if (*cls) {
      std::ifstream is(gauge_file);
      PeriodicField u = read_gauge_csv(is);
      if (u.size() % 4 != 0 || u.size() < 16) {
        std::cerr << "classify: need a multiple of 4 (>= 16) samples, got " << u.size() << '\n';
        return kExitSchema;
      }
      std::cout << verdict_json(classify(u)).dump(2) << '\n';
      return kExitOk;
    }
    if (*sw) {
      std::ifstream is(file);
      if (!is) throw SchemaError({file + ": cannot open file"});
      Json base;
      try {
        base = Json::parse(is);
      } catch (const Json::parse_error& e) {
        throw SchemaError({file + ": JSON syntax error: " + e.what()});
      }
      const auto items = sweep(base, param, values, fs::absolute(file).parent_path(), workers);
      Json summary = Json::array();
      int worst = kExitOk;
      for (const auto& item : items) {
        summary.push_back({{"value", item.value}, {"exit_code", item.exit_code}, {"summary", item.summary}});
        worst = std::max(worst, item.exit_code);
      }
      std::cout << summary.dump(2) << '\n';
      return worst;
    }
  } catch (const SchemaError& e) {
    print_schema_error(e);
    return kExitSchema;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNotConverged;
  }
  return kExitOk;
}
