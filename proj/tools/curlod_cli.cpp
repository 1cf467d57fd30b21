// Command-line driver: invariant validation, convergence experiments and
// plain-text dumps of meshes and of the projection matrix.

#include "curlod/error.hpp"
#include "curlod/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

using namespace curlod;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  return os;
}

int cmd_validate() {
  const auto checks = validate(&std::cout);
  int failed = 0;
  for (const auto& c : checks) failed += !c.pass;
  std::cout << (failed ? "validation FAILED: " + std::to_string(failed) + " check(s)\n"
                       : "validation passed\n");
  return failed ? 1 : 0;
}

int cmd_run(const std::string& config_path, const std::map<std::string, std::string>& flags) {
  std::map<std::string, std::string> kv;
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) throw Error("cannot read config file '" + config_path + "'");
    kv = parse_config(is);
  }
  for (const auto& [k, v] : flags) kv[k] = v;  // flags win
  ExperimentConfig cfg;
  apply_config(kv, cfg);
  if (!cfg.ideal && cfg.m.empty()) cfg.m = default_m_schedule(cfg.levels);

  const ExperimentReport rep = run_example(cfg, &std::cerr);
  write_csv(rep, std::cout);
  if (rep.rows.size() > 1 && rep.slope_lod != 0)
    std::cerr << "fitted slope: lod " << rep.slope_lod << ", fem " << rep.slope_fem << "\n";
  if (!cfg.out.empty()) {
    auto os = open_out(cfg.out);
    write_csv(rep, os);
    const std::filesystem::path plot = std::filesystem::path(cfg.out).replace_extension(".py");
    auto ps = open_out(plot.string());
    ps << plot_script(std::filesystem::path(cfg.out).filename().string());
    std::cerr << "wrote " << cfg.out << " and " << plot.string() << "\n";
  }
  return 0;
}

int cmd_dump(int dim, int coarse_level, int fine_level, const std::string& variant,
             const std::string& mesh_path, const std::string& p_path) {
  CURLOD_REQUIRE(dim == 2 || dim == 3, "dim must be 2 or 3");
  CURLOD_REQUIRE(coarse_level >= 0 && fine_level >= coarse_level, "need 0 <= coarse <= fine");
  auto coarse = std::make_shared<const Mesh>(build_structured_mesh(dim, 1 << coarse_level));
  auto fine = std::make_shared<const Mesh>(build_structured_mesh(dim, 1 << fine_level));
  if (!mesh_path.empty()) {
    auto os = open_out(mesh_path);
    coarse->dump(os);
    if (fine_level != coarse_level) fine->dump(os);
  }
  if (!p_path.empty()) {
    const MeshPair pair(coarse, fine);
    ProjectionSet ps = assemble_PiE(pair, {.with_nodal = false});
    if (variant == "zeroed") ps = zero_boundary_rows(ps, *coarse);
    auto os = open_out(p_path);
    write_triplets(ps.P, os);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curl-curl LOD experiments"};
  app.require_subcommand(1);

  app.add_subcommand("validate", "run the invariant suite on small meshes");

  auto* run = app.add_subcommand("run", "convergence study for one example");
  std::string config;
  run->add_option("--config", config, "key=value file mirroring the flags");
  std::map<std::string, std::string> flags;
  auto str_flag = [&](const std::string& name, const std::string& help) {
    return run->add_option_function<std::string>(
        "--" + name, [&flags, name](const std::string& v) { flags[name] = v; }, help);
  };
  str_flag("example", "1|2|3|4")->check(CLI::IsMember({"1", "2", "3", "4"}));
  str_flag("dim", "2|3")->check(CLI::IsMember({"2", "3"}));
  str_flag("levels", "coarse levels, j0:j1 or a list");
  str_flag("m", "layers per level, m0,m1,...");
  str_flag("ref-level", "reference mesh level");
  str_flag("source-correction", "none|boundary|all")
      ->check(CLI::IsMember({"none", "boundary", "all"}));
  str_flag("pi-variant", "standard|zeroed")->check(CLI::IsMember({"standard", "zeroed"}));
  str_flag("boundary-layers", "selection depth for boundary source corrections");
  str_flag("out", "CSV output; a plot script is written next to it");
  str_flag("cache-dir", "corrector cache directory");
  run->add_flag_callback("--ideal", [&flags] { flags["ideal"] = "true"; },
                         "correctors on the whole domain");

  auto* dump = app.add_subcommand("dump", "plain-text mesh and projection dumps");
  int dim = 2, coarse_level = 1, fine_level = 2;
  std::string variant = "standard", mesh_path, p_path;
  dump->add_option("--dim", dim)->check(CLI::IsMember({2, 3}));
  dump->add_option("--coarse", coarse_level, "coarse level");
  dump->add_option("--fine", fine_level, "fine level");
  dump->add_option("--pi-variant", variant)->check(CLI::IsMember({"standard", "zeroed"}));
  dump->add_option("--mesh", mesh_path, "mesh dump file");
  dump->add_option("--p", p_path, "triplet file for P");

  CLI11_PARSE(app, argc, argv);
  try {
    if (app.got_subcommand("validate")) return cmd_validate();
    if (app.got_subcommand("run")) return cmd_run(config, flags);
    return cmd_dump(dim, coarse_level, fine_level, variant, mesh_path, p_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
