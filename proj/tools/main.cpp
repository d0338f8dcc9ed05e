#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blrm/decision.hpp"
#include "blrm/io.hpp"
#include "blrm/properties.hpp"
#include "blrm/sampler.hpp"
#include "blrm/scenarios.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string data_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  bool seed_given = false;
  bool force_unconverged = false;
};

std::vector<std::string> drug_names(const blrm::ModelSpec& spec) {
  std::vector<std::string> names;
  for (const auto& d : spec.drugs) names.push_back(d.name);
  return names;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + dir +
                             "': " + ec.message());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  }
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed: '" + path.string() + "'");
}

// Loads config and data, applies the --seed override and runs the sampler.
// Convergence gating is left to the caller so `fit` can persist diagnostics
// before reporting the failure.
struct FitOutput {
  blrm::RunConfig config;
  blrm::PosteriorDraws draws;
};

FitOutput run_fit(const CommonArgs& args) {
  FitOutput out;
  out.config = blrm::load_config(args.config_path);
  if (args.seed_given) out.config.sampler.seed = args.seed;
  auto data = blrm::load_cohorts(args.data_path, out.config.model);
  out.draws = blrm::run_mcmc(data, out.config.model, out.config.priors,
                             out.config.sampler);
  return out;
}

int cmd_fit(const CommonArgs& args) {
  auto fit = run_fit(args);
  ensure_out_dir(args.out_dir);

  std::ostringstream diag;
  blrm::write_diagnostics(fit.draws, fit.config.sampler, diag);
  write_text_file(fs::path(args.out_dir) / "diagnostics.json", diag.str());

  if (!fit.draws.converged && !args.force_unconverged) {
    throw blrm::NotConvergedError(
        "fit did not meet the convergence gate (diagnostics.json written); "
        "pass --force-unconverged to keep the draws");
  }

  std::ostringstream summary;
  blrm::write_draws_summary(fit.draws, summary);
  write_text_file(fs::path(args.out_dir) / "draws_summary.csv", summary.str());
  std::cout << "fit: " << fit.draws.n_chains << " chains, "
            << fit.draws.n_iters << " draws each, converged="
            << (fit.draws.converged ? "true" : "false") << "\n";
  return 0;
}

int cmd_evaluate_grid(const CommonArgs& args) {
  auto fit = run_fit(args);
  auto grid = blrm::cartesian_grid(fit.config.grid_axes());
  auto surface =
      blrm::evaluate_grid(fit.draws, fit.config.model, grid,
                          fit.config.intervals, args.force_unconverged);
  ensure_out_dir(args.out_dir);
  blrm::write_surface_file(surface, drug_names(fit.config.model),
                           (fs::path(args.out_dir) / "surface.csv").string());
  std::cout << "evaluate-grid: " << surface.size() << " dose combinations\n";
  return 0;
}

std::string flags_table(const blrm::ScenarioResult& result) {
  std::ostringstream out;
  out << "variant,ewoc_at_combo,marginal_preserved,max_marginal_shift\n";
  for (const auto& vr : result.variants) {
    out << vr.variant.tag << ",";
    if (vr.ewoc_at_combo.has_value()) {
      out << (*vr.ewoc_at_combo ? "true" : "false");
    } else {
      out << "na";
    }
    char shift[32];
    std::snprintf(shift, sizeof shift, "%.6f", vr.max_marginal_shift);
    out << "," << (vr.marginal_preserved ? "true" : "false") << "," << shift
        << "\n";
  }
  return out.str();
}

int cmd_scenario(const CommonArgs& args, const std::string& which) {
  std::vector<blrm::ScenarioDef> defs;
  if (which == "all") {
    defs = blrm::builtin_scenarios();
  } else {
    defs.push_back(blrm::find_scenario(which));
  }

  blrm::SamplerConfig base;
  base.seed = args.seed;
  for (const auto& def : defs) {
    auto result = blrm::run_scenario(def, base, args.force_unconverged);
    fs::path scenario_dir = fs::path(args.out_dir) / def.slug();
    for (const auto& vr : result.variants) {
      auto spec = blrm::variant_spec(vr.variant);
      auto names = drug_names(spec);
      fs::path dir = scenario_dir / vr.variant.tag;
      ensure_out_dir(dir.string());
      blrm::write_surface_file(vr.surface, names,
                               (dir / "surface.csv").string());
      blrm::write_surface_file(vr.marginal_a, names,
                               (dir / "marginal_a.csv").string());
      blrm::write_surface_file(vr.marginal_b, names,
                               (dir / "marginal_b.csv").string());
    }
    write_text_file(scenario_dir / "flags.csv", flags_table(result));
    std::cout << "scenario " << def.id << ": " << result.variants.size()
              << " variants -> " << scenario_dir.string() << "\n";
  }
  return 0;
}

int cmd_check_properties(const CommonArgs& args, bool assert_reference,
                         bool out_given) {
  auto reports = blrm::run_property_matrix(args.seed);
  auto matrix = blrm::render_property_matrix(reports);
  std::cout << matrix;
  if (out_given) {
    ensure_out_dir(args.out_dir);
    write_text_file(fs::path(args.out_dir) / "property_matrix.txt", matrix);
  }
  if (assert_reference && !blrm::matrix_matches_reference(reports)) {
    std::cerr << "property error: matrix does not match the reference\n";
    return 3;
  }
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{
      "Bayesian logistic regression for combination dose escalation"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string scenario_id;
  bool assert_reference = false;

  auto add_seed = [&](CLI::App* sub) {
    return sub->add_option("--seed", args.seed, "Random seed (default 1)");
  };
  auto add_force = [&](CLI::App* sub) {
    sub->add_flag("--force-unconverged", args.force_unconverged,
                  "Keep results even when the convergence gate fails");
  };

  auto* fit = app.add_subcommand("fit", "Sample the posterior for one model");
  fit->add_option("--config", args.config_path, "Run configuration (JSON)")
      ->required();
  fit->add_option("--data", args.data_path, "Cohort data (CSV)")->required();
  fit->add_option("--out", args.out_dir, "Output directory")->required();
  auto* fit_seed = add_seed(fit);
  add_force(fit);

  auto* grid = app.add_subcommand(
      "evaluate-grid", "Fit, then summarize the configured dose grid");
  grid->add_option("--config", args.config_path, "Run configuration (JSON)")
      ->required();
  grid->add_option("--data", args.data_path, "Cohort data (CSV)")->required();
  grid->add_option("--out", args.out_dir, "Output directory")->required();
  auto* grid_seed = add_seed(grid);
  add_force(grid);

  auto* scenario = app.add_subcommand(
      "scenario", "Run built-in data scenarios across model variants");
  scenario
      ->add_option("--scenario", scenario_id,
                   "Scenario id (prior, historical, 0/5@200, 5/5@200, "
                   "5/5@100) or 'all'")
      ->required();
  scenario->add_option("--out", args.out_dir, "Output directory")->required();
  add_seed(scenario);
  add_force(scenario);

  auto* props = app.add_subcommand(
      "check-properties", "Evaluate the interaction-model property matrix");
  auto* props_out =
      props->add_option("--out", args.out_dir, "Output directory (optional)");
  add_seed(props);
  props->add_flag("--assert-reference", assert_reference,
                  "Exit 3 unless the matrix matches the reference pattern");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  args.seed_given = fit_seed->count() > 0 || grid_seed->count() > 0;
  if (fit->parsed()) return cmd_fit(args);
  if (grid->parsed()) return cmd_evaluate_grid(args);
  if (scenario->parsed()) return cmd_scenario(args, scenario_id);
  return cmd_check_properties(args, assert_reference, props_out->count() > 0);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const blrm::NotConvergedError& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return 2;
  } catch (const blrm::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
