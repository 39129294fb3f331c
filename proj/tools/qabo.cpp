// Copyright 2026 The qabo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qabo: command-line front end for schedule optimization experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qabo/config.hpp"
#include "qabo/graph.hpp"
#include "qabo/harness.hpp"
#include "qabo/rydberg.hpp"

namespace {

using nlohmann::json;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
};

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  if (config_required) opt->required();
  app->add_option("--out", c.out, "output path (relative paths go under $QABO_OUTPUT_DIR)");
  app->add_option("--seed", c.seed, "override base_seed");
  app->add_option("--reps", c.reps, "override repetitions");
}

qabo::ExperimentConfig load(const Common& c) {
  qabo::ExperimentConfig cfg = qabo::load_config(c.config);
  qabo::apply_overrides(cfg, c.seed, c.reps);
  return cfg;
}

// Writes text to --out when given, otherwise to stdout.
void emit_text(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  const std::string path = qabo::resolve_output_path(out);
  qabo::write_text_file(path, text);
  std::cerr << "wrote " << path << "\n";
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// A single graph file, or a JSON-lines file with one graph per line.
std::vector<qabo::UnitDiskGraph> load_graphs(const std::string& path) {
  if (!has_suffix(path, ".jsonl")) return {qabo::load_graph(path)};
  std::ifstream in(path);
  if (!in) throw qabo::Error("cannot open " + path);
  std::vector<qabo::UnitDiskGraph> out;
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(qabo::graph_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw qabo::ParseError(e.what(), n);
    }
  }
  return out;
}

// .jsonl: one file; anything else: a directory of graph_NN.json files.
void save_graphs(const std::vector<qabo::UnitDiskGraph>& graphs, const std::string& out) {
  const std::string path = qabo::resolve_output_path(out);
  if (has_suffix(path, ".jsonl")) {
    std::string text;
    for (const auto& g : graphs) text += qabo::to_json(g).dump() + "\n";
    qabo::write_text_file(path, text);
  } else {
    std::filesystem::create_directories(path);
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "graph_%02zu.json", i);
      qabo::write_text_file((std::filesystem::path(path) / name).string(), qabo::to_json(graphs[i]).dump(2) + "\n");
    }
  }
  std::cerr << "wrote " << graphs.size() << " graphs to " << path << "\n";
}

std::string summary_line(const qabo::Summary& s) {
  std::ostringstream os;
  os.precision(6);
  os << "median " << s.median << "  quartiles [" << s.lower << ", " << s.upper << "]  n " << s.n;
  return os.str();
}

std::string primary_metric(const qabo::ExperimentConfig& c) {
  return c.problem == qabo::Problem::RydbergMIS ? "p_mis" : "fidelity";
}

// Samples for histogram/excitation output: from a file, or simulated from a
// Rydberg config.
qabo::SampleSet samples_for(const std::string& samples_path, const qabo::UnitDiskGraph* g, const Common& c,
                            const std::optional<std::vector<double>>& theta, std::int64_t shots) {
  if (!samples_path.empty()) return qabo::ingest_samples(samples_path, *g);
  const auto cfg = load(c);
  const qabo::ExperimentModel model(cfg);
  if (!model.graph()) throw qabo::InvalidArgument("sample output needs --samples or a Rydberg config");
  const auto psi = model.pure_state(qabo::chosen_theta(model, theta));
  return qabo::sample(psi, model.graph()->size(), cfg.n_shots.value_or(shots), cfg.base_seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization of annealing schedules"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qabo::kVersion));

  // optimize
  Common opt_c;
  std::size_t jobs = qabo::default_jobs();
  auto* optimize = app.add_subcommand("optimize", "run seeded optimization repetitions");
  add_common(optimize, opt_c, true);
  optimize->add_option("--jobs", jobs, "parallel repetitions")->check(CLI::PositiveNumber);

  // simulate
  Common sim_c;
  std::optional<std::vector<double>> sim_theta;
  auto* simulate = app.add_subcommand("simulate", "evaluate one schedule");
  add_common(simulate, sim_c, true);
  simulate->add_option("--theta", sim_theta, "parameter vector")->delimiter(',');

  // gap-landscape
  Common gap_c;
  std::size_t gap_points = 101;
  auto* gap = app.add_subcommand("gap-landscape", "spectral gap over s (QA) or (s, lambda) (RA)");
  add_common(gap, gap_c, true);
  gap->add_option("--points", gap_points, "grid points per axis")->check(CLI::Range(2, 100000));

  // graphs
  auto* graphs = app.add_subcommand("graphs", "unit-disk graph tools");
  graphs->require_subcommand(1);
  Common gen_c;
  int rows = 4, cols = 3;
  double spacing = 5.3;
  std::vector<int> nodes{9, 10};
  auto* generate = graphs->add_subcommand("generate", "all lattice UDGs with the given node counts");
  add_common(generate, gen_c, false);
  generate->add_option("--rows", rows)->check(CLI::PositiveNumber);
  generate->add_option("--cols", cols)->check(CLI::PositiveNumber);
  generate->add_option("--spacing", spacing)->check(CLI::PositiveNumber);
  generate->add_option("--nodes", nodes)->delimiter(',');
  Common filt_c;
  std::string filt_in;
  auto* filter = graphs->add_subcommand("filter", "keep unique-MIS graphs, one per isomorphism class");
  add_common(filter, filt_c, false);
  filter->add_option("--in", filt_in, "graph file or .jsonl")->required()->check(CLI::ExistingFile);
  Common hp_c;
  std::string hp_in;
  auto* hp = graphs->add_subcommand("hp", "MIS size, degeneracy and hardness parameter");
  add_common(hp, hp_c, false);
  hp->add_option("--in", hp_in, "graph file or .jsonl")->required()->check(CLI::ExistingFile);

  // evaluate-samples
  Common ev_c;
  std::string ev_graph, ev_samples;
  double ev_x = 0.5, ev_alpha = 1.2;
  auto* evaluate = app.add_subcommand("evaluate-samples", "score measured bitstrings against a graph");
  add_common(evaluate, ev_c, false);
  evaluate->add_option("--graph", ev_graph)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--samples", ev_samples)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--x", ev_x, "quantile for the energy figure of merit")->check(CLI::Range(1e-12, 1.0));
  evaluate->add_option("--alpha", ev_alpha, "edge penalty")->check(CLI::PositiveNumber);

  // aggregate
  Common agg_c;
  std::string agg_records, agg_metric = "best_value";
  auto* aggregate = app.add_subcommand("aggregate", "median and quartiles per experiment");
  add_common(aggregate, agg_c, false);
  aggregate->add_option("--records", agg_records, "JSON-lines run records")->required()->check(CLI::ExistingFile);
  aggregate->add_option("--metric", agg_metric, "best_value or a metrics key");

  // emit
  Common em_c;
  std::string em_kind, em_records, em_graph, em_samples, em_metric = "fidelity";
  std::optional<std::vector<double>> em_theta;
  std::size_t em_points = 101;
  double em_width = 1.0;
  std::int64_t em_shots = 1000;
  auto* emit = app.add_subcommand("emit", "write CSV plot data");
  add_common(emit, em_c, false);
  emit->add_option("--kind", em_kind, "scaling|convergence|gap-landscape|path|trace|histogram|excitations")
      ->required();
  emit->add_option("--records", em_records, "JSON-lines run records")->check(CLI::ExistingFile);
  emit->add_option("--graph", em_graph)->check(CLI::ExistingFile);
  emit->add_option("--samples", em_samples)->check(CLI::ExistingFile);
  emit->add_option("--metric", em_metric);
  emit->add_option("--theta", em_theta)->delimiter(',');
  emit->add_option("--points", em_points)->check(CLI::Range(2, 100000));
  emit->add_option("--bin-width", em_width)->check(CLI::PositiveNumber);
  emit->add_option("--shots", em_shots)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*optimize) {
      const auto cfg = load(opt_c);
      qabo::RunOptions ro;
      ro.out_path = qabo::resolve_output_path(opt_c.out.empty() ? "runs.jsonl" : opt_c.out);
      ro.jobs = jobs;
      ro.on_record = [](const qabo::RunRecord& r) {
        std::cerr << "repetition " << r.repetition << " seed " << r.seed;
        if (r.ok) {
          std::cerr << " best " << r.trace.best_value << " (" << r.duration_s << " s)\n";
        } else {
          std::cerr << " failed: " << r.error << "\n";
        }
      };
      const auto records = qabo::run_experiment(cfg, ro);
      std::size_t failed = 0;
      for (const auto& r : records) failed += r.ok ? 0 : 1;
      std::cout << "digest " << qabo::config_digest(cfg.source) << "\n"
                << "records " << records.size() << " (" << failed << " failed) in " << ro.out_path << "\n";
      if (failed < records.size()) {
        std::cout << "best_value  " << summary_line(qabo::aggregate(records, "best_value")) << "\n";
        const std::string m = primary_metric(cfg);
        std::cout << m << "  " << summary_line(qabo::aggregate(records, m)) << "\n";
      }
      return failed == records.size() && !records.empty() ? 2 : 0;
    }

    if (*simulate) {
      const auto cfg = load(sim_c);
      const qabo::ExperimentModel model(cfg);
      const auto theta = qabo::chosen_theta(model, sim_theta);
      const auto e = model.evaluate(theta, qabo::mix_seed(cfg.base_seed, 0));
      json j{{"theta", theta}, {"value", e.value}, {"sigma_obs", e.sigma_obs}, {"metrics", model.metrics(theta)},
             {"labels", model.labels()}};
      emit_text(sim_c.out, j.dump(2) + "\n");
      return 0;
    }

    if (*gap) {
      const auto cfg = load(gap_c);
      if (cfg.problem == qabo::Problem::RydbergMIS) throw qabo::InvalidArgument("gap-landscape needs a p-spin config");
      const qabo::PSpinModel model(cfg.system);
      const auto grid = qabo::uniform_grid(0.0, 1.0, gap_points);
      const bool ra = cfg.system.mode == qabo::PSpinMode::ReverseAnnealing;
      const auto pts = ra ? qabo::gap_landscape_ra(model, grid, grid) : qabo::gap_landscape_qa(model, grid);
      emit_text(gap_c.out, qabo::gap_landscape_csv(pts, ra));
      return 0;
    }

    if (*generate) {
      const auto gs = qabo::generate_lattice_udgs(rows, cols, spacing, nodes);
      if (gen_c.out.empty()) {
        for (const auto& g : gs) std::cout << qabo::to_json(g).dump() << "\n";
      } else {
        save_graphs(gs, gen_c.out);
      }
      return 0;
    }

    if (*filter) {
      const auto kept = qabo::filter_unique_mis_noniso(load_graphs(filt_in));
      if (filt_c.out.empty()) {
        for (const auto& g : kept) std::cout << qabo::to_json(g).dump() << "\n";
      } else {
        save_graphs(kept, filt_c.out);
      }
      return 0;
    }

    if (*hp) {
      std::ostringstream os;
      os.precision(17);
      os << "graph,vertices,edges,mis_size,mis_count,count_below,hardness\n";
      const auto gs = load_graphs(hp_in);
      for (std::size_t i = 0; i < gs.size(); ++i) {
        const auto r = qabo::brute_force_mis(gs[i]);
        const auto [below, count] = qabo::hardness_parameter_fraction(r);
        os << i << ',' << gs[i].size() << ',' << gs[i].edges().size() << ',' << r.mis_size << ',' << count << ','
           << below << ',' << qabo::hardness_parameter(r) << '\n';
      }
      emit_text(hp_c.out, os.str());
      return 0;
    }

    if (*evaluate) {
      const auto g = qabo::load_graph(ev_graph);
      const auto s = qabo::ingest_samples(ev_samples, g);
      const auto ar = qabo::approximation_ratio(s, g, ev_alpha);
      json j{{"shots", s.total_shots()},
             {"distinct", s.entries().size()},
             {"mis_size", qabo::mis_size_of(g)},
             {"p_mis", qabo::p_mis(s, g)},
             {"quantile_energy", qabo::fom_top_quantile(s, g, ev_x, ev_alpha)},
             {"approximation_ratio", ar.ratio},
             {"best_is_independent", ar.independent},
             {"best_bitstring", qabo::mask_to_bitstring(ar.best, g.size())},
             {"excitation_probabilities", qabo::excitation_probabilities(s)}};
      emit_text(ev_c.out, j.dump(2) + "\n");
      return 0;
    }

    if (*aggregate) {
      const auto records = qabo::read_records(agg_records);
      std::map<std::string, std::vector<qabo::RunRecord>> by_digest;
      for (const auto& r : records) by_digest[r.digest].push_back(r);
      std::ostringstream os;
      os.precision(17);
      os << "digest,series,metric,median,lower,upper,count,failed\n";
      for (const auto& [d, rs] : by_digest) {
        std::size_t failed = 0;
        for (const auto& r : rs) failed += r.ok ? 0 : 1;
        if (failed == rs.size()) {
          os << d << ',' << qabo::series_label(rs[0]) << ',' << agg_metric << ",,,,0," << failed << '\n';
          continue;
        }
        const auto s = qabo::aggregate(rs, agg_metric);
        os << d << ',' << qabo::series_label(rs[0]) << ',' << agg_metric << ',' << s.median << ',' << s.lower << ','
           << s.upper << ',' << s.n << ',' << failed << '\n';
      }
      emit_text(agg_c.out, os.str());
      return 0;
    }

    if (*emit) {
      const auto kind = qabo::parse_plot_kind(em_kind);
      std::string text;
      switch (kind) {
        case qabo::PlotKind::Scaling:
        case qabo::PlotKind::Convergence: {
          if (em_records.empty()) throw qabo::InvalidArgument("--records is required for " + em_kind);
          const auto records = qabo::read_records(em_records);
          text = kind == qabo::PlotKind::Scaling ? qabo::scaling_csv(records, em_metric)
                                                 : qabo::convergence_csv(records);
          break;
        }
        case qabo::PlotKind::GapLandscape:
        case qabo::PlotKind::Path:
        case qabo::PlotKind::Trace: {
          if (em_c.config.empty()) throw qabo::InvalidArgument("--config is required for " + em_kind);
          const auto cfg = load(em_c);
          const qabo::ExperimentModel model(cfg);
          if (!model.pspin()) throw qabo::InvalidArgument(em_kind + " needs a p-spin config");
          if (kind == qabo::PlotKind::GapLandscape) {
            const auto grid = qabo::uniform_grid(0.0, 1.0, em_points);
            const bool ra = cfg.system.mode == qabo::PSpinMode::ReverseAnnealing;
            text = qabo::gap_landscape_csv(
                ra ? qabo::gap_landscape_ra(*model.pspin(), grid, grid) : qabo::gap_landscape_qa(*model.pspin(), grid),
                ra);
          } else {
            const auto controls = model.controls(qabo::chosen_theta(model, em_theta));
            text = kind == qabo::PlotKind::Path ? qabo::path_csv(controls, cfg.t_final, em_points)
                                                : qabo::trace_csv(*model.pspin(), controls, cfg.t_final);
          }
          break;
        }
        case qabo::PlotKind::Histogram:
        case qabo::PlotKind::Excitations: {
          std::optional<qabo::UnitDiskGraph> g;
          if (!em_graph.empty()) g = qabo::load_graph(em_graph);
          if (!g && !em_samples.empty()) throw qabo::InvalidArgument("--samples needs --graph");
          if (!g) {
            if (em_c.config.empty()) throw qabo::InvalidArgument("--graph/--samples or --config is required");
            g = qabo::load_graph(load(em_c).rydberg.graph_path);
          }
          const auto s = samples_for(em_samples, &*g, em_c, em_theta, em_shots);
          text = kind == qabo::PlotKind::Histogram ? qabo::histogram_csv(s, *g, em_width)
                                                   : qabo::excitations_csv(*g, qabo::excitation_probabilities(s));
          break;
        }
      }
      emit_text(em_c.out, text);
      return 0;
    }
  } catch (const qabo::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const qabo::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
