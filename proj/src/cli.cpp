#include "xvg/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "xvg/caption.hpp"
#include "xvg/config.hpp"
#include "xvg/error.hpp"
#include "xvg/pipeline.hpp"
#include "xvg/retrieval.hpp"
#include "xvg/seed.hpp"
#include "xvg/trainer.hpp"
#include "xvg/weather.hpp"

namespace xvg::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

const std::vector<AblationCell>& ablation_cells() {
  static const std::vector<AblationCell> cells = {
      {"concat-cot6", "fusion", "+Concatenation", fusion::Mode::concat, 6},
      {"static-cot6", "fusion", "+Static Gate", fusion::Mode::static_gate, 6},
      {"dynamic-cot6", "fusion", "+Dynamic Gate", fusion::Mode::dynamic, 6},
      {"dynamic-nan", "cot", "NAN", fusion::Mode::dynamic, config::kNoText},
      {"dynamic-cot0", "cot", "0", fusion::Mode::dynamic, 0},
      {"dynamic-cot2", "cot", "2", fusion::Mode::dynamic, 2},
      {"dynamic-cot4", "cot", "4", fusion::Mode::dynamic, 4},
      {"dynamic-cot6", "cot", "6", fusion::Mode::dynamic, 6},
  };
  return cells;
}

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw StructuralError("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw StructuralError("cannot write " + p.string());
  out << text;
}

// Options every subcommand shares.
struct Common {
  std::string config_file;
  std::vector<std::string> sets;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "flat key = value experiment config");
    app->add_option("--set", sets, "override one config key (key=value); repeatable");
  }

  config::ExperimentConfig load() const {
    config::ExperimentConfig c = config_file.empty() ? config::ExperimentConfig{}
                                                     : config::parse_config(read_file(config_file));
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + s + "'");
      config::apply_override(c, s.substr(0, eq), s.substr(eq + 1));
    }
    config::validate(c);
    return c;
  }
};

fs::path run_dir(const config::ExperimentConfig& c) { return fs::path(c.output_root) / c.name; }

// ---------------------------------------------------------------------------
// Pipeline stages, shared by the single-step commands and `ablate`.

pipeline::PrepareOptions prepare_options(const config::ExperimentConfig& c) {
  return {c.seed, c.locations, c.drones_per_location, c.test_drones_per_location, c.image_size, false};
}

std::vector<data::Split> parse_splits(const std::string& s) {
  if (s == "all") return {data::Split::train, data::Split::test};
  return {data::parse_split(s)};
}

struct CaptionTally {
  std::size_t accepted = 0, rejected = 0;
};

/// `dataset` is a directory or "toy" (render the configured world in memory).
CaptionTally generate_captions(const config::ExperimentConfig& c, const std::string& dataset, const std::string& client,
                               const fs::path& out, const std::vector<data::Split>& splits) {
  if (!c.use_text()) throw ArgumentError("generate-captions needs caption.cot_steps in {0, 2, 4, 6}, not NAN");
  std::optional<data::ToyWorld> world;
  if (dataset == "toy") {
    world = data::generate_toy_world(c.seed, c.locations, c.drones_per_location);
  } else {
    world = pipeline::load_world(dataset);
  }
  const pipeline::CaptionOptions opts{c.cot_steps, c.max_retries, c.weather_intensity, split_seed(c.seed, "captions"),
                                      client};
  caption::CaptionStore store(out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  CaptionTally tally;
  for (data::Split split : splits) {
    const int drones = split == data::Split::train ? c.drones_per_location : c.test_drones_per_location;
    const pipeline::SplitData d = dataset == "toy" ? pipeline::render_split(*world, split, drones, c.image_size)
                                                   : pipeline::load_split(dataset, split, c.image_size);
    for (const auto& r : pipeline::generate_split_captions(d, world ? &*world : nullptr, opts)) {
      store.append(r);
      (r.status == caption::Status::accepted ? tally.accepted : tally.rejected)++;
    }
  }
  return tally;
}

caption::CaptionIndex load_captions(const config::ExperimentConfig& c) {
  if (!c.use_text()) return {};
  const auto records = caption::CaptionStore::load(c.caption_store);
  for (const auto& r : records) {
    if (r.cot_steps != c.cot_steps) {
      throw ArgumentError("caption store " + c.caption_store + " holds " + std::to_string(r.cot_steps) +
                          "-step captions but caption.cot_steps = " + config::format_cot_steps(c.cot_steps));
    }
  }
  return caption::CaptionIndex(records);
}

train::TrainOutcome train_run(const config::ExperimentConfig& c, const fs::path& out_dir,
                              const std::optional<fs::path>& resume) {
  train::TrainRun run{c, pipeline::load_split(c.dataset_root, data::Split::train, c.image_size), load_captions(c),
                      out_dir, std::nullopt};
  if (resume) run.resume = model::load_checkpoint(*resume);
  fs::create_directories(out_dir);
  write_file(out_dir / "config.txt", config::to_text(c));
  return train::train(run);
}

struct LoadedModel {
  config::ExperimentConfig config;
  model::Model model;
};

LoadedModel load_model(const fs::path& ckpt, const std::vector<std::string>& sets) {
  const model::Checkpoint cp = model::load_checkpoint(ckpt);
  LoadedModel out;
  out.config = config::parse_config(cp.config_text);
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + s + "'");
    config::apply_override(out.config, s.substr(0, eq), s.substr(eq + 1));
  }
  config::validate(out.config);
  std::size_t classes = 0;
  for (const auto& t : cp.params)
    if (t.name == "classifier.w") classes = t.value.rows();
  if (classes == 0) throw StructuralError("checkpoint " + ckpt.string() + " has no classifier.w tensor");
  out.model = model::Model::init(train::model_config(out.config, static_cast<int>(classes)), 0);
  model::import_tensors(out.model, cp.params);
  return out;
}

eval::RetrievalReport evaluate_model(const LoadedModel& lm, data::Split split, eval::Direction direction) {
  const auto& c = lm.config;
  const pipeline::SplitData d = pipeline::load_split(c.dataset_root, split, c.image_size);
  if (d.index.num_locations() != static_cast<int>(lm.model.clf.w.rows())) {
    throw StructuralError("the " + data::to_string(split) + " split has " + std::to_string(d.index.num_locations()) +
                          " locations but the checkpoint was trained on " + std::to_string(lm.model.clf.w.rows()));
  }
  const caption::CaptionIndex captions = load_captions(c);
  eval::EvalInputs in{&lm.model, &d, &captions, weather::condition_suite(c.weather_intensity), c.satellite_text,
                      split_seed(c.seed, "eval")};
  return eval::evaluate(in, direction);
}

fs::path table_path(const fs::path& json_path) {
  fs::path p = json_path;
  p.replace_extension(".txt");
  return p;
}

void write_report(const fs::path& out, const eval::RetrievalReport& r) {
  write_file(out, r.to_json());
  write_file(table_path(out), r.to_table());
}

// ---------------------------------------------------------------------------

struct PrepareArgs {
  Common common;
  bool toy = false;
  bool force = false;
  std::string root;
  std::optional<int> locations, drones, test_drones, image_size;
  std::optional<std::uint64_t> seed;
};

int cmd_prepare(const PrepareArgs& a, std::ostream& out) {
  config::ExperimentConfig c = a.common.load();
  if (!a.root.empty()) c.dataset_root = a.root;
  if (a.locations) c.locations = *a.locations;
  if (a.drones) c.drones_per_location = *a.drones;
  if (a.test_drones) c.test_drones_per_location = *a.test_drones;
  if (a.image_size) config::apply_override(c, "dataset.image_size", std::to_string(*a.image_size));
  if (a.seed) c.seed = *a.seed;
  config::validate(c);
  if (!a.toy) {
    // A real tree: only check that both splits scan cleanly.
    for (data::Split s : {data::Split::train, data::Split::test}) {
      const auto idx = data::scan_dataset(c.dataset_root, s);
      out << data::to_string(s) << ": " << idx.num_locations() << " locations, " << idx.entries.size() << " images\n";
    }
    return ok;
  }
  auto opts = prepare_options(c);
  opts.force = a.force;
  const auto outcome = pipeline::prepare_toy_dataset(c.dataset_root, opts);
  out << (outcome == pipeline::PrepareOutcome::created ? "created " : "unchanged ") << c.dataset_root << " ("
      << c.locations << " locations)\n";
  return ok;
}

struct SynthArgs {
  Common common;
  std::string in, out_dir, condition;
  std::optional<std::uint64_t> seed;
  std::optional<double> intensity;
};

int cmd_synthesize(const SynthArgs& a, std::ostream& out) {
  const config::ExperimentConfig c = a.common.load();
  const double intensity = a.intensity.value_or(c.weather_intensity);
  weather::WeatherSpec spec;
  if (fs::is_regular_file(a.condition)) {
    spec = weather::parse_spec(read_file(a.condition));
  } else {
    spec = weather::find_condition(weather::condition_suite(intensity), a.condition).spec;
  }
  const std::uint64_t seed = a.seed.value_or(c.seed);
  if (!fs::is_directory(a.in)) throw StructuralError("input directory " + a.in + " does not exist");

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a.in))
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw StructuralError("no images under " + a.in);
  for (const auto& f : files) {
    const std::string rel = fs::relative(f, a.in).generic_string();
    const auto s = weather::reseeded(spec, split_seed(seed, rel));
    fs::path dst = fs::path(a.out_dir) / rel;
    dst.replace_extension(".ppm");
    fs::create_directories(dst.parent_path());
    write_ppm(dst, weather::apply_weather(read_image(f), s));
  }
  out << "wrote " << files.size() << " images to " << a.out_dir << "\n";
  return ok;
}

struct CaptionArgs {
  Common common;
  std::string dataset, client, out_file, split = "all";
  std::string cot_steps;
};

int cmd_captions(const CaptionArgs& a, std::ostream& out) {
  config::ExperimentConfig c = a.common.load();
  if (!a.cot_steps.empty()) c.cot_steps = config::parse_cot_steps(a.cot_steps);
  if (!a.client.empty()) c.caption_client = a.client;
  if (!a.out_file.empty()) c.caption_store = a.out_file;
  const std::string dataset = a.dataset.empty() ? c.dataset_root : a.dataset;
  const auto tally = generate_captions(c, dataset, c.caption_client, c.caption_store, parse_splits(a.split));
  out << "appended " << tally.accepted + tally.rejected << " records to " << c.caption_store << " (" << tally.accepted
      << " accepted, " << tally.rejected << " rejected)\n";
  return ok;
}

struct TrainArgs {
  Common common;
  std::string out_dir, resume;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const config::ExperimentConfig c = a.common.load();
  const fs::path dir = a.out_dir.empty() ? run_dir(c) : fs::path(a.out_dir);
  const auto result = train_run(c, dir, a.resume.empty() ? std::nullopt : std::optional<fs::path>(a.resume));
  if (!result.history.empty()) out << result.history.back().line() << "\n";
  out << "checkpoint " << result.final_checkpoint.string() << "\n";
  return ok;
}

struct EvalArgs {
  std::vector<std::string> sets;
  std::string ckpt, direction = "d2s", out_file, split = "test";
};

int cmd_evaluate(const EvalArgs& a, std::ostream& out) {
  const LoadedModel lm = load_model(a.ckpt, a.sets);
  const auto direction = eval::parse_direction(a.direction);
  const auto split = data::parse_split(a.split);
  const auto report = evaluate_model(lm, split, direction);
  const fs::path dst = a.out_file.empty() ? fs::path(a.ckpt).parent_path() /
                                                ("report_" + data::to_string(split) + "_" + a.direction + ".json")
                                          : fs::path(a.out_file);
  write_report(dst, report);
  out << report.to_table();
  return ok;
}

// ---------------------------------------------------------------------------

struct AblateArgs {
  Common common;
  std::string out_dir, sweep = "all";
  std::vector<std::uint64_t> seeds = {1, 2, 3};
};

std::string ablation_table(const std::string& title, const std::vector<const AblationCell*>& cells,
                           const std::map<std::string, std::pair<eval::RetrievalReport, eval::RetrievalReport>>& res) {
  std::string s;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-16s %12s %12s %12s %12s\n", title.c_str(), "D2S R@1", "D2S AP", "S2D R@1",
                "S2D AP");
  s += buf;
  for (const auto* cell : cells) {
    const auto& [d2s, s2d] = res.at(cell->id);
    std::snprintf(buf, sizeof buf, "%-16s %12.2f %12.2f %12.2f %12.2f\n", cell->label.c_str(), d2s.mean.r1,
                  d2s.mean.ap, s2d.mean.r1, s2d.mean.ap);
    s += buf;
  }
  return s;
}

int cmd_ablate(const AblateArgs& a, std::ostream& out, std::ostream& err) {
  const config::ExperimentConfig base = a.common.load();
  if (a.sweep != "all" && a.sweep != "fusion" && a.sweep != "cot") {
    throw ArgumentError("--sweep must be fusion, cot or all");
  }
  if (a.seeds.empty()) throw ArgumentError("--seeds needs at least one seed");
  const fs::path root = a.out_dir.empty() ? run_dir(base) / "ablation" : fs::path(a.out_dir);

  std::vector<const AblationCell*> rows;
  std::vector<const AblationCell*> unique;
  for (const auto& cell : ablation_cells()) {
    if (a.sweep != "all" && cell.sweep != a.sweep) continue;
    rows.push_back(&cell);
    if (std::none_of(unique.begin(), unique.end(), [&](const AblationCell* u) { return u->id == cell.id; }))
      unique.push_back(&cell);
  }

  std::map<std::string, std::string> status;
  for (const auto* cell : unique) status[cell->id] = "pending";
  auto print_status = [&] {
    for (const auto* cell : unique) err << "cell " << cell->id << ": " << status[cell->id] << "\n";
  };

  std::map<std::string, std::vector<eval::RetrievalReport>> d2s, s2d;
  for (std::uint64_t seed : a.seeds) {
    const fs::path seed_dir = root / ("seed_" + std::to_string(seed));
    config::ExperimentConfig sc = base;
    sc.seed = seed;
    sc.dataset_root = (seed_dir / "dataset").generic_string();
    pipeline::prepare_toy_dataset(sc.dataset_root, prepare_options(sc));
    for (const auto* cell : unique) {
      config::ExperimentConfig cc = sc;
      cc.fusion_mode = cell->mode;
      cc.cot_steps = cell->cot_steps;
      cc.name = cell->id;
      const fs::path cell_dir = seed_dir / cell->id;
      try {
        if (cc.use_text()) {
          cc.caption_store = (seed_dir / ("captions_cot" + std::to_string(cc.cot_steps) + ".jsonl")).generic_string();
          if (!fs::exists(cc.caption_store)) {
            generate_captions(cc, cc.dataset_root, cc.caption_client, cc.caption_store,
                              {data::Split::train, data::Split::test});
          }
        }
        const auto trained = train_run(cc, cell_dir, std::nullopt);
        const LoadedModel lm{cc, trained.model};
        d2s[cell->id].push_back(evaluate_model(lm, data::Split::test, eval::Direction::d2s));
        s2d[cell->id].push_back(evaluate_model(lm, data::Split::test, eval::Direction::s2d));
        write_report(cell_dir / "report_test_d2s.json", d2s[cell->id].back());
        write_report(cell_dir / "report_test_s2d.json", s2d[cell->id].back());
        status[cell->id] = "ok (" + std::to_string(d2s[cell->id].size()) + "/" + std::to_string(a.seeds.size()) +
                           " seeds)";
      } catch (const std::exception& e) {
        status[cell->id] = std::string("failed at seed ") + std::to_string(seed) + ": " + e.what();
        print_status();
        throw;
      }
    }
  }

  std::map<std::string, std::pair<eval::RetrievalReport, eval::RetrievalReport>> combined;
  json cells_j = json::object();
  for (const auto* cell : unique) {
    auto pair = std::make_pair(eval::average_reports(d2s[cell->id]), eval::average_reports(s2d[cell->id]));
    write_report(root / cell->id / "report_test_d2s.json", pair.first);
    write_report(root / cell->id / "report_test_s2d.json", pair.second);
    cells_j[cell->id] = {{"d2s", json::parse(pair.first.to_json())}, {"s2d", json::parse(pair.second.to_json())}};
    combined.emplace(cell->id, std::move(pair));
  }
  std::string table;
  std::vector<const AblationCell*> fusion_rows, cot_rows;
  for (const auto* r : rows) (r->sweep == "fusion" ? fusion_rows : cot_rows).push_back(r);
  if (!fusion_rows.empty()) table += ablation_table("Fusion", fusion_rows, combined);
  if (!fusion_rows.empty() && !cot_rows.empty()) table += "\n";
  if (!cot_rows.empty()) table += ablation_table("CoT Step", cot_rows, combined);

  json seeds_j = json::array();
  for (auto s : a.seeds) seeds_j.push_back(s);
  write_file(root / "ablation.json", json({{"seeds", seeds_j}, {"cells", cells_j}}).dump(2) + "\n");
  write_file(root / "ablation.txt", table);
  out << table;
  return ok;
}

struct ReportArgs {
  std::vector<std::string> inputs;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  std::vector<fs::path> files;
  for (const auto& in : a.inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::recursive_directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "ablation.json")
          found.push_back(e.path());
      if (found.empty()) throw StructuralError("no reports under " + in);
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(in)) {
      files.push_back(in);
    } else {
      throw StructuralError("no such report or directory: " + in);
    }
  }
  if (files.empty()) throw ArgumentError("report needs at least one report file or directory");
  if (files.size() > 2) throw ArgumentError("report shows one run or compares two; got " + std::to_string(files.size()));
  std::vector<eval::RetrievalReport> reports;
  for (const auto& f : files) reports.push_back(eval::RetrievalReport::from_json(read_file(f)));
  if (reports.size() == 1) {
    out << reports[0].to_table();
  } else {
    out << "a = " << files[0].generic_string() << "\nb = " << files[1].generic_string() << "\n";
    out << eval::delta_table(reports[0], reports[1]);
  }
  return ok;
}

int fail(std::ostream& err, const char* kind, const std::string& message, int code) {
  std::string flat = message;
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  err << "error: " << kind << ": " << flat << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text-guided weather-invariant cross-view geo-localization", "xvg"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  PrepareArgs prep;
  auto* p = app.add_subcommand("prepare", "write the toy dataset tree (or check a real one)");
  prep.common.attach(p);
  p->add_flag("--toy", prep.toy, "generate the procedural toy world");
  p->add_flag("--force", prep.force, "replace a directory whose contents differ");
  p->add_option("--root", prep.root, "dataset directory (dataset.root)");
  p->add_option("--locations", prep.locations, "number of locations");
  p->add_option("--drones", prep.drones, "train drone views per location");
  p->add_option("--test-drones", prep.test_drones, "test drone views per location");
  p->add_option("--image-size", prep.image_size, "rendered image side");
  p->add_option("--seed", prep.seed, "world seed");

  SynthArgs synth;
  auto* w = app.add_subcommand("synthesize-weather", "apply a weather condition to every image under a directory");
  synth.common.attach(w);
  w->add_option("--in", synth.in, "input directory")->required();
  w->add_option("--out", synth.out_dir, "output directory")->required();
  w->add_option("--condition", synth.condition, "suite condition name (e.g. Fog+Rain) or a spec file")->required();
  w->add_option("--seed", synth.seed, "noise seed");
  w->add_option("--intensity", synth.intensity, "layer intensity for named conditions");

  CaptionArgs cap;
  auto* g = app.add_subcommand("generate-captions", "run the staged CoT caption pipeline");
  cap.common.attach(g);
  g->add_option("--dataset", cap.dataset, "dataset directory, or 'toy' for the configured toy world");
  g->add_option("--cot-steps", cap.cot_steps, "0, 2, 4 or 6");
  g->add_option("--client", cap.client, "mock, or an http(s) chat-completions endpoint");
  g->add_option("--out", cap.out_file, "caption store (JSON Lines, appended)");
  g->add_option("--split", cap.split, "train, test or all");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train a model");
  tr.common.attach(t);
  t->add_option("--out", tr.out_dir, "run directory (default <output_root>/<name>)");
  t->add_option("--resume", tr.resume, "checkpoint to resume from");

  EvalArgs ev;
  auto* e = app.add_subcommand("evaluate", "per-condition retrieval report for a checkpoint");
  e->add_option("--ckpt", ev.ckpt, "checkpoint file")->required();
  e->add_option("--direction", ev.direction, "d2s or s2d");
  e->add_option("--out", ev.out_file, "report JSON path; the table goes next to it as .txt");
  e->add_option("--split", ev.split, "test or train");
  e->add_option("--set", ev.sets, "override a config key stored in the checkpoint (key=value)");

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "fusion and CoT ablation sweeps over several seeds");
  ab.common.attach(a);
  a->add_option("--out", ab.out_dir, "sweep directory (default <output_root>/<name>/ablation)");
  a->add_option("--sweep", ab.sweep, "fusion, cot or all");
  a->add_option("--seeds", ab.seeds, "toy world seeds")->delimiter(',');

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "render stored reports; two reports get a delta column");
  r->add_option("inputs", rep.inputs, "report JSON files or directories")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& ex) {
    return fail(err, "argument", ex.what(), argument);
  }

  try {
    if (p->parsed()) return cmd_prepare(prep, out);
    if (w->parsed()) return cmd_synthesize(synth, out);
    if (g->parsed()) return cmd_captions(cap, out);
    if (t->parsed()) return cmd_train(tr, out);
    if (e->parsed()) return cmd_evaluate(ev, out);
    if (a->parsed()) return cmd_ablate(ab, out, err);
    if (r->parsed()) return cmd_report(rep, out);
  } catch (const ArgumentError& ex) {
    return fail(err, "argument", ex.what(), argument);
  } catch (const StructuralError& ex) {
    return fail(err, "structural", ex.what(), structural);
  } catch (const TrainingError& ex) {
    return fail(err, "training", ex.what(), training);
  } catch (const ProtocolError& ex) {
    return fail(err, "protocol", ex.what(), protocol);
  } catch (const fs::filesystem_error& ex) {
    return fail(err, "structural", ex.what(), structural);
  } catch (const std::exception& ex) {
    return fail(err, "internal", ex.what(), internal);
  }
  return fail(err, "argument", "no subcommand", argument);
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace xvg::cli
