// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "arguagent/assets.hpp"
#include "arguagent/grouping.hpp"
#include "arguagent/json_io.hpp"
#include "arguagent/metrics.hpp"
#include "arguagent/scoring.hpp"
#include "arguagent/service.hpp"
#include "arguagent/simulation.hpp"
#include "arguagent/stance.hpp"
#include "arguagent/unicode.hpp"

namespace arguagent::cli {

namespace {

// --config files are flat JSON objects whose keys are long option names of
// the subcommand being run.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(std::string section) : section_(std::move(section)) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    const std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
    const auto j = Json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw CLI::ConversionError("config file must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      if (!section_.empty()) item.parents = {section_};
      item.name = key;
      const auto scalar = [&](const Json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
        if (v.is_number()) return v.dump();
        throw CLI::ConversionError("config key '" + key + "' must be a scalar or a list of scalars");
      };
      if (value.is_null()) continue;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  std::string section_;
};

struct Io {
  std::istream& in;
  std::ostream& out;
};

std::string read_input(const std::string& path, Io& io) {
  if (path == "-") {
    return std::string((std::istreambuf_iterator<char>(io.in)), std::istreambuf_iterator<char>());
  }
  return assets::read_file(path);
}

void write_output(const std::string& path, const std::string& text, Io& io) {
  if (path.empty() || path == "-") {
    io.out << text;
    io.out.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  file << text;
  if (!file) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
}

Json read_json(const std::string& path, Io& io) { return parse_json(read_input(path, io), path); }

/// A class file is a roster array or {"class_id", "students" | "roster"};
/// score output (which carries "roster") is accepted too.
std::vector<StudentResponse> read_roster(const Json& j, std::string& class_id) {
  Json students;
  if (j.is_array()) {
    students = j;
  } else if (j.is_object()) {
    class_id = j.value("class_id", class_id);
    students = j.contains("roster") ? j.at("roster") : j.value("students", Json());
  }
  if (!students.is_array()) throw Error(ErrorKind::ParseError, "class file must hold an array of student responses");
  auto roster = validate_class(decode<std::vector<StudentResponse>>(students, "class file"));
  if (class_id.empty() && !roster.empty()) class_id = roster.front().class_id;
  for (auto& s : roster) s.class_id = class_id;
  return roster;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", v * 100.0);
  return buf;
}

std::string fixed(double v, int digits = 3) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string class_file;
  std::string backend = "fixture";
  std::string fixture;
  std::string out;
  std::string task;
  std::string cache_dir;
  bool uncalibrated = false;
  int parallelism = 4;
  int max_retries = 1;
};

void run_score(const ScoreArgs& a, const std::string& asset_root, Io& io) {
  std::string class_id;
  const auto roster = read_roster(read_json(a.class_file, io), class_id);
  const auto assets = PromptAssets::load(asset_root);
  const auto prompt = build_prompt(a.task.empty() ? assets.default_task : a.task, !a.uncalibrated, assets);
  BackendSelection selection;
  selection.asset_root = asset_root;
  selection.fixture_file = a.fixture;
  selection.cache_dir = a.cache_dir;
  const auto backend = make_backend(a.backend, selection);
  const auto scores = score_class(roster, prompt, *backend, a.parallelism, a.max_retries);
  Json out{{"class_id", class_id},
           {"backend", backend->name()},
           {"prompt_version", prompt.version},
           {"prompt_hash", prompt.hash()},
           {"calibrated", prompt.calibrated},
           {"roster", roster},
           {"assessments", scores.assessments},
           {"errors", scores.errors},
           {"warnings", scores.warnings}};
  write_output(a.out, to_text(out), io);
}

struct ClusterArgs {
  std::string class_file;
  std::string assessments;
  std::string backend = "offline";
  std::string out;
};

void run_cluster(const ClusterArgs& a, const std::string& asset_root, Io& io) {
  const Json scored = read_json(a.assessments, io);
  std::string class_id;
  std::vector<StudentResponse> roster;
  if (!a.class_file.empty()) {
    roster = read_roster(read_json(a.class_file, io), class_id);
  } else if (scored.is_object() && scored.contains("roster")) {
    roster = read_roster(scored, class_id);
  } else {
    throw Error(ErrorKind::InvalidArgument, "--class is required unless the assessments file carries a roster");
  }
  const Json list = scored.is_array() ? scored : scored.value("assessments", Json());
  if (!list.is_array()) throw Error(ErrorKind::ParseError, "assessments file must hold an \"assessments\" array");
  const auto assessments = decode<std::vector<ArgumentAssessment>>(list, "assessments");

  std::unique_ptr<Backend> backend;
  if (a.backend != "offline") {
    BackendSelection selection;
    selection.asset_root = asset_root;
    backend = make_backend(a.backend, selection);
  }
  const auto result = cluster_positions(roster, assessments, backend.get(), MarkerRuleSet::load(asset_root));

  std::map<std::string, int> level;
  for (const auto& x : assessments) level[x.student_id] = x.level.value();
  Json students = Json::array();
  for (const auto& [id, label] : result.labels) {
    Json s{{"student_id", id}, {"level", level.at(id)}, {"cluster_id", *label.cluster_id},
           {"cluster_label", *label.cluster_label}};
    if (label.category) s["category"] = to_string(*label.category);
    students.push_back(std::move(s));
  }
  Json out{{"class_id", class_id},
           {"method", result.method},
           {"students", std::move(students)},
           {"clustering", result.clustering},
           {"warnings", result.warnings}};
  write_output(a.out, to_text(out), io);
}

struct GroupArgs {
  std::string input;
  int size = 3;
  std::uint64_t seed = 0;
  int restarts = 5;
  std::string policy = "optimizer";
  std::string format = "json";
  std::string out;
};

std::string grouping_table(const ClassGrouping& g) {
  std::ostringstream out;
  out << "class " << g.class_id << "  policy " << g.policy << "  seed "
      << (g.seed ? std::to_string(*g.seed) : std::string("-")) << "\n";
  for (std::size_t i = 0; i < g.groups.size(); ++i) {
    const auto& group = g.groups[i];
    out << "group " << i + 1 << "  score " << group.group_score() << " (level " << group.level_score()
        << ", position " << group.position_score() << ")  levels " << group.min_level() << "-"
        << group.max_level() << (group.meets_level_criterion() ? "" : " [level span > 1]")
        << (group.meets_position_criterion() ? "" : " [single position]") << "\n  ";
    for (std::size_t m = 0; m < group.member_ids().size(); ++m) out << (m ? ", " : "") << group.member_ids()[m];
    out << "\n";
  }
  out << "total " << g.total_score << "; " << g.summary.meets_both << "/" << g.summary.groups
      << " groups meet both criteria\n";
  return out.str();
}

void run_group(const GroupArgs& a, Io& io) {
  const auto input = decode<grouping::GroupingInput>(read_json(a.input, io), a.input);
  ClassGrouping g;
  if (a.policy == "random") {
    g = grouping::random_grouping(input, a.size, a.seed);
  } else {
    g = grouping::form_groups(input, grouping::OptimizerOptions{a.size, a.seed, a.restarts});
  }
  write_output(a.out, a.format == "table" ? grouping_table(g) : to_text(Json(g)), io);
}

struct SimulateArgs {
  sim::SimulationConfig config;
  std::vector<double> distribution;
  std::string format = "table";
  int threads = 0;
  std::string out;
};

void run_simulate(SimulateArgs& a, Io& io) {
  if (!a.distribution.empty()) {
    if (a.distribution.size() != a.config.level_distribution.size()) {
      throw Error(ErrorKind::InvalidDistribution, "level_distribution needs exactly 5 entries");
    }
    std::copy(a.distribution.begin(), a.distribution.end(), a.config.level_distribution.begin());
  }
  const auto report = sim::run_simulation(a.config, a.threads);
  write_output(a.out,
               sim::emit_report(report, a.format == "json" ? sim::ReportFormat::Json : sim::ReportFormat::Table),
               io);
}

struct MetricsArgs {
  std::string input;
  std::vector<double> decompose;
  std::string format = "json";
  std::string out;
};

metrics::RatingMatrix matrix_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<metrics::RatingTriple> triples;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (header) {
      if (cells != std::vector<std::string>{"item", "coder", "score"}) {
        throw Error(ErrorKind::ParseError, "CSV header must be item,coder,score");
      }
      header = false;
      continue;
    }
    if (cells.size() != 3) throw Error(ErrorKind::ParseError, "CSV line " + std::to_string(line_no) + ": expected 3 fields");
    int score = 0;
    try {
      std::size_t used = 0;
      score = std::stoi(cells[2], &used);
      if (used != cells[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, "CSV line " + std::to_string(line_no) + ": score must be an integer");
    }
    triples.push_back(metrics::RatingTriple{cells[0], cells[1], score});
  }
  if (header) throw Error(ErrorKind::ParseError, "CSV input is empty");
  return metrics::matrix_from_triples(triples);
}

Json matrix_metrics(const metrics::RatingMatrix& m) {
  Json out{{"kind", "rating_matrix"}, {"coders", m.coders.size()}, {"items", m.items.size()},
           {"pairwise", metrics::pairwise_agreement(m)}};
  try {
    out["krippendorff_alpha_ordinal"] = metrics::krippendorff_alpha_ordinal(m);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateData && e.kind() != ErrorKind::InsufficientData) throw;
    out["krippendorff_alpha_ordinal"] = nullptr;
    out["flags"] = Json::array({std::string(to_string(e.kind()))});
  }
  return out;
}

Json compute_metrics(const MetricsArgs& a, Io& io) {
  if (!a.decompose.empty()) {
    if (a.decompose.size() != 3) {
      throw Error(ErrorKind::InvalidArgument, "--decompose takes uncalibrated, calibrated and best QWK");
    }
    Json out = metrics::improvement_decomposition(a.decompose[0], a.decompose[1], a.decompose[2]);
    out["kind"] = "decomposition";
    return out;
  }
  if (a.input.empty()) throw Error(ErrorKind::InvalidArgument, "metrics needs --input or --decompose");
  const std::string text = read_input(a.input, io);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos || (text[first] != '{' && text[first] != '[')) {
    return matrix_metrics(matrix_from_csv(text));
  }
  const Json j = parse_json(text, a.input);
  if (j.is_object() && j.contains("ratings")) return matrix_metrics(decode<metrics::RatingMatrix>(j, a.input));
  if (j.is_object() && j.contains("human") && j.contains("ai")) {
    const auto& h = j.at("human");
    if (!h.empty() && h.front().is_string()) {
      const auto category = [](const Json& list) {
        std::vector<StanceCategory> out;
        for (const auto& v : list) {
          const auto c = stance_category_from(v.get<std::string>());
          if (!c) throw Error(ErrorKind::ParseError, "unknown stance category " + v.dump());
          out.push_back(*c);
        }
        return out;
      };
      Json out = stance_agreement(category(h), category(j.at("ai")));
      out["kind"] = "stance_agreement";
      return out;
    }
    const auto human = decode<std::vector<int>>(h, "human");
    const auto ai = decode<std::vector<int>>(j.at("ai"), "ai");
    Json out{{"kind", "paired"},
             {"agreement", metrics::agreement_report(human, ai)},
             {"level_recall", metrics::level_recall_report(human, ai)}};
    return out;
  }
  throw Error(ErrorKind::ParseError,
              "metrics input must be a rating matrix, {\"human\", \"ai\"} vectors, or item,coder,score CSV");
}

std::string metrics_table(const Json& m) {
  std::ostringstream out;
  const auto kind = m.value("kind", std::string{});
  const auto opt = [](const Json& v, int digits = 3) { return v.is_null() ? std::string("undefined") : fixed(v.get<double>(), digits); };
  if (kind == "decomposition") {
    out << "prompt engineering  " << std::showpos << fixed(m["prompt_delta"].get<double>()) << std::noshowpos << "  "
        << fixed(m["prompt_share"].get<double>() * 100, 1) << "% (" << m["prompt_share_percent"].get<long>() << "%)\n"
        << "model selection     " << std::showpos << fixed(m["model_delta"].get<double>()) << std::noshowpos << "  "
        << fixed(m["model_share"].get<double>() * 100, 1) << "% (" << m["model_share_percent"].get<long>() << "%)\n"
        << "total               " << std::showpos << fixed(m["total_delta"].get<double>()) << std::noshowpos << "\n";
  } else if (kind == "paired") {
    const auto& r = m["agreement"];
    out << "QWK            " << opt(r["qwk"]) << "\nexact match    " << percent(r["exact_match"].get<double>())
        << "\nwithin one     " << percent(r["within_one"].get<double>()) << "\nMAE            "
        << fixed(r["mae"].get<double>()) << "\nbias (AI-human) " << fixed(r["bias"].get<double>())
        << "\nPearson r      " << opt(r["pearson"]) << "\nn              " << r["n"].get<int>() << "\n\nlevel  human  ai  tp  recall  fp\n";
    for (const auto& l : m["level_recall"]["levels"]) {
      out << l["level"].get<int>() << "      " << l["human_count"].get<int>() << "      " << l["predicted_count"].get<int>()
          << "   " << l["true_positives"].get<int>() << "   " << opt(l["recall"]) << "  " << l["false_positives"].get<int>() << "\n";
    }
  } else if (kind == "stance_agreement") {
    for (const auto& [name, c] : m["per_category"].items()) {
      out << name << "  " << c["correct"].get<int>() << "/" << c["human_count"].get<int>() << "  "
          << (c["accuracy"].is_null() ? std::string("n/a") : percent(c["accuracy"].get<double>())) << "\n";
    }
    out << "overall (item-weighted)  " << percent(m["overall_accuracy"].get<double>()) << "\nCohen's kappa  "
        << opt(m["kappa"]) << "\n";
  } else {
    out << "Krippendorff's alpha (ordinal)  " << opt(m["krippendorff_alpha_ordinal"]) << "\ncoders " << m["coders"].get<int>()
        << ", items " << m["items"].get<int>() << ", pairable items " << m["pairwise"]["pairable_items"].get<int>()
        << "\npairwise exact  " << percent(m["pairwise"]["exact"].get<double>()) << "\npairwise within one  "
        << percent(m["pairwise"]["within_one"].get<double>()) << "\n";
  }
  return out.str();
}

struct ServeArgs {
  std::string data_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  std::string backend = "fixture";
  std::string task;
  std::string cache_dir;
};

service::HttpServer* g_server = nullptr;

void run_serve(const ServeArgs& a, const std::string& asset_root, Io& io) {
  service::ServiceOptions options;
  options.data_dir = a.data_dir;
  options.backends.asset_root = asset_root;
  options.backends.cache_dir = a.cache_dir;
  options.default_backend = a.backend;
  options.task_context = a.task;
  service::ClassService svc(std::move(options));

  service::HttpOptions http;
  http.host = a.host;
  http.port = a.port;
  http.static_dir = a.static_dir;
  if (const char* token = std::getenv("ARGUAGENT_AUTH_TOKEN")) http.auth_token = token;
  service::HttpServer server(svc, http);
  const int port = server.bind();
  io.out << Json{{"listening", "http://" + a.host + ":" + std::to_string(port)},
                 {"auth", !http.auth_token.empty()}}
                .dump()
         << std::endl;
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server != nullptr) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server != nullptr) g_server->stop();
  });
  server.listen();
  g_server = nullptr;
}

void print_error(std::ostream& err, std::string_view kind, const std::string& message) {
  err << Json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Io io{in, out};
  CLI::App app{"ArguAgent: argument scoring, position clustering and discussion-group formation", "arguagent"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string section;
  for (std::size_t i = 1; i < args.size() && section.empty(); ++i) {
    for (const char* name : {"score", "cluster", "group", "simulate", "metrics", "serve"}) {
      if (args[i] == name) section = name;
    }
  }
  app.set_config("--config", "", "JSON file of option values for the subcommand (keys are long option names); "
                                 "command-line flags override it");
  app.config_formatter(std::make_shared<JsonConfig>(section));
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  std::string asset_root;
  app.add_option("--assets", asset_root, "Asset directory overriding the built-in prompts and rules")
      ->check(CLI::ExistingDirectory);

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score every response of a class on the 0-4 rubric");
  score_cmd->add_option("--class", score.class_file, "Class roster JSON ('-' for stdin)")->required();
  score_cmd->add_option("--backend", score.backend, "Model backend")
      ->check(CLI::IsMember({"live", "fixture", "heuristic"}))
      ->capture_default_str();
  score_cmd->add_option("--fixture", score.fixture, "Fixture table for --backend fixture (default: the rubric examples)");
  score_cmd->add_option("--out", score.out, "Output file (default stdout)");
  score_cmd->add_option("--task", score.task, "Task context shown to students (default: deformation task)");
  score_cmd->add_flag("--uncalibrated", score.uncalibrated, "Rubric-only baseline prompt");
  score_cmd->add_option("--parallelism", score.parallelism, "Concurrent backend requests")
      ->check(CLI::Range(1, 64))
      ->capture_default_str();
  score_cmd->add_option("--max-retries", score.max_retries, "Repair retries for malformed replies")
      ->check(CLI::Range(0, 5))
      ->capture_default_str();
  score_cmd->add_option("--cache-dir", score.cache_dir, "On-disk reply cache for the live backend");

  ClusterArgs cluster;
  auto* cluster_cmd = app.add_subcommand("cluster", "Group students into 2-4 position clusters");
  cluster_cmd->add_option("--class", cluster.class_file, "Class roster JSON (optional when piping score output)");
  cluster_cmd->add_option("--assessments", cluster.assessments, "score output or assessment array ('-' for stdin)")
      ->required();
  cluster_cmd->add_option("--backend", cluster.backend, "live model or offline marker rules")
      ->check(CLI::IsMember({"live", "offline"}))
      ->capture_default_str();
  cluster_cmd->add_option("--out", cluster.out, "Output file (default stdout)");

  GroupArgs group;
  auto* group_cmd = app.add_subcommand("group", "Form discussion groups from levels and position clusters");
  group_cmd->add_option("--input", group.input, "cluster output or {class_id, students} ('-' for stdin)")->required();
  group_cmd->add_option("--size", group.size, "Target group size")->check(CLI::Range(2, 4))->capture_default_str();
  group_cmd->add_option("--seed", group.seed, "Random seed")->capture_default_str();
  group_cmd->add_option("--restarts", group.restarts, "Optimizer restarts")->check(CLI::Range(1, 1000))->capture_default_str();
  group_cmd->add_option("--policy", group.policy, "Grouping policy")
      ->check(CLI::IsMember({"optimizer", "random"}))
      ->capture_default_str();
  group_cmd->add_option("--format", group.format)->check(CLI::IsMember({"json", "table"}))->capture_default_str();
  group_cmd->add_option("--out", group.out, "Output file (default stdout)");

  SimulateArgs simulate;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo comparison of optimizer and random grouping");
  sim_cmd->add_option("--n_classes,--classes", simulate.config.n_classes)->capture_default_str();
  sim_cmd->add_option("--class_size,--class-size", simulate.config.class_size)->capture_default_str();
  sim_cmd->add_option("--group_size,--group-size", simulate.config.group_size)->capture_default_str();
  sim_cmd->add_option("--n_clusters,--clusters", simulate.config.n_clusters)->capture_default_str();
  sim_cmd->add_option("--level_distribution,--levels", simulate.distribution,
                      "Probabilities of levels 0-4, summing to 1 (default 11:28:32:16:12 scaled to sum 1)")
      ->expected(5);
  sim_cmd->add_option("--seed", simulate.config.seed)->capture_default_str();
  sim_cmd->add_option("--restarts", simulate.config.restarts)->capture_default_str();
  sim_cmd->add_option("--threads", simulate.threads, "Worker threads (0: one per core); output is unaffected")
      ->capture_default_str();
  sim_cmd->add_option("--format", simulate.format)->check(CLI::IsMember({"json", "table"}))->capture_default_str();
  sim_cmd->add_option("--out", simulate.out, "Output file (default stdout)");

  MetricsArgs metrics_args;
  auto* metrics_cmd = app.add_subcommand("metrics", "Agreement statistics for ratings");
  metrics_cmd->add_option("--input", metrics_args.input,
                          "Rating matrix JSON, {human, ai} JSON, or item,coder,score CSV ('-' for stdin)");
  metrics_cmd->add_option("--decompose", metrics_args.decompose,
                          "QWK uncalibrated, calibrated and best: prompt vs model improvement shares")
      ->expected(3);
  metrics_cmd->add_option("--format", metrics_args.format)->check(CLI::IsMember({"json", "table"}))->capture_default_str();
  metrics_cmd->add_option("--out", metrics_args.out, "Output file (default stdout)");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP service for the teacher workflow");
  serve_cmd->add_option("--data-dir", serve.data_dir, "Directory for class records")->required();
  serve_cmd->add_option("--port", serve.port)->check(CLI::Range(0, 65535))->capture_default_str();
  serve_cmd->add_option("--host", serve.host)->capture_default_str();
  serve_cmd->add_option("--static-dir", serve.static_dir, "Teacher console files to serve at /");
  serve_cmd->add_option("--backend", serve.backend, "Default scoring backend")
      ->check(CLI::IsMember({"live", "fixture", "heuristic"}))
      ->capture_default_str();
  serve_cmd->add_option("--task", serve.task, "Task context for the scoring prompt");
  serve_cmd->add_option("--cache-dir", serve.cache_dir, "On-disk reply cache for the live backend");

  std::vector<std::string> argv_rest(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(argv_rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "UsageError", e.what());
    return 2;
  }

  try {
    if (*score_cmd) {
      run_score(score, asset_root, io);
    } else if (*cluster_cmd) {
      run_cluster(cluster, asset_root, io);
    } else if (*group_cmd) {
      run_group(group, io);
    } else if (*sim_cmd) {
      run_simulate(simulate, io);
    } else if (*metrics_cmd) {
      const Json m = compute_metrics(metrics_args, io);
      write_output(metrics_args.out, metrics_args.format == "table" ? metrics_table(m) : to_text(m), io);
    } else if (*serve_cmd) {
      run_serve(serve, asset_root, io);
    }
  } catch (const Error& e) {
    print_error(err, to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "Error", e.what());
    return 1;
  }
  return 0;
}

}  // namespace arguagent::cli
