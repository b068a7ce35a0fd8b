// Copyright 2026 The fedorch Authors.
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

#include "fedorch/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "fedorch/errors.hpp"
#include "fedorch/kv_config.hpp"
#include "fedorch/report.hpp"
#include "fedorch/scenario.hpp"
#include "fedorch/simulator.hpp"
#include "fedorch/structured_text.hpp"
#include "fedorch/template_model.hpp"

namespace fedorch {

namespace {

// Deployment sessions run on a world scenario whose clock is the journal
// index, so the horizon only has to outlast any realistic journal.
constexpr SimTime kSessionHorizon = SimTime{1} << 40;

using Row = std::vector<std::string>;

void print_table(std::ostream &out, const Row &header, const std::vector<Row> &rows) {
  std::vector<size_t> width(header.size(), 0);
  auto measure = [&](const Row &r) {
    for (size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  };
  measure(header);
  for (const auto &r : rows) measure(r);
  auto line = [&](const Row &r) {
    std::string s;
    for (size_t i = 0; i < r.size(); ++i) {
      s += r[i];
      if (i + 1 < r.size()) s += std::string(width[i] - r[i].size() + 2, ' ');
    }
    out << s << "\n";
  };
  line(header);
  for (const auto &r : rows) line(r);
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kNotFound, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string join(const std::vector<std::string> &v, std::string_view sep) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? std::string(sep) : "") + v[i];
  return s;
}

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  for (const auto &p : out) {
    if (p.empty()) throw Error(Errc::kConfigError, "empty provider id in preference list '" + s + "'");
  }
  return out;
}

Json record_json(const DeploymentRecord &rec) {
  Json attempts = Json::array();
  for (const auto &a : rec.attempts) attempts.push_back({{"site", a.provider_id}, {"ok", a.ok}, {"reason", a.reason}});
  Json outputs = Json::object();
  for (const auto &[k, v] : rec.outputs) outputs[k] = v;
  return {{"kind", "deployment"},
          {"uuid", rec.uuid},
          {"owner", rec.owner},
          {"state", std::string(to_string(rec.state))},
          {"site", rec.chosen_site ? Json(*rec.chosen_site) : Json(nullptr)},
          {"ranked", rec.ranked},
          {"attempts", std::move(attempts)},
          {"outputs", std::move(outputs)},
          {"created_at", rec.created_at},
          {"updated_at", rec.updated_at}};
}

KvConfig base_config() {
  const char *path = std::getenv("ORCH_CONFIG");
  if (path == nullptr || *path == '\0') return {};
  return KvConfig::load(path);
}

class Cli {
 public:
  Cli(std::ostream &out, std::ostream &err) : out_(out), err_(err) {}

  int run(int argc, const char *const *argv);

 private:
  void error(const Error &e) {
    if (machine_) {
      Json j = {{"kind", "error"}, {"error", e.name()}, {"message", e.what()}};
      if (const auto *te = dynamic_cast<const TemplateError *>(&e)) j["violations"] = violations(te->report());
      out_ << j.dump() << "\n";
    } else {
      err_ << "error: " << e.name() << ": " << e.what() << "\n";
      if (const auto *te = dynamic_cast<const TemplateError *>(&e)) {
        for (const auto &v : te->report().violations) {
          err_ << "  [" << to_string(v.kind) << "] " << v.subject << ": " << v.detail << "\n";
        }
      }
    }
  }

  static Json violations(const ValidationReport &report) {
    Json list = Json::array();
    for (const auto &v : report.violations) {
      list.push_back({{"kind", std::string(to_string(v.kind))}, {"subject", v.subject}, {"detail", v.detail}});
    }
    return list;
  }

  int cmd_validate();
  int cmd_rank();
  int cmd_sim_run();
  int cmd_sim_verify();
  int cmd_depcreate();
  int cmd_depshow();
  int cmd_deplist();
  int cmd_depdel();

  // Deployment session: world scenario plus a replayed journal.
  struct Session {
    std::unique_ptr<Simulator> sim;
    std::string journal_path;
    SimTime next_t = 0;
  };
  Session open_session();
  void append_journal(const Session &s, const Json &entry);
  void show(const DeploymentRecord &rec);

  std::ostream &out_;
  std::ostream &err_;
  bool machine_ = false;

  std::string template_path_, config_path_, snapshot_path_, scenario_path_, report_path_;
  std::string user_, prefs_, uuid_, world_, state_;
  std::vector<std::string> groups_;
  bool teardown_ = false;
};

int Cli::run(int argc, const char *const *argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::string_view(argv[i]) == "--machine") machine_ = true;
  }
  CLI::App app{"Federated cloud orchestration toolkit"};
  app.name("orch");
  app.require_subcommand(1);
  app.add_flag("--machine", machine_, "one JSON record per line");

  auto *validate = app.add_subcommand("validate", "check a deployment template");
  validate->add_option("template", template_path_, "template file")->required();

  auto *rank = app.add_subcommand("rank", "rank providers from a snapshot");
  rank->add_option("--config", config_path_, "key/value config")->required();
  rank->add_option("--snapshot", snapshot_path_, "provider snapshot file")->required();
  rank->add_option("--user", user_, "apply this user's preferences");
  rank->add_option("--group", groups_, "groups of --user");

  auto *sim = app.add_subcommand("sim", "scenario simulation");
  sim->require_subcommand(1);
  auto *sim_run = sim->add_subcommand("run", "run a scenario");
  sim_run->add_option("scenario", scenario_path_, "scenario file")->required();
  sim_run->add_option("--report", report_path_, "write the report here");
  sim_run->add_flag("--teardown", teardown_, "retire live deployments at the horizon");
  auto *sim_verify = sim->add_subcommand("verify", "re-derive a report's metrics from its event log");
  sim_verify->add_option("report", report_path_, "report file")->required();

  auto add_session_opts = [&](CLI::App *c) {
    c->add_option("--world", world_, "world scenario (default: `world` in ORCH_CONFIG)");
    c->add_option("--state", state_, "deployment journal")->envname("ORCH_STATE");
  };
  auto *depcreate = app.add_subcommand("depcreate", "create a deployment");
  depcreate->add_option("template", template_path_, "template file")->required();
  depcreate->add_option("--user", user_, "requesting user")->envname("ORCH_USER")->required();
  depcreate->add_option("--prefs", prefs_, "preferred providers, comma separated");
  add_session_opts(depcreate);
  auto *depshow = app.add_subcommand("depshow", "show one deployment");
  depshow->add_option("uuid", uuid_, "deployment uuid")->required();
  add_session_opts(depshow);
  auto *deplist = app.add_subcommand("deplist", "list deployments");
  deplist->add_option("--user", user_, "only this owner");
  add_session_opts(deplist);
  auto *depdel = app.add_subcommand("depdel", "delete a deployment");
  depdel->add_option("uuid", uuid_, "deployment uuid")->required();
  depdel->add_option("--user", user_, "requesting user")->envname("ORCH_USER")->required();
  add_session_opts(depdel);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &) {
    out_ << app.help();
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out_, err_);
      return kExitOk;
    }
    // Requirement checks run before leftover arguments are reported; name a
    // stray flag first since it is usually the cause.
    std::string message = e.what();
    std::vector<std::string> stray = app.remaining(true);
    for (const auto *sub : app.get_subcommands()) {
      for (const auto *leaf : sub->get_subcommands()) {
        for (auto &x : leaf->remaining()) stray.push_back(x);
      }
      for (auto &x : sub->remaining()) stray.push_back(x);
    }
    if (!stray.empty() && dynamic_cast<const CLI::RequiredError *>(&e) != nullptr) {
      message = "unexpected argument '" + stray.front() + "' (" + message + ")";
    }
    if (machine_) {
      out_ << Json({{"kind", "error"}, {"error", "UsageError"}, {"message", message}}).dump() << "\n";
    } else {
      err_ << "usage error: " << message << "\n";
    }
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate();
    if (rank->parsed()) return cmd_rank();
    if (sim_run->parsed()) return cmd_sim_run();
    if (sim_verify->parsed()) return cmd_sim_verify();
    if (depcreate->parsed()) return cmd_depcreate();
    if (depshow->parsed()) return cmd_depshow();
    if (deplist->parsed()) return cmd_deplist();
    if (depdel->parsed()) return cmd_depdel();
  } catch (const Error &e) {
    error(e);
    return kExitDomainError;
  } catch (const Json::exception &e) {
    error(Error(Errc::kSyntaxError, e.what()));
    return kExitDomainError;
  }
  return kExitUsage;
}

int Cli::cmd_validate() {
  const std::string text = read_file(template_path_);
  ValidationReport report;
  try {
    report = validate(parse_template(text));
  } catch (const Error &e) {
    if (e.code() != Errc::kCycleError) throw;
    report.violations.push_back({ViolationKind::kCycle, "nodes", e.what()});
  }
  if (machine_) {
    out_ << Json({{"kind", "validation"},
                  {"template", template_path_},
                  {"ok", report.ok()},
                  {"violations", violations(report)}})
                .dump()
         << "\n";
  } else if (report.ok()) {
    out_ << template_path_ << ": ok\n";
  } else {
    std::vector<Row> rows;
    for (const auto &v : report.violations) rows.push_back({std::string(to_string(v.kind)), v.subject, v.detail});
    print_table(out_, {"VIOLATION", "SUBJECT", "DETAIL"}, rows);
  }
  return report.ok() ? kExitOk : kExitDomainError;
}

int Cli::cmd_rank() {
  KvConfig cfg = base_config();
  const KvConfig file = KvConfig::load(config_path_);
  for (const auto &e : file.entries()) cfg.set(e.key, e.value);
  for (const auto &p : file.policy_lines()) cfg.add_policy(p);
  cfg.check_known_keys();
  const RankerConfig ranker = RankerConfig::from(cfg);
  const auto snapshots = parse_snapshot_file(read_file(snapshot_path_));
  std::optional<PreferenceList> prefs;
  if (!user_.empty()) prefs = PreferenceBook::from(cfg).lookup(user_, groups_);
  const auto ranked = rank_providers_detailed(snapshots, ranker, prefs);
  if (machine_) {
    for (size_t i = 0; i < ranked.size(); ++i) {
      out_ << Json({{"kind", "ranked"},
                    {"position", i + 1},
                    {"provider", ranked[i].provider_id},
                    {"score", ranked[i].score},
                    {"preferred", ranked[i].preferred}})
                  .dump()
           << "\n";
    }
  } else {
    std::vector<Row> rows;
    for (size_t i = 0; i < ranked.size(); ++i) {
      rows.push_back({std::to_string(i + 1), ranked[i].provider_id, text::render_decimal(ranked[i].score),
                      ranked[i].preferred ? "yes" : "no"});
    }
    print_table(out_, {"#", "PROVIDER", "SCORE", "PREFERRED"}, rows);
  }
  return kExitOk;
}

int Cli::cmd_sim_run() {
  Scenario scenario = Scenario::load(scenario_path_, base_config());
  SimOptions options;
  options.teardown_at_horizon = teardown_;
  Simulator sim(std::move(scenario), options);
  const RunReport report = sim.run();
  if (!report_path_.empty()) {
    std::ofstream f(report_path_, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::kNotFound, "cannot write '" + report_path_ + "'");
    f << report.serialize();
  }
  if (machine_) {
    if (report_path_.empty()) {
      out_ << report.serialize();
    } else {
      out_ << Json({{"kind", "metrics"}, {"metrics", report.metrics}}).dump() << "\n";
    }
    return kExitOk;
  }
  const Json &m = report.metrics;
  out_ << "scenario " << report.scenario << "  seed " << report.seed << "  horizon " << report.horizon_s << " s  ("
       << report.event_log.size() << " log records, " << sim.audits_run() << " audits)\n\n";
  std::vector<Row> rows;
  for (const auto &[site, s] : m["sites"].items()) {
    char util[32];
    std::snprintf(util, sizeof util, "%.1f%%", 100.0 * s["utilization"].get<double>());
    rows.push_back({site, util, std::to_string(s["busy_cpu_s"].get<std::int64_t>()),
                    std::to_string(s["capacity_cpu_s"].get<std::int64_t>())});
  }
  print_table(out_, {"SITE", "UTILIZATION", "BUSY_CPU_S", "CAPACITY_CPU_S"}, rows);
  out_ << "\n";
  rows.clear();
  for (const auto &[user, cpu] : m["user_cpu_s"].items()) rows.push_back({user, std::to_string(cpu.get<std::int64_t>())});
  if (!rows.empty()) {
    print_table(out_, {"USER", "CPU_S"}, rows);
    out_ << "\n";
  }
  rows.clear();
  for (const auto &[state, n] : m["deployments"].items()) rows.push_back({state, std::to_string(n.get<std::int64_t>())});
  print_table(out_, {"DEPLOYMENT_STATE", "COUNT"}, rows);
  char wait[32];
  std::snprintf(wait, sizeof wait, "%.2f", m["mean_wait_s"].get<double>());
  out_ << "\ninstances started " << m["instances_started"] << ", preemptions " << m["preemptions"]
       << ", mean wait " << wait << " s, queued at horizon " << m["instances_queued_at_horizon"] << "\n";
  out_ << "jobs started " << m["jobs_started"] << ", completed " << m["jobs_completed"] << ", queued at horizon "
       << m["jobs_queued_at_horizon"] << "\n";
  if (!report_path_.empty()) out_ << "report written to " << report_path_ << "\n";
  return kExitOk;
}

int Cli::cmd_sim_verify() {
  const RunReport report = RunReport::parse(read_file(report_path_));
  const std::string diff = verify_report(report);
  if (!diff.empty()) throw Error(Errc::kInvariantViolation, diff);
  if (machine_) {
    out_ << Json({{"kind", "verified"}, {"records", report.event_log.size()}}).dump() << "\n";
  } else {
    out_ << report_path_ << ": metrics match the event log (" << report.event_log.size() << " records)\n";
  }
  return kExitOk;
}

Cli::Session Cli::open_session() {
  KvConfig base = base_config();
  std::string world = world_;
  if (world.empty()) {
    if (const auto *e = base.find("world")) world = e->value;
  }
  if (world.empty()) throw Error(Errc::kConfigError, "no world scenario: pass --world or set `world` in ORCH_CONFIG");
  Scenario scenario = Scenario::load(world, base);
  scenario.events.clear();
  scenario.horizon_s = kSessionHorizon;

  Session s;
  s.journal_path = state_.empty() ? "orch-state.jsonl" : state_;
  s.sim = std::make_unique<Simulator>(std::move(scenario));
  std::ifstream in(s.journal_path);
  std::string line;
  int number = 0;
  while (in && std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      const std::string op = j.at("op");
      if (op == "create") {
        std::optional<PreferenceList> prefs;
        if (j.contains("prefs") && !j["prefs"].is_null()) prefs = PreferenceList(j["prefs"].get<std::vector<std::string>>());
        s.sim->create(j.at("template_text").get<std::string>(), j.at("user"), s.next_t, prefs);
      } else if (op == "delete") {
        s.sim->remove(j.at("uuid"), j.at("user"), s.next_t);
      } else {
        throw Error(Errc::kConfigError, "unknown op '" + op + "'");
      }
    } catch (const std::exception &e) {
      throw Error(Errc::kConfigError,
                  s.journal_path + " line " + std::to_string(number) + " does not replay: " + e.what());
    }
    ++s.next_t;
  }
  return s;
}

void Cli::append_journal(const Session &s, const Json &entry) {
  std::ofstream f(s.journal_path, std::ios::app | std::ios::binary);
  if (!f) throw Error(Errc::kNotFound, "cannot write '" + s.journal_path + "'");
  f << entry.dump() << "\n";
}

void Cli::show(const DeploymentRecord &rec) {
  if (machine_) {
    out_ << record_json(rec).dump() << "\n";
    return;
  }
  std::vector<Row> rows = {{"uuid", rec.uuid},
                           {"owner", rec.owner},
                           {"state", std::string(to_string(rec.state))},
                           {"site", rec.chosen_site.value_or("-")},
                           {"ranked", rec.ranked.empty() ? "-" : join(rec.ranked, ", ")}};
  for (const auto &a : rec.attempts) rows.push_back({"attempt", a.provider_id + (a.ok ? " ok" : " failed: " + a.reason)});
  for (const auto &[k, v] : rec.outputs) rows.push_back({"output", k + " = " + v});
  for (const auto &r : rows) out_ << r[0] << std::string(10 - r[0].size(), ' ') << r[1] << "\n";
}

int Cli::cmd_depcreate() {
  Session s = open_session();
  const std::string text = read_file(template_path_);
  std::optional<PreferenceList> prefs;
  if (!prefs_.empty()) prefs = PreferenceList(split_list(prefs_));
  const std::string uuid = s.sim->create(text, user_, s.next_t, prefs);
  Json entry = {{"op", "create"}, {"user", user_}, {"template_text", text}, {"prefs", nullptr}};
  if (prefs) entry["prefs"] = prefs->ids();
  append_journal(s, entry);
  show(s.sim->orchestrator().get_deployment(uuid));
  return kExitOk;
}

int Cli::cmd_depshow() {
  Session s = open_session();
  show(s.sim->orchestrator().get_deployment(uuid_));
  return kExitOk;
}

int Cli::cmd_deplist() {
  Session s = open_session();
  std::optional<std::string> owner;
  if (!user_.empty()) owner = user_;
  const auto list = s.sim->orchestrator().list_deployments(owner);
  if (machine_) {
    for (const auto &rec : list) out_ << record_json(rec).dump() << "\n";
    return kExitOk;
  }
  std::vector<Row> rows;
  for (const auto &rec : list) {
    rows.push_back({rec.uuid, rec.owner, std::string(to_string(rec.state)), rec.chosen_site.value_or("-"),
                    std::to_string(rec.created_at)});
  }
  print_table(out_, {"UUID", "OWNER", "STATE", "SITE", "CREATED"}, rows);
  return kExitOk;
}

int Cli::cmd_depdel() {
  Session s = open_session();
  const DeploymentRecord rec = s.sim->remove(uuid_, user_, s.next_t);
  append_journal(s, {{"op", "delete"}, {"uuid", uuid_}, {"user", user_}});
  show(rec);
  return kExitOk;
}

}  // namespace

std::vector<ProviderSnapshot> parse_snapshot_file(std::string_view text) {
  const text::Value root = text::parse(text);
  root.require_keys({"providers"});
  const text::Value *providers = root.find("providers");
  if (providers == nullptr || !providers->is_map()) root.fail("snapshot needs a `providers` map");
  providers->reject_duplicate_keys();
  std::vector<ProviderSnapshot> out;
  for (const auto &e : providers->entries()) {
    const text::Value &v = *e.value;
    if (!v.is_map()) v.fail("provider '" + e.key + "' must be a map");
    v.require_keys({"sla_rank", "availability", "latency_ms", "data_locality", "free"});
    ProviderSnapshot s;
    s.provider_id = e.key;
    if (const auto *x = v.find("sla_rank")) s.sla_rank = x->as_decimal();
    if (const auto *x = v.find("availability")) s.availability = x->as_decimal();
    if (const auto *x = v.find("latency_ms")) s.latency_ms = x->as_decimal();
    if (const auto *x = v.find("data_locality")) s.data_locality = x->as_decimal();
    if (const auto *x = v.find("free")) s.free_capacity = x->as_resources();
    if (s.sla_rank < 0 || s.latency_ms < 0) v.fail("sla_rank and latency_ms must be non-negative");
    if (s.availability < 0 || s.availability > 1 || s.data_locality < 0 || s.data_locality > 1) {
      v.fail("availability and data_locality must lie in [0, 1]");
    }
    out.push_back(std::move(s));
  }
  return out;
}

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  Cli cli(out, err);
  return cli.run(argc, argv);
}

}  // namespace fedorch
