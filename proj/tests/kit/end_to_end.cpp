#include <chrono>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "criteria.hpp"
#include "fixture.hpp"
#include "process.hpp"

namespace ctb::testkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Step {
  std::string what;
  ProcessResult result;
};

class Session {
public:
  Session(const EndToEndConfig &config, fs::path dir)
      : config_(config), dir_(std::move(dir)) {
    fs::create_directories(dir_);
    std::ofstream(dir_ / "node.json")
        << R"({"data_dir": "data", "ca_dir": "ca", "identities_dir": "ids",)"
        << R"( "orderer": "orderer", "port": 0})" << "\n";
  }

  /// Runs one command at a fixed clock; a failure is recorded and returned
  /// as null.
  json run(const std::string &what, std::vector<std::string> args,
           Timestamp now, bool expect_success = true) {
    args.insert(args.begin(), {"--output", "structured"});
    auto r = run_process(config_.ctb, args, dir_,
                         {{"CTB_CONFIG", (dir_ / "node.json").string()},
                          {"CTB_NOW", std::to_string(now)}});
    last_ = r;
    if ((r.exit_code == 0) != expect_success) {
      failures.push_back(what + " exited " + std::to_string(r.exit_code) +
                         ": " + r.err.substr(0, 200));
      return nullptr;
    }
    if (!expect_success)
      return nullptr;
    try {
      return json::parse(r.out);
    } catch (const json::exception &) {
      failures.push_back(what + " printed malformed output");
      return nullptr;
    }
  }

  const ProcessResult &last() const { return last_; }

  std::vector<std::string> failures;

private:
  const EndToEndConfig &config_;
  fs::path dir_;
  ProcessResult last_;
};

std::string hex_seed(int b) {
  static const char *digits = "0123456789abcdef";
  std::string one{digits[b >> 4], digits[b & 15]};
  std::string out;
  for (int i = 0; i < 32; ++i)
    out += one;
  return out;
}

struct RunReport {
  json scenario;
  json plain_scenario;
  json final_chain;
  std::size_t incidents = 0;
  std::size_t committed = 0;
  std::size_t transferred = 0;
  bool verified = false;
  std::vector<std::string> failures;
};

RunReport one_run(const EndToEndConfig &config, const fs::path &dir) {
  Session s(config, dir);
  RunReport out;
  Timestamp now = kEpoch;
  const auto seed = std::to_string(config.seed);

  s.run("ca init", {"ca", "init", "--seed", hex_seed(1)}, now);
  std::map<std::string, std::string> addr;
  const std::vector<std::pair<std::string, std::string>> members = {
      {"orderer", "ISP"}, {"isp", "ISP"}, {"lea", "LEA"}, {"pros", "PROSECUTOR"}};
  int k = 2;
  for (const auto &[name, role] : members) {
    auto j = s.run("enroll " + name,
                   {"enroll", "--role", role, "--name", name, "--seed",
                    hex_seed(k++)},
                   now);
    if (!j.is_null())
      addr[name] = j.at("address").get<std::string>();
  }
  s.run("node start", {"node", "start", "--init-only"}, now);

  // Plain run: detection only, no chain involved.
  out.plain_scenario = s.run(
      "scenario run", {"scenario", "run", "--spec", config.scenario.string(),
                       "--seed", seed},
      now);

  now += 60;
  out.scenario = s.run("scenario run --commit",
                       {"scenario", "run", "--spec", config.scenario.string(),
                        "--seed", seed, "--commit", "--key", "ids/isp.key",
                        "--nonce-seed", seed},
                       now);
  std::vector<std::string> ids;
  if (!out.scenario.is_null()) {
    for (const auto &[kind, n] : out.scenario.at("incident_counts").items())
      out.incidents += n.get<std::size_t>();
    for (const auto &r : out.scenario.at("committed").at("records"))
      if (!r.contains("error")) {
        ++out.committed;
        ids.push_back(r.at("id").get<std::string>());
      }
  }

  // Without the owner's key file the transfer must be refused.
  if (!ids.empty()) {
    s.run("transfer without key",
          {"evidence", "transfer", "--id", ids[0], "--to", "lea"}, now,
          false);
    if (s.last().exit_code == 0 ||
        s.last().err.find("PermissionDenied") == std::string::npos)
      s.failures.push_back("transfer without a key file was not refused");
  }

  for (std::size_t i = 0; i < ids.size() && i < config.transfers; ++i) {
    now += 100;
    s.run("transfer to LEA",
          {"evidence", "transfer", "--key", "ids/isp.key", "--id", ids[i],
           "--to", "lea"},
          now);
    now += 100;
    s.run("transfer to prosecutor",
          {"evidence", "transfer", "--key", "ids/lea.key", "--id", ids[i],
           "--to", "pros", "--note", "case file"},
          now);
    auto trail = s.run("trail show", {"trail", "show", "--id", ids[i]}, now);
    if (trail.is_null())
      continue;
    const auto &t = trail.at("trail");
    bool ok = t.size() == 3 && t[0].at("owner") == addr["isp"] &&
              t[1].at("owner") == addr["lea"] &&
              t[2].at("owner") == addr["pros"] && t[2].at("end").is_null() &&
              t[1].at("end") == now && t[2].at("start") == now;
    if (ok)
      ++out.transferred;
    else
      s.failures.push_back("trail of " + ids[i] + " is not ISP -> LEA -> prosecutor");
  }

  auto verify = s.run("chain verify", {"chain", "verify"}, now);
  out.verified = !verify.is_null() && verify.at("valid") == true;
  out.final_chain = s.run("chain show", {"chain", "show"}, now);
  out.failures = s.failures;
  return out;
}

} // namespace

Verdict check_cli_end_to_end(const EndToEndConfig &config) {
  auto started = std::chrono::steady_clock::now();
  Verdict v;
  TempDir dir("ctb-e2e");
  auto a = one_run(config, dir / "run-a");
  auto b = one_run(config, dir / "run-b");

  std::vector<std::string> problems = a.failures;
  problems.insert(problems.end(), b.failures.begin(), b.failures.end());
  if (a.incidents == 0)
    problems.push_back("no incidents detected");
  if (a.committed == 0)
    problems.push_back("no evidence committed");
  if (a.transferred < std::min<std::size_t>(config.transfers, a.committed))
    problems.push_back("custody transfers incomplete");
  if (!a.verified || !b.verified)
    problems.push_back("chain verify did not pass");
  if (a.plain_scenario.is_null() || a.plain_scenario != b.plain_scenario)
    problems.push_back("scenario summaries differ between runs");
  if (a.scenario.is_null() || a.scenario != b.scenario)
    problems.push_back("committed scenario reports differ between runs");
  if (a.final_chain.is_null() || a.final_chain != b.final_chain)
    problems.push_back("final chains differ between runs");

  v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            started)
                  .count();
  v.pass = problems.empty();
  std::ostringstream d;
  d << a.incidents << " incidents, " << a.committed
    << " evidence records on chain, " << a.transferred
    << " ISP->LEA->prosecutor hand-overs, chain verify "
    << (a.verified ? "passed" : "failed") << ", tip "
    << (a.final_chain.is_null()
            ? std::string("?")
            : a.final_chain.at("tip_hash").get<std::string>().substr(0, 16))
    << (!a.final_chain.is_null() && a.final_chain == b.final_chain
            ? " identical across runs"
            : "");
  for (const auto &p : problems)
    d << "; FAILED: " << p;
  v.detail = d.str();
  return v;
}

} // namespace ctb::testkit
