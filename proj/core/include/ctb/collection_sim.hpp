#pragma once

// Synthetic smart-home evidence source.
//
// A seeded discrete-event loop plays the botnet lifecycle over a set of
// simulated IoT devices: propagation over TELNET/FTP/SSH default
// credentials and firmware exploits, rallying to a C&C server on ports
// 80/443 under generated domain names, then DDoS, spam and ARP-spoofing
// MITM. A gateway agent (SGA) runs fixed detection rules over the traffic
// and a device agent (SDA), where installed, reports device-local changes.
// Every detection yields an incident descriptor plus an evidence payload.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctb/error.hpp"
#include "ctb/evidence_store.hpp"
#include "ctb/incident.hpp"

namespace ctb::sim {

enum class Service : std::uint8_t { Telnet = 1, Ftp = 2, Ssh = 3 };

std::string_view to_string(Service s);
Service parse_service(std::string_view name);
std::uint16_t port_of(Service s);

struct SimDevice {
  std::string device_id;
  std::string device_type;
  std::set<Service> open_services;
  bool default_credentials = false;
  bool vulnerable_firmware = false;
  bool infected = false;
  /// A device agent is installed on the device.
  bool sda = false;
  /// Channel to the ISP passed attestation; un-attested channels refuse
  /// evidence traffic.
  bool attested = true;

  bool credential_exposed() const {
    return default_credentials && !open_services.empty();
  }
  bool vulnerable() const { return credential_exposed() || vulnerable_firmware; }
};

struct Thresholds {
  std::uint32_t ddos_syn_per_s = 50;
  std::uint32_t spam_per_min = 30;
  std::uint32_t mitm_arp_replies = 3;
  std::uint32_t stuffing_min_failures = 3;
  std::uint32_t beacon_min_polls = 3;
  std::uint32_t beacon_tolerance_ms = 2000;
  std::vector<std::string> benign_domains = {
      "updates.vendor.example", "cdn.example.net", "time.example.org",
      "api.weather.example", "news.example.com"};
};

struct BotParams {
  std::uint32_t scan_interval_s = 5;
  std::uint32_t stuffing_attempts = 5;
  std::uint32_t poll_interval_s = 30;
  std::uint32_t attack_delay_s = 120;
  std::vector<AttackKind> attacks = {AttackKind::Ddos};
  std::string victim = "198.51.100.7";
  std::uint32_t ddos_syn_per_s = 100;
  std::uint32_t ddos_duration_s = 3;
  std::uint32_t spam_per_min = 60;
  std::uint32_t spam_duration_s = 60;
  std::uint32_t mitm_arp_replies = 5;
};

struct ScenarioSpec {
  std::uint64_t seed = 0;
  Timestamp start_time = 1'700'000'000;
  std::uint32_t duration_s = 600;
  std::vector<SimDevice> devices;
  /// Undirected adjacency; empty with `lan` set means everyone is adjacent.
  std::vector<std::pair<std::string, std::string>> links;
  bool lan = false;
  std::optional<std::string> patient_zero;
  Thresholds thresholds;
  BotParams bot;
  std::uint32_t baseline_events = 6;

  /// Throws SpecError.
  void validate() const;
  std::vector<std::string> neighbours(const std::string &device) const;
};

/// Throws SpecError on malformed input.
ScenarioSpec parse_scenario_spec(std::string_view text);
ScenarioSpec load_scenario_spec(const std::filesystem::path &path);

enum class TrafficKind : std::uint8_t {
  Baseline = 1,
  LoginAttempt,
  LoginSuccess,
  Exploit,
  Beacon,
  Syn,
  Smtp,
  ArpReply,
};

std::string_view to_string(TrafficKind kind);

struct TrafficEvent {
  std::int64_t t_ms = 0;
  std::string src;
  std::string dst;
  std::uint16_t dport = 0;
  std::string proto;
  std::uint64_t bytes = 0;
  TrafficKind kind = TrafficKind::Baseline;
  /// HTTP(S) host for web traffic.
  std::string domain;

  bool operator==(const TrafficEvent &) const = default;
};

/// One synthetic flow record as stored in an evidence payload.
struct FlowRecord {
  std::string src;
  std::string dst;
  std::uint64_t port = 0;
  std::string proto;
  std::uint64_t bytes = 0;
  std::int64_t t_ms = 0;

  bool operator==(const FlowRecord &) const = default;
};

Bytes encode_flow_records(const std::vector<FlowRecord> &records);
std::vector<FlowRecord> decode_flow_records(ByteView payload);

/// Gateway rule set: C&C polling cadence, credential stuffing followed by a
/// login, exploit traffic, and SYN / SMTP / ARP volume thresholds. Each
/// rule fires once per key.
class Detector {
public:
  explicit Detector(Thresholds thresholds,
                    std::map<std::string, std::string> device_types = {});

  std::optional<IncidentDescriptor> detect(const TrafficEvent &event);

  /// Flows that triggered the most recent detection.
  const std::vector<TrafficEvent> &last_flows() const { return last_flows_; }

private:
  IncidentDescriptor fire(AttackKind kind, const TrafficEvent &event,
                          std::string target, std::string summary,
                          std::vector<TrafficEvent> flows);

  Thresholds thresholds_;
  std::map<std::string, std::string> device_types_;
  std::map<std::pair<std::string, std::string>, std::vector<TrafficEvent>>
      syn_window_, login_failures_;
  std::map<std::string, std::vector<TrafficEvent>> smtp_window_, arp_window_,
      beacons_;
  std::set<std::pair<AttackKind, std::string>> fired_;
  std::vector<TrafficEvent> last_flows_;
};

enum class Agent : std::uint8_t { Sga = 1, Sda = 2 };

std::string_view to_string(Agent agent);

struct CollectedEvidence {
  Agent agent = Agent::Sga;
  IncidentDescriptor incident;
  Bytes payload;
  /// Device whose channel carries this item to the ISP.
  std::string channel_device;
};

struct ScenarioResult {
  std::uint64_t seed = 0;
  std::vector<TrafficEvent> events;
  std::vector<CollectedEvidence> evidence;
  /// Infection time (ms) per infected device, patient zero included.
  std::map<std::string, std::int64_t> infected_at;

  std::size_t count(AttackKind kind, Agent agent = Agent::Sga) const;
};

ScenarioResult run_scenario(const ScenarioSpec &spec, std::uint64_t seed);

struct IngestReport {
  std::vector<EvidenceLogEvent> stored;
  /// Index into ScenarioResult::evidence of each stored item.
  std::vector<std::size_t> source_index;
  /// Items refused because their channel is not attested.
  std::vector<std::size_t> refused;
};

/// Hand every collected item to the ISP's evidence database.
IngestReport ingest(const ScenarioSpec &spec, const ScenarioResult &result,
                    EvidenceStore &store, const Participant &isp,
                    const SigningKey &key);

} // namespace ctb::sim
