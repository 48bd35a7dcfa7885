#include "ctb/collection_sim.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <functional>
#include <queue>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ctb::sim {

namespace {

[[noreturn]] void spec_error(const std::string &what) {
  throw Error(ErrorCode::SpecError, what);
}

constexpr std::int64_t kLoginWindowMs = 60'000;
constexpr std::int64_t kArpWindowMs = 10'000;
constexpr std::int64_t kDgaPeriodMs = 3'600'000;

} // namespace

std::string_view to_string(Service s) {
  switch (s) {
  case Service::Telnet:
    return "TELNET";
  case Service::Ftp:
    return "FTP";
  case Service::Ssh:
    return "SSH";
  }
  return "?";
}

Service parse_service(std::string_view name) {
  for (auto s : {Service::Telnet, Service::Ftp, Service::Ssh})
    if (to_string(s) == name)
      return s;
  spec_error("unknown service " + std::string(name));
}

std::uint16_t port_of(Service s) {
  switch (s) {
  case Service::Telnet:
    return 23;
  case Service::Ftp:
    return 21;
  case Service::Ssh:
    return 22;
  }
  return 0;
}

std::string_view to_string(TrafficKind kind) {
  switch (kind) {
  case TrafficKind::Baseline:
    return "BASELINE";
  case TrafficKind::LoginAttempt:
    return "LOGIN_ATTEMPT";
  case TrafficKind::LoginSuccess:
    return "LOGIN_SUCCESS";
  case TrafficKind::Exploit:
    return "EXPLOIT";
  case TrafficKind::Beacon:
    return "BEACON";
  case TrafficKind::Syn:
    return "SYN";
  case TrafficKind::Smtp:
    return "SMTP";
  case TrafficKind::ArpReply:
    return "ARP_REPLY";
  }
  return "?";
}

std::string_view to_string(Agent agent) {
  return agent == Agent::Sga ? "SGA" : "SDA";
}

void ScenarioSpec::validate() const {
  if (duration_s == 0)
    spec_error("duration_s must be positive");
  std::set<std::string> ids;
  for (const auto &d : devices) {
    if (d.device_id.empty())
      spec_error("device without id");
    if (!ids.insert(d.device_id).second)
      spec_error("duplicate device id " + d.device_id);
  }
  for (const auto &[a, b] : links) {
    if (!ids.contains(a) || !ids.contains(b))
      spec_error("link references unknown device " + a + "-" + b);
    if (a == b)
      spec_error("self link on " + a);
  }
  if (patient_zero && !ids.contains(*patient_zero))
    spec_error("unknown patient_zero " + *patient_zero);
  const auto &t = thresholds;
  if (t.ddos_syn_per_s == 0 || t.spam_per_min == 0 || t.mitm_arp_replies == 0)
    spec_error("volume thresholds must be positive");
  if (t.beacon_min_polls < 2)
    spec_error("beacon_min_polls must be at least 2");
  const auto &b = bot;
  if (b.scan_interval_s == 0 || b.poll_interval_s == 0 ||
      b.ddos_syn_per_s == 0 || b.spam_per_min == 0)
    spec_error("bot intervals and rates must be positive");
}

std::vector<std::string> ScenarioSpec::neighbours(const std::string &id) const {
  std::set<std::string> out;
  if (lan && links.empty()) {
    for (const auto &d : devices)
      if (d.device_id != id)
        out.insert(d.device_id);
  }
  for (const auto &[a, b] : links) {
    if (a == id)
      out.insert(b);
    if (b == id)
      out.insert(a);
  }
  return {out.begin(), out.end()};
}

namespace {

using nlohmann::json;

template <class T> void read_opt(const json &j, const char *key, T &out) {
  if (auto it = j.find(key); it != j.end())
    out = it->get<T>();
}

} // namespace

ScenarioSpec parse_scenario_spec(std::string_view text) {
  ScenarioSpec s;
  try {
    auto j = json::parse(text);
    read_opt(j, "seed", s.seed);
    read_opt(j, "start_time", s.start_time);
    read_opt(j, "duration_s", s.duration_s);
    read_opt(j, "lan", s.lan);
    read_opt(j, "baseline_events", s.baseline_events);
    if (auto pz = j.find("patient_zero"); pz != j.end() && !pz->is_null())
      s.patient_zero = pz->get<std::string>();
    for (const auto &d : j.at("devices")) {
      SimDevice dev;
      dev.device_id = d.at("id").get<std::string>();
      dev.device_type = d.value("type", std::string("generic"));
      for (const auto &svc : d.value("services", json::array()))
        dev.open_services.insert(parse_service(svc.get<std::string>()));
      read_opt(d, "default_credentials", dev.default_credentials);
      read_opt(d, "vulnerable_firmware", dev.vulnerable_firmware);
      read_opt(d, "infected", dev.infected);
      read_opt(d, "sda", dev.sda);
      read_opt(d, "attested", dev.attested);
      s.devices.push_back(std::move(dev));
    }
    for (const auto &l : j.value("links", json::array()))
      s.links.emplace_back(l.at(0).get<std::string>(),
                           l.at(1).get<std::string>());
    if (auto t = j.find("thresholds"); t != j.end()) {
      auto &th = s.thresholds;
      read_opt(*t, "ddos_syn_per_s", th.ddos_syn_per_s);
      read_opt(*t, "spam_per_min", th.spam_per_min);
      read_opt(*t, "mitm_arp_replies", th.mitm_arp_replies);
      read_opt(*t, "stuffing_min_failures", th.stuffing_min_failures);
      read_opt(*t, "beacon_min_polls", th.beacon_min_polls);
      read_opt(*t, "beacon_tolerance_ms", th.beacon_tolerance_ms);
      read_opt(*t, "benign_domains", th.benign_domains);
    }
    if (auto b = j.find("bot"); b != j.end()) {
      auto &bp = s.bot;
      read_opt(*b, "scan_interval_s", bp.scan_interval_s);
      read_opt(*b, "stuffing_attempts", bp.stuffing_attempts);
      read_opt(*b, "poll_interval_s", bp.poll_interval_s);
      read_opt(*b, "attack_delay_s", bp.attack_delay_s);
      read_opt(*b, "victim", bp.victim);
      read_opt(*b, "ddos_syn_per_s", bp.ddos_syn_per_s);
      read_opt(*b, "ddos_duration_s", bp.ddos_duration_s);
      read_opt(*b, "spam_per_min", bp.spam_per_min);
      read_opt(*b, "spam_duration_s", bp.spam_duration_s);
      read_opt(*b, "mitm_arp_replies", bp.mitm_arp_replies);
      if (auto a = b->find("attacks"); a != b->end()) {
        bp.attacks.clear();
        for (const auto &k : *a) {
          auto kind = parse_attack_kind(k.get<std::string>());
          if (kind != AttackKind::Ddos && kind != AttackKind::Spam &&
              kind != AttackKind::Mitm)
            spec_error("bot attacks are DDOS, SPAM or MITM");
          bp.attacks.push_back(kind);
        }
      }
    }
  } catch (const json::exception &e) {
    spec_error(std::string("malformed scenario spec: ") + e.what());
  } catch (const Error &e) {
    if (e.code() == ErrorCode::SpecError)
      throw;
    spec_error(e.what());
  }
  s.validate();
  return s;
}

ScenarioSpec load_scenario_spec(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_spec(ss.str());
}

Bytes encode_flow_records(const std::vector<FlowRecord> &records) {
  ByteWriter w;
  w.str("ctb-flows/1").u64(records.size());
  for (const auto &r : records) {
    ByteWriter rec;
    rec.str(r.src).str(r.dst).u64(r.port).str(r.proto).u64(r.bytes).i64(
        r.t_ms);
    w.field(rec.bytes());
  }
  return std::move(w).take();
}

std::vector<FlowRecord> decode_flow_records(ByteView payload) {
  ByteReader r(payload);
  if (r.str() != "ctb-flows/1")
    throw Error(ErrorCode::Malformed, "not a flow record payload");
  auto count = r.u64();
  std::vector<FlowRecord> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    ByteReader rec(r.field());
    FlowRecord f;
    f.src = rec.str();
    f.dst = rec.str();
    f.port = rec.u64();
    f.proto = rec.str();
    f.bytes = rec.u64();
    f.t_ms = rec.i64();
    rec.expect_end();
    out.push_back(std::move(f));
  }
  r.expect_end();
  return out;
}

// ---- detector -------------------------------------------------------------

Detector::Detector(Thresholds thresholds,
                   std::map<std::string, std::string> device_types)
    : thresholds_(std::move(thresholds)),
      device_types_(std::move(device_types)) {}

IncidentDescriptor Detector::fire(AttackKind kind, const TrafficEvent &event,
                                  std::string target, std::string summary,
                                  std::vector<TrafficEvent> flows) {
  last_flows_ = std::move(flows);
  const auto &typed =
      kind == AttackKind::Propagation ? event.dst : event.src;
  auto type = device_types_.find(typed);
  return {kind,
          event.src,
          std::move(target),
          event.t_ms / 1000,
          std::move(summary),
          type == device_types_.end() ? std::string() : type->second};
}

namespace {

template <class C> void trim_window(C &window, std::int64_t now, std::int64_t span) {
  while (!window.empty() && window.front().t_ms <= now - span)
    window.erase(window.begin());
}

} // namespace

std::optional<IncidentDescriptor> Detector::detect(const TrafficEvent &ev) {
  auto first = [&](AttackKind kind, const std::string &key) {
    return fired_.insert({kind, key}).second;
  };
  switch (ev.kind) {
  case TrafficKind::Syn: {
    auto &w = syn_window_[{ev.src, ev.dst}];
    w.push_back(ev);
    trim_window(w, ev.t_ms, 1000);
    if (w.size() > thresholds_.ddos_syn_per_s &&
        first(AttackKind::Ddos, ev.src + "->" + ev.dst))
      return fire(AttackKind::Ddos, ev, ev.dst,
                  "DDOS: " + std::to_string(w.size()) + " SYN within 1 s from " +
                      ev.src + " to " + ev.dst,
                  w);
    return std::nullopt;
  }
  case TrafficKind::Smtp: {
    auto &w = smtp_window_[ev.src];
    w.push_back(ev);
    trim_window(w, ev.t_ms, 60'000);
    if (w.size() > thresholds_.spam_per_min &&
        first(AttackKind::Spam, ev.src))
      return fire(AttackKind::Spam, ev, ev.dst,
                  "SPAM: " + std::to_string(w.size()) +
                      " SMTP messages within 60 s from " + ev.src,
                  w);
    return std::nullopt;
  }
  case TrafficKind::ArpReply: {
    auto &w = arp_window_[ev.src];
    w.push_back(ev);
    trim_window(w, ev.t_ms, kArpWindowMs);
    if (w.size() >= thresholds_.mitm_arp_replies &&
        first(AttackKind::Mitm, ev.src))
      return fire(AttackKind::Mitm, ev, ev.dst,
                  "MITM: " + std::to_string(w.size()) +
                      " unsolicited ARP replies from " + ev.src +
                      " claiming " + ev.dst,
                  w);
    return std::nullopt;
  }
  case TrafficKind::LoginAttempt: {
    auto &w = login_failures_[{ev.src, ev.dst}];
    w.push_back(ev);
    trim_window(w, ev.t_ms, kLoginWindowMs);
    return std::nullopt;
  }
  case TrafficKind::LoginSuccess: {
    auto &w = login_failures_[{ev.src, ev.dst}];
    trim_window(w, ev.t_ms, kLoginWindowMs);
    if (w.size() < thresholds_.stuffing_min_failures ||
        !first(AttackKind::Propagation, ev.dst))
      return std::nullopt;
    auto flows = w;
    flows.push_back(ev);
    w.clear();
    auto failures = flows.size() - 1;
    return fire(AttackKind::Propagation, ev, ev.dst,
                "PROPAGATION: " + std::to_string(failures) +
                    " failed logins then success on port " +
                    std::to_string(ev.dport) + " from " + ev.src + " to " +
                    ev.dst,
                std::move(flows));
  }
  case TrafficKind::Exploit:
    if (!first(AttackKind::Propagation, ev.dst))
      return std::nullopt;
    return fire(AttackKind::Propagation, ev, ev.dst,
                "PROPAGATION: firmware exploit from " + ev.src + " against " +
                    ev.dst,
                {ev});
  case TrafficKind::Baseline:
  case TrafficKind::Beacon:
    break;
  }

  if (ev.dport != 80 && ev.dport != 443)
    return std::nullopt;
  const auto &benign = thresholds_.benign_domains;
  if (ev.domain.empty() ||
      std::find(benign.begin(), benign.end(), ev.domain) != benign.end())
    return std::nullopt;
  auto &polls = beacons_[ev.src];
  polls.push_back(ev);
  const auto n = thresholds_.beacon_min_polls;
  if (polls.size() < n || fired_.contains({AttackKind::Rallying, ev.src}))
    return std::nullopt;
  std::vector<TrafficEvent> recent(polls.end() - n, polls.end());
  const auto base = recent[1].t_ms - recent[0].t_ms;
  if (base <= 0)
    return std::nullopt;
  for (std::size_t i = 2; i < recent.size(); ++i) {
    auto gap = recent[i].t_ms - recent[i - 1].t_ms;
    if (std::abs(gap - base) > static_cast<std::int64_t>(
                                   thresholds_.beacon_tolerance_ms))
      return std::nullopt;
  }
  fired_.insert({AttackKind::Rallying, ev.src});
  return fire(AttackKind::Rallying, ev, ev.domain,
              "RALLYING: " + std::to_string(n) + " polls every " +
                  std::to_string(base / 1000) + " s from " + ev.src +
                  " to C&C " + ev.domain + ":" + std::to_string(ev.dport),
              std::move(recent));
}

std::size_t ScenarioResult::count(AttackKind kind, Agent agent) const {
  return static_cast<std::size_t>(
      std::count_if(evidence.begin(), evidence.end(), [&](const auto &e) {
        return e.agent == agent && e.incident.attack_kind == kind;
      }));
}

// ---- simulation -----------------------------------------------------------

namespace {

std::string dga_domain(std::uint64_t seed, std::int64_t t_ms) {
  ByteWriter w;
  w.str("dga").u64(seed).i64(t_ms / kDgaPeriodMs);
  return hash(w.bytes()).hex().substr(0, 12) + ".com";
}

class Simulation {
public:
  Simulation(const ScenarioSpec &spec, std::uint64_t seed)
      : spec_(spec), seed_(seed), rng_(seed),
        start_ms_(spec.start_time * 1000),
        end_ms_(start_ms_ + std::int64_t{spec.duration_s} * 1000),
        detector_(spec.thresholds, types(spec)) {
    for (const auto &d : spec.devices)
      devices_[d.device_id] = d;
    result_.seed = seed;
  }

  ScenarioResult run() {
    queue_now_ = start_ms_;
    for (const auto &d : spec_.devices)
      schedule_baseline(d);
    for (const auto &d : spec_.devices)
      if (d.infected)
        infect(d.device_id, start_ms_, {});
    if (spec_.patient_zero) {
      auto &pz = devices_.at(*spec_.patient_zero);
      if (!pz.infected && pz.vulnerable())
        infect(pz.device_id, start_ms_, {});
    }
    while (!queue_.empty()) {
      auto item = queue_.top();
      queue_.pop();
      queue_now_ = item.t_ms;
      item.action();
    }
    return std::move(result_);
  }

private:
  struct Item {
    std::int64_t t_ms;
    std::uint64_t seq;
    std::function<void()> action;
    bool operator>(const Item &o) const {
      return t_ms != o.t_ms ? t_ms > o.t_ms : seq > o.seq;
    }
  };

  static std::map<std::string, std::string> types(const ScenarioSpec &spec) {
    std::map<std::string, std::string> out;
    for (const auto &d : spec.devices)
      out[d.device_id] = d.device_type;
    return out;
  }

  void at(std::int64_t t, std::function<void()> action) {
    if (t < end_ms_)
      queue_.push({t, seq_++, std::move(action)});
  }

  void emit(TrafficEvent ev) {
    auto t = ev.t_ms;
    at(t, [this, ev = std::move(ev)] { observe(ev); });
  }

  void observe(const TrafficEvent &ev) {
    result_.events.push_back(ev);
    if (ev.kind == TrafficKind::LoginSuccess || ev.kind == TrafficKind::Exploit)
      infect(ev.dst, ev.t_ms, ev.src);
    if (auto incident = detector_.detect(ev)) {
      std::vector<FlowRecord> flows;
      for (const auto &f : detector_.last_flows())
        flows.push_back({f.src, f.dst, f.dport, f.proto, f.bytes, f.t_ms});
      result_.evidence.push_back(
          {Agent::Sga, *incident, encode_flow_records(flows), ev.src});
    }
  }

  void schedule_baseline(const SimDevice &d) {
    const auto &domains = spec_.thresholds.benign_domains;
    std::uniform_int_distribution<std::int64_t> when(start_ms_, end_ms_ - 1);
    std::uniform_int_distribution<std::uint64_t> size(500, 50'000);
    for (std::uint32_t i = 0; i < spec_.baseline_events; ++i) {
      TrafficEvent ev;
      ev.t_ms = when(rng_);
      ev.src = d.device_id;
      ev.dport = 443;
      ev.proto = "TCP";
      ev.bytes = size(rng_);
      ev.kind = TrafficKind::Baseline;
      if (!domains.empty())
        ev.domain = domains[std::uniform_int_distribution<std::size_t>(
            0, domains.size() - 1)(rng_)];
      ev.dst = ev.domain.empty() ? "internet" : ev.domain;
      emit(std::move(ev));
    }
  }

  void infect(const std::string &id, std::int64_t t, const std::string &by) {
    auto &dev = devices_.at(id);
    if (result_.infected_at.contains(id))
      return;
    dev.infected = true;
    result_.infected_at[id] = t;
    const auto &bot = spec_.bot;

    auto targets = spec_.neighbours(id);
    std::shuffle(targets.begin(), targets.end(), rng_);
    for (std::size_t i = 0; i < targets.size(); ++i)
      at(t + std::int64_t(i + 1) * bot.scan_interval_s * 1000,
         [this, id, target = targets[i]] { attempt(id, target); });

    const std::uint16_t cnc_port = (rng_() & 1) ? 443 : 80;
    const std::int64_t poll = std::int64_t{bot.poll_interval_s} * 1000;
    for (std::int64_t p = t + 1000; p < end_ms_; p += poll)
      emit({p, id, "c2", cnc_port, "TCP", 320, TrafficKind::Beacon,
            dga_domain(seed_, p)});

    at(t + std::int64_t{bot.attack_delay_s} * 1000,
       [this, id] { launch_attacks(id); });

    if (dev.sda && !by.empty())
      at(t + 1000, [this, id, by] { sda_report(id, by); });
  }

  void attempt(const std::string &bot, const std::string &target) {
    auto &dev = devices_.at(target);
    if (dev.infected)
      return;
    const auto t = current_time();
    if (dev.credential_exposed()) {
      auto port = port_of(*dev.open_services.begin());
      for (std::uint32_t i = 0; i < spec_.bot.stuffing_attempts; ++i)
        emit({t + 100 * std::int64_t(i), bot, target, port, "TCP", 180,
              TrafficKind::LoginAttempt, {}});
      emit({t + 100 * std::int64_t(spec_.bot.stuffing_attempts), bot, target,
            port, "TCP", 240, TrafficKind::LoginSuccess, {}});
    } else if (dev.vulnerable_firmware) {
      emit({t, bot, target, 8080, "TCP", 1400, TrafficKind::Exploit, {}});
    } else if (!dev.open_services.empty()) {
      auto port = port_of(*dev.open_services.begin());
      for (std::uint32_t i = 0; i < spec_.bot.stuffing_attempts; ++i)
        emit({t + 100 * std::int64_t(i), bot, target, port, "TCP", 180,
              TrafficKind::LoginAttempt, {}});
    }
  }

  void launch_attacks(const std::string &id) {
    const auto &bot = spec_.bot;
    const auto t = current_time();
    for (auto kind : bot.attacks) {
      switch (kind) {
      case AttackKind::Ddos:
        for (std::uint32_t s = 0; s < bot.ddos_duration_s; ++s)
          for (std::uint32_t j = 0; j < bot.ddos_syn_per_s; ++j)
            emit({t + std::int64_t{s} * 1000 +
                      std::int64_t{j} * 1000 / bot.ddos_syn_per_s,
                  id, bot.victim, 80, "TCP", 60, TrafficKind::Syn, {}});
        break;
      case AttackKind::Spam: {
        const std::int64_t gap = 60'000 / bot.spam_per_min;
        const std::int64_t count =
            std::int64_t{bot.spam_duration_s} * 1000 / std::max<std::int64_t>(gap, 1);
        for (std::int64_t j = 0; j < count; ++j)
          emit({t + j * gap, id, "mx" + std::to_string(j % 7) + ".mail.example",
                25, "TCP", 2048, TrafficKind::Smtp, {}});
        break;
      }
      case AttackKind::Mitm:
        for (std::uint32_t j = 0; j < bot.mitm_arp_replies; ++j)
          emit({t + std::int64_t{j} * 1000, id, "gateway", 0, "ARP", 42,
                TrafficKind::ArpReply, {}});
        break;
      default:
        break;
      }
    }
  }

  void sda_report(const std::string &id, const std::string &by) {
    const auto &dev = devices_.at(id);
    const auto t = current_time();
    ByteWriter w;
    Bytes image(64);
    for (auto &b : image)
      b = static_cast<std::uint8_t>(rng_());
    w.str("ctb-device-image/1")
        .str(dev.device_id)
        .str(dev.device_type)
        .fixed(hash(as_bytes("firmware:" + dev.device_id)))
        .i64(t)
        .field(image);
    IncidentDescriptor incident{
        AttackKind::Propagation,
        by,
        id,
        t / 1000,
        "SDA: configuration changed on " + id + " after compromise by " + by +
            "; device image captured",
        dev.device_type};
    result_.evidence.push_back(
        {Agent::Sda, std::move(incident), std::move(w).take(), id});
  }

  std::int64_t current_time() const { return queue_now_; }

  const ScenarioSpec &spec_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::int64_t start_ms_;
  std::int64_t end_ms_;
  Detector detector_;
  std::map<std::string, SimDevice> devices_;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  std::int64_t queue_now_ = 0;
  ScenarioResult result_;
};

} // namespace

ScenarioResult run_scenario(const ScenarioSpec &spec, std::uint64_t seed) {
  spec.validate();
  return Simulation(spec, seed).run();
}

IngestReport ingest(const ScenarioSpec &spec, const ScenarioResult &result,
                    EvidenceStore &store, const Participant &isp,
                    const SigningKey &key) {
  std::map<std::string, bool> attested;
  for (const auto &d : spec.devices)
    attested[d.device_id] = d.attested;
  IngestReport report;
  for (std::size_t i = 0; i < result.evidence.size(); ++i) {
    const auto &item = result.evidence[i];
    auto it = attested.find(item.channel_device);
    if (it != attested.end() && !it->second) {
      report.refused.push_back(i);
      continue;
    }
    report.stored.push_back(store.ev_gen(isp, key, item.payload, item.incident));
    report.source_index.push_back(i);
  }
  return report;
}

} // namespace ctb::sim
