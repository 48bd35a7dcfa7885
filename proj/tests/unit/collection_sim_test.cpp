#include <gtest/gtest.h>

#include "ctb/collection_sim.hpp"
#include "fixture.hpp"

namespace ctb::sim {
namespace {

using testkit::kEpoch;

constexpr const char *kTwoDevices = R"({
  "seed": 5,
  "start_time": 1700000000,
  "duration_s": 300,
  "patient_zero": "pz",
  "links": [["pz", "cam"], ["cam", "tv"]],
  "devices": [
    {"id": "pz", "type": "ip-camera", "services": ["TELNET"], "default_credentials": true},
    {"id": "cam", "type": "ip-camera", "services": ["TELNET"], "default_credentials": true},
    {"id": "tv", "type": "smart-tv", "services": []}
  ]
})";

constexpr const char *kNoneVulnerable = R"({
  "seed": 5,
  "lan": true,
  "devices": [
    {"id": "tv", "type": "smart-tv", "services": ["SSH"]},
    {"id": "bulb", "type": "smart-bulb", "services": []}
  ]
})";

TrafficEvent syn(std::int64_t t, std::string src, std::string dst) {
  return {t, std::move(src), std::move(dst), 80, "tcp", 60, TrafficKind::Syn, ""};
}

TEST(Detector, HundredSynPerSecondIsDdos) {
  Detector d(Thresholds{});
  std::optional<IncidentDescriptor> hit;
  std::size_t fired_at = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    auto r = d.detect(syn(kEpoch * 1000 + static_cast<std::int64_t>(i) * 10,
                          "cam-01", "198.51.100.7"));
    if (r && !hit) {
      hit = r;
      fired_at = i + 1;
    }
  }
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->attack_kind, AttackKind::Ddos);
  EXPECT_EQ(hit->source_device, "cam-01");
  EXPECT_EQ(hit->target, "198.51.100.7");
  // Threshold 50 per second: the 51st SYN inside the window fires.
  EXPECT_EQ(fired_at, 51u);
  EXPECT_EQ(d.last_flows().size(), 51u);
}

TEST(Detector, SynBelowThresholdIsQuiet) {
  Detector d(Thresholds{});
  for (int i = 0; i < 200; ++i)
    EXPECT_FALSE(d.detect(syn(kEpoch * 1000 + i * 25, "cam-01", "victim")))
        << i; // 40 per second
}

TEST(Detector, BaselineBrowsingIsNone) {
  Detector d(Thresholds{});
  for (int i = 0; i < 20; ++i)
    EXPECT_FALSE(d.detect({kEpoch * 1000 + i * 30'000, "tv-01", "203.0.113.9",
                           443, "tcp", 1500, TrafficKind::Baseline,
                           "cdn.example.net"}));
}

TEST(Detector, PeriodicBeaconIsRallying) {
  Detector d(Thresholds{});
  std::optional<IncidentDescriptor> hit;
  for (int i = 0; i < 3; ++i)
    hit = d.detect({kEpoch * 1000 + i * 30'000, "cam-01", "203.0.113.50", 443,
                    "tcp", 300, TrafficKind::Beacon, "a1b2c3d4e5f6.com"});
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->attack_kind, AttackKind::Rallying);
  EXPECT_EQ(hit->target, "a1b2c3d4e5f6.com");
}

TEST(Detector, IrregularBeaconIsNone) {
  Detector d(Thresholds{});
  const std::int64_t t[] = {0, 30'000, 95'000, 97'000};
  for (auto dt : t)
    EXPECT_FALSE(d.detect({kEpoch * 1000 + dt, "cam-01", "203.0.113.50", 443,
                           "tcp", 300, TrafficKind::Beacon, "xyz.com"}));
}

TEST(Detector, CredentialStuffingThenLoginIsPropagation) {
  Detector d(Thresholds{}, {{"cam-02", "ip-camera"}});
  auto base = kEpoch * 1000;
  for (int i = 0; i < 3; ++i)
    EXPECT_FALSE(d.detect({base + i * 100, "cam-01", "cam-02", 23, "tcp", 80,
                           TrafficKind::LoginAttempt, ""}));
  auto hit = d.detect({base + 400, "cam-01", "cam-02", 23, "tcp", 80,
                       TrafficKind::LoginSuccess, ""});
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->attack_kind, AttackKind::Propagation);
  EXPECT_EQ(hit->device_type, "ip-camera");
  EXPECT_NE(hit->summary.find("3 failed logins"), std::string::npos);
}

TEST(Detector, SpamAndMitmThresholds) {
  Detector d(Thresholds{});
  auto base = kEpoch * 1000;
  std::optional<IncidentDescriptor> spam;
  for (int i = 0; i < 31 && !spam; ++i)
    spam = d.detect({base + i * 1000, "plug", "mx.example", 25, "tcp", 900,
                     TrafficKind::Smtp, ""});
  ASSERT_TRUE(spam);
  EXPECT_EQ(spam->attack_kind, AttackKind::Spam);
  EXPECT_EQ(d.last_flows().size(), 31u);

  std::optional<IncidentDescriptor> mitm;
  for (int i = 0; i < 3; ++i) {
    EXPECT_FALSE(mitm);
    mitm = d.detect({base + i * 100, "hub", "192.168.1.1", 0, "arp", 42,
                     TrafficKind::ArpReply, ""});
  }
  ASSERT_TRUE(mitm);
  EXPECT_EQ(mitm->attack_kind, AttackKind::Mitm);
}

TEST(FlowRecords, RoundTripAndRejectGarbage) {
  std::vector<FlowRecord> recs = {{"a", "b", 23, "tcp", 80, 1},
                                  {"c", "d", 443, "tcp", 1500, 2}};
  EXPECT_EQ(decode_flow_records(encode_flow_records(recs)), recs);
  EXPECT_THROW(decode_flow_records(as_bytes("nonsense")), Error);
}

TEST(Scenario, OneVulnerableNeighbourIsOnePropagation) {
  auto spec = parse_scenario_spec(kTwoDevices);
  auto r = run_scenario(spec, 5);
  EXPECT_EQ(r.count(AttackKind::Propagation), 1u);
  EXPECT_TRUE(r.infected_at.contains("pz"));
  EXPECT_TRUE(r.infected_at.contains("cam"));
  EXPECT_FALSE(r.infected_at.contains("tv"));
}

TEST(Scenario, NoVulnerableDeviceNoIncidents) {
  auto spec = parse_scenario_spec(kNoneVulnerable);
  auto r = run_scenario(spec, 5);
  EXPECT_TRUE(r.evidence.empty());
  EXPECT_TRUE(r.infected_at.empty());
}

TEST(Scenario, SmartHomeRunIsDeterministic) {
  auto spec = load_scenario_spec(CTB_SOURCE_DIR "/scenarios/smart_home.json");
  EXPECT_EQ(spec.devices.size(), 10u);
  auto a = run_scenario(spec, 42);
  auto b = run_scenario(spec, 42);
  ASSERT_EQ(a.evidence.size(), b.evidence.size());
  EXPECT_EQ(a.events, b.events);
  EXPECT_EQ(a.infected_at, b.infected_at);
  for (std::size_t i = 0; i < a.evidence.size(); ++i) {
    EXPECT_EQ(a.evidence[i].payload, b.evidence[i].payload);
    EXPECT_EQ(a.evidence[i].incident, b.evidence[i].incident);
  }
  for (auto k : {AttackKind::Propagation, AttackKind::Rallying,
                 AttackKind::Ddos, AttackKind::Spam, AttackKind::Mitm})
    EXPECT_GT(a.count(k), 0u) << to_string(k);
  auto c = run_scenario(spec, 43);
  EXPECT_NE(a.events, c.events);
}

TEST(Scenario, InjectedNoncesGiveIdenticalIds) {
  auto spec = load_scenario_spec(CTB_SOURCE_DIR "/scenarios/smart_home.json");
  auto result = run_scenario(spec, 42);
  auto ca = CertificateAuthority::init(testkit::seed_for("ca"));
  auto isp = ca.enroll(Role::Isp, kEpoch, testkit::seed_for("isp"));
  testkit::TempDir dir("ctb-sim");
  std::vector<std::vector<Digest>> ids;
  for (int run = 0; run < 2; ++run) {
    EvidenceStore store(dir / std::to_string(run), {},
                        [] { return kEpoch; });
    std::uint64_t counter = 0;
    store.set_nonce_source([&] {
      Nonce n;
      n.bytes[31] = static_cast<std::uint8_t>(++counter);
      n.bytes[30] = static_cast<std::uint8_t>(counter >> 8);
      return n;
    });
    auto rep = ingest(spec, result, store, isp.participant, isp.key);
    std::vector<Digest> got;
    for (const auto &e : rep.stored)
      got.push_back(e.id);
    ids.push_back(got);
    // plug-01 sits on an un-attested channel.
    EXPECT_FALSE(rep.refused.empty());
    for (auto i : rep.refused)
      EXPECT_EQ(result.evidence[i].channel_device, "plug-01");
    EXPECT_EQ(rep.stored.size() + rep.refused.size(), result.evidence.size());
  }
  EXPECT_EQ(ids[0], ids[1]);
}

TEST(Scenario, SdaReportsOnInstalledDevices) {
  auto spec = load_scenario_spec(CTB_SOURCE_DIR "/scenarios/smart_home.json");
  auto r = run_scenario(spec, 42);
  std::set<std::string> with_sda;
  for (const auto &d : spec.devices)
    if (d.sda)
      with_sda.insert(d.device_id);
  for (const auto &e : r.evidence) {
    if (e.agent == Agent::Sda) {
      EXPECT_TRUE(with_sda.contains(e.channel_device)) << e.channel_device;
    }
  }
}

TEST(Scenario, MalformedSpecIsSpecError) {
  auto code = [](std::string_view text) -> std::optional<ErrorCode> {
    try {
      parse_scenario_spec(text).validate();
    } catch (const Error &e) {
      return e.code();
    }
    return std::nullopt;
  };
  EXPECT_EQ(code("{"), ErrorCode::SpecError);
  EXPECT_EQ(code(R"({"devices": [{"id": "a", "services": ["GOPHER"]}]})"),
            ErrorCode::SpecError);
  EXPECT_EQ(code(R"({"devices": [{"id": "a"}], "patient_zero": "zz"})"),
            ErrorCode::SpecError);
  EXPECT_EQ(code(R"({"devices": [{"id": "a"}, {"id": "a"}]})"),
            ErrorCode::SpecError);
}

} // namespace
} // namespace ctb::sim
