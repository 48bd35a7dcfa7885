#include <random>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "api_client.hpp"
#include "ctb/render.hpp"
#include "fixture.hpp"

namespace ctb {
namespace {

using nlohmann::json;
using testkit::ApiClient;
using testkit::kEpoch;
using testkit::TempDir;
using testkit::TestChain;

class ExplorerTest : public ::testing::Test {
protected:
  ExplorerTest()
      : node(dir.path(), TestChain::key_copy("orderer"),
             [this] { return now; }) {
    node.initialize(ids.genesis());
    api = std::make_unique<ExplorerService>(node);
  }

  const WorldState &state() { return *(snap = node.ledger().snapshot()); }

  /// Stores a payload at isp1's evDB and commits its CREATE.
  Digest store_and_create(const std::string &isp, const std::string &text) {
    const auto &p = ids.who(isp);
    IncidentDescriptor inc{AttackKind::Spam, "plug-01", "mx", now, text,
                           "smart-plug"};
    auto ev = node.evidence_store(p.address)
                  .ev_gen(p, ids.key(isp), as_bytes(text), inc);
    node.submit(chaincode::sign_checked(state(), p, ids.key(isp),
                                        tx_gen(ev, inc, p.cert, ids.anchor())));
    return ev.id;
  }

  Transaction transfer(const std::string &from, const Digest &id,
                       const std::string &to) {
    return make_transaction(TransferProposal{id, ids.addr(to), "", now},
                            ids.addr(from), ids.key(from));
  }

  ApiClient client(const std::string &who) {
    return ApiClient(*api, ids.key(who));
  }

  TempDir dir{"ctb-api"};
  TestChain ids;
  Timestamp now = kEpoch + 100;
  LocalNode node;
  std::unique_ptr<ExplorerService> api;
  std::shared_ptr<const WorldState> snap;
};

TEST_F(ExplorerTest, LoginRequiredAndChecked) {
  ApiRequest anon{"GET", "/chain", {}, {}, ""};
  EXPECT_EQ(api->handle(anon).status, 401);
  anon.headers["authorization"] = "Bearer deadbeef";
  EXPECT_EQ(api->handle(anon).status, 401);

  // Wrong key answering the challenge.
  auto me = ids.addr("lea1").hex();
  auto r = api->handle({"POST", "/session/challenge", {}, {},
                        json{{"address", me}}.dump()});
  ASSERT_EQ(r.status, 200);
  auto ch = json::parse(r.body).at("challenge").get<std::string>();
  auto sig = ids.key("lea2").sign(
      ExplorerService::login_message(Nonce::from_hex(ch)));
  r = api->handle({"POST", "/session/login", {}, {},
                   json{{"address", me}, {"challenge", ch},
                        {"signature", sig.hex()}}
                       .dump()});
  EXPECT_EQ(r.status, 401);
  // The challenge is single use.
  sig = ids.key("lea1").sign(ExplorerService::login_message(Nonce::from_hex(ch)));
  r = api->handle({"POST", "/session/login", {}, {},
                   json{{"address", me}, {"challenge", ch},
                        {"signature", sig.hex()}}
                       .dump()});
  EXPECT_EQ(r.status, 401);
  // Not enrolled.
  r = api->handle({"POST", "/session/challenge", {}, {},
                   json{{"address", ids.outsider().participant.address.hex()}}
                       .dump()});
  EXPECT_EQ(r.status, 403);
  EXPECT_EQ(json::parse(r.body).at("error"), "UnknownParticipant");
}

TEST_F(ExplorerTest, SessionExpires) {
  auto lea = client("lea1");
  EXPECT_EQ(lea.get("/chain").status, 200);
  now += ExplorerConfig{}.session_ttl;
  EXPECT_EQ(lea.get("/chain").status, 401);
}

TEST_F(ExplorerTest, GenesisBlockAndChain) {
  auto c = client("isp1");
  auto r = c.get("/blocks/0");
  ASSERT_EQ(r.status, 200);
  auto b = ApiClient::json(r);
  EXPECT_EQ(b.at("height"), 0);
  EXPECT_EQ(b.at("prev_hash"), std::string(64, '0'));
  EXPECT_EQ(ApiClient::json(c.get("/chain")).at("height"), 1);
  EXPECT_EQ(c.get("/blocks/7").status, 404);
  EXPECT_EQ(c.get("/blocks/x").status, 400);
  EXPECT_EQ(ApiClient::json(c.get("/participants")).at("participants").size(), 7u);
  EXPECT_EQ(ApiClient::json(c.get("/chain/verify")).at("valid"), true);
}

TEST_F(ExplorerTest, InvokeRoundTripAndReplay) {
  auto isp = client("isp1");
  auto tx = chaincode::create_evidence(state(), ids.who("isp1"),
                                       ids.key("isp1"),
                                       testkit::label_digest("api-1"), "via api",
                                       now, "router", now);
  auto r = isp.invoke("create", tx);
  ASSERT_EQ(r.status, 200) << r.body;
  auto j = ApiClient::json(r);
  EXPECT_EQ(j.at("tx_id"), tx.tx_id.hex());
  EXPECT_EQ(j.at("duplicate"), false);
  auto shown = ApiClient::json(isp.get("/tx/" + tx.tx_id.hex()));
  EXPECT_EQ(shown.at("height"), j.at("height"));
  EXPECT_EQ(shown.at("submitter"), ids.addr("isp1").hex());

  // The same signed proposal again.
  auto again = ApiClient::json(isp.invoke("create", tx));
  EXPECT_EQ(again.at("tx_id"), tx.tx_id.hex());
  EXPECT_EQ(again.at("duplicate"), true);
  EXPECT_EQ(again.at("height"), j.at("height"));
  EXPECT_EQ(node.ledger().height(), 2u);

  // Kind mismatch and undecodable bodies.
  EXPECT_EQ(isp.invoke("transfer", tx).status, 400);
  EXPECT_EQ(isp.post("/invoke/create", "{").status, 400);
  EXPECT_EQ(isp.post("/invoke/create", R"({"transaction": "!!"})").status, 400);
  // Someone else's signed transaction relayed through this session.
  auto lea = client("lea1");
  EXPECT_EQ(lea.invoke("create", tx).status, 403);
}

TEST_F(ExplorerTest, TransferPermissions) {
  auto id = store_and_create("isp1", "transfer me");
  auto lea = client("lea1");
  auto r = lea.invoke("transfer", transfer("lea1", id, "pros1"));
  EXPECT_EQ(r.status, 403);
  EXPECT_EQ(ApiClient::json(r).at("error"), "PermissionDenied");

  auto isp = client("isp1");
  now += 1;
  r = isp.invoke("transfer", transfer("isp1", id, "lea1"));
  ASSERT_EQ(r.status, 200) << r.body;
  auto rec = ApiClient::json(lea.get("/evidence/" + id.hex()));
  EXPECT_EQ(rec.at("own"), ids.addr("lea1").hex());
  EXPECT_EQ(rec.at("own_prev"), ids.addr("isp1").hex());
  // Another ISP cannot see the record under the open policy.
  EXPECT_EQ(client("isp2").get("/evidence/" + id.hex()).status, 403);
  EXPECT_EQ(lea.get("/evidence/" + std::string(64, 'a')).status, 404);
}

TEST_F(ExplorerTest, PayloadOwnerOnlyAndVerifiable) {
  auto id = store_and_create("isp1", "raw flow bytes");
  auto isp = client("isp1");
  auto r = isp.payload(id, ids.addr("isp1"), now);
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(r.body, "raw flow bytes");
  Bytes pre(r.body.begin(), r.body.end());
  auto sig = from_hex(r.headers.at("X-Creator-Signature"));
  auto nonce = from_hex(r.headers.at("X-Evidence-Nonce"));
  pre.insert(pre.end(), sig.begin(), sig.end());
  pre.insert(pre.end(), nonce.begin(), nonce.end());
  EXPECT_EQ(hash(pre).hex(), id.hex());
  EXPECT_EQ(r.headers.at("X-Evidence-Id"), id.hex());
  // The access is on chain.
  EXPECT_EQ(state().access_log.at(id).size(), 1u);

  now += 1;
  ASSERT_EQ(isp.invoke("transfer", transfer("isp1", id, "lea1")).status, 200);
  now += 1;
  EXPECT_EQ(isp.payload(id, ids.addr("isp1"), now).status, 403);
  auto lea = client("lea1");
  EXPECT_EQ(lea.payload(id, ids.addr("lea1"), now).status, 200);
  // No signed ACCESS transaction.
  EXPECT_EQ(lea.get("/evidence/" + id.hex() + "/payload").status, 400);

  now += 1;
  auto erase = chaincode::erase_evidence(state(), ids.who("isp1"),
                                         ids.key("isp1"), id, now);
  ASSERT_EQ(isp.invoke("erase", erase).status, 200);
  EXPECT_EQ(lea.payload(id, ids.addr("lea1"), now).status, 410);
  EXPECT_TRUE(node.evidence_store(ids.addr("isp1")).is_erased(id));
  auto rec = ApiClient::json(lea.get("/evidence/" + id.hex()));
  EXPECT_EQ(rec.at("erased"), true);
  EXPECT_FALSE(rec.contains("payload_locator"));
}

TEST_F(ExplorerTest, TrailMatchesLedger) {
  auto id = store_and_create("isp2", "trail");
  auto isp = client("isp2");
  now += 3;
  isp.invoke("transfer", transfer("isp2", id, "lea2"));
  now += 3;
  client("lea2").invoke("transfer", transfer("lea2", id, "pros2"));
  auto got = ApiClient::json(client("pros2").get("/evidence/" + id.hex() +
                                                 "/trail"));
  auto want = json::parse(render::trail(id, custody_trail(state(), id)).dump());
  EXPECT_EQ(got, want);
  EXPECT_EQ(got.at("trail").size(), 3u);
}

TEST_F(ExplorerTest, DevicesEndpoint) {
  auto isp = client("isp1");
  auto tx = chaincode::register_device_state(
      state(), ids.who("isp1"), ids.key("isp1"), "cam-01",
      testkit::label_digest("fw"), testkit::label_digest("cfg"), now);
  ASSERT_EQ(isp.invoke("register_device", tx).status, 200);
  auto d = ApiClient::json(isp.get("/devices/cam-01"));
  EXPECT_EQ(d.at("device_id"), "cam-01");
  EXPECT_EQ(isp.get("/devices/none").status, 404);
  auto lea = client("lea1");
  auto v = chaincode::record_device_verification(
      state(), ids.who("lea1"), ids.key("lea1"), "cam-01",
      testkit::label_digest("fw"), testkit::label_digest("cfg"), now);
  EXPECT_EQ(lea.invoke("verify_device", v).status, 200);
  auto reg = chaincode::register_device_state(state(), ids.who("isp1"),
                                              ids.key("isp1"), "cam-02",
                                              testkit::label_digest("fw"),
                                              testkit::label_digest("cfg"), now);
  // Re-signing an ISP-only proposal as the LEA.
  auto forged = make_transaction(std::get<DeviceRegisterProposal>(reg.decoded()),
                                 ids.addr("lea1"), ids.key("lea1"));
  EXPECT_EQ(lea.invoke("register_device", forged).status, 403);
}

// Random operations through the API, then every API view compared with a
// replay of the stored chain.
TEST_F(ExplorerTest, ApiAgreesWithReplay) {
  api = std::make_unique<ExplorerService>(node, ExplorerConfig{86400});
  std::mt19937_64 rng(11);
  std::vector<std::string> isps = {"isp1", "isp2"};
  std::vector<std::string> all = {"isp1", "isp2", "lea1", "lea2", "pros1", "pros2"};
  std::vector<Digest> ids_seen;
  std::map<std::string, std::unique_ptr<ApiClient>> sessions;
  for (const auto &n : all)
    sessions[n] = std::make_unique<ApiClient>(*api, ids.key(n));

  for (int step = 0; step < 60; ++step) {
    now += 1 + static_cast<Timestamp>(rng() % 30);
    auto r = rng() % 4;
    if (ids_seen.empty() || r == 0) {
      auto who = isps[rng() % 2];
      ids_seen.push_back(store_and_create(who, "op " + std::to_string(step)));
      continue;
    }
    auto id = ids_seen[rng() % ids_seen.size()];
    auto from = all[rng() % all.size()];
    auto to = all[rng() % all.size()];
    if (r == 1) {
      auto tx = make_transaction(EraseProposal{id, now}, ids.addr(from),
                                 ids.key(from));
      sessions[from]->invoke("erase", tx);
    } else {
      sessions[from]->invoke("transfer", transfer(from, id, to));
    }
  }

  auto blocks = node.ledger().blocks(0, node.ledger().height());
  auto replayed = replay(blocks);
  EXPECT_EQ(replayed.serialize(), state().serialize());
  auto &reader = *sessions["lea1"];
  for (const auto &id : ids_seen) {
    const auto &rec = replayed.evidence.at(id);
    auto got = reader.get("/evidence/" + id.hex());
    ASSERT_EQ(got.status, 200);
    EXPECT_EQ(ApiClient::json(got).dump(),
              json::parse(render::record(rec, replayed.is_erased(id)).dump())
                  .dump());
    auto trail = reader.get("/evidence/" + id.hex() + "/trail");
    EXPECT_EQ(json::parse(trail.body).dump(),
              json::parse(render::trail(id, custody_trail(replayed, id)).dump())
                  .dump());
  }
  auto summary = ApiClient::json(reader.get("/chain"));
  EXPECT_EQ(summary.at("evidence"), replayed.evidence.size());
  EXPECT_EQ(summary.at("erased"), replayed.erased.size());
  // Every committed transaction is attributable to its signer.
  for (const auto &b : blocks)
    for (const auto &tx : b.txs)
      EXPECT_TRUE(replayed.roster.contains(tx.submitter));
}

TEST_F(ExplorerTest, BlockPaging) {
  for (int i = 0; i < 5; ++i)
    store_and_create("isp1", "page " + std::to_string(i));
  auto c = client("lea1");
  auto page = ApiClient::json(c.get("/blocks?offset=2&limit=2"));
  ASSERT_TRUE(page.contains("blocks"));
  ASSERT_EQ(page.at("blocks").size(), 2u);
  EXPECT_EQ(page.at("blocks")[0].at("height"), 2);
  auto latest = ApiClient::json(c.get("/blocks/latest"));
  EXPECT_EQ(latest.at("height"), 5);
}

TEST_F(ExplorerTest, HttpServerServesSameDocuments) {
  ExplorerServer server(*api);
  server.start("127.0.0.1", 0);
  ASSERT_GT(server.port(), 0);
  httplib::Client http("127.0.0.1", server.port());
  auto unauth = http.Get("/chain");
  ASSERT_TRUE(unauth);
  EXPECT_EQ(unauth->status, 401);

  auto me = ids.addr("pros1").hex();
  auto ch = http.Post("/session/challenge", json{{"address", me}}.dump(),
                      "application/json");
  ASSERT_TRUE(ch);
  ASSERT_EQ(ch->status, 200);
  auto challenge = json::parse(ch->body).at("challenge").get<std::string>();
  auto sig = ids.key("pros1").sign(
      ExplorerService::login_message(Nonce::from_hex(challenge)));
  auto login = http.Post("/session/login",
                         json{{"address", me},
                              {"challenge", challenge},
                              {"signature", sig.hex()}}
                             .dump(),
                         "application/json");
  ASSERT_TRUE(login);
  ASSERT_EQ(login->status, 200);
  auto token = json::parse(login->body).at("token").get<std::string>();
  httplib::Headers auth = {{"Authorization", "Bearer " + token}};
  auto chain = http.Get("/chain", auth);
  ASSERT_TRUE(chain);
  EXPECT_EQ(chain->status, 200);
  EXPECT_EQ(json::parse(chain->body).at("height"), 1);
  auto missing = http.Get("/blocks/99", auth);
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body).at("error"), "NotFound");
  server.stop();
}

} // namespace
} // namespace ctb
