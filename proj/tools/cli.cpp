#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ctb/chaincode.hpp"
#include "ctb/collection_sim.hpp"
#include "ctb/explorer_api.hpp"
#include "ctb/network.hpp"
#include "ctb/node.hpp"
#include "ctb/render.hpp"

namespace ctb::cli {

namespace fs = std::filesystem;
using render::Json;

namespace {

Bytes read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path &path, ByteView data, bool secret = false) {
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char *>(data.data()),
              static_cast<std::streamsize>(data.size()));
  }
  if (secret)
    fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write);
}

std::optional<Seed> parse_seed(const std::string &hex) {
  if (hex.empty())
    return std::nullopt;
  try {
    return Seed::from_hex(hex);
  } catch (const Error &) {
    throw Error(ErrorCode::InvalidArgument, "seed must be 64 hex characters");
  }
}

Digest parse_id(const std::string &hex) {
  try {
    return Digest::from_hex(hex);
  } catch (const Error &) {
    throw Error(ErrorCode::InvalidArgument, "id must be 64 hex characters");
  }
}

Clock make_clock() {
  if (const char *now = std::getenv("CTB_NOW"); now && *now) {
    Timestamp fixed = 0;
    try {
      fixed = std::stoll(now);
    } catch (const std::exception &) {
      throw Error(ErrorCode::InvalidArgument, "CTB_NOW must be an integer");
    }
    return [fixed] { return fixed; };
  }
  return system_now;
}

/// Deterministic nonces for reproducible runs.
NonceSource seeded_nonces(std::uint64_t seed) {
  auto counter = std::make_shared<std::uint64_t>(0);
  return [seed, counter] {
    ByteWriter w;
    w.str("ctb-nonce").u64(seed).u64((*counter)++);
    return Nonce::from(hash(w.bytes()).view());
  };
}

struct Config {
  fs::path file;
  fs::path data_dir;
  fs::path ca_dir;
  fs::path ids_dir;
  std::string orderer = "orderer";
  HashAlgorithm hash = HashAlgorithm::Sha256;
  ChaincodePolicy policy;
  std::string bind = "127.0.0.1";
  int port = 8080;
  Timestamp session_ttl = 900;
};

Config load_config(std::string path) {
  if (path.empty())
    if (const char *env = std::getenv("CTB_CONFIG"))
      path = env;
  if (path.empty())
    throw Error(ErrorCode::InvalidArgument,
                "no config: pass --config or set CTB_CONFIG");
  Config c;
  c.file = fs::absolute(path);
  Json j;
  try {
    auto bytes = read_file(c.file);
    j = Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::exception &e) {
    throw Error(ErrorCode::InvalidArgument,
                "malformed config " + path + ": " + e.what());
  }
  auto base = c.file.parent_path();
  auto dir = [&](const char *key, const char *fallback) {
    fs::path p = j.value(key, std::string(fallback));
    return p.is_absolute() ? p : base / p;
  };
  c.data_dir = dir("data_dir", "data");
  c.ca_dir = dir("ca_dir", "ca");
  c.ids_dir = dir("identities_dir", "identities");
  c.orderer = j.value("orderer", c.orderer);
  c.hash = parse_hash_algorithm(j.value("hash", std::string("sha256")));
  if (auto p = j.find("policy"); p != j.end()) {
    c.policy.allow_prosecutor_transfer =
        p->value("allow_prosecutor_transfer", false);
    c.policy.allow_isp_to_isp = p->value("allow_isp_to_isp", false);
    auto mode = p->value("metadata_access", std::string("open"));
    if (mode == "open")
      c.policy.metadata_access = MetadataAccess::Open;
    else if (mode == "owner_only")
      c.policy.metadata_access = MetadataAccess::OwnerOnly;
    else
      throw Error(ErrorCode::InvalidArgument, "unknown metadata_access " + mode);
  }
  c.bind = j.value("bind", c.bind);
  c.port = j.value("port", c.port);
  c.session_ttl = j.value("session_ttl", c.session_ttl);
  return c;
}

SigningKey load_key(const std::string &path) {
  if (path.empty())
    throw Error(ErrorCode::PermissionDenied, "a signing key file is required");
  if (!fs::exists(path))
    throw Error(ErrorCode::PermissionDenied, "key file not found: " + path);
  try {
    return SigningKey::deserialize(read_file(path));
  } catch (const Error &e) {
    throw Error(ErrorCode::PermissionDenied,
                "unreadable key file " + path + ": " + e.what());
  }
}

std::unique_ptr<LocalNode> open_node(const Config &c, const Clock &clock) {
  auto key = load_key((c.ids_dir / (c.orderer + ".key")).string());
  return std::make_unique<LocalNode>(c.data_dir, std::move(key), clock);
}

LocalNode &require_initialized(LocalNode &node) {
  if (!node.initialized())
    throw Error(ErrorCode::InvalidArgument,
                "node has no genesis block; run `ctb node start` first");
  return node;
}

Participant enrolled(const LocalNode &node, const SigningKey &key) {
  auto state = node.ledger().snapshot();
  const auto *cert = state->find_participant(address_of(key.public_key()));
  if (!cert)
    throw Error(ErrorCode::PermissionDenied,
                "key " + address_of(key.public_key()).hex() +
                    " is not enrolled on this chain");
  return Participant::from_certificate(*cert);
}

Address resolve_address(const Config &c, const std::string &who) {
  if (who.size() == Address::size * 2) {
    try {
      return Address::from_hex(who);
    } catch (const Error &) {
    }
  }
  auto cert_path = c.ids_dir / (who + ".cert");
  if (!fs::exists(cert_path))
    throw Error(ErrorCode::UnknownParticipant,
                "unknown participant " + who);
  return Certificate::deserialize(read_file(cert_path)).subject_address;
}

Digest parse_digest_or_file(const std::string &hex, const std::string &file,
                            const char *what) {
  if (!hex.empty())
    return parse_id(hex);
  if (!file.empty())
    return hash(read_file(file));
  throw Error(ErrorCode::InvalidArgument,
              std::string("pass --") + what + "-hash or --" + what + "-file");
}

struct Output {
  std::ostream &out;
  bool structured = false;

  void emit(const Json &doc) const {
    if (structured)
      out << doc.dump(2) << "\n";
    else
      out << render::text(doc);
  }
};

Json scenario_summary(const sim::ScenarioSpec &spec,
                      const sim::ScenarioResult &result) {
  Json j;
  j["seed"] = result.seed;
  j["devices"] = spec.devices.size();
  j["patient_zero"] =
      spec.patient_zero ? Json(*spec.patient_zero) : Json(nullptr);
  j["traffic_events"] = result.events.size();
  Json infected = Json::array();
  for (const auto &[id, t] : result.infected_at) {
    Json e;
    e["device"] = id;
    e["offset_ms"] = t - spec.start_time * 1000;
    infected.push_back(std::move(e));
  }
  j["infected"] = std::move(infected);
  Json counts;
  for (auto k : {AttackKind::Propagation, AttackKind::Rallying,
                 AttackKind::Ddos, AttackKind::Spam, AttackKind::Mitm})
    counts[std::string(to_string(k))] = result.count(k);
  j["incident_counts"] = std::move(counts);
  Json items = Json::array();
  for (const auto &e : result.evidence) {
    Json item;
    item["agent"] = to_string(e.agent);
    item["incident"] = render::incident(e.incident);
    item["payload_bytes"] = e.payload.size();
    item["payload_digest"] = hash(e.payload).hex();
    items.push_back(std::move(item));
  }
  j["evidence"] = std::move(items);
  return j;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"Cyber-trust evidence ledger", "ctb"};
  app.require_subcommand(1);
  std::string output_mode = "text";
  std::string config_path;
  app.add_option("--output", output_mode, "text or structured")
      ->check(CLI::IsMember({"text", "structured"}));
  app.add_option("--config", config_path, "node config file (or CTB_CONFIG)");

  std::function<void()> action;
  Output o{out};

  // ---- ca / enroll ----
  auto *ca = app.add_subcommand("ca", "certificate authority");
  ca->require_subcommand(1);
  auto *ca_init = ca->add_subcommand("init", "create the root CA key");
  std::string ca_dir, seed_hex;
  ca_init->add_option("--dir", ca_dir, "CA directory");
  ca_init->add_option("--seed", seed_hex, "deterministic 32-byte hex seed");
  ca_init->callback([&] {
    action = [&] {
      fs::path dir = ca_dir.empty() ? load_config(config_path).ca_dir
                                    : fs::path(ca_dir);
      if (fs::exists(dir / "ca.key"))
        throw Error(ErrorCode::AlreadyExists,
                    "CA already initialised in " + dir.string());
      auto authority = CertificateAuthority::init(parse_seed(seed_hex));
      write_file(dir / "ca.key", authority.root_key().serialize(), true);
      write_file(dir / "ca.pub",
                 as_bytes(authority.root_public_key().hex() + "\n"));
      fs::create_directories(dir / "roster");
      Json j;
      j["ca_dir"] = dir.string();
      j["root_public_key"] = authority.root_public_key().hex();
      o.emit(j);
    };
  });

  auto *enroll = app.add_subcommand("enroll", "issue a participant identity");
  std::string role_name, id_name, out_dir, enroll_ca;
  enroll->add_option("--role", role_name, "ISP, LEA or PROSECUTOR")->required();
  enroll->add_option("--name", id_name, "identity name")->required();
  enroll->add_option("--ca", enroll_ca, "CA directory");
  enroll->add_option("--out", out_dir, "identity directory");
  enroll->add_option("--seed", seed_hex, "deterministic 32-byte hex seed");
  enroll->callback([&] {
    action = [&] {
      fs::path cdir = enroll_ca, odir = out_dir;
      if (cdir.empty() || odir.empty()) {
        auto c = load_config(config_path);
        if (cdir.empty())
          cdir = c.ca_dir;
        if (odir.empty())
          odir = c.ids_dir;
      }
      auto role = parse_role(role_name);
      auto root = load_key((cdir / "ca.key").string());
      auto authority = CertificateAuthority::init(root.seed());
      auto now = make_clock()();
      auto e = authority.enroll(role, now, parse_seed(seed_hex));
      auto cert_bytes = e.participant.cert.serialize();
      if (fs::exists(odir / (id_name + ".key")))
        throw Error(ErrorCode::AlreadyExists, "identity " + id_name + " exists");
      write_file(odir / (id_name + ".key"), e.key.serialize(), true);
      write_file(odir / (id_name + ".cert"), cert_bytes);
      write_file(cdir / "roster" / (id_name + ".cert"), cert_bytes);
      Json j = render::participant(e.participant.cert);
      j["name"] = id_name;
      o.emit(j);
    };
  });

  // ---- node / explorer ----
  auto *node_cmd = app.add_subcommand("node", "node lifecycle");
  node_cmd->require_subcommand(1);
  auto *node_start = node_cmd->add_subcommand(
      "start", "write genesis if needed, then serve the explorer API");
  bool init_only = false;
  node_start->add_flag("--init-only", init_only,
                       "stop after the genesis block is in place");
  auto serve = [&](LocalNode &node, const Config &c) {
    ExplorerService service(node, {c.session_ttl});
    ExplorerServer server(service);
    err << "serving on " << c.bind << ":" << c.port << std::endl;
    server.listen(c.bind, c.port);
  };
  node_start->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      auto node = open_node(c, make_clock());
      if (!node->initialized()) {
        std::vector<fs::path> files;
        if (fs::exists(c.ca_dir / "roster"))
          for (const auto &entry : fs::directory_iterator(c.ca_dir / "roster"))
            if (entry.path().extension() == ".cert")
              files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        GenesisProposal g;
        g.ca_root = SigningKey::deserialize(read_file(c.ca_dir / "ca.key"))
                        .public_key();
        g.hash = c.hash;
        g.orderer = node->orderer_address();
        g.policy = c.policy;
        for (const auto &f : files)
          g.roster.push_back(Certificate::deserialize(read_file(f)));
        node->initialize(g);
      }
      o.emit(render::chain_summary(node->ledger()));
      if (!init_only)
        serve(*node, c);
    };
  });

  auto *explorer = app.add_subcommand("explorer", "explorer API");
  explorer->require_subcommand(1);
  auto *explorer_serve = explorer->add_subcommand("serve", "serve HTTP");
  int port_override = 0;
  explorer_serve->add_option("--port", port_override, "listen port");
  explorer_serve->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      if (port_override)
        c.port = port_override;
      auto node = open_node(c, make_clock());
      require_initialized(*node);
      serve(*node, c);
    };
  });

  // ---- scenario ----
  auto *scenario = app.add_subcommand("scenario", "collection simulation");
  scenario->require_subcommand(1);
  auto *scenario_run = scenario->add_subcommand("run", "run a scenario");
  std::string spec_path, key_path;
  std::optional<std::uint64_t> seed, nonce_seed;
  bool commit = false;
  scenario_run->add_option("--spec", spec_path, "scenario file")->required();
  scenario_run->add_option("--seed", seed, "overrides the file seed");
  scenario_run->add_flag("--commit", commit,
                         "store evidence in the ISP evDB and on chain");
  scenario_run->add_option("--key", key_path, "ISP key file (with --commit)");
  scenario_run->add_option("--nonce-seed", nonce_seed,
                           "derive evidence nonces from a seed");
  scenario_run->callback([&] {
    action = [&] {
      auto spec = sim::load_scenario_spec(spec_path);
      auto result = sim::run_scenario(spec, seed.value_or(spec.seed));
      auto summary = scenario_summary(spec, result);
      if (commit) {
        auto c = load_config(config_path);
        auto clock = make_clock();
        auto key = load_key(key_path);
        auto node = open_node(c, clock);
        require_initialized(*node);
        auto isp = enrolled(*node, key);
        auto &store = node->evidence_store(isp.address);
        if (nonce_seed)
          store.set_nonce_source(seeded_nonces(*nonce_seed));
        auto report = sim::ingest(spec, result, store, isp, key);
        auto state = node->ledger().snapshot();
        auto anchor = state->params->anchor();
        std::vector<Transaction> txs;
        for (std::size_t i = 0; i < report.stored.size(); ++i) {
          const auto &item = result.evidence[report.source_index[i]];
          auto proposal =
              tx_gen(report.stored[i], item.incident, isp.cert, anchor);
          txs.push_back(chaincode::sign_checked(*state, isp, key, proposal));
        }
        auto results = node->submit_batch(txs, 10);
        Json records = Json::array();
        for (std::size_t i = 0; i < results.size(); ++i) {
          Json r;
          r["id"] = report.stored[i].id.hex();
          r["tx_id"] = results[i].tx_id.hex();
          r["height"] = results[i].height;
          if (results[i].error)
            r["error"] = to_string(*results[i].error);
          records.push_back(std::move(r));
        }
        Json committed;
        committed["stored"] = report.stored.size();
        committed["refused"] = report.refused.size();
        committed["records"] = std::move(records);
        committed["chain_height"] = node->ledger().height();
        summary["committed"] = std::move(committed);
      }
      o.emit(summary);
    };
  });

  // ---- evidence ----
  auto *evidence = app.add_subcommand("evidence", "evidence operations");
  evidence->require_subcommand(1);
  std::string id_hex, file_path, dsc, device_type = "generic", attack = "DDOS",
                               source_device, target, to, note, out_path;
  auto *ev_create = evidence->add_subcommand("create", "store and register");
  ev_create->add_option("--key", key_path, "ISP key file");
  ev_create->add_option("--file", file_path, "payload file")->required();
  ev_create->add_option("--dsc", dsc, "incident summary");
  ev_create->add_option("--type", device_type, "device type");
  ev_create->add_option("--attack", attack, "attack kind");
  ev_create->add_option("--source", source_device, "source device");
  ev_create->add_option("--target", target, "attack target");
  ev_create->add_option("--nonce-seed", nonce_seed,
                        "derive the nonce from a seed");
  ev_create->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      auto key = load_key(key_path);
      auto node = open_node(c, make_clock());
      require_initialized(*node);
      auto isp = enrolled(*node, key);
      auto &store = node->evidence_store(isp.address);
      if (nonce_seed)
        store.set_nonce_source(seeded_nonces(*nonce_seed));
      IncidentDescriptor incident{parse_attack_kind(attack), source_device,
                                  target, node->now(), dsc, device_type};
      auto state = node->ledger().snapshot();
      if (isp.role != Role::Isp)
        throw Error(ErrorCode::PermissionDenied, "only an ISP may create");
      auto event = store.ingest_file(isp, key, file_path, incident);
      auto proposal = tx_gen(event, incident, isp.cert,
                             state->params->anchor());
      auto tx = chaincode::sign_checked(*state, isp, key, proposal);
      auto r = node->submit(tx);
      Json j;
      j["id"] = event.id.hex();
      j["tx_id"] = r.tx_id.hex();
      j["height"] = r.height;
      j["duplicate"] = r.duplicate;
      o.emit(j);
    };
  });

  auto *ev_get = evidence->add_subcommand("get", "retrieve the payload");
  ev_get->add_option("--key", key_path, "owner key file");
  ev_get->add_option("--id", id_hex, "evidence id")->required();
  ev_get->add_option("--out", out_path, "write payload to this file");
  ev_get->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      auto key = load_key(key_path);
      auto node = open_node(c, make_clock());
      require_initialized(*node);
      auto caller = enrolled(*node, key);
      auto id = parse_id(id_hex);
      auto handle = chaincode::get_evidence(*node->ledger().snapshot(), caller,
                                            key, id, node->now());
      auto r = node->submit(handle.access_tx);
      auto ev = node->evidence_store(handle.evdb_locator).fetch(id);
      auto alg = node->ledger().snapshot()->hash_algorithm();
      bool ok = evidence_id(ev.payload, ev.creator_signature, ev.nonce, alg) == id;
      if (!out_path.empty())
        write_file(out_path, ev.payload);
      Json j;
      j["id"] = id.hex();
      j["nonce"] = ev.nonce.hex();
      j["payload_bytes"] = ev.payload.size();
      j["payload_digest"] = hash(ev.payload).hex();
      j["id_verified"] = ok;
      j["access_tx"] = r.tx_id.hex();
      if (!out_path.empty())
        j["written_to"] = out_path;
      o.emit(j);
      if (!ok)
        throw Error(ErrorCode::IntegrityError, "recomputed id differs");
    };
  });

  auto *ev_transfer = evidence->add_subcommand("transfer", "hand over custody");
  ev_transfer->add_option("--key", key_path, "current owner key file");
  ev_transfer->add_option("--id", id_hex, "evidence id")->required();
  ev_transfer->add_option("--to", to, "recipient address or identity name")
      ->required();
  ev_transfer->add_option("--note", note, "description amendment");
  ev_transfer->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      auto key = load_key(key_path);
      auto node = open_node(c, make_clock());
      require_initialized(*node);
      auto caller = enrolled(*node, key);
      auto tx = chaincode::transfer_ownership(
          *node->ledger().snapshot(), caller, key, parse_id(id_hex),
          resolve_address(c, to), node->now(), note);
      auto r = node->submit(tx);
      auto state = node->ledger().snapshot();
      Json j;
      j["tx_id"] = r.tx_id.hex();
      j["height"] = r.height;
      j["record"] = render::record(*state->find_evidence(parse_id(id_hex)),
                                   state->is_erased(parse_id(id_hex)));
      o.emit(j);
    };
  });

  auto *ev_erase = evidence->add_subcommand("erase", "destroy the payload");
  ev_erase->add_option("--key", key_path, "creator ISP key file");
  ev_erase->add_option("--id", id_hex, "evidence id")->required();
  ev_erase->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      auto key = load_key(key_path);
      auto node = open_node(c, make_clock());
      require_initialized(*node);
      auto caller = enrolled(*node, key);
      auto id = parse_id(id_hex);
      auto tx = chaincode::erase_evidence(*node->ledger().snapshot(), caller,
                                          key, id, node->now());
      auto r = node->submit(tx);
      auto &store = node->evidence_store(caller.address);
      bool destroyed = false;
      if (store.contains(id) && !store.is_erased(id)) {
        store.erase(id, caller);
        destroyed = true;
      }
      Json j;
      j["tx_id"] = r.tx_id.hex();
      j["height"] = r.height;
      j["payload_destroyed"] = destroyed;
      o.emit(j);
    };
  });

  auto *ev_show = evidence->add_subcommand("show", "on-chain metadata");
  ev_show->add_option("--key", key_path, "caller key file");
  ev_show->add_option("--id", id_hex, "evidence id")->required();
  ev_show->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      auto key = load_key(key_path);
      auto node = open_node(c, make_clock());
      require_initialized(*node);
      auto caller = enrolled(*node, key);
      auto state = node->ledger().snapshot();
      auto id = parse_id(id_hex);
      const auto &rec = chaincode::query_metadata(*state, caller.address, id);
      o.emit(render::record(rec, state->is_erased(id)));
    };
  });

  auto *ev_list = evidence->add_subcommand("list", "records readable by caller");
  ev_list->add_option("--key", key_path, "caller key file");
  ev_list->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      auto key = load_key(key_path);
      auto node = open_node(c, make_clock());
      require_initialized(*node);
      auto caller = enrolled(*node, key);
      auto state = node->ledger().snapshot();
      Json arr = Json::array();
      for (const auto &[id, rec] : state->evidence) {
        try {
          chaincode::query_metadata(*state, caller.address, id);
        } catch (const Error &) {
          continue;
        }
        arr.push_back(render::record(rec, state->is_erased(id)));
      }
      Json j;
      j["evidence"] = std::move(arr);
      o.emit(j);
    };
  });

  // ---- device ----
  auto *device = app.add_subcommand("device", "device-state records");
  device->require_subcommand(1);
  std::string device_id, fw_hex, fw_file, cfg_hex, cfg_file;
  auto add_device_opts = [&](CLI::App *cmd) {
    cmd->add_option("--key", key_path, "participant key file");
    cmd->add_option("--device-id", device_id, "device id")->required();
    cmd->add_option("--firmware-hash", fw_hex, "firmware digest (hex)");
    cmd->add_option("--firmware-file", fw_file, "firmware image to hash");
    cmd->add_option("--config-hash", cfg_hex, "configuration digest (hex)");
    cmd->add_option("--config-file", cfg_file, "configuration file to hash");
  };
  auto *dev_register = device->add_subcommand("register", "record state");
  add_device_opts(dev_register);
  dev_register->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      auto key = load_key(key_path);
      auto node = open_node(c, make_clock());
      require_initialized(*node);
      auto caller = enrolled(*node, key);
      auto tx = chaincode::register_device_state(
          *node->ledger().snapshot(), caller, key, device_id,
          parse_digest_or_file(fw_hex, fw_file, "firmware"),
          parse_digest_or_file(cfg_hex, cfg_file, "config"), node->now());
      auto r = node->submit(tx);
      Json j;
      j["tx_id"] = r.tx_id.hex();
      j["height"] = r.height;
      o.emit(j);
    };
  });
  auto *dev_verify = device->add_subcommand("verify", "check against record");
  add_device_opts(dev_verify);
  dev_verify->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      auto key = load_key(key_path);
      auto node = open_node(c, make_clock());
      require_initialized(*node);
      auto caller = enrolled(*node, key);
      auto fw = parse_digest_or_file(fw_hex, fw_file, "firmware");
      auto cfg = parse_digest_or_file(cfg_hex, cfg_file, "config");
      auto state = node->ledger().snapshot();
      auto status = chaincode::verify_device_state(*state, device_id, fw, cfg);
      auto tx = chaincode::record_device_verification(
          *state, caller, key, device_id, fw, cfg, node->now());
      auto r = node->submit(tx);
      Json j;
      j["device_id"] = device_id;
      j["status"] = chaincode::to_string(status);
      j["tx_id"] = r.tx_id.hex();
      o.emit(j);
    };
  });

  // ---- chain / trail / blocks ----
  auto *chain = app.add_subcommand("chain", "chain queries");
  chain->require_subcommand(1);
  auto *chain_verify = chain->add_subcommand("verify", "full verification");
  chain_verify->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      FileBlockStore store(c.data_dir / "ledger");
      auto report = verify_chain(store);
      o.emit(render::report(report));
      if (!report.valid)
        throw Error(ErrorCode::IntegrityError,
                    "chain invalid at height " +
                        std::to_string(report.first_invalid_height.value_or(0)));
    };
  });
  auto *chain_show = chain->add_subcommand("show", "chain summary");
  chain_show->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      auto node = open_node(c, make_clock());
      o.emit(render::chain_summary(node->ledger()));
    };
  });

  auto *block_cmd = app.add_subcommand("block", "block queries");
  block_cmd->require_subcommand(1);
  auto *block_show = block_cmd->add_subcommand("show", "one block");
  std::string height_arg = "latest";
  block_show->add_option("--height", height_arg, "height or 'latest'");
  block_show->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      auto node = open_node(c, make_clock());
      std::optional<Block> b;
      if (height_arg == "latest") {
        b = node->ledger().latest();
      } else {
        std::uint64_t h = 0;
        try {
          h = std::stoull(height_arg);
        } catch (const std::exception &) {
          throw Error(ErrorCode::InvalidArgument, "bad height " + height_arg);
        }
        b = node->ledger().block(h);
      }
      if (!b)
        throw Error(ErrorCode::NotFound, "no block " + height_arg);
      o.emit(render::block(*b));
    };
  });

  auto *tx_cmd = app.add_subcommand("tx", "transaction queries");
  tx_cmd->require_subcommand(1);
  auto *tx_show = tx_cmd->add_subcommand("show", "one transaction");
  tx_show->add_option("--id", id_hex, "tx id")->required();
  tx_show->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      auto node = open_node(c, make_clock());
      auto id = parse_id(id_hex);
      auto loc = node->ledger().find_tx(id);
      if (!loc)
        throw Error(ErrorCode::NotFound, "no transaction " + id_hex);
      o.emit(render::transaction(*node->ledger().transaction(id), loc));
    };
  });

  auto *trail = app.add_subcommand("trail", "custody trails");
  trail->require_subcommand(1);
  auto *trail_show = trail->add_subcommand("show", "custody intervals");
  trail_show->add_option("--id", id_hex, "evidence id")->required();
  trail_show->add_option("--key", key_path, "caller key file");
  trail_show->callback([&] {
    action = [&] {
      auto c = load_config(config_path);
      auto node = open_node(c, make_clock());
      require_initialized(*node);
      auto state = node->ledger().snapshot();
      auto id = parse_id(id_hex);
      if (!key_path.empty()) {
        auto key = load_key(key_path);
        chaincode::query_metadata(*state, enrolled(*node, key).address, id);
      }
      o.emit(render::trail(id, custody_trail(*state, id)));
    };
  });

  // ---- network ----
  auto *network = app.add_subcommand("network", "network simulation");
  network->require_subcommand(1);
  auto *network_run = network->add_subcommand("run", "run a network scenario");
  std::string net_path;
  network_run->add_option("--scenario", net_path, "scenario file")->required();
  network_run->add_option("--seed", seed, "overrides the file seed");
  network_run->callback([&] {
    action = [&] {
      auto sc = net::load_network_scenario(net_path);
      if (seed)
        sc.options.seed = *seed;
      auto r = net::run_network_scenario(sc);
      Json j;
      j["seed"] = r.seed;
      j["quiescent"] = r.quiescent;
      j["chains_identical"] = r.chains_identical;
      j["common_prefix"] = r.common_prefix;
      j["persistence"] = r.persistence;
      Json heights;
      for (const auto &[id, h] : r.heights)
        heights[id] = h;
      j["heights"] = std::move(heights);
      j["committed_txs"] = r.committed_txs;
      j["rejected_txs"] = r.rejected_txs;
      Json alerts = Json::array();
      for (const auto &a : r.alerts) {
        Json e;
        e["at_ms"] = a.at_ms;
        e["node"] = a.node;
        e["kind"] = net::to_string(a.kind);
        e["height"] = a.height;
        e["detail"] = a.detail;
        alerts.push_back(std::move(e));
      }
      j["alerts"] = std::move(alerts);
      j["sim_ms"] = r.sim_ms;
      Json stats;
      stats["sent"] = r.stats.sent;
      stats["delivered"] = r.stats.delivered;
      stats["dropped"] = r.stats.dropped;
      stats["partitioned"] = r.stats.partitioned;
      j["messages"] = std::move(stats);
      o.emit(j);
      if (!r.common_prefix || !r.persistence)
        throw Error(ErrorCode::IntegrityError,
                    "network properties violated");
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError &e) {
    err << render::error(ErrorCode::InvalidArgument, e.what()).dump() << "\n";
    return 2;
  }
  o.structured = output_mode == "structured";
  try {
    if (!action)
      throw Error(ErrorCode::InvalidArgument, "no command given");
    action();
  } catch (const Error &e) {
    err << render::error(e.code(), e.what()).dump() << "\n";
    return 1;
  } catch (const std::exception &e) {
    err << render::error(ErrorCode::IoError, e.what()).dump() << "\n";
    return 1;
  }
  return 0;
}

} // namespace ctb::cli
