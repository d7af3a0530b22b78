// Command-line front end: corpus generation, feature extraction, training,
// serving, node emulation, simulation experiments, and report summaries.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fogsound/audio.hpp"
#include "fogsound/classifier.hpp"
#include "fogsound/errors.hpp"
#include "fogsound/features.hpp"
#include "fogsound/handler.hpp"
#include "fogsound/loopback.hpp"
#include "fogsound/placement.hpp"
#include "fogsound/sim.hpp"
#include "fogsound/wire.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fogsound;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::string env_or(const char* var, const std::string& fallback) {
  const char* v = std::getenv(var);
  return v != nullptr && *v != '\0' ? v : fallback;
}

int cmd_gen_corpus(const std::string& out_dir, int clips_per_class,
                   double duration_s, std::uint64_t seed) {
  fs::create_directories(out_dir);
  std::ofstream index(fs::path(out_dir) / "index.csv", std::ios::trunc);
  if (!index) fail(errc::io_failure, "cannot write index.csv");
  index << "file_name,fold,class_id\n";
  int count = 0;
  for (int c = 0; c < audio::kClassCount; ++c) {
    for (int i = 0; i < clips_per_class; ++i) {
      const int fold = i % 10 + 1;
      const fs::path fold_dir = fs::path(out_dir) / ("fold" + std::to_string(fold));
      fs::create_directories(fold_dir);
      const std::string name =
          "class" + std::to_string(c) + "_" + std::to_string(i) + ".wav";
      const auto lc = audio::synth_clip(
          c, duration_s, seed + static_cast<std::uint64_t>(c) * 1000 + i);
      audio::write_wav(lc.clip, fold_dir / name);
      index << name << ',' << fold << ',' << c << '\n';
      ++count;
    }
  }
  std::cout << "wrote " << count << " files + index.csv under " << out_dir << "\n";
  return kExitOk;
}

classifier::Dataset features_of(const std::vector<audio::LabeledClip>& clips) {
  classifier::Dataset ds;
  for (const auto& lc : clips) {
    auto segs = audio::segment(lc.clip);
    // clips shorter than one segment are used whole
    if (segs.empty()) segs.push_back(lc.clip);
    for (const auto& seg : segs)
      ds.items.push_back({features::extract_features(seg), lc.class_id});
  }
  return ds;
}

int cmd_train(const std::string& corpus_dir, const std::string& model_out,
              int epochs, double lr, std::uint64_t seed) {
  const auto loaded = audio::load_dataset_dir(corpus_dir);
  if (loaded.skipped > 0)
    std::cerr << "skipped " << loaded.skipped << " unreadable files\n";
  const auto ds = features_of(loaded.clips);
  auto [train_set, test_set] = classifier::split_dataset(ds, 0.7, seed);
  auto model = classifier::init_model(seed);
  classifier::fit_standardization(model, train_set);
  classifier::TrainSpec spec;
  spec.epochs = epochs;
  spec.learning_rate = lr;
  spec.seed = seed;
  model = classifier::train(std::move(model), train_set, spec);
  const double acc = classifier::evaluate(model, test_set);
  classifier::save_model(model, model_out);
  std::printf("held-out accuracy: %.4f (%zu train / %zu test)\n", acc,
              train_set.items.size(), test_set.items.size());
  return kExitOk;
}

int cmd_extract(const std::string& wav_path, const std::string& out_path,
                const std::string& format) {
  const auto clip = audio::load_wav(wav_path);
  const auto fv = features::extract_features(clip);
  if (format == "text") {
    features::write_features_text(fv, out_path);
  } else {
    const auto bytes = features::serialize_features(fv);
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(errc::io_failure, "write failed: " + out_path);
  }
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

int cmd_classify(const std::string& model_path, const std::string& wav_path) {
  const auto model = classifier::load_model(model_path);
  const auto clip = audio::load_wav(wav_path);
  std::cout << classifier::classify(model, features::extract_features(clip))
            << "\n";
  return kExitOk;
}

wire::NodeRegistry load_registry(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::not_found, "cannot open registry " + path);
  wire::NodeRegistry reg;
  std::uint32_t id;
  std::string addr;
  while (in >> id >> addr) reg.add(id, addr);
  if (reg.empty()) fail(errc::invalid_config, "empty registry file " + path);
  return reg;
}

int cmd_serve(const std::string& model_path, std::uint16_t port,
              const std::string& registry_path, const std::string& results_csv,
              std::size_t count) {
  auto model = classifier::load_model(model_path);
  auto registry = load_registry(registry_path);
  handler::ClassifierHandler h(std::move(model), results_csv);
  loopback::LoopbackServer server(
      registry, [&h](const wire::WireMessage& m) { return h.handle(m); }, port);
  std::cout << "serving on 127.0.0.1:" << server.port() << "\n";
  server.serve(count);
  std::cout << "handled " << server.received().size() << " messages ("
            << server.total_bytes() << " bytes)\n";
  return kExitOk;
}

int cmd_node(const std::string& server_addr, std::uint32_t node_id,
             const std::string& config_name, const std::string& model_path,
             int clips, std::uint64_t seed) {
  const auto pc = placement::preset(config_name);
  const auto port_sep = server_addr.find(':');
  const std::string host =
      port_sep == std::string::npos ? server_addr : server_addr.substr(0, port_sep);
  const std::uint16_t port =
      port_sep == std::string::npos
          ? loopback::kDefaultPort
          : static_cast<std::uint16_t>(std::stoi(server_addr.substr(port_sep + 1)));

  std::optional<classifier::MlpModel> model;
  if (pc.tier_of(placement::Stage::Classify) == placement::Tier::Device)
    model = classifier::load_model(model_path);

  for (int i = 0; i < clips; ++i) {
    const int cls = i % audio::kClassCount;
    const auto lc = audio::synth_clip(cls, 4.0, seed + static_cast<std::uint64_t>(i));
    wire::WireMessage msg;
    msg.node_id = node_id;
    if (pc.tier_of(placement::Stage::Classify) == placement::Tier::Device) {
      const int predicted =
          classifier::classify(*model, features::extract_features(lc.clip));
      msg.kind = wire::MsgKind::Result;
      msg.payload = {static_cast<std::uint8_t>(predicted), 0, 0, 0};
    } else if (pc.tier_of(placement::Stage::Extract) == placement::Tier::Device) {
      msg.kind = wire::MsgKind::Features;
      msg.payload =
          features::serialize_features(features::extract_features(lc.clip));
    } else {
      msg.kind = wire::MsgKind::RawAudio;
      msg.payload = audio::encode_wav(lc.clip);
    }
    const auto reply = loopback::send_message(host, port, msg);
    std::printf("clip %d: status=%s class=%u\n", i,
                reply.status == wire::ReplyStatus::Ok ? "OK" : "ERR",
                reply.class_id);
  }
  return kExitOk;
}

void reject_unknown_keys(const json& spec, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : spec.items())
    if (!allowed.contains(key))
      fail(errc::invalid_config, "unknown spec key: " + key);
}

int cmd_simulate(const std::string& spec_path, const std::string& out_csv) {
  std::ifstream in(spec_path);
  if (!in) fail(errc::not_found, "cannot open spec " + spec_path);
  json spec;
  try {
    in >> spec;
  } catch (const json::exception& e) {
    fail(errc::invalid_config, std::string("bad spec JSON: ") + e.what());
  }
  const std::string experiment = spec.value("experiment", "");

  std::ofstream out(out_csv, std::ios::trunc);
  if (!out) fail(errc::io_failure, "cannot write " + out_csv);
  out << sim::kCsvHeader << "\n";

  if (experiment == "power") {
    reject_unknown_keys(spec, {"experiment", "iterations"});
    const int iterations = spec.value("iterations", 20);
    for (auto& [name, report] : sim::experiment_power(iterations))
      for (const auto& row : report.rows) out << sim::to_csv_row(row) << "\n";
  } else if (experiment == "recorder_delta") {
    reject_unknown_keys(spec, {"experiment", "iterations"});
    const double delta = sim::experiment_recorder_delta(spec.value("iterations", 20));
    out << "recorder_delta,recorder,1,0,0.000000," << delta << ",0.000000,0.000000\n";
    std::printf("recorder send/no-send delta: %.4f mW\n", delta);
  } else if (experiment == "latency") {
    reject_unknown_keys(spec, {"experiment", "iterations", "node_counts"});
    std::vector<int> counts = {4, 8, 12};
    if (spec.contains("node_counts")) counts = spec["node_counts"].get<std::vector<int>>();
    for (auto& cell : sim::experiment_latency(counts, spec.value("iterations", 10)))
      for (const auto& row : cell.report.rows) out << sim::to_csv_row(row) << "\n";
  } else if (experiment == "run") {
    reject_unknown_keys(spec, {"experiment", "n_nodes", "placement", "rounds",
                               "seed", "bandwidth_Bps", "base_delay_ms",
                               "fog_hop_ms", "round_interval_s"});
    sim::SimConfig cfg;
    cfg.n_nodes = spec.value("n_nodes", 1);
    cfg.placement = spec.value("placement", "config1");
    cfg.rounds = spec.value("rounds", 1);
    cfg.seed = spec.value("seed", 0ull);
    cfg.bandwidth_Bps = spec.value("bandwidth_Bps", cfg.bandwidth_Bps);
    cfg.base_delay_ms = spec.value("base_delay_ms", cfg.base_delay_ms);
    cfg.fog_hop_ms = spec.value("fog_hop_ms", cfg.fog_hop_ms);
    cfg.round_interval_s = spec.value("round_interval_s", cfg.round_interval_s);
    for (const auto& row : sim::run(cfg).rows) out << sim::to_csv_row(row) << "\n";
  } else {
    fail(errc::invalid_config, "unknown experiment kind: " + experiment);
  }
  std::cout << "wrote " << out_csv << "\n";
  return kExitOk;
}

int cmd_report(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) fail(errc::not_found, "cannot open " + csv_path);
  std::string line;
  std::getline(in, line);  // header
  struct Agg {
    double latency = 0, power = 0;
    int n = 0;
  };
  std::map<std::string, Agg> agg;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string experiment, config, n_nodes, iteration, lat, pow;
    std::getline(ss, experiment, ',');
    std::getline(ss, config, ',');
    std::getline(ss, n_nodes, ',');
    std::getline(ss, iteration, ',');
    std::getline(ss, lat, ',');
    std::getline(ss, pow, ',');
    auto& a = agg[experiment + "," + config + "," + n_nodes];
    a.latency += std::stod(lat);
    a.power += std::stod(pow);
    ++a.n;
  }
  std::printf("%-12s %-10s %-8s %-16s %-14s\n", "experiment", "config",
              "n_nodes", "mean_latency_ms", "mean_power_mw");
  for (const auto& [key, a] : agg) {
    std::stringstream ss(key);
    std::string experiment, config, n_nodes;
    std::getline(ss, experiment, ',');
    std::getline(ss, config, ',');
    std::getline(ss, n_nodes, ',');
    std::printf("%-12s %-10s %-8s %-16.3f %-14.3f\n", experiment.c_str(),
                config.c_str(), n_nodes.c_str(), a.latency / a.n, a.power / a.n);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IoT-fog urban sound sensing framework"};
  app.require_subcommand(1);

  const std::string out_dir_default = env_or("FOGSOUND_OUT_DIR", ".");
  const std::uint16_t port_default = static_cast<std::uint16_t>(
      std::stoi(env_or("FOGSOUND_PORT", std::to_string(loopback::kDefaultPort))));

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic labeled corpus");
  std::string gen_out = out_dir_default + "/corpus";
  int gen_per_class = 50;
  double gen_duration = 4.0;
  std::uint64_t gen_seed = 42;
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--clips-per-class", gen_per_class)->check(CLI::PositiveNumber);
  gen->add_option("--duration", gen_duration)->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed);

  // extract
  auto* ext = app.add_subcommand("extract", "Extract a feature vector from a WAV");
  std::string ext_in, ext_out, ext_format = "bin";
  ext->add_option("--in", ext_in)->required();
  ext->add_option("--out", ext_out)->required();
  ext->add_option("--format", ext_format)->check(CLI::IsMember({"bin", "text"}));

  // train
  auto* tr = app.add_subcommand("train", "Train the classifier on a corpus");
  std::string tr_corpus, tr_out = out_dir_default + "/model.fmlp";
  int tr_epochs = 500;
  double tr_lr = classifier::kDefaultLearningRate;
  std::uint64_t tr_seed = 7;
  tr->add_option("--corpus", tr_corpus)->required();
  tr->add_option("--model-out", tr_out);
  tr->add_option("--epochs", tr_epochs)->check(CLI::NonNegativeNumber);
  tr->add_option("--lr", tr_lr)->check(CLI::PositiveNumber);
  tr->add_option("--seed", tr_seed);

  // classify
  auto* cl = app.add_subcommand("classify", "Classify one WAV file");
  std::string cl_model, cl_wav;
  cl->add_option("--model", cl_model)->required();
  cl->add_option("--wav", cl_wav)->required();

  // serve
  auto* sv = app.add_subcommand("serve", "Run the classification server");
  std::string sv_model, sv_registry, sv_results = out_dir_default + "/results.csv";
  std::uint16_t sv_port = port_default;
  std::size_t sv_count = 0;
  sv->add_option("--model", sv_model)->required();
  sv->add_option("--registry", sv_registry)->required();
  sv->add_option("--port", sv_port);
  sv->add_option("--results", sv_results);
  sv->add_option("--count", sv_count, "Messages to serve before exiting")
      ->required();

  // node
  auto* nd = app.add_subcommand("node", "Emulate one sensing node");
  std::string nd_server = "127.0.0.1", nd_config = "proposed", nd_model;
  std::uint32_t nd_id = 1;
  int nd_clips = 1;
  std::uint64_t nd_seed = 42;
  nd->add_option("--server", nd_server, "host[:port]");
  nd->add_option("--node-id", nd_id)->required();
  nd->add_option("--config", nd_config)
      ->check(CLI::IsMember({"config1", "config2", "proposed"}));
  nd->add_option("--model", nd_model, "Model file (required for config1)");
  nd->add_option("--clips", nd_clips)->check(CLI::PositiveNumber);
  nd->add_option("--seed", nd_seed);

  // simulate
  auto* si = app.add_subcommand("simulate", "Run a simulation experiment spec");
  std::string si_spec, si_out = out_dir_default + "/metrics.csv";
  si->add_option("--spec", si_spec)->required();
  si->add_option("--out", si_out);

  // report
  auto* rp = app.add_subcommand("report", "Summarize a metrics CSV");
  std::string rp_in;
  rp->add_option("--in", rp_in)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed())
      return cmd_gen_corpus(gen_out, gen_per_class, gen_duration, gen_seed);
    if (ext->parsed()) return cmd_extract(ext_in, ext_out, ext_format);
    if (tr->parsed()) return cmd_train(tr_corpus, tr_out, tr_epochs, tr_lr, tr_seed);
    if (cl->parsed()) return cmd_classify(cl_model, cl_wav);
    if (sv->parsed())
      return cmd_serve(sv_model, sv_port, sv_registry, sv_results, sv_count);
    if (nd->parsed())
      return cmd_node(nd_server, nd_id, nd_config, nd_model, nd_clips, nd_seed);
    if (si->parsed()) return cmd_simulate(si_spec, si_out);
    if (rp->parsed()) return cmd_report(rp_in);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
