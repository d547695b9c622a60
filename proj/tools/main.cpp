// drivemine command-line interface: each subcommand is a thin adapter over
// the library. Progress goes to stdout, data to files, machine-readable
// errors to stderr. Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <thread>

#include "drivemine/bcp.hpp"
#include "drivemine/config.hpp"
#include "drivemine/gaze.hpp"
#include "drivemine/ingest.hpp"
#include "drivemine/pipeline.hpp"
#include "drivemine/quantize.hpp"
#include "drivemine/synth.hpp"
#include "drivemine/topics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace drivemine;

namespace {

int exit_code_for(ErrorCategory cat) {
  switch (cat) {
    case ErrorCategory::usage: return 1;
    case ErrorCategory::data: return 2;
    case ErrorCategory::numeric: return 3;
  }
  return 3;
}

void emit_error(const std::string& kind, const std::string& category,
                const std::string& message) {
  json j{{"error", kind}, {"category", category}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

std::string category_name(ErrorCategory cat) {
  switch (cat) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::data: return "data";
    case ErrorCategory::numeric: return "numeric";
  }
  return "numeric";
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Load a telemetry-style CSV as a kinematic matrix: IMU columns when
// present, otherwise speed plus its gradient.
KinematicMatrix load_kinematics(const fs::path& file, double rate_hz) {
  std::ifstream probe(file);
  if (!probe) throw FileNotFound(file.string());
  std::string header;
  std::getline(probe, header);
  probe.close();

  const bool has_imu = header.find("ax") != std::string::npos &&
                       header.find("wz") != std::string::npos;
  Session s;
  s.participant_id = file.stem().string();
  if (has_imu) {
    s.channels["ax"] = load_csv(file, {"t", "ax", "ax", "m/s^2"});
    s.channels["ay"] = load_csv(file, {"t", "ay", "ay", "m/s^2"});
    s.channels["wz"] = load_csv(file, {"t", "wz", "wz", "rad/s"});
    double rate = rate_hz;
    if (rate <= 0) {
      const auto& ch = s.channels["ax"];
      rate = (ch.size() > 1)
                 ? 1.0 / ((ch.times.back() - ch.times.front()) /
                          static_cast<double>(ch.size() - 1))
                 : 1.0;
    }
    return assemble_matrix(s, {"ax", "ay", "wz"}, rate);
  }
  Channel speed = load_csv(file, {"t", "speed", "speed", "km/h"});
  const double rate = rate_hz > 0 ? rate_hz : 1.0;
  const Channel sp = resample(speed, rate, ResampleMethod::linear);
  const Channel acc = accel_from_speed(sp);
  KinematicMatrix m;
  m.times = sp.times;
  m.columns = {"speed", "accel"};
  m.values.resize(static_cast<Eigen::Index>(sp.size()), 2);
  for (std::size_t i = 0; i < sp.size(); ++i) {
    m.values(static_cast<Eigen::Index>(i), 0) = sp.values[i];
    m.values(static_cast<Eigen::Index>(i), 1) = acc.values[i];
  }
  return m;
}

bcp::SegmentSet load_segments(const fs::path& file,
                              const std::vector<double>& fallback_times) {
  const auto j = json::parse(slurp(file));
  bcp::SegmentSet segs;
  const auto& arr = j.is_array() ? j : j.at("segments");
  std::size_t idx = 0;
  for (const auto& item : arr) {
    bcp::Segment s;
    s.start_t = item.at("start_t").get<double>();
    s.end_t = item.at("end_t").get<double>();
    s.start_idx = item.value("start_idx", idx);
    s.end_idx = item.value("end_idx", idx + 1);
    s.boundary_prob = item.value("change_prob_at_boundary", 1.0);
    segs.segments.push_back(s);
    ++idx;
  }
  (void)fallback_times;
  return segs;
}

void write_documents_json(const fs::path& path, std::size_t vocab_size,
                          const std::vector<quantize::WordDocument>& docs) {
  json j;
  j["vocab_size"] = vocab_size;
  j["documents"] = json::array();
  for (const auto& d : docs)
    j["documents"].push_back({{"segment_id", d.segment_id}, {"words", d.words}});
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

std::pair<std::size_t, std::vector<quantize::WordDocument>> load_documents_json(
    const fs::path& path) {
  const auto j = json::parse(slurp(path));
  std::vector<quantize::WordDocument> docs;
  for (const auto& item : j.at("documents")) {
    quantize::WordDocument d;
    d.segment_id = item.at("segment_id").get<std::size_t>();
    d.words = item.at("words").get<std::vector<std::size_t>>();
    docs.push_back(std::move(d));
  }
  return {j.at("vocab_size").get<std::size_t>(), std::move(docs)};
}

int cmd_segment(const fs::path& telemetry, const bcp::BcpParams& params,
                double threshold, double min_len_s, double rate_hz,
                const fs::path& out_dir) {
  const auto kin = load_kinematics(telemetry, rate_hz);
  std::cout << "segmenting " << kin.rows() << " samples x " << kin.cols()
            << " channels\n";
  const auto result = bcp::run(kin, params);
  const double rate =
      kin.times.size() > 1
          ? 1.0 / ((kin.times.back() - kin.times.front()) /
                   static_cast<double>(kin.times.size() - 1))
          : 1.0;
  const auto min_len = static_cast<std::size_t>(
      std::max(1.0, std::round(min_len_s * rate)));
  const auto segs = bcp::extract_segments(result, kin.times, threshold, min_len);

  fs::create_directories(out_dir);
  {
    json j = json::array();
    for (const auto& s : segs.segments)
      j.push_back({{"start_t", s.start_t},
                   {"end_t", s.end_t},
                   {"start_idx", s.start_idx},
                   {"end_idx", s.end_idx},
                   {"change_prob_at_boundary", s.boundary_prob}});
    std::ofstream out(out_dir / "segments.json");
    out << j.dump(2) << "\n";
  }
  {
    std::ofstream out(out_dir / "changeprob.csv");
    out << "index,t,prob\n";
    for (std::size_t i = 0; i < result.change_prob.size(); ++i)
      out << i << "," << csv_number(kin.times[i]) << ","
          << csv_number(result.change_prob[i]) << "\n";
  }
  std::cout << "wrote " << segs.segments.size() << " segments\n";
  return 0;
}

int cmd_quantize(const fs::path& telemetry, const fs::path& segments_file,
                 std::size_t k, const quantize::GmmConfig& gc, double rate_hz,
                 const fs::path& out_dir) {
  const auto kin = load_kinematics(telemetry, rate_hz);
  const auto segs = load_segments(segments_file, kin.times);
  std::cout << "fitting " << k << "-word codebook on " << kin.rows()
            << " samples\n";
  const auto cb = quantize::fit_gmm(kin.values, k, gc);
  const auto words = quantize::encode(cb, kin.values);
  const auto docs = quantize::documents_from_segments(words, kin.times, segs);

  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "codebook.json");
    out << cb.to_json() << "\n";
  }
  write_documents_json(out_dir / "documents.json", k, docs);
  std::cout << "wrote codebook.json and documents.json (" << docs.size()
            << " documents)\n";
  return 0;
}

int cmd_topics(const fs::path& documents_file, const topics::LdaConfig& cfg,
               const fs::path& out_dir) {
  const auto [vocab, docs] = load_documents_json(documents_file);
  std::cout << "fitting " << cfg.K << "-topic model over " << docs.size()
            << " documents\n";
  const auto model = topics::fit_lda(docs, vocab, cfg);
  const auto assignments = topics::assign_patterns(model, docs);

  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "topics.json");
    out << model.to_json() << "\n";
  }
  {
    json j = json::array();
    for (const auto& a : assignments)
      j.push_back({{"segment_id", a.segment_id},
                   {"dominant_topic", a.dominant_topic},
                   {"theta", a.theta_row},
                   {"assigned", a.assigned}});
    std::ofstream out(out_dir / "assignments.json");
    out << j.dump(2) << "\n";
  }
  std::cout << "wrote topics.json and assignments.json\n";
  return 0;
}

int cmd_entropy(const fs::path& gaze_file, const gaze::AoiGrid& grid,
                double window_s, double stride_s, const std::string& pi_mode,
                const fs::path& out_file) {
  Channel gx = load_csv(gaze_file, {"t", "gaze_angle_x", "gaze_x", "rad"});
  Channel gy = load_csv(gaze_file, {"t", "gaze_angle_y", "gaze_y", "rad"});
  std::vector<gaze::GazeSample> samples;
  const std::size_t n = std::min(gx.size(), gy.size());
  for (std::size_t i = 0; i < n; ++i)
    samples.push_back({gx.times[i], gx.values[i], gy.values[i]});
  const auto symbols = gaze::bin_gaze(samples, grid);
  const auto mode = pi_mode == "stationary" ? gaze::PiMode::stationary_vector
                                            : gaze::PiMode::empirical_source;
  const auto series =
      gaze::rolling_entropy(symbols, window_s, stride_s, grid.bins(), mode);

  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  std::ofstream out(out_file);
  out << "t,sge_bits,gte_bits\n";
  for (std::size_t i = 0; i < series.window_centers.size(); ++i) {
    out << csv_number(series.window_centers[i]) << ",";
    if (series.sge[i].has_value()) out << csv_number(*series.sge[i]);
    out << ",";
    if (series.gte[i].has_value()) out << csv_number(*series.gte[i]);
    out << "\n";
  }
  std::cout << "wrote " << series.window_centers.size() << " windows\n";
  return 0;
}

bool is_session_dir(const fs::path& dir) {
  return fs::exists(dir / "telemetry.csv") || fs::exists(dir / "speed.csv") ||
         fs::exists(dir / "hr.csv");
}

int cmd_analyze(const fs::path& session_dir, const RunConfig& config,
                const fs::path& out_dir) {
  config.validate();
  fs::create_directories(out_dir);

  if (is_session_dir(session_dir)) {
    const Session session =
        load_session_dir(session_dir, session_dir.filename().string());
    std::cout << "analyzing session '" << session.participant_id << "'\n";
    const auto report = pipeline::run_pipeline(session, config);
    pipeline::write_report_files(report, out_dir);
    std::cout << "wrote report.json (" << report.segments.segments.size()
              << " segments)\n";
    return 0;
  }

  // multi-session layout: one subdirectory per participant
  std::vector<fs::path> session_dirs;
  for (const auto& entry : fs::directory_iterator(session_dir))
    if (entry.is_directory() && is_session_dir(entry.path()))
      session_dirs.push_back(entry.path());
  std::sort(session_dirs.begin(), session_dirs.end());
  if (session_dirs.empty())
    throw FileNotFound("no session CSVs under " + session_dir.string());

  std::vector<pipeline::SessionReport> reports(session_dirs.size());
  std::vector<std::exception_ptr> failures(session_dirs.size());
  const auto worker = [&](std::size_t idx) {
    try {
      const Session session =
          load_session_dir(session_dirs[idx], session_dirs[idx].filename().string());
      reports[idx] = pipeline::run_pipeline(session, config);
    } catch (...) {
      failures[idx] = std::current_exception();
    }
  };

  const std::size_t jobs =
      std::max<std::size_t>(1, static_cast<std::size_t>(config.jobs));
  std::size_t next = 0;
  while (next < session_dirs.size()) {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs && next < session_dirs.size(); ++j, ++next)
      pool.emplace_back(worker, next);
    for (auto& t : pool) t.join();
  }
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);

  for (const auto& rep : reports) {
    pipeline::write_report_files(rep, out_dir / rep.participant_id);
    std::cout << "analyzed '" << rep.participant_id << "'\n";
  }
  std::ofstream out(out_dir / "report.json");
  out << pipeline::multi_report_to_json(reports) << "\n";
  std::cout << "wrote combined report.json for " << reports.size()
            << " sessions\n";
  return 0;
}

int cmd_synth(const fs::path& spec_file, std::uint64_t seed_override,
              bool has_seed, const fs::path& out_dir) {
  synth::SynthSpec spec;
  if (!spec_file.empty()) spec = synth::SynthSpec::from_json(slurp(spec_file));
  if (has_seed) spec.seed = seed_override;
  const auto coupled = synth::gen_coupled_session(spec);
  synth::write_session_csv(coupled.session, out_dir);
  synth::write_truth_json(coupled.truth, out_dir / "truth.json");
  std::cout << "wrote synthetic session (" << coupled.truth.behavior.size()
            << " segments) to " << out_dir.string() << "\n";
  return 0;
}

int cmd_ktest(const fs::path& documents_file, const std::string& k_range,
              topics::LdaConfig base_cfg, const fs::path& out_file) {
  const auto colon = k_range.find(':');
  if (colon == std::string::npos)
    throw ConfigError("--k-range must look like 2:6");
  const auto k_lo = static_cast<std::size_t>(std::stoul(k_range.substr(0, colon)));
  const auto k_hi = static_cast<std::size_t>(std::stoul(k_range.substr(colon + 1)));
  if (k_lo < 1 || k_hi < k_lo) throw ConfigError("--k-range bounds are invalid");

  const auto [vocab, docs] = load_documents_json(documents_file);
  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  std::ofstream out(out_file);
  out << "k,log_likelihood\n";
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    topics::LdaConfig cfg = base_cfg;
    cfg.K = k;
    const auto model = topics::fit_lda(docs, vocab, cfg);
    const double ll = topics::corpus_log_likelihood(model, docs);
    out << k << "," << csv_number(ll) << "\n";
    std::cout << "k=" << k << " log-likelihood=" << ll << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"behavior and state pattern mining for driving telemetry"};
  app.require_subcommand(0, 1);

  bool show_config = false;
  app.add_flag("--show-config", show_config,
               "print every config key with its default and exit");

  // segment
  auto* segment = app.add_subcommand("segment", "Bayesian change-point segmentation");
  fs::path seg_telemetry, seg_out = ".";
  bcp::BcpParams seg_params;
  double seg_threshold = 0.5, seg_min_len_s = 0.5, seg_rate = 0;
  segment->add_option("--telemetry", seg_telemetry, "telemetry CSV")->required();
  segment->add_option("--p0", seg_params.p0, "prior bound on change probability");
  segment->add_option("--w0", seg_params.w0, "prior bound on variance ratio");
  segment->add_option("--sweeps", seg_params.sweeps, "MCMC sweeps");
  segment->add_option("--burnin", seg_params.burn_in, "burn-in sweeps");
  segment->add_option("--threshold", seg_threshold, "segment probability threshold");
  segment->add_option("--min-len-s", seg_min_len_s, "minimum segment length (s)");
  segment->add_option("--rate-hz", seg_rate, "resample rate (0 = native)");
  segment->add_option("--seed", seg_params.seed, "RNG seed");
  segment->add_option("--out-dir", seg_out, "output directory");

  // quantize
  auto* quant = app.add_subcommand("quantize", "GMM word-ization per segment");
  fs::path q_telemetry, q_segments, q_out = ".";
  std::size_t q_k = 50;
  quantize::GmmConfig q_cfg;
  double q_rate = 0;
  quant->add_option("--telemetry", q_telemetry, "telemetry CSV")->required();
  quant->add_option("--segments", q_segments, "segments.json")->required();
  quant->add_option("--k", q_k, "vocabulary size");
  quant->add_option("--restarts", q_cfg.restarts, "EM restarts");
  quant->add_option("--max-iter", q_cfg.max_iter, "EM iteration cap");
  quant->add_option("--tol", q_cfg.tol, "relative log-likelihood tolerance");
  quant->add_option("--rate-hz", q_rate, "resample rate (0 = native)");
  quant->add_option("--seed", q_cfg.seed, "RNG seed");
  quant->add_option("--out-dir", q_out, "output directory");

  // topics
  auto* top = app.add_subcommand("topics", "LDA over segment documents");
  fs::path t_documents, t_out = ".";
  topics::LdaConfig t_cfg;
  top->add_option("--documents", t_documents, "documents.json")->required();
  top->add_option("--k", t_cfg.K, "topic count");
  top->add_option("--alpha", t_cfg.alpha, "Dirichlet document prior (0 = 50/K)");
  top->add_option("--beta", t_cfg.beta, "Dirichlet topic prior");
  top->add_option("--iters", t_cfg.iters, "Gibbs sweeps");
  top->add_option("--burnin", t_cfg.burn_in, "burn-in sweeps");
  top->add_option("--seed", t_cfg.seed, "RNG seed");
  top->add_option("--out-dir", t_out, "output directory");

  // entropy
  auto* ent = app.add_subcommand("entropy", "gaze entropy over rolling windows");
  fs::path e_gaze, e_out = "entropy.csv";
  std::string e_grid = "4x4", e_pi = "empirical";
  double e_window = 240, e_stride = 1;
  gaze::AoiGrid e_grid_cfg;
  ent->add_option("--gaze", e_gaze, "gaze CSV")->required();
  ent->add_option("--grid", e_grid, "AOI grid, e.g. 4x4");
  ent->add_option("--window-s", e_window, "window size (s)");
  ent->add_option("--stride-s", e_stride, "stride (s)");
  ent->add_option("--x-min", e_grid_cfg.x_min, "grid x lower bound (rad)");
  ent->add_option("--x-max", e_grid_cfg.x_max, "grid x upper bound (rad)");
  ent->add_option("--y-min", e_grid_cfg.y_min, "grid y lower bound (rad)");
  ent->add_option("--y-max", e_grid_cfg.y_max, "grid y upper bound (rad)");
  ent->add_option("--pi-mode", e_pi, "empirical | stationary");
  ent->add_option("--out", e_out, "output CSV path");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "full pipeline over a session");
  fs::path a_dir, a_config, a_out = ".";
  std::vector<std::string> a_sets;
  bool a_has_seed = false, a_has_jobs = false;
  std::uint64_t a_seed = 0;
  int a_jobs = 1;
  analyze->add_option("--session-dir", a_dir, "session directory")->required();
  analyze->add_option("--config", a_config, "key = value config file");
  analyze->add_option("--set", a_sets, "override one config key (key=value)");
  analyze->add_option("--seed", a_seed, "base RNG seed")
      ->each([&](const std::string&) { a_has_seed = true; });
  analyze->add_option("--jobs", a_jobs, "parallel sessions")
      ->each([&](const std::string&) { a_has_jobs = true; });
  analyze->add_option("--out-dir", a_out, "output directory");

  // synth
  auto* syn = app.add_subcommand("synth", "generate a coupled synthetic session");
  fs::path s_spec, s_out = "synth_session";
  std::uint64_t s_seed = 0;
  bool s_has_seed = false;
  syn->add_option("--spec", s_spec, "SynthSpec JSON file");
  syn->add_option("--seed", s_seed, "RNG seed override")
      ->each([&](const std::string&) { s_has_seed = true; });
  syn->add_option("--out", s_out, "output directory")->required();

  // ktest
  auto* ktest = app.add_subcommand("ktest", "fit several topic counts, report log-likelihoods");
  fs::path kt_documents, kt_out = "ktest.csv";
  std::string kt_range = "2:6";
  topics::LdaConfig kt_cfg;
  ktest->add_option("--documents", kt_documents, "documents.json")->required();
  ktest->add_option("--k-range", kt_range, "lo:hi inclusive");
  ktest->add_option("--alpha", kt_cfg.alpha, "Dirichlet document prior (0 = 50/K)");
  ktest->add_option("--beta", kt_cfg.beta, "Dirichlet topic prior");
  ktest->add_option("--iters", kt_cfg.iters, "Gibbs sweeps");
  ktest->add_option("--burnin", kt_cfg.burn_in, "burn-in sweeps");
  ktest->add_option("--seed", kt_cfg.seed, "RNG seed");
  ktest->add_option("--out", kt_out, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (show_config) {
      for (const auto& [key, value] : RunConfig{}.to_map())
        std::cout << key << " = " << value << "\n";
      return 0;
    }
    if (*segment) {
      seg_params.validate();
      if (!(seg_threshold > 0 && seg_threshold < 1))
        throw ConfigError("--threshold must be in (0, 1)");
      return cmd_segment(seg_telemetry, seg_params, seg_threshold,
                         seg_min_len_s, seg_rate, seg_out);
    }
    if (*quant) return cmd_quantize(q_telemetry, q_segments, q_k, q_cfg, q_rate, q_out);
    if (*top) {
      t_cfg.validate();
      return cmd_topics(t_documents, t_cfg, t_out);
    }
    if (*ent) {
      const auto x = e_grid.find('x');
      if (x == std::string::npos) throw ConfigError("--grid must look like 4x4");
      e_grid_cfg.rows = std::stoul(e_grid.substr(0, x));
      e_grid_cfg.cols = std::stoul(e_grid.substr(x + 1));
      e_grid_cfg.validate();
      if (!(e_window > 0) || !(e_stride > 0))
        throw ConfigError("--window-s and --stride-s must be positive");
      return cmd_entropy(e_gaze, e_grid_cfg, e_window, e_stride, e_pi, e_out);
    }
    if (*analyze) {
      RunConfig config;
      if (!a_config.empty()) config = RunConfig::from_file(a_config);
      for (const auto& kv : a_sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw ConfigError("--set expects key=value, got '" + kv + "'");
        config.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (a_has_seed) config.seed = a_seed;
      if (a_has_jobs) config.jobs = a_jobs;
      return cmd_analyze(a_dir, config, a_out);
    }
    if (*syn) return cmd_synth(s_spec, s_seed, s_has_seed, s_out);
    if (*ktest) {
      kt_cfg.K = 2;  // validated per fitted K inside the sweep
      kt_cfg.validate();
      return cmd_ktest(kt_documents, kt_range, kt_cfg, kt_out);
    }
    std::cout << app.help();
    return 0;
  } catch (const Error& e) {
    emit_error(e.kind(), category_name(e.category()), e.what());
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    emit_error("Internal", "numeric", e.what());
    return 3;
  }
}
