#include "drivemine/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

namespace drivemine::pipeline {

namespace {

using nlohmann::json;

// Stage-tagged error propagation: the kind and category survive, the message
// gains the stage name.
template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), e.category(),
                std::string("[") + name + "] " + e.what());
  }
}

double native_rate(const Channel& ch) {
  if (ch.size() < 2) throw EmptyChannel("cannot infer rate of '" + ch.name + "'");
  std::vector<double> dts;
  dts.reserve(ch.size() - 1);
  for (std::size_t i = 1; i < ch.size(); ++i)
    dts.push_back(ch.times[i] - ch.times[i - 1]);
  std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
  const double dt = dts[dts.size() / 2];
  if (!(dt > 0)) throw NonUniformTimeline("non-positive sample spacing");
  return 1.0 / dt;
}

// Segment index for a time, or -1 when t falls outside every segment.
long segment_at(const bcp::SegmentSet& segs, double t) {
  long lo = 0, hi = static_cast<long>(segs.segments.size()) - 1;
  while (lo <= hi) {
    const long mid = (lo + hi) / 2;
    const auto& s = segs.segments[static_cast<std::size_t>(mid)];
    if (t < s.start_t)
      hi = mid - 1;
    else if (t >= s.end_t)
      lo = mid + 1;
    else
      return mid;
  }
  return -1;
}

struct IndexedDocs {
  std::vector<quantize::WordDocument> docs;
  std::vector<std::vector<std::size_t>> sample_idx;  // per doc, source rows
};

IndexedDocs docs_with_indices(const std::vector<std::size_t>& words,
                              const std::vector<double>& times,
                              const bcp::SegmentSet& segs) {
  IndexedDocs out;
  out.docs.resize(segs.segments.size());
  out.sample_idx.resize(segs.segments.size());
  for (std::size_t s = 0; s < segs.segments.size(); ++s)
    out.docs[s].segment_id = s;
  std::size_t s = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const double t = times[i];
    while (s < segs.segments.size() && t >= segs.segments[s].end_t) ++s;
    if (s == segs.segments.size()) break;
    if (t >= segs.segments[s].start_t) {
      out.docs[s].words.push_back(words[i]);
      out.sample_idx[s].push_back(i);
    }
  }
  return out;
}

Channel zscore_in_place(const Channel& ch) { return zscore(ch); }

struct StateStage {
  StateSeries series;
  bool ok = false;
};

// GMM-quantize one state channel, fit the 2-pattern topic model over the
// segment documents, and pull token-level labels back onto the samples.
StateStage analyze_state(const std::string& modality,
                         const std::vector<double>& times,
                         const std::vector<double>& values,
                         const bcp::SegmentSet& segs, const RunConfig& config,
                         std::uint64_t gmm_seed, std::uint64_t lda_seed) {
  StateStage out;
  if (times.size() < std::max<std::size_t>(config.gmm.k_state, 2)) return out;

  Eigen::MatrixXd data(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i)
    data(static_cast<Eigen::Index>(i), 0) = values[i];

  quantize::GmmConfig gc;
  gc.max_iter = config.gmm.max_iter;
  gc.tol = config.gmm.tol;
  gc.restarts = config.gmm.restarts;
  gc.seed = gmm_seed;
  const auto cb = quantize::fit_gmm(data, config.gmm.k_state, gc);
  const auto words = quantize::encode(cb, data);

  auto indexed = docs_with_indices(words, times, segs);
  bool any = false;
  for (const auto& d : indexed.docs) any |= !d.words.empty();
  if (!any) return out;

  topics::LdaConfig lc;
  lc.K = config.lda.state_k;
  lc.alpha = config.lda.alpha;
  lc.beta = config.lda.beta;
  lc.iters = config.lda.iters;
  lc.burn_in = config.lda.burnin;
  lc.seed = lda_seed;
  const auto model = topics::fit_lda(indexed.docs, config.gmm.k_state, lc);

  out.series.modality = modality;
  out.series.n_states = lc.K;
  for (std::size_t m = 0; m < indexed.docs.size(); ++m) {
    for (std::size_t i = 0; i < indexed.docs[m].words.size(); ++i) {
      const std::size_t src = indexed.sample_idx[m][i];
      out.series.times.push_back(times[src]);
      out.series.values.push_back(values[src]);
      out.series.labels.push_back(model.assignments[m][i]);
    }
  }
  // times arrive segment-by-segment, already ascending

  // elevated state = the pattern with the higher mean value
  std::vector<double> sum(lc.K, 0.0);
  std::vector<std::size_t> cnt(lc.K, 0);
  for (std::size_t i = 0; i < out.series.labels.size(); ++i) {
    sum[out.series.labels[i]] += out.series.values[i];
    ++cnt[out.series.labels[i]];
  }
  std::size_t best = 0;
  double best_mean = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < lc.K; ++k) {
    if (cnt[k] == 0) continue;
    const double mean = sum[k] / static_cast<double>(cnt[k]);
    if (mean > best_mean) {
      best_mean = mean;
      best = k;
    }
  }
  out.series.elevated_state = best;
  out.series.per_segment = map_states_to_segments(
      out.series.times, out.series.labels, segs, lc.K);
  out.ok = true;
  return out;
}

std::vector<std::string> name_patterns(const std::vector<double>& mean_accel,
                                       const std::vector<bool>& seen) {
  const std::size_t K = mean_accel.size();
  std::vector<std::string> names(K);
  for (std::size_t k = 0; k < K; ++k) names[k] = "pattern_" + std::to_string(k);
  if (K != 4) return names;
  // advisory naming, mirroring the usual brake/accelerate/free-flow reading
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < K; ++k)
    if (seen[k]) order.push_back(k);
  if (order.size() < 2) return names;
  auto by_accel = order;
  std::sort(by_accel.begin(), by_accel.end(),
            [&](std::size_t a, std::size_t b) { return mean_accel[a] < mean_accel[b]; });
  auto by_abs = order;
  std::sort(by_abs.begin(), by_abs.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(mean_accel[a]) < std::abs(mean_accel[b]);
  });
  names[by_accel.front()] = "harsh_brake";
  if (mean_accel[by_accel.back()] > 0) names[by_accel.back()] = "accelerating";
  names[by_abs.front()] = "free_flow";
  for (std::size_t k : order)
    if (names[k].rfind("pattern_", 0) == 0) names[k] = "normal_brake";
  return names;
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

std::vector<long> map_states_to_segments(const std::vector<double>& state_times,
                                         const std::vector<std::size_t>& state_labels,
                                         const bcp::SegmentSet& segs,
                                         std::size_t n_states) {
  if (state_times.size() != state_labels.size())
    throw DimensionMismatch("state times and labels differ in length");
  std::vector<std::vector<std::size_t>> tallies(
      segs.segments.size(), std::vector<std::size_t>(n_states, 0));
  for (std::size_t i = 0; i < state_times.size(); ++i) {
    const long s = segment_at(segs, state_times[i]);
    if (s >= 0) ++tallies[static_cast<std::size_t>(s)][state_labels[i]];
  }
  std::vector<long> out(segs.segments.size(), -1);
  for (std::size_t s = 0; s < tallies.size(); ++s) {
    std::size_t best = 0, best_count = 0, total = 0;
    for (std::size_t k = 0; k < n_states; ++k) {
      total += tallies[s][k];
      if (tallies[s][k] > best_count) {  // strict: ties keep the lowest index
        best_count = tallies[s][k];
        best = k;
      }
    }
    if (total > 0) out[s] = static_cast<long>(best);
  }
  return out;
}

Cooccurrence cooccurrence(const bcp::SegmentSet& segs,
                          const std::vector<long>& behavior_per_segment,
                          std::size_t n_behavior,
                          const std::vector<double>& state_times,
                          const std::vector<std::size_t>& state_labels,
                          std::size_t n_states, const std::string& modality) {
  if (behavior_per_segment.size() != segs.segments.size())
    throw DimensionMismatch("behavior labels do not match segments");
  Cooccurrence co;
  co.modality = modality;
  co.counts.assign(n_behavior, std::vector<std::size_t>(n_states, 0));
  co.fractions.assign(n_behavior, std::vector<double>(n_states, 0.0));
  for (std::size_t b = 0; b < n_behavior; ++b)
    co.behavior_labels.push_back("behavior_" + std::to_string(b));
  for (std::size_t s = 0; s < n_states; ++s)
    co.state_labels.push_back("state_" + std::to_string(s));

  for (std::size_t i = 0; i < state_times.size(); ++i) {
    const long seg = segment_at(segs, state_times[i]);
    if (seg < 0) continue;
    const long b = behavior_per_segment[static_cast<std::size_t>(seg)];
    if (b < 0 || static_cast<std::size_t>(b) >= n_behavior) continue;
    ++co.counts[static_cast<std::size_t>(b)][state_labels[i]];
  }
  for (std::size_t b = 0; b < n_behavior; ++b) {
    std::size_t total = 0;
    for (std::size_t s = 0; s < n_states; ++s) total += co.counts[b][s];
    if (total == 0) continue;
    for (std::size_t s = 0; s < n_states; ++s)
      co.fractions[b][s] =
          static_cast<double>(co.counts[b][s]) / static_cast<double>(total);
  }
  return co;
}

TransitionMatrix transitions(const std::vector<long>& sequence, std::size_t K) {
  std::vector<std::size_t> filtered;
  for (long v : sequence)
    if (v >= 0 && static_cast<std::size_t>(v) < K)
      filtered.push_back(static_cast<std::size_t>(v));
  if (filtered.size() < 2)
    throw TooShort("need at least 2 labeled segments for transitions");

  TransitionMatrix tm;
  for (std::size_t k = 0; k < K; ++k)
    tm.labels.push_back("behavior_" + std::to_string(k));
  tm.counts.assign(K, std::vector<std::size_t>(K, 0));
  tm.probs.assign(K, std::vector<double>(K, 0.0));
  for (std::size_t i = 0; i + 1 < filtered.size(); ++i)
    ++tm.counts[filtered[i]][filtered[i + 1]];
  for (std::size_t i = 0; i < K; ++i) {
    std::size_t total = 0;
    for (std::size_t j = 0; j < K; ++j) total += tm.counts[i][j];
    if (total == 0) continue;
    for (std::size_t j = 0; j < K; ++j)
      tm.probs[i][j] =
          static_cast<double>(tm.counts[i][j]) / static_cast<double>(total);
  }
  return tm;
}

StyleResult style_aggregate(const StyleInputs& inputs) {
  StyleResult result;
  const std::size_t K = inputs.accel_by_pattern.size();
  result.pattern_is_aggressive.assign(K, false);
  for (std::size_t k = 0; k < K; ++k) {
    if (inputs.accel_by_pattern[k].empty()) continue;
    const auto test = stats::sign_test(inputs.accel_by_pattern[k]);
    result.pattern_is_aggressive[k] = test.significant_at_05;
  }

  bool any_aggressive = false, any_conservative = false;
  for (std::size_t k = 0; k < K; ++k) {
    if (inputs.accel_by_pattern[k].empty()) continue;
    (result.pattern_is_aggressive[k] ? any_aggressive : any_conservative) = true;
  }

  auto fractions_for = [&](bool aggressive) {
    StyleSummary s;
    s.participant_id = inputs.participant_id;
    s.style = aggressive ? "aggressive" : "conservative";
    std::size_t hr_hits = 0, gte_hits = 0;
    for (const auto& [pattern, elevated] : inputs.hr_samples) {
      if (pattern < 0 || static_cast<std::size_t>(pattern) >= K) continue;
      if (result.pattern_is_aggressive[static_cast<std::size_t>(pattern)] != aggressive)
        continue;
      ++s.n_hr;
      hr_hits += elevated ? 1 : 0;
    }
    for (const auto& [pattern, elevated] : inputs.gte_samples) {
      if (pattern < 0 || static_cast<std::size_t>(pattern) >= K) continue;
      if (result.pattern_is_aggressive[static_cast<std::size_t>(pattern)] != aggressive)
        continue;
      ++s.n_gte;
      gte_hits += elevated ? 1 : 0;
    }
    if (s.n_hr > 0)
      s.fraction_abnormal_hr =
          static_cast<double>(hr_hits) / static_cast<double>(s.n_hr);
    if (s.n_gte > 0)
      s.fraction_high_gte =
          static_cast<double>(gte_hits) / static_cast<double>(s.n_gte);
    return s;
  };

  const bool partial = !(any_aggressive && any_conservative);
  if (any_aggressive) {
    StyleSummary s = fractions_for(true);
    s.partial = partial;
    result.summaries.push_back(std::move(s));
  }
  if (any_conservative) {
    StyleSummary s = fractions_for(false);
    s.partial = partial;
    result.summaries.push_back(std::move(s));
  }
  return result;
}

SessionReport run_pipeline(const Session& session, const RunConfig& config) {
  config.validate();
  SessionReport rep;
  rep.participant_id = session.participant_id;
  rep.config_echo = config.to_map();
  const std::uint64_t base =
      mix_seed(config.seed, hash_string(session.participant_id));

  // kinematic matrix
  KinematicMatrix kin;
  double rate = 0;
  const bool imu_mode = session.has_channel("ax") && session.has_channel("ay") &&
                        session.has_channel("wz");
  if (imu_mode) {
    rep.mode = "imu";
    rate = config.kin_rate_hz > 0 ? config.kin_rate_hz
                                  : native_rate(session.channel("ax"));
    kin = stage("ingest", [&] {
      return assemble_matrix(session, {"ax", "ay", "wz"}, rate);
    });
  } else if (session.has_channel("speed")) {
    rep.mode = "speed";
    rate = config.kin_rate_hz > 0 ? config.kin_rate_hz : 1.0;
    kin = stage("ingest", [&] {
      const Channel sp =
          resample(session.channel("speed"), rate, ResampleMethod::linear);
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
    });
  } else {
    throw UnknownChannel("session has neither IMU channels nor a speed channel");
  }
  rep.kin_times = kin.times;
  rep.kin_columns = kin.columns;

  // segmentation
  const auto bcp_result = stage("bcp", [&] {
    bcp::BcpParams params;
    params.p0 = config.bcp.p0;
    params.w0 = config.bcp.w0;
    params.sweeps = config.bcp.sweeps;
    params.burn_in = config.bcp.burnin;
    params.seed = mix_seed(base, 0xB0);
    return bcp::run(kin, params);
  });
  rep.change_prob = bcp_result.change_prob;
  const auto min_len = static_cast<std::size_t>(
      std::max(1.0, std::round(config.bcp.min_len_s * rate)));
  rep.segments = stage("bcp", [&] {
    return bcp::extract_segments(bcp_result, kin.times, config.bcp.threshold,
                                 min_len);
  });

  // behavior words and topics
  const auto behavior_docs = stage("quantize", [&] {
    quantize::GmmConfig gc;
    gc.max_iter = config.gmm.max_iter;
    gc.tol = config.gmm.tol;
    gc.restarts = config.gmm.restarts;
    gc.seed = mix_seed(base, 0x91);
    const auto cb = quantize::fit_gmm(kin.values, config.gmm.k, gc);
    const auto words = quantize::encode(cb, kin.values);
    return quantize::documents_from_segments(words, kin.times, rep.segments);
  });
  const auto behavior_assignments = stage("topics", [&] {
    topics::LdaConfig lc;
    lc.K = config.lda.behavior_k;
    lc.alpha = config.lda.alpha;
    lc.beta = config.lda.beta;
    lc.iters = config.lda.iters;
    lc.burn_in = config.lda.burnin;
    lc.seed = mix_seed(base, 0x7D);
    const auto model = topics::fit_lda(behavior_docs, config.gmm.k, lc);
    return topics::assign_patterns(model, behavior_docs);
  });
  rep.behavior_per_segment.assign(rep.segments.segments.size(), -1);
  for (const auto& a : behavior_assignments)
    if (a.assigned)
      rep.behavior_per_segment[a.segment_id] = static_cast<long>(a.dominant_topic);

  // per-sample behavior labels on the kinematic timeline
  const std::size_t n_kin = kin.times.size();
  std::vector<long> sample_behavior(n_kin, -1);
  for (std::size_t s = 0; s < rep.segments.segments.size(); ++s) {
    const auto& seg = rep.segments.segments[s];
    for (std::size_t i = seg.start_idx; i < seg.end_idx && i < n_kin; ++i)
      sample_behavior[i] = rep.behavior_per_segment[s];
  }

  const bool znorm = config.znorm_states == "on" ||
                     (config.znorm_states == "auto" && rep.mode == "speed");

  // state modalities
  if (session.has_channel("hr")) {
    const Channel& hr_raw = session.channel("hr");
    const Channel hr = znorm && hr_raw.size() >= 2 ? zscore_in_place(hr_raw) : hr_raw;
    auto st = stage("states", [&] {
      return analyze_state("hr", hr.times, hr.values, rep.segments, config,
                           mix_seed(base, 0x41), mix_seed(base, 0x42));
    });
    if (st.ok) rep.states.push_back(std::move(st.series));
  }
  gaze::EntropySeries entropy;
  if (session.has_channel("gaze_x") && session.has_channel("gaze_y")) {
    const auto& gx = session.channel("gaze_x");
    const auto& gy = session.channel("gaze_y");
    std::vector<gaze::GazeSample> samples;
    const std::size_t n_gaze = std::min(gx.size(), gy.size());
    samples.reserve(n_gaze);
    for (std::size_t i = 0; i < n_gaze; ++i)
      samples.push_back({gx.times[i], gx.values[i], gy.values[i]});
    gaze::AoiGrid grid;
    grid.rows = config.gaze.rows;
    grid.cols = config.gaze.cols;
    grid.x_min = config.gaze.x_min;
    grid.x_max = config.gaze.x_max;
    grid.y_min = config.gaze.y_min;
    grid.y_max = config.gaze.y_max;
    const auto pi_mode = config.gaze.pi_mode == "stationary"
                             ? gaze::PiMode::stationary_vector
                             : gaze::PiMode::empirical_source;
    entropy = stage("gaze", [&] {
      const auto symbols = gaze::bin_gaze(samples, grid);
      return gaze::rolling_entropy(symbols, config.gaze.window_s,
                                   config.gaze.stride_s, grid.bins(), pi_mode);
    });
    std::vector<double> gte_times, gte_values;
    for (std::size_t k = 0; k < entropy.window_centers.size(); ++k) {
      if (!entropy.gte[k].has_value()) continue;
      gte_times.push_back(entropy.window_centers[k]);
      gte_values.push_back(*entropy.gte[k]);
    }
    if (znorm && gte_values.size() >= 2) {
      Channel tmp;
      tmp.name = "gte";
      tmp.times = gte_times;
      tmp.values = gte_values;
      try {
        tmp = zscore(tmp);
        gte_values = tmp.values;
      } catch (const DegenerateVariance&) {
        // constant entropy stays on its raw scale
      }
    }
    auto st = stage("states", [&] {
      return analyze_state("gte", gte_times, gte_values, rep.segments, config,
                           mix_seed(base, 0x51), mix_seed(base, 0x52));
    });
    if (st.ok) rep.states.push_back(std::move(st.series));
  }

  // per-pattern summaries and tests for the kinematic columns
  const std::size_t K = config.lda.behavior_k;
  for (std::size_t j = 0; j < kin.columns.size(); ++j) {
    std::vector<std::vector<double>> by_pattern(K);
    for (std::size_t i = 0; i < n_kin; ++i) {
      if (sample_behavior[i] < 0) continue;
      by_pattern[static_cast<std::size_t>(sample_behavior[i])].push_back(
          kin.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    for (std::size_t p = 0; p < K; ++p) {
      if (by_pattern[p].empty()) continue;
      rep.summaries.push_back(
          {kin.columns[j], "behavior", p, stats::describe(by_pattern[p])});
    }
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t b = a + 1; b < K; ++b) {
        if (by_pattern[a].empty() || by_pattern[b].empty()) continue;
        auto t = stats::ks_two_sample(by_pattern[a], by_pattern[b]);
        t.name = "ks:" + kin.columns[j] + ":" + std::to_string(a) + "&" +
                 std::to_string(b);
        rep.tests.push_back(std::move(t));
      }
  }

  // speed summaries in IMU mode (speed is not a segmentation input there)
  if (rep.mode == "imu" && session.has_channel("speed")) {
    const auto& sp = session.channel("speed");
    std::vector<std::vector<double>> by_pattern(K);
    for (std::size_t i = 0; i < sp.size(); ++i) {
      const long seg = segment_at(rep.segments, sp.times[i]);
      if (seg < 0) continue;
      const long b = rep.behavior_per_segment[static_cast<std::size_t>(seg)];
      if (b >= 0) by_pattern[static_cast<std::size_t>(b)].push_back(sp.values[i]);
    }
    for (std::size_t p = 0; p < K; ++p)
      if (!by_pattern[p].empty())
        rep.summaries.push_back(
            {"speed", "behavior", p, stats::describe(by_pattern[p])});
  }

  // state summaries, KS between state patterns, chi-square and KW
  for (const auto& st : rep.states) {
    std::vector<std::vector<double>> by_state(st.n_states);
    for (std::size_t i = 0; i < st.labels.size(); ++i)
      by_state[st.labels[i]].push_back(st.values[i]);
    for (std::size_t s = 0; s < st.n_states; ++s)
      if (!by_state[s].empty())
        rep.summaries.push_back(
            {st.modality, "state", s, stats::describe(by_state[s])});
    for (std::size_t a = 0; a < st.n_states; ++a)
      for (std::size_t b = a + 1; b < st.n_states; ++b) {
        if (by_state[a].empty() || by_state[b].empty()) continue;
        auto t = stats::ks_two_sample(by_state[a], by_state[b]);
        t.name = "ks:" + st.modality + ":state" + std::to_string(a) + "&state" +
                 std::to_string(b);
        rep.tests.push_back(std::move(t));
      }

    // state mixture within each behavior pattern
    std::vector<std::vector<std::size_t>> counts(
        K, std::vector<std::size_t>(st.n_states, 0));
    std::vector<std::vector<double>> indicator_groups(K);
    std::vector<std::vector<double>> value_groups(K);
    for (std::size_t i = 0; i < st.labels.size(); ++i) {
      const long seg = segment_at(rep.segments, st.times[i]);
      if (seg < 0) continue;
      const long b = rep.behavior_per_segment[static_cast<std::size_t>(seg)];
      if (b < 0) continue;
      ++counts[static_cast<std::size_t>(b)][st.labels[i]];
      indicator_groups[static_cast<std::size_t>(b)].push_back(
          st.labels[i] == st.elevated_state ? 1.0 : 0.0);
      value_groups[static_cast<std::size_t>(b)].push_back(st.values[i]);
    }
    if (st.n_states == 2) {
      for (std::size_t b = 0; b < K; ++b) {
        const std::size_t total = counts[b][0] + counts[b][1];
        if (total == 0) continue;
        auto t = stats::chi_square_equal(counts[b][0], counts[b][1]);
        t.name = "chi2_equal:" + st.modality + ":behavior" + std::to_string(b);
        rep.tests.push_back(std::move(t));
      }
    }
    std::vector<std::vector<double>> nonempty_ind, nonempty_val;
    for (std::size_t b = 0; b < K; ++b) {
      if (!indicator_groups[b].empty()) nonempty_ind.push_back(indicator_groups[b]);
      if (!value_groups[b].empty()) nonempty_val.push_back(value_groups[b]);
    }
    if (nonempty_ind.size() >= 2) {
      auto t = stats::kruskal_wallis(nonempty_ind);
      t.name = "kruskal:" + st.modality + ":indicator_across_behaviors";
      rep.tests.push_back(std::move(t));
      t = stats::kruskal_wallis(nonempty_val);
      t.name = "kruskal:" + st.modality + ":values_across_behaviors";
      rep.tests.push_back(std::move(t));
    }

    rep.cooccurrence.push_back(cooccurrence(rep.segments,
                                            rep.behavior_per_segment, K,
                                            st.times, st.labels, st.n_states,
                                            st.modality));
  }

  // transitions over the temporal sequence of segment labels
  {
    std::size_t labeled = 0;
    for (long v : rep.behavior_per_segment) labeled += (v >= 0);
    if (labeled >= 2) rep.transitions = transitions(rep.behavior_per_segment, K);
  }

  // style aggregation over the forward-acceleration column
  {
    std::size_t accel_col = 0;
    if (rep.mode == "speed") {
      accel_col = 1;  // {speed, accel}
    } else {
      for (std::size_t j = 0; j < kin.columns.size(); ++j)
        if (kin.columns[j] == "ax") accel_col = j;
    }
    StyleInputs inputs;
    inputs.participant_id = session.participant_id;
    inputs.accel_by_pattern.assign(K, {});
    for (std::size_t i = 0; i < n_kin; ++i) {
      if (sample_behavior[i] < 0) continue;
      inputs.accel_by_pattern[static_cast<std::size_t>(sample_behavior[i])]
          .push_back(kin.values(static_cast<Eigen::Index>(i),
                                static_cast<Eigen::Index>(accel_col)));
    }
    for (const auto& st : rep.states) {
      auto& sink = st.modality == "hr" ? inputs.hr_samples : inputs.gte_samples;
      for (std::size_t i = 0; i < st.labels.size(); ++i) {
        const long seg = segment_at(rep.segments, st.times[i]);
        if (seg < 0) continue;
        sink.emplace_back(rep.behavior_per_segment[static_cast<std::size_t>(seg)],
                          st.labels[i] == st.elevated_state);
      }
    }
    rep.styles = style_aggregate(inputs).summaries;
  }

  // advisory pattern names from mean forward acceleration
  {
    std::size_t accel_col = rep.mode == "speed" ? 1 : 0;
    std::vector<double> mean_accel(K, 0.0);
    std::vector<std::size_t> count(K, 0);
    std::vector<bool> seen(K, false);
    for (std::size_t i = 0; i < n_kin; ++i) {
      if (sample_behavior[i] < 0) continue;
      const auto b = static_cast<std::size_t>(sample_behavior[i]);
      mean_accel[b] += kin.values(static_cast<Eigen::Index>(i),
                                  static_cast<Eigen::Index>(accel_col));
      ++count[b];
      seen[b] = true;
    }
    for (std::size_t k = 0; k < K; ++k)
      if (count[k] > 0) mean_accel[k] /= static_cast<double>(count[k]);
    rep.behavior_names = name_patterns(mean_accel, seen);
  }

  return rep;
}

namespace {

json summary_to_json(const SummaryRow& row) {
  return json{{"source", row.source},
              {"group", row.group_kind},
              {"pattern", row.pattern},
              {"mean", row.summary.mean},
              {"sd", row.summary.sd},
              {"p25", row.summary.p25},
              {"median", row.summary.median},
              {"p75", row.summary.p75},
              {"n", row.summary.n}};
}

json session_to_json(const SessionReport& rep) {
  json j;
  j["meta"] = {{"participant_id", rep.participant_id},
               {"mode", rep.mode},
               {"tool", "drivemine"},
               {"kin_columns", rep.kin_columns},
               {"config", rep.config_echo}};

  j["segments"] = json::array();
  for (const auto& s : rep.segments.segments)
    j["segments"].push_back({{"start_t", s.start_t},
                             {"end_t", s.end_t},
                             {"start_idx", s.start_idx},
                             {"end_idx", s.end_idx},
                             {"change_prob_at_boundary", s.boundary_prob}});

  json summaries = json::array();
  for (const auto& row : rep.summaries)
    if (row.group_kind == "behavior") summaries.push_back(summary_to_json(row));
  j["behavior"] = {{"per_segment", rep.behavior_per_segment},
                   {"names", rep.behavior_names},
                   {"summaries", summaries}};

  j["states"] = json::array();
  for (const auto& st : rep.states) {
    json state_summaries = json::array();
    for (const auto& row : rep.summaries)
      if (row.group_kind == "state" && row.source == st.modality)
        state_summaries.push_back(summary_to_json(row));
    j["states"].push_back({{"modality", st.modality},
                           {"n_states", st.n_states},
                           {"elevated_state", st.elevated_state},
                           {"per_segment", st.per_segment},
                           {"times", st.times},
                           {"labels", st.labels},
                           {"summaries", state_summaries}});
  }

  j["tests"] = json::array();
  for (const auto& t : rep.tests)
    j["tests"].push_back({{"name", t.name},
                          {"statistic", t.statistic},
                          {"p_value", t.p_value},
                          {"significant_at_05", t.significant_at_05}});

  j["transitions"] = {{"labels", rep.transitions.labels},
                      {"counts", rep.transitions.counts},
                      {"probs", rep.transitions.probs}};

  j["cooccurrence"] = json::array();
  for (const auto& co : rep.cooccurrence)
    j["cooccurrence"].push_back({{"modality", co.modality},
                                 {"behavior_labels", co.behavior_labels},
                                 {"state_labels", co.state_labels},
                                 {"counts", co.counts},
                                 {"fractions", co.fractions}});

  j["styles"] = json::array();
  for (const auto& s : rep.styles)
    j["styles"].push_back({{"participant_id", s.participant_id},
                           {"style", s.style},
                           {"fraction_abnormal_hr", s.fraction_abnormal_hr},
                           {"fraction_high_gte", s.fraction_high_gte},
                           {"n_hr", s.n_hr},
                           {"n_gte", s.n_gte},
                           {"partial", s.partial}});
  return j;
}

}  // namespace

std::string report_to_json(const SessionReport& report) {
  return session_to_json(report).dump(2);
}

std::string multi_report_to_json(const std::vector<SessionReport>& reports) {
  json j;
  j["meta"] = {{"tool", "drivemine"}, {"sessions", reports.size()}};
  j["sessions"] = json::array();
  j["styles"] = json::array();
  for (const auto& rep : reports) {
    j["sessions"].push_back(session_to_json(rep));
    for (const auto& s : rep.styles)
      j["styles"].push_back({{"participant_id", s.participant_id},
                             {"style", s.style},
                             {"fraction_abnormal_hr", s.fraction_abnormal_hr},
                             {"fraction_high_gte", s.fraction_high_gte},
                             {"n_hr", s.n_hr},
                             {"n_gte", s.n_gte},
                             {"partial", s.partial}});
  }
  return j.dump(2);
}

void write_report_files(const SessionReport& report,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json");
    out << report_to_json(report) << "\n";
  }
  {
    std::ofstream out(dir / "changeprob.csv");
    out << "index,t,prob\n";
    for (std::size_t i = 0; i < report.change_prob.size(); ++i)
      out << i << "," << csv_number(report.kin_times[i]) << ","
          << csv_number(report.change_prob[i]) << "\n";
  }
  {
    std::ofstream out(dir / "segments.json");
    json j = json::array();
    for (const auto& s : report.segments.segments)
      j.push_back({{"start_t", s.start_t},
                   {"end_t", s.end_t},
                   {"change_prob_at_boundary", s.boundary_prob}});
    out << j.dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "summaries.csv");
    out << "source,group,pattern,mean,sd,p25,median,p75,n\n";
    for (const auto& row : report.summaries)
      out << row.source << "," << row.group_kind << "," << row.pattern << ","
          << csv_number(row.summary.mean) << "," << csv_number(row.summary.sd)
          << "," << csv_number(row.summary.p25) << ","
          << csv_number(row.summary.median) << ","
          << csv_number(row.summary.p75) << "," << row.summary.n << "\n";
  }
  {
    std::ofstream out(dir / "tests.csv");
    out << "name,statistic,p_value,significant_at_05\n";
    for (const auto& t : report.tests)
      out << t.name << "," << csv_number(t.statistic) << ","
          << csv_number(t.p_value) << "," << (t.significant_at_05 ? 1 : 0)
          << "\n";
  }
  {
    std::ofstream out(dir / "transitions.csv");
    out << "from,to,count,prob\n";
    for (std::size_t i = 0; i < report.transitions.labels.size(); ++i)
      for (std::size_t k = 0; k < report.transitions.labels.size(); ++k)
        out << report.transitions.labels[i] << ","
            << report.transitions.labels[k] << ","
            << report.transitions.counts[i][k] << ","
            << csv_number(report.transitions.probs[i][k]) << "\n";
  }
  for (const auto& co : report.cooccurrence) {
    std::ofstream out(dir / ("cooccurrence_" + co.modality + ".csv"));
    out << "behavior,state,count,fraction\n";
    for (std::size_t b = 0; b < co.behavior_labels.size(); ++b)
      for (std::size_t s = 0; s < co.state_labels.size(); ++s)
        out << co.behavior_labels[b] << "," << co.state_labels[s] << ","
            << co.counts[b][s] << "," << csv_number(co.fractions[b][s]) << "\n";
  }
  {
    std::ofstream out(dir / "styles.csv");
    out << "participant_id,style,fraction_abnormal_hr,fraction_high_gte,n_hr,"
           "n_gte,partial\n";
    for (const auto& s : report.styles)
      out << s.participant_id << "," << s.style << ","
          << csv_number(s.fraction_abnormal_hr) << ","
          << csv_number(s.fraction_high_gte) << "," << s.n_hr << "," << s.n_gte
          << "," << (s.partial ? 1 : 0) << "\n";
  }
}

}  // namespace drivemine::pipeline
