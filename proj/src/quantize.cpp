#include "drivemine/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace drivemine::quantize {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Cholesky with escalating diagonal flooring (relative to the average
// variance). Throws SingularComponent when even aggressive flooring cannot
// restore positive definiteness.
Eigen::LLT<Eigen::MatrixXd> safe_llt(Eigen::MatrixXd& sigma, double global_scale) {
  const auto d = sigma.rows();
  double base = sigma.trace() / static_cast<double>(d);
  if (!(base > 0.0)) base = global_scale;
  if (!(base > 0.0)) base = 1.0;
  for (double floor_scale : {0.0, 1e-6, 1e-4, 1e-2, 1.0}) {
    Eigen::MatrixXd attempt = sigma;
    attempt.diagonal().array() += floor_scale * base;
    Eigen::LLT<Eigen::MatrixXd> llt(attempt);
    if (llt.info() == Eigen::Success) {
      sigma = attempt;
      return llt;
    }
  }
  throw SingularComponent("covariance flooring failed to restore PD");
}

struct Mixture {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> sigmas;  // floored, PD
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chols;
  std::vector<double> log_norms;  // -d/2 log(2pi) - 1/2 log|Sigma|

  void refresh_factorizations(double global_scale) {
    const std::size_t K = weights.size();
    chols.resize(K);
    log_norms.resize(K);
    const double d = static_cast<double>(means[0].size());
    for (std::size_t k = 0; k < K; ++k) {
      chols[k] = safe_llt(sigmas[k], global_scale);
      const double log_det =
          2.0 * chols[k].matrixL().toDenseMatrix().diagonal().array().log().sum();
      log_norms[k] = -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;
    }
  }
};

// Column k of `log_dens` gets log(w_k) + log N(x_i | mu_k, Sigma_k).
void log_density_matrix(const Mixture& mix, const Eigen::MatrixXd& data,
                        Eigen::MatrixXd& log_dens) {
  const auto n = data.rows();
  const std::size_t K = mix.weights.size();
  log_dens.resize(n, static_cast<Eigen::Index>(K));
  for (std::size_t k = 0; k < K; ++k) {
    const Eigen::MatrixXd diff =
        (data.rowwise() - mix.means[k].transpose()).transpose();
    const Eigen::MatrixXd solved = mix.chols[k].matrixL().solve(diff);
    const double lw = mix.weights[k] > 0.0 ? std::log(mix.weights[k]) : kNegInf;
    log_dens.col(static_cast<Eigen::Index>(k)) =
        (-0.5 * solved.colwise().squaredNorm().array() + mix.log_norms[k] + lw)
            .transpose();
  }
}

// Row-wise logsumexp; returns total log-likelihood and leaves normalized
// responsibilities in `log_dens` (in linear space).
double normalize_responsibilities(Eigen::MatrixXd& log_dens) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < log_dens.rows(); ++i) {
    const double m = log_dens.row(i).maxCoeff();
    const double sum = (log_dens.row(i).array() - m).exp().sum();
    const double log_row = m + std::log(sum);
    ll += log_row;
    log_dens.row(i) = (log_dens.row(i).array() - log_row).exp();
  }
  return ll;
}

// k-means++-style seeding: spread initial centers by squared distance.
std::vector<Eigen::Index> seed_centers(const Eigen::MatrixXd& data, std::size_t K,
                                       std::mt19937_64& rng) {
  const auto n = data.rows();
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<Eigen::Index> centers{pick(rng)};
  Eigen::VectorXd dist2 =
      (data.rowwise() - data.row(centers[0])).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (centers.size() < K) {
    const double total = dist2.sum();
    Eigen::Index chosen;
    if (total > 0.0) {
      double u = unif(rng) * total;
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= dist2(i);
        if (u <= 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centers.push_back(chosen);
    dist2 = dist2.cwiseMin(
        (data.rowwise() - data.row(chosen)).rowwise().squaredNorm());
  }
  return centers;
}

double global_cov_scale(const Eigen::MatrixXd& data) {
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const double tss = (data.rowwise() - mean).squaredNorm();
  return tss / (static_cast<double>(data.rows()) * static_cast<double>(data.cols()));
}

struct EmOutcome {
  Mixture mix;
  double log_likelihood = kNegInf;
  std::vector<double> ll_trace;
};

EmOutcome em_run(const Eigen::MatrixXd& data, std::size_t K,
                 const GmmConfig& config, std::uint64_t seed) {
  const auto n = data.rows();
  const auto d = data.cols();
  const double scale = global_cov_scale(data);
  std::mt19937_64 rng(seed);

  Eigen::MatrixXd global_cov;
  {
    const Eigen::RowVectorXd mean = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - mean;
    global_cov = centered.transpose() * centered /
                 static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  }

  // init from k-means++ hard assignment
  const auto centers = seed_centers(data, K, rng);
  std::vector<std::vector<Eigen::Index>> members(K);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (std::size_t k = 0; k < K; ++k) {
      const double dd = (data.row(i) - data.row(centers[k])).squaredNorm();
      if (dd < best_d) {
        best_d = dd;
        best = k;
      }
    }
    members[best].push_back(i);
  }

  Mixture mix;
  mix.weights.resize(K);
  mix.means.resize(K);
  mix.sigmas.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    if (members[k].empty()) {
      mix.means[k] = data.row(centers[k]).transpose();
    } else {
      mix.means[k] = Eigen::VectorXd::Zero(d);
      for (auto i : members[k]) mix.means[k] += data.row(i).transpose();
      mix.means[k] /= static_cast<double>(members[k].size());
    }
    mix.weights[k] = std::max(1.0 / (10.0 * static_cast<double>(K)),
                              static_cast<double>(members[k].size()) /
                                  static_cast<double>(n));
    mix.sigmas[k] = global_cov;
  }
  const double wsum =
      std::accumulate(mix.weights.begin(), mix.weights.end(), 0.0);
  for (double& w : mix.weights) w /= wsum;
  mix.refresh_factorizations(scale);

  EmOutcome out;
  Eigen::MatrixXd resp;
  double prev_ll = kNegInf;
  for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
    log_density_matrix(mix, data, resp);
    const double ll = normalize_responsibilities(resp);
    out.ll_trace.push_back(ll);
    out.log_likelihood = ll;
    out.mix = mix;
    if (iter > 0 && std::abs(ll - prev_ll) <=
                        config.tol * std::max(1.0, std::abs(prev_ll)))
      break;
    prev_ll = ll;

    // M-step
    for (std::size_t k = 0; k < K; ++k) {
      const auto col = resp.col(static_cast<Eigen::Index>(k));
      const double nk = col.sum();
      mix.weights[k] = nk / static_cast<double>(n);
      if (nk < 1e-10) continue;  // starved component keeps its parameters
      const Eigen::VectorXd mu = data.transpose() * col / nk;
      const Eigen::MatrixXd weighted =
          data.array().colwise() * col.array();  // n x d
      Eigen::MatrixXd second = data.transpose() * weighted / nk;
      mix.means[k] = mu;
      mix.sigmas[k] = second - mu * mu.transpose();
      // covariance floor: 1e-6 * trace/d on the diagonal
      double base = mix.sigmas[k].trace() / static_cast<double>(d);
      if (!(base > 0.0)) base = scale;
      mix.sigmas[k].diagonal().array() += 1e-6 * base;
    }
    mix.refresh_factorizations(scale);
  }
  return out;
}

}  // namespace

Codebook fit_gmm(const Eigen::MatrixXd& data, std::size_t K,
                 const GmmConfig& config, std::vector<double>* ll_trace) {
  const auto n = data.rows();
  const auto d = data.cols();
  if (K == 0) throw ConfigError("K must be positive");
  if (d < 1) throw DimensionMismatch("data must have at least one column");
  if (static_cast<std::size_t>(n) < K)
    throw TooFewSamples("need at least K samples: n=" + std::to_string(n) +
                        ", K=" + std::to_string(K));

  EmOutcome best;
  const std::size_t restarts = std::max<std::size_t>(1, config.restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    // golden-ratio mixing keeps restart streams decorrelated
    const std::uint64_t restart_seed = config.seed + r * 0x9E3779B97F4A7C15ull;
    EmOutcome run = em_run(data, K, config, restart_seed);
    if (run.log_likelihood > best.log_likelihood) best = std::move(run);
  }
  if (ll_trace) *ll_trace = best.ll_trace;

  Codebook cb;
  cb.K = K;
  cb.d = static_cast<std::size_t>(d);
  cb.weights = best.mix.weights;
  cb.means = best.mix.means;
  cb.covariances = best.mix.sigmas;
  cb.log_likelihood = best.log_likelihood;
  cb.seed = config.seed;
  return cb;
}

namespace {

Mixture mixture_from_codebook(const Codebook& cb) {
  Mixture mix;
  mix.weights = cb.weights;
  mix.means = cb.means;
  mix.sigmas = cb.covariances;
  mix.refresh_factorizations(1.0);
  return mix;
}

void check_dims(const Codebook& cb, const Eigen::MatrixXd& data) {
  if (static_cast<std::size_t>(data.cols()) != cb.d)
    throw DimensionMismatch("codebook fitted on d=" + std::to_string(cb.d) +
                            ", data has d=" + std::to_string(data.cols()));
}

}  // namespace

double log_likelihood(const Codebook& cb, const Eigen::MatrixXd& data) {
  check_dims(cb, data);
  Mixture mix = mixture_from_codebook(cb);
  Eigen::MatrixXd log_dens;
  log_density_matrix(mix, data, log_dens);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < log_dens.rows(); ++i) {
    const double m = log_dens.row(i).maxCoeff();
    ll += m + std::log((log_dens.row(i).array() - m).exp().sum());
  }
  return ll;
}

double bic(const Codebook& cb, const Eigen::MatrixXd& data) {
  check_dims(cb, data);
  const double n = static_cast<double>(data.rows());
  const double K = static_cast<double>(cb.K);
  const double d = static_cast<double>(cb.d);
  const double m = (K - 1.0) + K * d + K * d * (d + 1.0) / 2.0;
  return -2.0 * log_likelihood(cb, data) + m * std::log(n);
}

std::vector<std::size_t> encode(const Codebook& cb, const Eigen::MatrixXd& data) {
  check_dims(cb, data);
  Mixture mix = mixture_from_codebook(cb);
  Eigen::MatrixXd log_dens;
  log_density_matrix(mix, data, log_dens);
  std::vector<std::size_t> words(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index i = 0; i < log_dens.rows(); ++i) {
    std::size_t best = 0;
    double best_v = log_dens(i, 0);
    for (Eigen::Index k = 1; k < log_dens.cols(); ++k) {
      if (log_dens(i, k) > best_v) {  // strict: ties stay at the lowest index
        best_v = log_dens(i, k);
        best = static_cast<std::size_t>(k);
      }
    }
    words[static_cast<std::size_t>(i)] = best;
  }
  return words;
}

std::vector<WordDocument> documents_from_segments(
    const std::vector<std::size_t>& words, const std::vector<double>& times,
    const bcp::SegmentSet& segs) {
  if (words.size() != times.size())
    throw DimensionMismatch("words and times lengths differ");

  std::vector<WordDocument> docs(segs.segments.size());
  for (std::size_t s = 0; s < segs.segments.size(); ++s)
    docs[s].segment_id = s;

  std::size_t s = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const double t = times[i];
    while (s < segs.segments.size() && t >= segs.segments[s].end_t) ++s;
    if (s == segs.segments.size()) break;
    if (t >= segs.segments[s].start_t) docs[s].words.push_back(words[i]);
  }
  return docs;
}

std::string Codebook::to_json() const {
  nlohmann::json j;
  j["K"] = K;
  j["d"] = d;
  j["weights"] = weights;
  j["log_likelihood"] = log_likelihood;
  j["seed"] = seed;
  std::vector<std::vector<double>> means_out;
  std::vector<std::vector<double>> covs_out;
  for (std::size_t k = 0; k < K; ++k) {
    means_out.emplace_back(means[k].data(), means[k].data() + means[k].size());
    std::vector<double> flat;
    for (Eigen::Index r = 0; r < covariances[k].rows(); ++r)
      for (Eigen::Index c = 0; c < covariances[k].cols(); ++c)
        flat.push_back(covariances[k](r, c));
    covs_out.push_back(std::move(flat));
  }
  j["means"] = means_out;
  j["covariances"] = covs_out;
  return j.dump(2);
}

Codebook Codebook::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Codebook cb;
  cb.K = j.at("K").get<std::size_t>();
  cb.d = j.at("d").get<std::size_t>();
  cb.weights = j.at("weights").get<std::vector<double>>();
  cb.log_likelihood = j.at("log_likelihood").get<double>();
  cb.seed = j.at("seed").get<std::uint64_t>();
  const auto means_in = j.at("means").get<std::vector<std::vector<double>>>();
  const auto covs_in = j.at("covariances").get<std::vector<std::vector<double>>>();
  if (means_in.size() != cb.K || covs_in.size() != cb.K)
    throw MalformedDistribution("codebook JSON arrays disagree with K");
  const auto d = static_cast<Eigen::Index>(cb.d);
  for (std::size_t k = 0; k < cb.K; ++k) {
    cb.means.emplace_back(
        Eigen::Map<const Eigen::VectorXd>(means_in[k].data(), d));
    Eigen::MatrixXd cov(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c)
        cov(r, c) = covs_in[k][static_cast<std::size_t>(r * d + c)];
    cb.covariances.push_back(std::move(cov));
  }
  return cb;
}

}  // namespace drivemine::quantize
