#include "emitloc/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "emitloc/random.hpp"

namespace emitloc::io {

using nlohmann::json;

namespace {

json position_json(const Position& p) { return json::array({p.x, p.y, p.z}); }

Position position_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("json: position must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json parse(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw IoError(std::string("json parse error: ") + e.what());
  }
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return out;
  }
}

void put_f64(std::ostream& os, double v) {
  const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(v));
  os.write(reinterpret_cast<const char*>(&bits), 8);
}

double get_f64(std::istream& is) {
  std::uint64_t bits = 0;
  is.read(reinterpret_cast<char*>(&bits), 8);
  if (!is) throw IoError("binary read: unexpected end of file");
  return std::bit_cast<double>(to_le(bits));
}

void put_u64(std::ostream& os, std::uint64_t v) {
  const std::uint64_t le = to_le(v);
  os.write(reinterpret_cast<const char*>(&le), 8);
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  if (!is) throw IoError("binary read: unexpected end of file");
  return to_le(v);
}

void put_matrix(std::ostream& os, const CMatrix& A) {
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      put_f64(os, A(i, j).real());
      put_f64(os, A(i, j).imag());
    }
}

CMatrix get_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  CMatrix A(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = get_f64(is);
      const double im = get_f64(is);
      A(i, j) = {re, im};
    }
  return A;
}

constexpr char kCovMagic[8] = {'E', 'L', 'C', 'O', 'V', '0', '0', '1'};

}  // namespace

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["emitter"] = position_json(s.emitter);
  j["stations"] = json::array();
  for (const auto& p : s.stations) j["stations"].push_back(position_json(p));
  return j.dump(2);
}

Scenario scenario_from_json(std::string_view text) {
  const json j = parse(text);
  Scenario s;
  try {
    if (j.contains("emitter")) s.emitter = position_from(j.at("emitter"));
    for (const auto& p : j.at("stations")) s.stations.push_back(position_from(p));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scenario json: ") + e.what());
  }
  return s;
}

std::string pdp_to_json(const Pdp& pdp) {
  json j;
  j["delta_tau_s"] = pdp.delta_tau;
  j["variances"] = pdp.variances;
  return j.dump(2);
}

Pdp pdp_from_json(std::string_view text) {
  const json j = parse(text);
  Pdp pdp;
  try {
    pdp.delta_tau = j.at("delta_tau_s").get<double>();
    pdp.variances = j.at("variances").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("pdp json: ") + e.what());
  }
  validate(pdp);
  return pdp;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

void write_observations(const ObservationSet& obs, const std::filesystem::path& path) {
  validate(obs, 1);
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& ym : obs.y)
      for (Eigen::Index i = 0; i < ym.size(); ++i) {
        put_f64(out, ym[i].real());
        put_f64(out, ym[i].imag());
      }
    if (!out) throw IoError("write failed: " + path.string());
  }
  json h;
  h["M"] = obs.M();
  h["K"] = obs.K();
  h["D"] = obs.D;
  h["Fs"] = obs.grid.fs;
  h["noise_variance"] = obs.noise_variance;
  write_text(sidecar_path(path), h.dump(2));
}

ObservationSet read_observations(const std::filesystem::path& path) {
  const json h = parse(read_text(sidecar_path(path)));
  ObservationSet obs;
  int M = 0;
  try {
    M = h.at("M").get<int>();
    obs.grid.K = h.at("K").get<int>();
    obs.D = h.at("D").get<int>();
    obs.grid.fs = h.at("Fs").get<double>();
    obs.noise_variance = h.at("noise_variance").get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("observation header: ") + e.what());
  }
  if (M < 1 || obs.grid.K < 1 || obs.D < 1) throw ValidationError("observation header: bad dimensions");
  const auto expected = static_cast<std::uintmax_t>(M) * obs.grid.K * obs.D * 16;
  if (std::filesystem::file_size(path) != expected)
    throw ValidationError("observation file size does not match its header");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  obs.y.resize(M);
  for (auto& ym : obs.y) {
    ym.resize(obs.length());
    for (Eigen::Index i = 0; i < ym.size(); ++i) {
      const double re = get_f64(in);
      const double im = get_f64(in);
      ym[i] = {re, im};
    }
  }
  validate(obs, 1);
  return obs;
}

CovarianceCache::CovarianceCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::uint64_t CovarianceCache::key(const Pdp& pdp, const FrequencyGrid& grid, double eps_rank) {
  std::uint64_t h = fnv1a64(&pdp.delta_tau, sizeof(double));
  h = fnv1a64(pdp.variances.data(), pdp.variances.size() * sizeof(double), h);
  const std::int64_t K = grid.K;
  h = fnv1a64(&K, sizeof(K), h);
  h = fnv1a64(&grid.fs, sizeof(double), h);
  h = fnv1a64(&eps_rank, sizeof(double), h);
  return h;
}

std::filesystem::path CovarianceCache::file_for(std::uint64_t k) const {
  std::ostringstream name;
  name << "cov_" << std::hex << std::setw(16) << std::setfill('0') << k << ".bin";
  return dir_ / name.str();
}

ChannelCovariance CovarianceCache::get(const Pdp& pdp, const FrequencyGrid& grid, double eps_rank) {
  const auto file = file_for(key(pdp, grid, eps_rank));
  if (std::filesystem::exists(file)) {
    ChannelCovariance cov = read_covariance(file);
    if (cov.K() == grid.K) {
      ++hits_;
      return cov;
    }
  }
  ++misses_;
  ChannelCovariance cov =
      eps_rank < 0.0 ? channel_covariance(pdp, grid) : channel_covariance_eigen(pdp, grid, eps_rank);
  write_covariance(cov, file);
  return cov;
}

void write_covariance(const ChannelCovariance& cov, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kCovMagic, sizeof(kCovMagic));
  put_u64(out, static_cast<std::uint64_t>(cov.H.rows()));
  put_u64(out, static_cast<std::uint64_t>(cov.U.cols()));
  put_matrix(out, cov.H);
  put_matrix(out, cov.U);
  if (!out) throw IoError("write failed: " + path.string());
}

ChannelCovariance read_covariance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCovMagic, 8) != 0) throw IoError("not a covariance cache file: " + path.string());
  const auto K = static_cast<Eigen::Index>(get_u64(in));
  const auto r = static_cast<Eigen::Index>(get_u64(in));
  ChannelCovariance cov;
  cov.H = get_matrix(in, K, K);
  cov.U = get_matrix(in, K, r);
  return cov;
}

std::string usage_result_to_json(const UsageResult& result, const CandidateSet& candidates) {
  if (static_cast<std::size_t>(result.costs.size()) != candidates.positions.size())
    throw ValidationError("usage result: cost map does not match the candidate set");
  json j;
  j["q_hat"] = position_json(result.q_hat);
  j["best_index"] = result.best_index;
  json map = json::array();
  for (std::size_t i = 0; i < candidates.positions.size(); ++i) {
    const auto& p = candidates.positions[i];
    map.push_back({p.x, p.y, p.z, result.costs[static_cast<Eigen::Index>(i)]});
  }
  j["cost_map"] = std::move(map);
  j["cost_map_columns"] = {"x", "y", "z", "cost"};
  return j.dump(2);
}

std::string fim_to_json(const FimResult& fim) {
  json j;
  j["K"] = fim.K;
  j["D"] = fim.D;
  j["known_magnitudes"] = fim.known_magnitudes;
  j["gauge_index"] = fim.gauge_index;
  j["labels"] = fim.labels();
  json rows = json::array();
  for (Eigen::Index i = 0; i < fim.J.rows(); ++i) {
    std::vector<double> row(fim.J.cols());
    for (Eigen::Index c = 0; c < fim.J.cols(); ++c) row[c] = fim.J(i, c);
    rows.push_back(row);
  }
  j["J"] = std::move(rows);
  return j.dump();
}

std::string crlb_to_json(const CrlbResult& crlb) {
  json j;
  j["sigma_q_sq_m2"] = crlb.sigma_q_sq;
  j["rmse_bound_m"] = std::sqrt(std::max(0.0, crlb.sigma_q_sq));
  json rows = json::array();
  for (Eigen::Index i = 0; i < crlb.position_cov.rows(); ++i) {
    std::vector<double> row(crlb.position_cov.cols());
    for (Eigen::Index c = 0; c < crlb.position_cov.cols(); ++c) row[c] = crlb.position_cov(i, c);
    rows.push_back(row);
  }
  j["position_cov"] = std::move(rows);
  return j.dump(2);
}

}  // namespace emitloc::io
