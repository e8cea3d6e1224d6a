#include "bolab/cache.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bolab/error.hpp"

namespace bolab {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string serialize_result(const std::string& key_text, const EigenResult& result) {
  json j;
  j["key"] = key_text;
  j["eigenvalues"] = result.eigenvalues;
  j["residuals"] = result.residuals;
  j["info"] = {{"method", result.info.method},       {"iterations", result.info.iterations},
               {"seed", result.info.seed},           {"tolerance", result.info.tolerance},
               {"shift", result.info.shift},         {"grid", result.info.grid}};
  if (result.has_vectors()) {
    j["rows"] = result.vectors.rows();
    j["cols"] = result.vectors.cols();
    j["vectors"] = std::vector<double>(result.vectors.data(), result.vectors.data() + result.vectors.size());
  }
  return j.dump();
}

std::optional<EigenResult> deserialize_result(const std::string& text, const std::string& key_text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  try {
    if (j.at("key").get<std::string>() != key_text) return std::nullopt;
    EigenResult out;
    out.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    out.residuals = j.at("residuals").get<std::vector<double>>();
    const json& info = j.at("info");
    out.info.method = info.at("method").get<std::string>();
    out.info.iterations = info.at("iterations").get<int>();
    out.info.seed = info.at("seed").get<std::uint64_t>();
    out.info.tolerance = info.at("tolerance").get<double>();
    out.info.shift = info.at("shift").get<double>();
    out.info.grid = info.at("grid").get<std::string>();
    if (j.contains("vectors")) {
      const auto rows = j.at("rows").get<Eigen::Index>();
      const auto cols = j.at("cols").get<Eigen::Index>();
      const auto data = j.at("vectors").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != rows * cols) return std::nullopt;
      out.vectors = Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
    }
    if (out.residuals.size() != out.eigenvalues.size()) return std::nullopt;
    return out;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

DiskCache::DiskCache(fs::path directory) : dir_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::IOError, "cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::optional<EigenResult> DiskCache::find(const std::string& key_text) {
  const fs::path file = dir_ / (hex64(fnv1a64(key_text)) + ".json");
  std::ifstream in(file, std::ios::binary);
  std::optional<EigenResult> out;
  if (in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    out = deserialize_result(buf.str(), key_text);
  }
  std::lock_guard lock(mutex_);
  ++(out ? hits_ : misses_);
  return out;
}

void DiskCache::store(const std::string& key_text, const EigenResult& result) {
  const std::string name = hex64(fnv1a64(key_text));
  const std::string text = serialize_result(key_text, result);
  std::lock_guard lock(mutex_);
  const fs::path tmp = dir_ / (name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error(ErrorCode::IOError, "cannot write cache entry " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, dir_ / (name + ".json"), ec);
  if (ec) throw Error(ErrorCode::IOError, "cannot publish cache entry: " + ec.message());
}

DiskCache::Stats DiskCache::stats() const {
  Stats s;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      ++s.entries;
      s.bytes += entry.file_size();
    }
  }
  return s;
}

std::size_t DiskCache::clear() {
  std::lock_guard lock(mutex_);
  std::size_t removed = 0;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".json" || ext == ".tmp")) {
      fs::remove(entry.path(), ec);
      ++removed;
    }
  }
  return removed;
}

EigenResult memoize(ResultCache* cache, const std::string& key_text, const std::function<EigenResult()>& compute) {
  if (cache == nullptr) return compute();
  if (auto hit = cache->find(key_text)) return std::move(*hit);
  EigenResult result = compute();
  cache->store(key_text, result);
  return result;
}

std::string describe(const IterativeOptions& o) {
  std::ostringstream s;
  s.precision(17);
  s << "tol=" << o.tolerance << ";seed=" << o.seed << ";shift=" << o.shift << ";guard=" << o.guard
    << ";maxit=" << o.max_iterations << ";inner=" << (o.inner == InnerSolver::SparseLDLT ? "ldlt" : "pcg")
    << ";vectors=" << o.store_vectors;
  return s.str();
}

}  // namespace bolab
