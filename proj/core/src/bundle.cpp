#include "anomalyhop/bundle.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

#include "anomalyhop/errors.hpp"

namespace anomalyhop {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'A', 'H', 'O', 'P', 'M', 'D', 'L', '\0'};

uint64_t fnv1a64(const std::vector<float>& payload) {
  uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  size_t n = payload.size() * sizeof(float);
  for (size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

float round_f(double v) { return static_cast<float>(v); }

void round_through_float(Eigen::MatrixXd& m) {
  for (long i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<double>(round_f(m.data()[i]));
}
void round_through_float(Eigen::VectorXd& v) {
  for (long i = 0; i < v.size(); ++i)
    v.data()[i] = static_cast<double>(round_f(v.data()[i]));
}

struct ArrayEntry {
  std::string name;
  std::vector<long> shape;
  size_t offset;  // in floats
};

/// Append a matrix row-major to the payload and record its directory entry.
void push_matrix(std::vector<ArrayEntry>& dir, std::vector<float>& payload,
                 const std::string& name, const Eigen::MatrixXd& m) {
  dir.push_back({name, {m.rows(), m.cols()}, payload.size()});
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c)
      payload.push_back(round_f(m(r, c)));
}

void push_vector(std::vector<ArrayEntry>& dir, std::vector<float>& payload,
                 const std::string& name, const Eigen::VectorXd& v) {
  dir.push_back({name, {v.size()}, payload.size()});
  for (long i = 0; i < v.size(); ++i) payload.push_back(round_f(v[i]));
}

void push_scalar(std::vector<ArrayEntry>& dir, std::vector<float>& payload,
                 const std::string& name, double v) {
  dir.push_back({name, {1}, payload.size()});
  payload.push_back(round_f(v));
}

/// Lower triangle of a square matrix, packed row-major.
void push_lower(std::vector<ArrayEntry>& dir, std::vector<float>& payload,
                const std::string& name, const Eigen::MatrixXd& m) {
  dir.push_back({name, {m.rows() * (m.rows() + 1) / 2}, payload.size()});
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c <= r; ++c) payload.push_back(round_f(m(r, c)));
}

class Reader {
 public:
  Reader(const std::vector<float>& payload, const json& dir)
      : payload_(payload) {
    for (const auto& e : dir) {
      Entry entry;
      entry.offset = e.at("offset").get<size_t>();
      for (long s : e.at("shape")) entry.shape.push_back(s);
      entries_[e.at("name").get<std::string>()] = entry;
    }
  }

  Eigen::MatrixXd matrix(const std::string& name) const {
    const Entry& e = find(name, 2);
    Eigen::MatrixXd m(e.shape[0], e.shape[1]);
    size_t idx = e.offset;
    check_range(idx, static_cast<size_t>(m.size()));
    for (long r = 0; r < m.rows(); ++r)
      for (long c = 0; c < m.cols(); ++c) m(r, c) = payload_[idx++];
    return m;
  }

  Eigen::VectorXd vector(const std::string& name) const {
    const Entry& e = find(name, 1);
    Eigen::VectorXd v(e.shape[0]);
    check_range(e.offset, static_cast<size_t>(v.size()));
    for (long i = 0; i < v.size(); ++i) v[i] = payload_[e.offset + i];
    return v;
  }

  double scalar(const std::string& name) const {
    const Entry& e = find(name, 1);
    check_range(e.offset, 1);
    return payload_[e.offset];
  }

  Eigen::MatrixXd lower(const std::string& name, long dim) const {
    const Entry& e = find(name, 1);
    if (e.shape[0] != dim * (dim + 1) / 2)
      throw CorruptBundleError("bundle array size mismatch: " + name);
    check_range(e.offset, static_cast<size_t>(e.shape[0]));
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    size_t idx = e.offset;
    for (long r = 0; r < dim; ++r)
      for (long c = 0; c <= r; ++c) m(r, c) = payload_[idx++];
    return m;
  }

 private:
  struct Entry {
    size_t offset = 0;
    std::vector<long> shape;
  };

  const Entry& find(const std::string& name, size_t rank) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw CorruptBundleError("bundle array missing: " + name);
    if (it->second.shape.size() != rank)
      throw CorruptBundleError("bundle array rank mismatch: " + name);
    return it->second;
  }

  void check_range(size_t offset, size_t count) const {
    if (offset + count > payload_.size())
      throw CorruptBundleError("bundle array out of payload range");
  }

  const std::vector<float>& payload_;
  std::map<std::string, Entry> entries_;
};

std::string kernel_prefix(size_t hop, size_t slot) {
  return "hop" + std::to_string(hop) + "/k" + std::to_string(slot) + "/";
}

}  // namespace

void ModelBundle::freeze() {
  for (auto& bank : pipeline.hops)
    for (auto& k : bank.kernels) {
      round_through_float(k.patch_mean);
      round_through_float(k.filters);
      round_through_float(k.energies);
      k.bias = static_cast<double>(round_f(k.bias));
    }
  for (auto& m : normality_models)
    for (auto& p : m.params) {
      round_through_float(p.mean);
      round_through_float(p.chol);
    }
  update_parameter_count();
}

void ModelBundle::update_parameter_count() {
  long count = pipeline.parameter_count();
  for (const auto& m : normality_models)
    for (const auto& p : m.params)
      count += p.mean.size() + p.dim * (p.dim + 1) / 2;
  count += static_cast<long>(percentiles.size());
  parameter_count = count;
}

void save_bundle(const ModelBundle& bundle,
                 const std::filesystem::path& path) {
  std::vector<ArrayEntry> dir;
  std::vector<float> payload;

  json meta;
  meta["config"] = json::parse(config_to_json(bundle.config));
  meta["input_channels"] = bundle.pipeline.input_channels;
  meta["input_size"] = bundle.pipeline.input_size;
  meta["percentiles"] = bundle.percentiles;
  meta["fused_p999"] = bundle.fused_p999;

  json hops = json::array();
  for (size_t h = 0; h < bundle.pipeline.hops.size(); ++h) {
    const auto& bank = bundle.pipeline.hops[h];
    json jh;
    jh["n_kernels"] = bank.kernels.size();
    json outs = json::array();
    for (const auto& o : bank.outputs)
      outs.push_back({{"slot", o.kernel_slot},
                      {"filter", o.filter_index},
                      {"energy", o.cum_energy}});
    jh["outputs"] = outs;
    hops.push_back(jh);
    for (size_t p = 0; p < bank.kernels.size(); ++p) {
      const auto& k = bank.kernels[p];
      std::string prefix = kernel_prefix(h, p);
      push_vector(dir, payload, prefix + "mean", k.patch_mean);
      push_matrix(dir, payload, prefix + "filters", k.filters);
      push_vector(dir, payload, prefix + "energies", k.energies);
      push_scalar(dir, payload, prefix + "bias", k.bias);
    }
  }
  meta["hops"] = hops;

  json models = json::array();
  for (size_t m = 0; m < bundle.normality_models.size(); ++m) {
    const auto& nm = bundle.normality_models[m];
    json jm;
    jm["kind"] = static_cast<int>(nm.kind);
    jm["hop_index"] = nm.hop_index;
    jm["epsilon"] = nm.epsilon;
    jm["grid_h"] = nm.grid_h;
    jm["grid_w"] = nm.grid_w;
    jm["n_params"] = nm.params.size();
    jm["dim"] = nm.params.empty() ? 0 : nm.params[0].dim;
    models.push_back(jm);
    for (size_t c = 0; c < nm.params.size(); ++c) {
      std::string prefix =
          "nm" + std::to_string(m) + "/c" + std::to_string(c) + "/";
      push_vector(dir, payload, prefix + "mean", nm.params[c].mean);
      push_lower(dir, payload, prefix + "chol", nm.params[c].chol);
    }
  }
  meta["normality"] = models;
  meta["parameter_count"] = bundle.parameter_count;

  json arrays = json::array();
  for (const auto& e : dir)
    arrays.push_back(
        {{"name", e.name}, {"shape", e.shape}, {"offset", e.offset}});
  meta["arrays"] = arrays;

  std::string header = meta.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ExitCode::failure, "cannot write bundle: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  uint32_t version = static_cast<uint32_t>(bundle.format_version);
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  uint64_t hlen = header.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  uint64_t checksum = fnv1a64(payload);
  out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
  if (!out)
    throw Error(ExitCode::failure, "write failed: " + path.string());
}

namespace {

struct RawBundle {
  uint32_t version = 0;
  json meta;
  std::vector<float> payload;
};

RawBundle read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw CorruptBundleError("cannot open bundle: " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CorruptBundleError("bad magic: " + path.string());
  RawBundle raw;
  if (!in.read(reinterpret_cast<char*>(&raw.version), sizeof(raw.version)))
    throw CorruptBundleError("truncated bundle header");
  if (raw.version != ModelBundle::kFormatVersion)
    throw UnsupportedBundleError("unsupported bundle version " +
                                 std::to_string(raw.version));
  uint64_t hlen = 0;
  if (!in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen)))
    throw CorruptBundleError("truncated bundle header");
  std::string header(hlen, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(hlen)))
    throw CorruptBundleError("truncated bundle header");
  try {
    raw.meta = json::parse(header);
  } catch (const json::exception& e) {
    throw CorruptBundleError(std::string("bundle header parse error: ") +
                             e.what());
  }

  // Remaining bytes: payload floats followed by the 8-byte checksum.
  auto data_start = in.tellg();
  in.seekg(0, std::ios::end);
  auto end = in.tellg();
  long remaining = static_cast<long>(end - data_start);
  if (remaining < static_cast<long>(sizeof(uint64_t)) ||
      (remaining - sizeof(uint64_t)) % sizeof(float) != 0)
    throw CorruptBundleError("truncated bundle payload");
  size_t n_floats = (remaining - sizeof(uint64_t)) / sizeof(float);
  in.seekg(data_start);
  raw.payload.resize(n_floats);
  if (!in.read(reinterpret_cast<char*>(raw.payload.data()),
               static_cast<std::streamsize>(n_floats * sizeof(float))))
    throw CorruptBundleError("truncated bundle payload");
  uint64_t checksum = 0;
  if (!in.read(reinterpret_cast<char*>(&checksum), sizeof(checksum)))
    throw CorruptBundleError("truncated bundle checksum");
  if (checksum != fnv1a64(raw.payload))
    throw CorruptBundleError("bundle checksum mismatch: " + path.string());
  return raw;
}

}  // namespace

ModelBundle load_bundle(const std::filesystem::path& path) {
  RawBundle raw = read_raw(path);
  ModelBundle b;
  b.format_version = static_cast<int>(raw.version);
  try {
    b.config = config_from_json(raw.meta.at("config").dump());
    b.percentiles = raw.meta.value("percentiles", std::vector<double>{});
    b.fused_p999 = raw.meta.value("fused_p999", 0.0);
    b.parameter_count = raw.meta.value("parameter_count", 0l);

    Reader reader(raw.payload, raw.meta.at("arrays"));

    b.pipeline.spec = b.config.hop_specs;
    b.pipeline.input_channels = raw.meta.at("input_channels").get<int>();
    b.pipeline.input_size = raw.meta.at("input_size").get<int>();
    const auto& hops = raw.meta.at("hops");
    for (size_t h = 0; h < hops.size(); ++h) {
      saab::HopBank bank;
      size_t n_kernels = hops[h].at("n_kernels").get<size_t>();
      for (size_t p = 0; p < n_kernels; ++p) {
        saab::SaabKernel k;
        std::string prefix = kernel_prefix(h, p);
        k.patch_mean = reader.vector(prefix + "mean");
        k.filters = reader.matrix(prefix + "filters");
        k.energies = reader.vector(prefix + "energies");
        k.bias = reader.scalar(prefix + "bias");
        bank.kernels.push_back(std::move(k));
      }
      for (const auto& o : hops[h].at("outputs"))
        bank.outputs.push_back({o.at("slot").get<int>(),
                                o.at("filter").get<int>(),
                                o.at("energy").get<double>()});
      b.pipeline.hops.push_back(std::move(bank));
    }

    const auto& models = raw.meta.at("normality");
    for (size_t m = 0; m < models.size(); ++m) {
      normality::NormalityModel nm;
      nm.kind = static_cast<normality::ModelKind>(models[m].at("kind").get<int>());
      nm.hop_index = models[m].at("hop_index").get<int>();
      nm.epsilon = models[m].at("epsilon").get<double>();
      nm.grid_h = models[m].at("grid_h").get<int>();
      nm.grid_w = models[m].at("grid_w").get<int>();
      size_t n_params = models[m].at("n_params").get<size_t>();
      long dim = models[m].at("dim").get<long>();
      for (size_t c = 0; c < n_params; ++c) {
        std::string prefix =
            "nm" + std::to_string(m) + "/c" + std::to_string(c) + "/";
        normality::GaussianParams p;
        p.mean = reader.vector(prefix + "mean");
        p.chol = reader.lower(prefix + "chol", dim);
        p.dim = static_cast<int>(dim);
        nm.params.push_back(std::move(p));
      }
      b.normality_models.push_back(std::move(nm));
    }
  } catch (const json::exception& e) {
    throw CorruptBundleError(std::string("bundle header field error: ") +
                             e.what());
  }
  return b;
}

std::string bundle_header_json(const std::filesystem::path& path) {
  return read_raw(path).meta.dump(2);
}

}  // namespace anomalyhop
