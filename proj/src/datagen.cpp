// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneclip/datagen.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "tuneclip/binary_io.hpp"
#include "tuneclip/error.hpp"
#include "tuneclip/rng.hpp"

namespace tuneclip {

namespace {

constexpr std::string_view kDatasetMagic = "FCDS";
constexpr std::uint16_t kDatasetVersion = 1;

enum Stream : std::uint64_t { kLinkMap = 1, kPrototypes = 2, kSamples = 3 };

// Rows of the returned matrix are orthonormal when rows <= cols, columns
// otherwise (modified Gram-Schmidt on the shorter side).
Matrix orthonormal_map(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix a(rows, cols);
  for (double& x : a.values()) x = rng.gaussian();
  const bool by_rows = rows <= cols;
  const std::size_t count = by_rows ? rows : cols;
  const std::size_t len = by_rows ? cols : rows;
  auto at = [&](std::size_t v, std::size_t k) -> double& { return by_rows ? a(v, k) : a(k, v); };
  for (std::size_t v = 0; v < count; ++v) {
    for (std::size_t w = 0; w < v; ++w) {
      double proj = 0.0;
      for (std::size_t k = 0; k < len; ++k) proj += at(v, k) * at(w, k);
      for (std::size_t k = 0; k < len; ++k) at(v, k) -= proj * at(w, k);
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < len; ++k) norm += at(v, k) * at(v, k);
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < len; ++k) at(v, k) /= norm;
  }
  return a;
}

void apply(const Matrix& a, std::span<const double> x, std::span<double> out) {
  for (std::size_t r = 0; r < a.rows(); ++r) out[r] = dot(a.row(r), x);
}

}  // namespace

void DatasetSpec::validate() const {
  if (n < 2) raise(ErrorKind::config, "DatasetSpec.n must be >= 2 (got " + std::to_string(n) + ")");
  if (d_img < 1) raise(ErrorKind::config, "DatasetSpec.d_img must be >= 1");
  if (d_txt < 1) raise(ErrorKind::config, "DatasetSpec.d_txt must be >= 1");
  if (k_concepts < 1) raise(ErrorKind::config, "DatasetSpec.k_concepts must be >= 1");
  if (k_concepts > n) {
    raise(ErrorKind::config, "DatasetSpec.k_concepts must be <= n (got " +
                                 std::to_string(k_concepts) + " > " + std::to_string(n) + ")");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    raise(ErrorKind::config, "DatasetSpec.noise_sigma must be finite and >= 0");
  }
}

PairedDataset generate(const DatasetSpec& spec) {
  spec.validate();

  Rng link_rng = Rng::derive(spec.seed, kLinkMap);
  const Matrix link = orthonormal_map(spec.d_txt, spec.d_img, link_rng);

  Rng proto_rng = Rng::derive(spec.seed, kPrototypes);
  Matrix img_proto(spec.k_concepts, spec.d_img);
  for (double& x : img_proto.values()) x = proto_rng.gaussian();
  Matrix txt_proto(spec.k_concepts, spec.d_txt);
  for (std::size_t c = 0; c < spec.k_concepts; ++c) apply(link, img_proto.row(c), txt_proto.row(c));

  PairedDataset data;
  data.images = Matrix(spec.n, spec.d_img);
  data.texts = Matrix(spec.n, spec.d_txt);
  data.concepts.resize(spec.n);
  data.k_concepts = spec.k_concepts;
  data.seed = spec.seed;

  // Balanced labels (i mod k) in random order: each sample's concept is
  // uniform over the k concepts and k == n gives n distinct concepts.
  Rng sample_rng = Rng::derive(spec.seed, kSamples);
  std::vector<std::size_t> labels(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) labels[i] = i % spec.k_concepts;
  sample_rng.shuffle(labels);

  std::vector<double> xi(spec.d_img);
  std::vector<double> mapped(spec.d_txt);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto c = static_cast<std::uint32_t>(labels[i]);
    data.concepts[i] = c;
    for (double& x : xi) x = sample_rng.gaussian();
    apply(link, xi, mapped);
    auto img = data.images.row(i);
    auto txt = data.texts.row(i);
    for (std::size_t k = 0; k < spec.d_img; ++k) img[k] = img_proto(c, k) + spec.noise_sigma * xi[k];
    for (std::size_t k = 0; k < spec.d_txt; ++k) txt[k] = txt_proto(c, k) + spec.noise_sigma * mapped[k];
  }
  return data;
}

PairedDataset PairedDataset::subset(std::span<const std::size_t> indices) const {
  PairedDataset out;
  out.images = images.gather_rows(indices);
  out.texts = texts.gather_rows(indices);
  out.concepts.reserve(indices.size());
  for (std::size_t i : indices) out.concepts.push_back(concepts[i]);
  out.k_concepts = k_concepts;
  out.seed = seed;
  return out;
}

std::pair<PairedDataset, PairedDataset> split(const PairedDataset& data, double test_fraction,
                                              std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    raise(ErrorKind::config, "test_fraction must lie in (0, 1)");
  }
  const std::size_t n = data.size();
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (n_test < 1 || n - n_test < 2) {
    raise(ErrorKind::config, "degenerate split: n=" + std::to_string(n) +
                                 " test=" + std::to_string(n_test) + " (train needs >= 2, test >= 1)");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  const std::span<const std::size_t> all(order);
  return {data.subset(all.subspan(n_test)), data.subset(all.first(n_test))};
}

void save_dataset(const PairedDataset& data, const std::filesystem::path& path) {
  const std::size_t n = data.size();
  if (data.images.rows() != n || data.texts.rows() != n) {
    raise(ErrorKind::schema, "dataset row counts disagree");
  }
  io::Writer w;
  w.bytes(kDatasetMagic);
  w.put<std::uint16_t>(kDatasetVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(n));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(data.images.cols()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(data.texts.cols()));
  w.put<std::uint32_t>(data.k_concepts);
  w.put_all<double>(data.images.values());
  w.put_all<double>(data.texts.values());
  w.put_all<std::uint32_t>(data.concepts);
  w.put<std::uint64_t>(data.seed);
  io::write_file_atomic(path, w.buffer());
}

PairedDataset load_dataset(const std::filesystem::path& path) {
  const std::vector<char> bytes = io::read_file(path);
  io::Reader r(bytes);
  r.expect_bytes(kDatasetMagic);
  const auto version = r.get<std::uint16_t>();
  if (version != kDatasetVersion) {
    raise(ErrorKind::version, "unsupported dataset version " + std::to_string(version));
  }
  const auto n = r.get<std::uint32_t>();
  const auto d_img = r.get<std::uint32_t>();
  const auto d_txt = r.get<std::uint32_t>();
  const auto k = r.get<std::uint32_t>();

  const std::size_t row_bytes = static_cast<std::size_t>(d_img + d_txt) * sizeof(double) + sizeof(std::uint32_t);
  const std::size_t payload = static_cast<std::size_t>(n) * row_bytes + sizeof(std::uint64_t);
  const std::size_t remaining = r.remaining();
  if (remaining != payload) {
    // Whole rows missing or extra: the header disagrees with the body.
    if (remaining >= sizeof(std::uint64_t) && (remaining - sizeof(std::uint64_t)) % row_bytes == 0) {
      raise(ErrorKind::schema, "header declares n=" + std::to_string(n) + " but the file holds " +
                                   std::to_string((remaining - sizeof(std::uint64_t)) / row_bytes) + " rows");
    }
    raise(ErrorKind::parse, "truncated or padded dataset file: expected " + std::to_string(payload) +
                                " payload bytes after offset " + std::to_string(r.offset()) + ", found " +
                                std::to_string(remaining));
  }

  PairedDataset data;
  data.images = Matrix(n, d_img);
  data.texts = Matrix(n, d_txt);
  data.concepts.resize(n);
  data.k_concepts = k;
  r.get_all<double>(data.images.values());
  r.get_all<double>(data.texts.values());
  r.get_all<std::uint32_t>(data.concepts);
  data.seed = r.get<std::uint64_t>();
  for (std::uint32_t c : data.concepts) {
    if (c >= k) raise(ErrorKind::schema, "concepts label " + std::to_string(c) + " >= k_concepts");
  }
  return data;
}

namespace io {

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const char> bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) raise(ErrorKind::io, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) raise(ErrorKind::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace io

}  // namespace tuneclip
