#include "reasonprobe/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_set>

#include "reasonprobe/io.hpp"

namespace reasonprobe {

namespace {

constexpr std::string_view kMagic = "RPEMB1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t len) {
    if (bytes_.size() - pos_ < len) throw std::runtime_error("embeddings file truncated");
    auto out = bytes_.substr(pos_, len);
    pos_ += len;
    return out;
  }
  std::uint32_t u32() {
    const auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8U) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

EmbeddingMatrix EmbeddingMatrix::from_rows(const std::vector<std::vector<double>>& rows,
                                           std::vector<std::string> ids) {
  if (ids.size() != rows.size()) throw std::invalid_argument("embedding ids and rows differ in count");
  EmbeddingMatrix m;
  m.n = rows.size();
  m.dim = rows.empty() ? 0 : rows.front().size();
  m.values.reserve(m.n * m.dim);
  for (const auto& r : rows) {
    if (r.size() != m.dim) throw std::invalid_argument("embedding rows have inconsistent dimension");
    m.values.insert(m.values.end(), r.begin(), r.end());
  }
  m.sentence_ids = std::move(ids);
  m.zero_rows.assign(m.n, false);
  return m;
}

EmbeddingMatrix l2_normalize(EmbeddingMatrix matrix) {
  matrix.zero_rows.assign(matrix.n, false);
  for (std::size_t i = 0; i < matrix.n; ++i) {
    auto r = matrix.row(i);
    double sq = 0.0;
    for (double v : r) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm < kZeroNormThreshold) {
      matrix.zero_rows[i] = true;
      continue;
    }
    for (double& v : r) v /= norm;
  }
  return matrix;
}

CompactedMatrix drop_zero_rows(const EmbeddingMatrix& matrix) {
  CompactedMatrix out;
  out.matrix.dim = matrix.dim;
  for (std::size_t i = 0; i < matrix.n; ++i) {
    if (!matrix.zero_rows.empty() && matrix.zero_rows[i]) continue;
    const auto r = matrix.row(i);
    out.matrix.values.insert(out.matrix.values.end(), r.begin(), r.end());
    out.matrix.sentence_ids.push_back(matrix.sentence_ids[i]);
    out.original_index.push_back(i);
  }
  out.matrix.n = out.original_index.size();
  out.matrix.zero_rows.assign(out.matrix.n, false);
  return out;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("euclidean_distance: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  return std::sqrt(squared_distance(a.data(), b.data(), a.size()));
}

std::string serialize_embeddings(const EmbeddingMatrix& matrix) {
  std::string out(kMagic);
  put_u32(out, static_cast<std::uint32_t>(matrix.n));
  put_u32(out, static_cast<std::uint32_t>(matrix.dim));
  out.reserve(out.size() + matrix.values.size() * 4);
  for (double v : matrix.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  for (const auto& id : matrix.sentence_ids) {
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    out += id;
  }
  return out;
}

EmbeddingMatrix parse_embeddings(std::string_view bytes, std::optional<std::size_t> expected_dim) {
  Reader r(bytes);
  if (r.take(kMagic.size()) != kMagic) throw std::runtime_error("not an embeddings file (bad magic)");
  EmbeddingMatrix m;
  m.n = r.u32();
  m.dim = r.u32();
  if (expected_dim && *expected_dim != m.dim)
    throw std::runtime_error("embedding dimension " + std::to_string(m.dim) +
                             " does not match expected " + std::to_string(*expected_dim));
  m.values.resize(m.n * m.dim);
  for (auto& v : m.values) v = static_cast<double>(std::bit_cast<float>(r.u32()));
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < m.n; ++i) {
    const auto len = r.u32();
    std::string id(r.take(len));
    if (!seen.insert(id).second) throw std::runtime_error("duplicate sentence id " + id);
    m.sentence_ids.push_back(std::move(id));
  }
  if (!r.done()) throw std::runtime_error("trailing bytes in embeddings file");
  m.zero_rows.assign(m.n, false);
  return m;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix) {
  write_file_atomic(path, serialize_embeddings(matrix));
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path, std::optional<std::size_t> expected_dim) {
  return parse_embeddings(read_file(path), expected_dim);
}

}  // namespace reasonprobe
