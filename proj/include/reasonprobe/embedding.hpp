#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace reasonprobe {

inline constexpr double kZeroNormThreshold = 1e-12;

/// Row-major n x dim matrix of sentence vectors with aligned ids.
struct EmbeddingMatrix {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> values;
  std::vector<std::string> sentence_ids;
  std::vector<bool> zero_rows;  // set by l2_normalize

  std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * dim, dim}; }

  /// Builds from vectors; throws on ragged rows or id count mismatch.
  static EmbeddingMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                   std::vector<std::string> ids);
};

/// Read-only view of a dense row-major point set, as consumed by clustering.
struct PointView {
  const double* data = nullptr;
  std::size_t n = 0;
  std::size_t dim = 0;

  std::span<const double> row(std::size_t i) const { return {data + i * dim, dim}; }
};

inline PointView view_of(const EmbeddingMatrix& m) { return {m.values.data(), m.n, m.dim}; }

/// Divides each row by its Euclidean norm; rows with norm < 1e-12 are left
/// as-is and flagged in zero_rows.
EmbeddingMatrix l2_normalize(EmbeddingMatrix matrix);

/// Matrix without the flagged zero rows, plus the original index of each kept row.
struct CompactedMatrix {
  EmbeddingMatrix matrix;
  std::vector<std::size_t> original_index;
};
CompactedMatrix drop_zero_rows(const EmbeddingMatrix& matrix);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Unchecked squared distance for hot loops; sizes must match.
inline double squared_distance(const double* a, const double* b, std::size_t dim) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= dim; k += 4) {
    const double d0 = a[k] - b[k];
    const double d1 = a[k + 1] - b[k + 1];
    const double d2 = a[k + 2] - b[k + 2];
    const double d3 = a[k + 3] - b[k + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; k < dim; ++k) {
    const double d = a[k] - b[k];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

/// Little-endian: "RPEMB1", u32 n, u32 dim, n*dim float32, then each id as
/// u32 byte length + UTF-8 bytes.
std::string serialize_embeddings(const EmbeddingMatrix& matrix);
EmbeddingMatrix parse_embeddings(std::string_view bytes,
                                 std::optional<std::size_t> expected_dim = std::nullopt);
void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix);
EmbeddingMatrix read_embeddings(const std::filesystem::path& path,
                                std::optional<std::size_t> expected_dim = std::nullopt);

}  // namespace reasonprobe
