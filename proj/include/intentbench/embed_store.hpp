#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace intentbench {

using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Tolerance on the L2 norm of every row of a store flagged as normalized.
inline constexpr double kNormalizedTolerance = 1e-4;

/// Id-aligned 32-bit embeddings. Validated on construction and immutable afterwards.
class EmbeddingStore {
 public:
  /// Throws DataError on a row/id count mismatch, an empty or duplicate id, a non-finite
  /// component, or a normalized flag that the rows do not honor.
  EmbeddingStore(std::string encoder_name, Eigen::Index dim, std::vector<std::string> ids,
                 RowMatrixXf vectors, bool normalized);

  const std::string& encoder_name() const { return encoder_name_; }
  Eigen::Index dim() const { return dim_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(ids_.size()); }
  bool normalized() const { return normalized_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const RowMatrixXf& vectors() const { return vectors_; }

  std::optional<Eigen::Index> find(const std::string& id) const;
  bool contains(const std::string& id) const { return find(id).has_value(); }

  friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b);

 private:
  std::string encoder_name_;
  Eigen::Index dim_;
  std::vector<std::string> ids_;
  RowMatrixXf vectors_;
  bool normalized_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

enum class EmbeddingFormat { binary, jsonl };

/// Reads either encoding; the binary magic "IEB1" selects the binary reader.
EmbeddingStore load_embeddings(const std::filesystem::path& path);
EmbeddingStore read_embeddings_binary(std::istream& in, const std::string& source = "<stream>");
EmbeddingStore read_embeddings_jsonl(std::istream& in, const std::string& source = "<stream>");

void write_embeddings_binary(const EmbeddingStore& store, std::ostream& out);
void write_embeddings_jsonl(const EmbeddingStore& store, std::ostream& out);
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path,
                     EmbeddingFormat format);

/// Scales every row to unit L2 norm. Throws DataError naming the first zero row.
EmbeddingStore normalize(const EmbeddingStore& store);

/// Rows for `ids` in the given order, widened to double. Throws DataError naming the first
/// absent id.
Eigen::MatrixXd gather(const EmbeddingStore& store, std::span<const std::string> ids);

/// Ids from `ids` the store lacks, in input order.
std::vector<std::string> missing_ids(const EmbeddingStore& store, std::span<const std::string> ids);

}  // namespace intentbench
