#include "intentbench/embed_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "jsonl.hpp"

namespace intentbench {

using detail::json;

EmbeddingStore::EmbeddingStore(std::string encoder_name, Eigen::Index dim,
                               std::vector<std::string> ids, RowMatrixXf vectors, bool normalized)
    : encoder_name_(std::move(encoder_name)),
      dim_(dim),
      ids_(std::move(ids)),
      vectors_(std::move(vectors)),
      normalized_(normalized) {
  if (dim_ <= 0) throw DataError("embedding dimension must be positive");
  if (vectors_.rows() != size()) {
    throw DataError("embedding store has " + std::to_string(ids_.size()) + " ids but " +
                    std::to_string(vectors_.rows()) + " vectors");
  }
  if (size() > 0 && vectors_.cols() != dim_) {
    throw DataError("dimension mismatch: header says " + std::to_string(dim_) + ", vectors have " +
                    std::to_string(vectors_.cols()));
  }
  if (size() == 0) vectors_.resize(0, dim_);
  index_.reserve(ids_.size());
  for (Eigen::Index i = 0; i < size(); ++i) {
    const auto& id = ids_[static_cast<std::size_t>(i)];
    if (id.empty()) throw DataError("empty embedding id at row " + std::to_string(i));
    if (!index_.emplace(id, i).second) throw DataError("duplicate embedding id \"" + id + "\"");
    if (!vectors_.row(i).allFinite()) throw DataError("non-finite component in vector \"" + id + "\"");
    if (normalized_) {
      const double norm = vectors_.row(i).cast<double>().norm();
      if (std::abs(norm - 1.0) > kNormalizedTolerance) {
        throw DataError("vector \"" + id + "\" has norm " + std::to_string(norm) +
                        " in a store flagged normalized");
      }
    }
  }
}

std::optional<Eigen::Index> EmbeddingStore::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
  return a.encoder_name_ == b.encoder_name_ && a.dim_ == b.dim_ && a.normalized_ == b.normalized_ &&
         a.ids_ == b.ids_ && a.vectors_.rows() == b.vectors_.rows() &&
         (a.vectors_.size() == 0 ||
          std::memcmp(a.vectors_.data(), b.vectors_.data(), sizeof(float) * a.vectors_.size()) == 0);
}

namespace {

constexpr std::array<char, 4> kMagic{'I', 'E', 'B', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

class BinaryReader {
 public:
  BinaryReader(std::istream& in, const std::string& source) : in_(in), source_(source) {}

  template <typename T>
  T get(const char* what) {
    std::array<char, sizeof(T)> bytes;
    read(bytes.data(), sizeof(T), what);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
  }

  std::string get_string(const char* what) {
    const auto length = get<std::uint16_t>(what);
    std::string text(length, '\0');
    read(text.data(), length, what);
    return text;
  }

  void read(char* dest, std::size_t count, const char* what) {
    in_.read(dest, static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in_.gcount()) != count) {
      throw DataError(source_ + ": truncated embedding file while reading " + what);
    }
  }

 private:
  std::istream& in_;
  const std::string& source_;
};

void put_string(std::ostream& out, const std::string& text, const char* what) {
  if (text.size() > 0xFFFF) throw DataError(std::string(what) + " longer than 65535 bytes");
  put_le(out, static_cast<std::uint16_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace

EmbeddingStore read_embeddings_binary(std::istream& in, const std::string& source) {
  BinaryReader reader(in, source);
  std::array<char, 4> magic;
  reader.read(magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw DataError(source + ": magic mismatch (expected \"IEB1\")");
  const auto flags = reader.get<std::uint8_t>("flags");
  const auto count = reader.get<std::uint32_t>("count");
  const auto dim = reader.get<std::uint32_t>("dim");
  if (dim == 0) throw DataError(source + ": embedding dimension must be positive");
  std::string encoder = reader.get_string("encoder name");

  std::vector<std::string> ids;
  ids.reserve(count);
  RowMatrixXf vectors(count, dim);
  for (std::uint32_t r = 0; r < count; ++r) {
    ids.push_back(reader.get_string("row id"));
    for (std::uint32_t c = 0; c < dim; ++c) vectors(r, c) = reader.get<float>("vector component");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError(source + ": trailing bytes after " + std::to_string(count) + " rows");
  }
  try {
    return EmbeddingStore(std::move(encoder), dim, std::move(ids), std::move(vectors), flags & 1u);
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
}

EmbeddingStore read_embeddings_jsonl(std::istream& in, const std::string& source) {
  std::optional<std::string> encoder;
  Eigen::Index dim = 0;
  bool normalized = false;
  std::vector<std::string> ids;
  std::vector<std::vector<float>> rows;
  detail::for_each_json_line(in, source, [&](const json& object, const detail::LineContext& ctx) {
    if (!encoder) {
      encoder = detail::require_string(object, "encoder", ctx);
      const json& d = detail::require(object, "dim", ctx);
      if (!d.is_number_integer() || d.get<long long>() <= 0) ctx.fail("field \"dim\" must be a positive integer");
      dim = d.get<Eigen::Index>();
      const json& n = detail::require(object, "normalized", ctx);
      if (!n.is_boolean()) ctx.fail("field \"normalized\" must be a boolean");
      normalized = n.get<bool>();
      return;
    }
    ids.push_back(detail::require_nonempty_string(object, "id", ctx));
    const json& vector = detail::require(object, "vector", ctx);
    if (!vector.is_array()) ctx.fail("field \"vector\" must be an array");
    if (static_cast<Eigen::Index>(vector.size()) != dim) {
      ctx.fail("dimension mismatch for \"" + ids.back() + "\": expected " + std::to_string(dim) +
               ", got " + std::to_string(vector.size()));
    }
    std::vector<float> row;
    row.reserve(vector.size());
    for (const auto& component : vector) {
      if (!component.is_number()) ctx.fail("non-numeric component in \"" + ids.back() + "\"");
      const double value = component.get<double>();
      if (!std::isfinite(value)) ctx.fail("non-finite component in \"" + ids.back() + "\"");
      row.push_back(static_cast<float>(value));
    }
    rows.push_back(std::move(row));
  });
  if (!encoder) throw DataError(source + ": missing embedding header line");
  RowMatrixXf vectors(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    vectors.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXf>(rows[r].data(), dim);
  }
  try {
    return EmbeddingStore(std::move(*encoder), dim, std::move(ids), std::move(vectors), normalized);
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  const int first = in.peek();
  if (first == 'I') return read_embeddings_binary(in, path.string());
  return read_embeddings_jsonl(in, path.string());
}

void write_embeddings_binary(const EmbeddingStore& store, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_le(out, static_cast<std::uint8_t>(store.normalized() ? 1 : 0));
  put_le(out, static_cast<std::uint32_t>(store.size()));
  put_le(out, static_cast<std::uint32_t>(store.dim()));
  put_string(out, store.encoder_name(), "encoder name");
  for (Eigen::Index r = 0; r < store.size(); ++r) {
    put_string(out, store.ids()[static_cast<std::size_t>(r)], "row id");
    for (Eigen::Index c = 0; c < store.dim(); ++c) put_le(out, store.vectors()(r, c));
  }
}

void write_embeddings_jsonl(const EmbeddingStore& store, std::ostream& out) {
  nlohmann::ordered_json header;
  header["encoder"] = store.encoder_name();
  header["dim"] = store.dim();
  header["normalized"] = store.normalized();
  out << header.dump() << '\n';
  for (Eigen::Index r = 0; r < store.size(); ++r) {
    nlohmann::ordered_json line;
    line["id"] = store.ids()[static_cast<std::size_t>(r)];
    auto& vector = line["vector"] = nlohmann::ordered_json::array();
    // float -> double is exact and the shortest double repr parses back to the same float.
    for (Eigen::Index c = 0; c < store.dim(); ++c) vector.push_back(static_cast<double>(store.vectors()(r, c)));
    out << line.dump() << '\n';
  }
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path,
                     EmbeddingFormat format) {
  auto out = detail::open_output(path);
  if (format == EmbeddingFormat::binary) {
    write_embeddings_binary(store, out);
  } else {
    write_embeddings_jsonl(store, out);
  }
}

EmbeddingStore normalize(const EmbeddingStore& store) {
  RowMatrixXf vectors(store.size(), store.dim());
  for (Eigen::Index r = 0; r < store.size(); ++r) {
    const Eigen::RowVectorXd row = store.vectors().row(r).cast<double>();
    const double norm = row.norm();
    if (norm == 0.0) {
      throw DataError("cannot normalize zero vector \"" + store.ids()[static_cast<std::size_t>(r)] + "\"");
    }
    vectors.row(r) = (row / norm).cast<float>();
  }
  return EmbeddingStore(store.encoder_name(), store.dim(), store.ids(), std::move(vectors), true);
}

Eigen::MatrixXd gather(const EmbeddingStore& store, std::span<const std::string> ids) {
  Eigen::MatrixXd matrix(static_cast<Eigen::Index>(ids.size()), store.dim());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto row = store.find(ids[i]);
    if (!row) throw DataError("no embedding for id \"" + ids[i] + "\"");
    matrix.row(static_cast<Eigen::Index>(i)) = store.vectors().row(*row).cast<double>();
  }
  return matrix;
}

std::vector<std::string> missing_ids(const EmbeddingStore& store, std::span<const std::string> ids) {
  std::vector<std::string> missing;
  for (const auto& id : ids) {
    if (!store.contains(id)) missing.push_back(id);
  }
  return missing;
}

}  // namespace intentbench
