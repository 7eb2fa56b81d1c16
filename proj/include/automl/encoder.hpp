#pragma once

// Card text encoding and dataset similarity.
//
// The built-in "hash-v1" embedder is a 256-bucket hashed bag of tokens
// (FNV-1a 64-bit), L2-normalized, with integer bucket counts and sums taken
// in index order. Any other encoder plugs in through `Embedder`.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "automl/cards.hpp"
#include "automl/error.hpp"

namespace automl {

inline constexpr int kHashEmbeddingDim = 256;

template <typename Scalar>
using EmbeddingT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Embedding = EmbeddingT<double>;

std::uint64_t fnv1a64(std::string_view bytes);

/// Lowercases and splits on runs of non-alphanumeric bytes.
std::vector<std::string> tokenize(std::string_view text);

/// "<scale> <task_description> <sorted labels | label prose> <input_type>",
/// absent or empty parts omitted.
std::string card_text(const DataCard& card);

Embedding embed_hash_v1(std::string_view text);

/// max(0, cosine(a, b)); 0 when either side is the zero vector.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar similarity(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "embedding dimensions differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  // Sequential sums in index order.
  Scalar aa(0), bb(0), ab(0);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    aa += a[i] * a[i];
    bb += b[i] * b[i];
    ab += a[i] * b[i];
  }
  if (aa == Scalar(0) || bb == Scalar(0)) return Scalar(0);
  return std::max(Scalar(0), ab / (std::sqrt(aa) * std::sqrt(bb)));
}

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embedding embed(std::string_view text) const = 0;
  virtual std::string id() const = 0;
};

class HashEmbedder final : public Embedder {
 public:
  Embedding embed(std::string_view text) const override { return embed_hash_v1(text); }
  std::string id() const override { return "hash-v1"; }
};

/// POSTs {"input": text} to `url` and reads {"embedding": [...]}; the result
/// is L2-normalized. Transport failures raise EndpointUnreachable.
class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(std::string url);
  Embedding embed(std::string_view text) const override;
  std::string id() const override { return url_; }

 private:
  std::string url_;
};

/// HttpEmbedder when AUTOMLGPT_EMBED_URL is set, hash-v1 otherwise.
std::unique_ptr<Embedder> make_default_embedder();

/// Embeds both cards' text and scores them.
double card_similarity(const DataCard& a, const DataCard& b, const Embedder& embedder);

}  // namespace automl
