#include "automl/encoder.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>

#include "automl/http_util.hpp"

namespace automl {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      current.push_back(static_cast<char>(c));
    } else if (c >= 'A' && c <= 'Z') {
      current.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string card_text(const DataCard& card) {
  std::vector<std::string> parts;
  if (card.scale) parts.push_back(std::to_string(*card.scale));
  if (!card.task_description.empty()) parts.push_back(card.task_description);
  if (const auto* classes = std::get_if<std::vector<std::string>>(&card.label_space)) {
    auto sorted = *classes;
    std::sort(sorted.begin(), sorted.end());
    parts.insert(parts.end(), sorted.begin(), sorted.end());
  } else if (!std::get<std::string>(card.label_space).empty()) {
    parts.push_back(std::get<std::string>(card.label_space));
  }
  parts.emplace_back(to_string(card.input_type));

  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out.push_back(' ');
    out += p;
  }
  return out;
}

Embedding embed_hash_v1(std::string_view text) {
  Embedding v = Embedding::Zero(kHashEmbeddingDim);
  for (const auto& token : tokenize(text)) v[static_cast<Eigen::Index>(fnv1a64(token) % kHashEmbeddingDim)] += 1.0;
  // Explicit in-order accumulation; counts are integers so the sum is exact.
  double sum_sq = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) sum_sq += v[i] * v[i];
  if (sum_sq > 0.0) v /= std::sqrt(sum_sq);
  return v;
}

HttpEmbedder::HttpEmbedder(std::string url) : url_(std::move(url)) {}

Embedding HttpEmbedder::embed(std::string_view text) const {
  const auto parts = split_url(url_);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  const auto body = json{{"input", std::string(text)}}.dump();
  const auto res = client.Post(parts.path, body, "application/json");
  if (!res) throw Error(ErrorCode::EndpointUnreachable, "embedding endpoint unreachable: " + url_);
  if (res->status != 200) {
    throw Error(ErrorCode::BackendError, "embedding endpoint returned HTTP " + std::to_string(res->status));
  }
  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BackendError, std::string("bad embedding reply: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("embedding") || !reply["embedding"].is_array()) {
    throw Error(ErrorCode::BackendError, "embedding reply lacks an 'embedding' array");
  }
  const auto& values = reply["embedding"];
  Embedding v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].is_number()) throw Error(ErrorCode::BackendError, "non-numeric embedding entry");
    v[static_cast<Eigen::Index>(i)] = values[i].get<double>();
  }
  const double n = v.norm();
  if (n > 0.0) v /= n;
  return v;
}

std::unique_ptr<Embedder> make_default_embedder() {
  if (const char* url = std::getenv("AUTOMLGPT_EMBED_URL"); url && *url) return std::make_unique<HttpEmbedder>(url);
  return std::make_unique<HashEmbedder>();
}

double card_similarity(const DataCard& a, const DataCard& b, const Embedder& embedder) {
  return similarity(embedder.embed(card_text(a)), embedder.embed(card_text(b)));
}

}  // namespace automl
