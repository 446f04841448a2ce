#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace confidant::embedding {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
    bool is_zero() const noexcept;
    double norm() const noexcept;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
    virtual std::size_t dim() const noexcept = 0;
    // Recorded in knowledge-base snapshots so a reload can detect a mismatch.
    virtual nlohmann::json config() const = 0;
};

inline constexpr std::size_t kDefaultHashingDim = 256;

/// Feature-hashing bag of words: lowercased tokens (split on anything that is
/// not alphanumeric) are hashed with 64-bit FNV-1a; the low bits pick a bucket,
/// the top bit a sign. The result is L2-normalized; text without tokens maps to
/// the zero vector.
class HashingEmbedder final : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dim = kDefaultHashingDim, std::uint64_t seed = 0);

    EmbeddingVector embed(std::string_view text) const override;
    std::size_t dim() const noexcept override { return dim_; }
    nlohmann::json config() const override;

    // Bucket index and sign assigned to a single (already lowercased) token.
    std::pair<std::size_t, double> feature(std::string_view token) const noexcept;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

struct RemoteEmbedderOptions {
    std::string base_url;  // EMBEDDINGS_BASE_URL
    std::string api_key;   // EMBEDDINGS_API_KEY
    std::string model = "text-embedding-3-small";
    std::size_t dim = 0;   // 0: learn from the first response
    int timeout_seconds = 30;

    static RemoteEmbedderOptions from_env();
};

// POST {base_url}/embeddings with {"model", "input": [text]}.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    explicit RemoteEmbedder(RemoteEmbedderOptions options);

    EmbeddingVector embed(std::string_view text) const override;
    std::size_t dim() const noexcept override;
    nlohmann::json config() const override;

private:
    RemoteEmbedderOptions options_;
    mutable std::size_t learned_dim_ = 0;
};

EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider);

struct Similarity {
    double value = 0.0;
    // Set when either input is the zero vector; `value` is then 0.
    bool degenerate = false;
};

// Throws DimensionMismatch. Result is clamped to [-1, 1].
Similarity cosine(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace confidant::embedding
