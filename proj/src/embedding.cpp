#include "confidant/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "confidant/error.hpp"
#include "confidant/http.hpp"
#include "confidant/text.hpp"

namespace confidant::embedding {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = kFnvOffset ^ (seed * 0x9E3779B97F4A7C15ULL);
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    // final avalanche so nearby tokens spread across buckets
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v != nullptr ? std::string(v) : fallback;
}

}  // namespace

bool EmbeddingVector::is_zero() const noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double EmbeddingVector::norm() const noexcept {
    long double acc = 0.0L;
    for (double v : values) acc += static_cast<long double>(v) * v;
    return static_cast<double>(std::sqrt(acc));
}

HashingEmbedder::HashingEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw Error(ErrorCode::InvalidArgument, "embedding dim must be positive");
}

std::pair<std::size_t, double> HashingEmbedder::feature(std::string_view token) const noexcept {
    const std::uint64_t h = fnv1a(token, seed_);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    return {static_cast<std::size_t>(h % dim_), sign};
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) const {
    EmbeddingVector v;
    v.values.assign(dim_, 0.0);
    for (const auto& token : text::word_tokens(text)) {
        const auto [bucket, sign] = feature(token);
        v.values[bucket] += sign;
    }
    const double n = v.norm();
    if (n > 0.0) {
        for (double& x : v.values) x /= n;
    }
    return v;
}

nlohmann::json HashingEmbedder::config() const {
    return {{"provider", "hashing"}, {"dim", dim_}, {"seed", seed_}};
}

RemoteEmbedderOptions RemoteEmbedderOptions::from_env() {
    RemoteEmbedderOptions o;
    o.base_url = env_or("EMBEDDINGS_BASE_URL", "https://api.openai.com/v1");
    o.api_key = env_or("EMBEDDINGS_API_KEY", "");
    o.model = env_or("EMBEDDINGS_MODEL", o.model);
    return o;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderOptions options) : options_(std::move(options)) {}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
    const nlohmann::json body = {{"model", options_.model}, {"input", {std::string(text)}}};
    http::PostOptions post;
    post.bearer_token = options_.api_key;
    post.timeout_seconds = options_.timeout_seconds;
    const auto reply = http::post_json(options_.base_url, "/embeddings", body, post);

    EmbeddingVector v;
    try {
        v.values = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::RemoteError, std::string("unexpected embeddings reply: ") + e.what());
    }
    for (double x : v.values) {
        if (!std::isfinite(x)) throw Error(ErrorCode::RemoteError, "embedding has non-finite component");
    }
    const std::size_t expected = dim();
    if (expected != 0 && v.dim() != expected) {
        throw Error(ErrorCode::DimensionMismatch, "remote embedder changed dimension");
    }
    if (learned_dim_ == 0) learned_dim_ = v.dim();
    return v;
}

std::size_t RemoteEmbedder::dim() const noexcept {
    return options_.dim != 0 ? options_.dim : learned_dim_;
}

nlohmann::json RemoteEmbedder::config() const {
    return {{"provider", "remote"}, {"model", options_.model}, {"dim", dim()}};
}

EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider) {
    return provider.embed(text);
}

Similarity cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "cosine of " + std::to_string(a.size()) + "-d and " + std::to_string(b.size()) + "-d vectors");
    }
    // Extended-precision accumulation keeps exactly representable ratios exact.
    long double dot = 0.0L;
    long double na = 0.0L;
    long double nb = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        na += static_cast<long double>(a[i]) * a[i];
        nb += static_cast<long double>(b[i]) * b[i];
    }
    if (na == 0.0L || nb == 0.0L) return {0.0, true};
    const double value = static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
    return {std::clamp(value, -1.0, 1.0), false};
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    return cosine(a.values, b.values).value;
}

}  // namespace confidant::embedding
