#pragma once

#include "simgrasp/core.hpp"

#include <Eigen/Core>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace simgrasp {

/// Object category: the raw detected string (may carry descriptors such as
/// "mouse_(computer_equipment)") plus the simplified database form.
struct Category {
    std::string raw;
    std::string simplified;  // non-empty, lowercase, underscore-joined

    Category() = default;
    /// Builds from a detected string: lowercases, joins words with
    /// underscores, and strips a trailing parenthesized descriptor for the
    /// simplified form. The raw string is preserved as given.
    static Category from_raw(const std::string& raw);
    /// Builds a database entry whose name is already simplified.
    static Category simplified_only(const std::string& name);

    bool operator<(const Category& o) const { return simplified < o.simplified; }
    bool operator==(const Category& o) const { return simplified == o.simplified; }
};

/// Word -> embedding vector table in GloVe text format.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::map<std::string, Eigen::VectorXd> vectors);

    static EmbeddingTable load(const std::string& path);

    bool contains(const std::string& word) const { return vectors_.count(word) > 0; }
    std::size_t size() const { return vectors_.size(); }
    int dimension() const { return dimension_; }

    /// Vector for a word; compound words (underscore-joined) average the
    /// vectors of their known parts. Throws UnknownWord when nothing matches.
    Eigen::VectorXd lookup(const std::string& word) const;

private:
    std::map<std::string, Eigen::VectorXd> vectors_;
    int dimension_ = 0;
};

/// Text-completion service used for semantic matching.
class CompletionClient {
public:
    virtual ~CompletionClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

/// Deterministic test double: canned answers keyed by the target slot of the
/// prompt, with an optional fallback answer.
class StubCompletionClient : public CompletionClient {
public:
    StubCompletionClient() = default;
    StubCompletionClient(std::map<std::string, std::string> answers_by_target,
                         std::string fallback);

    static StubCompletionClient load(const std::string& json_path);

    std::string complete(const std::string& prompt) override;

private:
    std::map<std::string, std::string> answers_;
    std::string fallback_;
};

struct HttpCompletionConfig {
    std::string endpoint;  // e.g. http://host:port/v1/chat/completions
    std::string api_key;
    std::string model;
    int timeout_seconds = 20;

    /// Reads SIMGRASP_LLM_ENDPOINT / _API_KEY / _MODEL.
    static std::optional<HttpCompletionConfig> from_env();
};

/// OpenAI-style chat-completions client. One retry on transport failure.
class HttpCompletionClient : public CompletionClient {
public:
    explicit HttpCompletionClient(HttpCompletionConfig config);
    std::string complete(const std::string& prompt) override;

private:
    HttpCompletionConfig config_;
};

/// Renders the matching prompt; database names appear simplified inside the
/// square brackets, the target keeps its raw descriptors in the curly slot.
std::string build_prompt(const std::vector<Category>& db_categories,
                         const Category& target);

/// Extracts the database categories named in a completion answer. Tokens are
/// split on commas, whitespace, and periods, matched case-insensitively;
/// unknown tokens are ignored.
std::vector<Category> parse_answer(const std::string& answer,
                                   const std::vector<Category>& db_categories);

struct SemanticResult {
    bool skipped = false;
    bool used_embedding_fallback = false;
    std::vector<Category> matches;

    bool contains(const Category& c) const;
};

/// Semantic matching with fail-open degradation: no target category skips the
/// level; a client failure falls back to embedding similarity when a table is
/// available and otherwise skips.
SemanticResult semantic_match(CompletionClient* client,
                              const std::vector<Category>& db_categories,
                              const std::optional<Category>& target,
                              const EmbeddingTable* fallback_table = nullptr,
                              double delta = 0.5);

/// Cosine similarity between two words, in [-1, 1].
double cosine_similarity(const EmbeddingTable& table, const std::string& a,
                         const std::string& b);

/// The ceil(delta * k) categories most cosine-similar to the target, ties
/// broken by name order. Unknown target words pass everything through.
std::vector<Category> prefilter_semantic(const EmbeddingTable& table,
                                         const Category& target,
                                         const std::vector<Category>& db_categories,
                                         double delta = 0.5);

}  // namespace simgrasp
