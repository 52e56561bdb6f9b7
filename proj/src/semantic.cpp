#include "simgrasp/semantic.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace simgrasp {

namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string underscore_join(const std::string& s) {
    std::string out;
    for (char c : s) out += (c == ' ' ? '_' : c);
    return out;
}

}  // namespace

Category Category::from_raw(const std::string& raw) {
    Category cat;
    cat.raw = raw;
    std::string s = underscore_join(lowercase(raw));
    // Drop a trailing parenthesized descriptor, e.g. "mouse_(computer_equipment)".
    const std::size_t paren = s.find('(');
    if (paren != std::string::npos) s = s.substr(0, paren);
    while (!s.empty() && s.back() == '_') s.pop_back();
    cat.simplified = s;
    if (cat.simplified.empty()) throw InvalidInput("category simplifies to nothing: " + raw);
    return cat;
}

Category Category::simplified_only(const std::string& name) {
    Category cat;
    cat.simplified = underscore_join(lowercase(name));
    cat.raw = cat.simplified;
    if (cat.simplified.empty()) throw InvalidInput("empty category name");
    return cat;
}

EmbeddingTable::EmbeddingTable(std::map<std::string, Eigen::VectorXd> vectors)
    : vectors_(std::move(vectors)) {
    for (const auto& [word, vec] : vectors_) {
        if (dimension_ == 0) dimension_ = static_cast<int>(vec.size());
        if (vec.size() != dimension_) {
            throw InvalidInput("embedding dimension mismatch at word: " + word);
        }
        if (vec.norm() == 0.0) throw InvalidInput("zero embedding vector for word: " + word);
    }
}

EmbeddingTable EmbeddingTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding file: " + path);
    std::map<std::string, Eigen::VectorXd> vectors;
    std::string line;
    int dim = 0;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        std::vector<double> values;
        double v;
        while (ls >> v) values.push_back(v);
        if (values.empty()) throw IoError("no values on line " + std::to_string(lineno) + " of " + path);
        if (dim == 0) dim = static_cast<int>(values.size());
        if (static_cast<int>(values.size()) != dim) {
            throw IoError("dimension mismatch on line " + std::to_string(lineno) + " of " + path);
        }
        Eigen::VectorXd vec(dim);
        for (int i = 0; i < dim; ++i) vec[i] = values[i];
        if (vec.norm() == 0.0) {
            throw IoError("zero vector on line " + std::to_string(lineno) + " of " + path);
        }
        vectors[word] = std::move(vec);
    }
    return EmbeddingTable(std::move(vectors));
}

Eigen::VectorXd EmbeddingTable::lookup(const std::string& word) const {
    auto it = vectors_.find(word);
    if (it != vectors_.end()) return it->second;

    // Compound word: average the known parts.
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dimension_);
    int found = 0;
    std::istringstream parts(word);
    std::string part;
    while (std::getline(parts, part, '_')) {
        auto pit = vectors_.find(part);
        if (pit != vectors_.end()) {
            sum += pit->second;
            ++found;
        }
    }
    if (found == 0) throw UnknownWord("word not in embedding table: " + word);
    return sum / found;
}

StubCompletionClient::StubCompletionClient(std::map<std::string, std::string> answers_by_target,
                                           std::string fallback)
    : answers_(std::move(answers_by_target)), fallback_(std::move(fallback)) {}

StubCompletionClient StubCompletionClient::load(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw IoError("cannot open stub answer file: " + json_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("stub answer file parse error: ") + e.what());
    }
    std::map<std::string, std::string> answers;
    std::string fallback;
    for (const auto& [key, value] : doc.items()) {
        if (key.empty()) fallback = value.get<std::string>();
        else answers[key] = value.get<std::string>();
    }
    return StubCompletionClient(std::move(answers), std::move(fallback));
}

std::string StubCompletionClient::complete(const std::string& prompt) {
    // The target occupies the prompt's curly slot.
    const std::size_t open = prompt.find('{');
    const std::size_t close = prompt.find('}', open == std::string::npos ? 0 : open);
    if (open != std::string::npos && close != std::string::npos) {
        const std::string target = prompt.substr(open + 1, close - open - 1);
        auto it = answers_.find(target);
        if (it != answers_.end()) return it->second;
    }
    return fallback_;
}

std::optional<HttpCompletionConfig> HttpCompletionConfig::from_env() {
    const char* endpoint = std::getenv("SIMGRASP_LLM_ENDPOINT");
    if (!endpoint || !*endpoint) return std::nullopt;
    HttpCompletionConfig config;
    config.endpoint = endpoint;
    if (const char* key = std::getenv("SIMGRASP_LLM_API_KEY")) config.api_key = key;
    if (const char* model = std::getenv("SIMGRASP_LLM_MODEL")) config.model = model;
    return config;
}

HttpCompletionClient::HttpCompletionClient(HttpCompletionConfig config)
    : config_(std::move(config)) {}

std::string HttpCompletionClient::complete(const std::string& prompt) {
    // Split endpoint into host and path.
    std::string url = config_.endpoint;
    const std::size_t scheme = url.find("://");
    std::string host = url, path = "/";
    if (scheme != std::string::npos) {
        const std::size_t slash = url.find('/', scheme + 3);
        if (slash != std::string::npos) {
            host = url.substr(0, slash);
            path = url.substr(slash);
        }
    }

    nlohmann::json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::json::array(
        {{{"role", "user"}, {"content", prompt}}});

    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        httplib::Client client(host);
        client.set_connection_timeout(config_.timeout_seconds);
        client.set_read_timeout(config_.timeout_seconds);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport failure";
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP status " + std::to_string(res->status);
            continue;
        }
        try {
            const auto doc = nlohmann::json::parse(res->body);
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("malformed completion response: ") + e.what();
        }
    }
    throw Error("completion service failed: " + last_error);
}

std::string build_prompt(const std::vector<Category>& db_categories,
                         const Category& target) {
    if (db_categories.empty()) throw InvalidInput("build_prompt: no database categories");
    std::vector<std::string> names;
    names.reserve(db_categories.size());
    for (const Category& c : db_categories) names.push_back(c.simplified);
    return "Which objects in [" + join(names, ", ") + "] are likely to be similar to a {" +
           target.raw + "} in terms of robotic grasping? Please only answer the category names.";
}

std::vector<Category> parse_answer(const std::string& answer,
                                   const std::vector<Category>& db_categories) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : answer) {
        if (c == ',' || c == '.' || std::isspace(static_cast<unsigned char>(c))) {
            if (!current.empty()) tokens.push_back(lowercase(current));
            current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty()) tokens.push_back(lowercase(current));

    std::vector<Category> matched;
    for (const Category& c : db_categories) {
        for (const std::string& t : tokens) {
            if (t == c.simplified) {
                matched.push_back(c);
                break;
            }
        }
    }
    std::sort(matched.begin(), matched.end());
    matched.erase(std::unique(matched.begin(), matched.end()), matched.end());
    return matched;
}

bool SemanticResult::contains(const Category& c) const {
    return std::find(matches.begin(), matches.end(), c) != matches.end();
}

SemanticResult semantic_match(CompletionClient* client,
                              const std::vector<Category>& db_categories,
                              const std::optional<Category>& target,
                              const EmbeddingTable* fallback_table, double delta) {
    SemanticResult result;
    if (!target) {
        result.skipped = true;
        return result;
    }
    if (client) {
        try {
            const std::string answer = client->complete(build_prompt(db_categories, *target));
            result.matches = parse_answer(answer, db_categories);
            return result;
        } catch (const Error& e) {
            std::cerr << "semantic: completion failed (" << e.what() << ")\n";
        }
    }
    if (fallback_table) {
        result.used_embedding_fallback = true;
        result.matches = prefilter_semantic(*fallback_table, *target, db_categories, delta);
        return result;
    }
    std::cerr << "semantic: unavailable, level skipped\n";
    result.skipped = true;
    return result;
}

double cosine_similarity(const EmbeddingTable& table, const std::string& a,
                         const std::string& b) {
    const Eigen::VectorXd va = table.lookup(a);
    const Eigen::VectorXd vb = table.lookup(b);
    const double na = va.norm();
    const double nb = vb.norm();
    if (na == 0.0 || nb == 0.0) throw UnknownWord("zero vector in cosine similarity");
    return va.dot(vb) / (na * nb);
}

std::vector<Category> prefilter_semantic(const EmbeddingTable& table,
                                         const Category& target,
                                         const std::vector<Category>& db_categories,
                                         double delta) {
    if (delta <= 0.0 || delta > 1.0) throw InvalidInput("prefilter_semantic: delta in (0,1]");
    Eigen::VectorXd target_vec;
    try {
        target_vec = table.lookup(target.simplified);
    } catch (const UnknownWord&) {
        std::cerr << "semantic: unknown target word '" << target.simplified
                  << "', pre-filter passes all categories\n";
        return db_categories;
    }

    struct Scored {
        double score;
        Category category;
    };
    std::vector<Scored> scored;
    scored.reserve(db_categories.size());
    for (const Category& c : db_categories) {
        double score = -std::numeric_limits<double>::infinity();
        try {
            score = cosine_similarity(table, target.simplified, c.simplified);
        } catch (const UnknownWord&) {
            // Unknown database word scores lowest.
        }
        scored.push_back({score, c});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& x, const Scored& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.category.simplified < y.category.simplified;
    });

    const std::size_t keep = static_cast<std::size_t>(
        std::ceil(delta * static_cast<double>(db_categories.size())));
    std::vector<Category> out;
    for (std::size_t i = 0; i < std::min(keep, scored.size()); ++i) {
        out.push_back(scored[i].category);
    }
    return out;
}

}  // namespace simgrasp
