#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "promptfwa/rng.hpp"

namespace promptfwa::prompts {

enum class TemplateKind { mutation, crossover, meta };

std::string_view to_string(TemplateKind kind);
TemplateKind template_kind_from_string(std::string_view name);

class RenderError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class ExtractionError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class PoolError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kHandSeeded = "hand-seeded";

struct TemplateStats {
    std::size_t uses = 0;
    double cumulative_gain = 0;
    double prior = 0;  // reported while uses == 0

    double estimate() const { return uses == 0 ? prior : cumulative_gain / static_cast<double>(uses); }
};

struct PromptTemplate {
    std::string id;
    TemplateKind kind = TemplateKind::mutation;
    int generation = 0;
    std::string body;
    std::string created_from{kHandSeeded};
    TemplateStats stats;
    std::uint64_t birth = 0;  // insertion order across the whole pool
};

using Slots = std::map<std::string, std::string, std::less<>>;

/// Slot names a template of `kind` must contain, without braces.
const std::vector<std::string>& required_slots(TemplateKind kind);

/// Replaces every `{name}` whose name is a known slot of any kind. Values are
/// inserted verbatim and never rescanned; other braces pass through unchanged.
/// Throws RenderError naming the first required slot missing from `slots`.
std::string render(TemplateKind kind, std::string_view body, const Slots& slots);
std::string render(const PromptTemplate& tmpl, const Slots& slots);

/// Placeholder values for every slot of `kind`, for dry-run validation.
Slots dummy_slots(TemplateKind kind);

/// Content of the first `<tag>...</tag>` pair, whitespace-trimmed.
/// Throws ExtractionError when no opening tag or no closing tag follows it.
std::string extract_tagged_block(std::string_view text, std::string_view tag);

/// Wraps text in `<tag>` / `</tag>`.
std::string wrap_tagged(std::string_view text, std::string_view tag);

/// Reason the body is unusable for `kind`, or nullopt when it is valid.
std::optional<std::string> validate_body(TemplateKind kind, std::string_view body);

/// Hand-written starting bodies for each kind.
std::string seed_body(TemplateKind kind);

/// Per-kind template pools with gain attribution and capacity-bounded eviction.
class TemplatePool {
  public:
    explicit TemplatePool(std::size_t capacity_per_kind = 5);

    /// Inserts the three seed templates (ids m0, c0, meta0).
    static TemplatePool with_seeds(std::size_t capacity_per_kind = 5);

    struct InsertResult {
        const PromptTemplate* inserted = nullptr;
        std::optional<std::string> evicted;
    };

    /// Adds a template with the next id of its kind (m1, m2, ..., c1, ...),
    /// generation = number of templates of that kind created before it, and the
    /// given prior. Over capacity, evicts the lowest estimate among templates used
    /// at least 3 times, else the lowest estimate overall, never the best.
    InsertResult insert(TemplateKind kind, std::string body, std::string created_from, double prior);

    /// uses += 1, cumulative_gain += child - parent. Returns the gain.
    double record_outcome(const std::string& id, double parent_score, double child_score);

    /// Rank-law draw over templates of `kind`, ranked by estimate then age.
    const PromptTemplate& select(TemplateKind kind, Rng& rng) const;

    /// Highest estimate, oldest among equals.
    const PromptTemplate& best(TemplateKind kind) const;

    const PromptTemplate& get(const std::string& id) const;
    bool contains(const std::string& id) const;

    /// Templates of `kind`, oldest first.
    std::vector<const PromptTemplate*> of_kind(TemplateKind kind) const;
    const std::vector<PromptTemplate>& all() const { return templates_; }
    std::size_t capacity() const { return capacity_; }

    /// One JSON file per template plus pool.json with counters.
    void save(const std::filesystem::path& dir) const;
    static TemplatePool load(const std::filesystem::path& dir);

    friend bool operator==(const TemplatePool& a, const TemplatePool& b);

  private:
    PromptTemplate* find(const std::string& id);
    std::vector<const PromptTemplate*> ranked(TemplateKind kind) const;

    std::size_t capacity_;
    std::vector<PromptTemplate> templates_;
    std::map<TemplateKind, int> created_;
    std::uint64_t next_birth_ = 0;
};

}  // namespace promptfwa::prompts
