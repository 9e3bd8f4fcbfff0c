#include "promptfwa/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "promptfwa/pools.hpp"

namespace promptfwa::prompts {

using nlohmann::json;

namespace {

constexpr std::string_view kKnownSlots[] = {
    "problem_description",     "current_code",           "current_performance",
    "current_codes[0]",        "current_codes[1]",       "current_performances[0]",
    "current_performances[1]", "old_prompt_function",
};

bool is_known_slot(std::string_view name) {
    return std::find(std::begin(kKnownSlots), std::end(kKnownSlots), name) != std::end(kKnownSlots);
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string> slots_in(std::string_view body) {
    std::vector<std::string> found;
    for (std::size_t i = body.find('{'); i != std::string_view::npos; i = body.find('{', i + 1)) {
        const auto close = body.find('}', i + 1);
        if (close == std::string_view::npos) break;
        const auto name = body.substr(i + 1, close - i - 1);
        if (is_known_slot(name)) found.emplace_back(name);
    }
    return found;
}

std::string_view kind_prefix(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::mutation: return "m";
        case TemplateKind::crossover: return "c";
        case TemplateKind::meta: return "meta";
    }
    return "m";
}

json template_to_json(const PromptTemplate& t) {
    return {{"id", t.id},
            {"kind", to_string(t.kind)},
            {"generation", t.generation},
            {"body", t.body},
            {"created_from", t.created_from},
            {"birth", t.birth},
            {"stats", {{"uses", t.stats.uses}, {"cumulative_gain", t.stats.cumulative_gain}, {"prior", t.stats.prior}}}};
}

PromptTemplate template_from_json(const json& j) {
    PromptTemplate t;
    t.id = j.at("id").get<std::string>();
    t.kind = template_kind_from_string(j.at("kind").get<std::string>());
    t.generation = j.at("generation").get<int>();
    t.body = j.at("body").get<std::string>();
    t.created_from = j.at("created_from").get<std::string>();
    t.birth = j.at("birth").get<std::uint64_t>();
    const auto& s = j.at("stats");
    t.stats.uses = s.at("uses").get<std::size_t>();
    t.stats.cumulative_gain = s.at("cumulative_gain").get<double>();
    t.stats.prior = s.at("prior").get<double>();
    return t;
}

}  // namespace

std::string_view to_string(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::mutation: return "mutation";
        case TemplateKind::crossover: return "crossover";
        case TemplateKind::meta: return "meta";
    }
    return "mutation";
}

TemplateKind template_kind_from_string(std::string_view name) {
    for (auto k : {TemplateKind::mutation, TemplateKind::crossover, TemplateKind::meta})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown template kind: " + std::string(name));
}

const std::vector<std::string>& required_slots(TemplateKind kind) {
    static const std::vector<std::string> mutation{"problem_description", "current_code", "current_performance"};
    static const std::vector<std::string> crossover{"problem_description", "current_codes[0]", "current_codes[1]",
                                                    "current_performances[0]", "current_performances[1]"};
    static const std::vector<std::string> meta{"old_prompt_function"};
    switch (kind) {
        case TemplateKind::mutation: return mutation;
        case TemplateKind::crossover: return crossover;
        case TemplateKind::meta: return meta;
    }
    return mutation;
}

std::string render(TemplateKind kind, std::string_view body, const Slots& slots) {
    for (const auto& name : required_slots(kind))
        if (!slots.count(name)) throw RenderError("missing slot: " + name);
    std::string out;
    out.reserve(body.size());
    std::size_t i = 0;
    while (i < body.size()) {
        const auto open = body.find('{', i);
        if (open == std::string_view::npos) break;
        const auto close = body.find('}', open + 1);
        if (close == std::string_view::npos) break;
        const auto name = body.substr(open + 1, close - open - 1);
        const auto it = is_known_slot(name) ? slots.find(name) : slots.end();
        if (it == slots.end()) {
            out.append(body.substr(i, open + 1 - i));
            i = open + 1;
            continue;
        }
        out.append(body.substr(i, open - i));
        out.append(it->second);
        i = close + 1;
    }
    out.append(body.substr(std::min(i, body.size())));
    return out;
}

std::string render(const PromptTemplate& tmpl, const Slots& slots) { return render(tmpl.kind, tmpl.body, slots); }

Slots dummy_slots(TemplateKind kind) {
    Slots s;
    for (const auto& name : required_slots(kind)) s[name] = "<" + name + ">";
    return s;
}

std::string extract_tagged_block(std::string_view text, std::string_view tag) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    const auto b = text.find(open);
    if (b == std::string_view::npos) throw ExtractionError("no " + open + " block in response");
    const auto start = b + open.size();
    const auto e = text.find(close, start);
    if (e == std::string_view::npos) throw ExtractionError("unterminated " + open + " block in response");
    return std::string(trim(text.substr(start, e - start)));
}

std::string wrap_tagged(std::string_view text, std::string_view tag) {
    return "<" + std::string(tag) + ">" + std::string(text) + "</" + std::string(tag) + ">";
}

std::optional<std::string> validate_body(TemplateKind kind, std::string_view body) {
    if (trim(body).empty()) return "empty template body";
    const auto present = slots_in(body);
    for (const auto& name : required_slots(kind))
        if (std::find(present.begin(), present.end(), name) == present.end()) return "missing slot {" + name + "}";
    const auto& own = required_slots(kind);
    for (const auto& name : present)
        if (std::find(own.begin(), own.end(), name) == own.end()) return "slot {" + name + "} belongs to another kind";
    if (kind == TemplateKind::meta) {
        if (body.find("<prompt>") == std::string_view::npos || body.find("</prompt>") == std::string_view::npos)
            return "no <prompt> sentinel instruction";
    } else if (body.find("<code>") == std::string_view::npos || body.find("</code>") == std::string_view::npos) {
        return "no <code> sentinel instruction";
    }
    try {
        render(kind, body, dummy_slots(kind));
    } catch (const RenderError& e) {
        return std::string(e.what());
    }
    return std::nullopt;
}

std::string seed_body(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::mutation:
            return "You are an expert in combinatorial optimization and firework algorithms, now you are faced with a "
                   "problem: {problem_description}.\n"
                   "I will show you one firework algorithm for solving it:{current_code}. Its performance is "
                   "{current_performance}. The higher performance, the better.\n"
                   "1. Choose exactly one function in 'explode', 'mutate' or 'select' and replace it with your new design\n"
                   "2. Redesign only the chosen function, keeping input/output unchanged\n"
                   "3. Return complete code in format: <code>xxx</code> without explanations";
        case TemplateKind::crossover:
            return "You are an expert in combinatorial optimization and firework algorithms, now you are faced with a "
                   "problem: {problem_description}.\n"
                   "I will show you two firework algorithms for solving it.\n"
                   "First algorithm: {current_codes[0]}\n"
                   "Performance: {current_performances[0]}\n\n"
                   "Second algorithm: {current_codes[1]}\n"
                   "Performance: {current_performances[1]}\n"
                   "The higher performance, the better.\n"
                   "1. Perform crossover on 'explode', 'mutate' and 'select' functions using elements from both algorithms\n"
                   "2. Maintain original input/output interfaces for all functions\n"
                   "3. Return complete code in format: <code>xxx</code> without explanations";
        case TemplateKind::meta:
            return "You are an expert in prompt engineer. I have a function for generating prompt below: "
                   "{old_prompt_function}, please help me to make it more powerful and appropriate for automatic "
                   "algorithm design.\n"
                   "You can only modify the 'introduction', 'current_fwa', and 'requirements' fields, not the input and "
                   "output of the function, and make sure that this prompt allows the large language model to put the "
                   "returned code in <code>xxx</code> for easy parsing.\n"
                   "Keep every placeholder written in curly braces exactly as it appears.\n"
                   "Only return the code of the function for generating the prompt in <prompt>xxx</prompt>. Do not "
                   "explain anything";
    }
    return {};
}

// ---- TemplatePool -----------------------------------------------------------

TemplatePool::TemplatePool(std::size_t capacity_per_kind) : capacity_(capacity_per_kind) {
    if (capacity_ == 0) throw PoolError("template capacity must be positive");
}

TemplatePool TemplatePool::with_seeds(std::size_t capacity_per_kind) {
    TemplatePool pool(capacity_per_kind);
    for (auto k : {TemplateKind::mutation, TemplateKind::crossover, TemplateKind::meta})
        pool.insert(k, seed_body(k), std::string(kHandSeeded), 0.0);
    return pool;
}

PromptTemplate* TemplatePool::find(const std::string& id) {
    for (auto& t : templates_)
        if (t.id == id) return &t;
    return nullptr;
}

bool TemplatePool::contains(const std::string& id) const {
    return std::any_of(templates_.begin(), templates_.end(), [&](const auto& t) { return t.id == id; });
}

const PromptTemplate& TemplatePool::get(const std::string& id) const {
    for (const auto& t : templates_)
        if (t.id == id) return t;
    throw PoolError("unknown template id: " + id);
}

std::vector<const PromptTemplate*> TemplatePool::of_kind(TemplateKind kind) const {
    std::vector<const PromptTemplate*> out;
    for (const auto& t : templates_)
        if (t.kind == kind) out.push_back(&t);
    std::stable_sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->birth < b->birth; });
    return out;
}

std::vector<const PromptTemplate*> TemplatePool::ranked(TemplateKind kind) const {
    auto out = of_kind(kind);
    std::stable_sort(out.begin(), out.end(),
                     [](const auto* a, const auto* b) { return a->stats.estimate() > b->stats.estimate(); });
    return out;
}

const PromptTemplate& TemplatePool::best(TemplateKind kind) const {
    const auto r = ranked(kind);
    if (r.empty()) throw PoolError("no templates of kind " + std::string(to_string(kind)));
    return *r.front();
}

TemplatePool::InsertResult TemplatePool::insert(TemplateKind kind, std::string body, std::string created_from, double prior) {
    const int index = created_[kind]++;
    PromptTemplate t;
    t.id = std::string(kind_prefix(kind)) + std::to_string(index);
    t.kind = kind;
    t.generation = index;
    t.body = std::move(body);
    t.created_from = std::move(created_from);
    t.stats.prior = prior;
    t.birth = next_birth_++;
    const std::string new_id = t.id;
    templates_.push_back(std::move(t));

    InsertResult result;
    auto members = of_kind(kind);
    if (members.size() > capacity_) {
        const std::string best_id = best(kind).id;
        auto pick = [&](bool seasoned) -> const PromptTemplate* {
            const PromptTemplate* worst = nullptr;
            for (const auto* m : members) {  // oldest first, so `<=` prefers the newest among equals
                if (m->id == best_id || m->id == new_id) continue;
                if (seasoned && m->stats.uses < 3) continue;
                if (!worst || m->stats.estimate() <= worst->stats.estimate()) worst = m;
            }
            return worst;
        };
        const PromptTemplate* victim = pick(true);
        if (!victim) victim = pick(false);
        const std::string victim_id = victim ? victim->id : new_id;
        result.evicted = victim_id;
        templates_.erase(std::find_if(templates_.begin(), templates_.end(), [&](const auto& x) { return x.id == victim_id; }));
    }
    result.inserted = contains(new_id) ? &get(new_id) : nullptr;
    return result;
}

double TemplatePool::record_outcome(const std::string& id, double parent_score, double child_score) {
    auto* t = find(id);
    if (!t) throw PoolError("unknown template id: " + id);
    const double gain = child_score - parent_score;
    t->stats.uses += 1;
    t->stats.cumulative_gain += gain;
    return gain;
}

const PromptTemplate& TemplatePool::select(TemplateKind kind, Rng& rng) const {
    const auto members = of_kind(kind);
    if (members.empty()) throw PoolError("no templates of kind " + std::string(to_string(kind)));
    std::vector<double> estimates;
    for (const auto* m : members) estimates.push_back(m->stats.estimate());
    return *members[sample_by_rank(estimates, 1, rng).front()];
}

void TemplatePool::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir / "templates");
    json order = json::array();
    for (const auto& t : templates_) {
        order.push_back(t.id);
        std::ofstream(dir / "templates" / (t.id + ".json")) << template_to_json(t).dump(2) << '\n';
    }
    json created = json::object();
    for (const auto& [k, n] : created_) created[std::string(to_string(k))] = n;
    const json meta{{"capacity", capacity_}, {"created", created}, {"next_birth", next_birth_}, {"order", order}};
    std::ofstream(dir / "pool.json") << meta.dump(2) << '\n';
}

TemplatePool TemplatePool::load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "pool.json");
    if (!in) throw PoolError("cannot read " + (dir / "pool.json").string());
    const json meta = json::parse(in);
    TemplatePool pool(meta.at("capacity").get<std::size_t>());
    for (const auto& [k, n] : meta.at("created").items()) pool.created_[template_kind_from_string(k)] = n.get<int>();
    pool.next_birth_ = meta.at("next_birth").get<std::uint64_t>();
    for (const auto& id : meta.at("order")) {
        std::ifstream f(dir / "templates" / (id.get<std::string>() + ".json"));
        if (!f) throw PoolError("missing template file for " + id.get<std::string>());
        pool.templates_.push_back(template_from_json(json::parse(f)));
    }
    return pool;
}

bool operator==(const TemplatePool& a, const TemplatePool& b) {
    if (a.capacity_ != b.capacity_ || a.created_ != b.created_ || a.next_birth_ != b.next_birth_) return false;
    if (a.templates_.size() != b.templates_.size()) return false;
    for (std::size_t i = 0; i < a.templates_.size(); ++i) {
        const auto& x = a.templates_[i];
        const auto& y = b.templates_[i];
        if (x.id != y.id || x.kind != y.kind || x.generation != y.generation || x.body != y.body ||
            x.created_from != y.created_from || x.birth != y.birth || x.stats.uses != y.stats.uses ||
            x.stats.cumulative_gain != y.stats.cumulative_gain || x.stats.prior != y.stats.prior)
            return false;
    }
    return true;
}

}  // namespace promptfwa::prompts
