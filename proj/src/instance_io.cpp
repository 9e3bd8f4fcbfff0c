#include "promptfwa/instance_io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace promptfwa::problems {

namespace {

struct Token {
    double value;
    std::size_t line;
};

std::vector<Token> tokenize_numbers(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        const std::string word(text.substr(i, j - i));
        try {
            std::size_t used = 0;
            const double v = std::stod(word, &used);
            if (used != word.size()) throw std::invalid_argument(word);
            tokens.push_back({v, line});
        } catch (const std::exception&) {
            throw ParseError("malformed number '" + word + "'", line);
        }
        i = j;
    }
    return tokens;
}

std::size_t as_count(const Token& t, const char* what) {
    if (t.value < 0 || t.value != static_cast<double>(static_cast<long long>(t.value)))
        throw ParseError(std::string(what) + " must be a nonnegative integer", t.line);
    return static_cast<std::size_t>(t.value);
}

Matrix<double> matrix_from_json(const json& rows, const char* what) {
    if (!rows.is_array()) throw ParseError(std::string(what) + " must be an array of rows", 0);
    Matrix<double> m;
    m.rows = rows.size();
    m.cols = m.rows ? rows.front().size() : 0;
    for (const auto& row : rows) {
        if (!row.is_array() || row.size() != m.cols) throw ParseError(std::string(what) + " rows must have equal length", 0);
        for (const auto& x : row) m.data.push_back(x.get<double>());
    }
    return m;
}

template <class T>
json matrix_to_json(const Matrix<T>& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

void check_declared(const json& data, const char* key, std::size_t actual) {
    if (data.contains(key) && data.at(key).get<std::size_t>() != actual)
        throw ParseError(std::string(key) + " disagrees with the data (" + std::to_string(actual) + ")", 0);
}

}  // namespace

AircraftLandingInstance parse_airland(std::string_view text) {
    const auto tokens = tokenize_numbers(text);
    if (tokens.size() < 2) throw ParseError("missing header 'n freeze_time'", tokens.empty() ? 1 : tokens.back().line);

    AircraftLandingInstance inst;
    const std::size_t n = as_count(tokens[0], "plane count");
    inst.freeze_time = tokens[1].value;
    const std::size_t per_plane = 6 + n;
    const std::size_t expected = 2 + n * per_plane;
    if (tokens.size() != expected) {
        const std::size_t line = tokens.size() > expected ? tokens[expected].line : tokens.back().line;
        throw ParseError("malformed token count: expected " + std::to_string(expected) + " numbers, found " +
                             std::to_string(tokens.size()),
                         line);
    }

    inst.separation = Matrix<double>(n, n);
    for (std::size_t p = 0; p < n; ++p) {
        const Token* t = &tokens[2 + p * per_plane];
        Plane pl{t[0].value, t[1].value, t[2].value, t[3].value, t[4].value, t[5].value};
        if (!(pl.earliest <= pl.target && pl.target <= pl.latest)) throw ParseError("window violation", t[0].line);
        if (pl.penalty_early < 0 || pl.penalty_late < 0) throw ParseError("negative penalty", t[4].line);
        inst.planes.push_back(pl);
        for (std::size_t j = 0; j < n; ++j) {
            if (t[6 + j].value < 0) throw ParseError("negative separation", t[6 + j].line);
            inst.separation(p, j) = t[6 + j].value;
        }
    }
    validate(inst);
    return inst;
}

Instance instance_from_json(ProblemKind kind, const json& data) {
    try {
        switch (kind) {
            case ProblemKind::airland: {
                AircraftLandingInstance inst;
                inst.freeze_time = data.value("freeze_time", 0.0);
                inst.n_runways = data.value("n_runways", 1);
                for (const auto& p : data.at("planes")) {
                    inst.planes.push_back({p.value("appearance", 0.0), p.at("earliest").get<double>(), p.at("target").get<double>(),
                                           p.at("latest").get<double>(), p.at("penalty_early").get<double>(),
                                           p.at("penalty_late").get<double>()});
                }
                inst.separation = matrix_from_json(data.at("separation"), "separation");
                check_declared(data, "n_planes", inst.size());
                validate(inst);
                return inst;
            }
            case ProblemKind::flowshop: {
                // Rows are jobs, columns machines.
                FlowShopInstance inst{matrix_from_json(data.at("proc"), "proc")};
                check_declared(data, "n_jobs", inst.n_jobs());
                check_declared(data, "m_machines", inst.m_machines());
                validate(inst);
                return inst;
            }
            case ProblemKind::pmedian: {
                PMedianInstance inst{data.at("p").get<std::size_t>(), matrix_from_json(data.at("dist"), "dist")};
                check_declared(data, "n_vertices", inst.n_vertices());
                validate(inst);
                return inst;
            }
            case ProblemKind::epp: {
                const Matrix<double> raw = matrix_from_json(data.at("attrs"), "attrs");
                EppInstance inst;
                inst.attrs = Matrix<int>(raw.rows, raw.cols);
                for (std::size_t i = 0; i < raw.data.size(); ++i) {
                    if (raw.data[i] != 0 && raw.data[i] != 1) throw ParseError("attributes must be binary", 0);
                    inst.attrs.data[i] = static_cast<int>(raw.data[i]);
                }
                if (data.contains("group_count") && data.at("group_count").get<int>() != EppInstance::group_count)
                    throw ParseError("group_count is fixed at 8", 0);
                check_declared(data, "n_individuals", inst.n_individuals());
                check_declared(data, "m_attributes", inst.m_attributes());
                validate(inst);
                return inst;
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad ") + std::string(to_string(kind)) + " data: " + e.what(), 0);
    }
    throw ParseError("unknown problem", 0);
}

json instance_data_to_json(const Instance& instance) {
    json data;
    std::visit(
        [&](const auto& inst) {
            using T = std::decay_t<decltype(inst)>;
            if constexpr (std::is_same_v<T, AircraftLandingInstance>) {
                data["n_planes"] = inst.size();
                data["freeze_time"] = inst.freeze_time;
                data["n_runways"] = inst.n_runways;
                json planes = json::array();
                for (const Plane& p : inst.planes)
                    planes.push_back({{"appearance", p.appearance},
                                      {"earliest", p.earliest},
                                      {"target", p.target},
                                      {"latest", p.latest},
                                      {"penalty_early", p.penalty_early},
                                      {"penalty_late", p.penalty_late}});
                data["planes"] = std::move(planes);
                data["separation"] = matrix_to_json(inst.separation);
            } else if constexpr (std::is_same_v<T, FlowShopInstance>) {
                data["n_jobs"] = inst.n_jobs();
                data["m_machines"] = inst.m_machines();
                data["proc"] = matrix_to_json(inst.proc);
            } else if constexpr (std::is_same_v<T, PMedianInstance>) {
                data["n_vertices"] = inst.n_vertices();
                data["p"] = inst.p;
                data["dist"] = matrix_to_json(inst.dist);
            } else {
                data["n_individuals"] = inst.n_individuals();
                data["m_attributes"] = inst.m_attributes();
                data["group_count"] = EppInstance::group_count;
                data["attrs"] = matrix_to_json(inst.attrs);
            }
        },
        instance);
    return data;
}

BenchmarkInstance benchmark_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("problem") || !doc.contains("data"))
        throw ParseError("instance document needs 'problem' and 'data'", 0);
    BenchmarkInstance bench;
    const ProblemKind kind = problem_kind_from_string(doc.at("problem").get<std::string>());
    bench.name = doc.value("name", std::string{});
    bench.instance = instance_from_json(kind, doc.at("data"));
    if (doc.contains("reference") && !doc.at("reference").is_null()) bench.reference = doc.at("reference").get<double>();
    bench.sense = sense_from_string(doc.value("sense", std::string("min")));
    return bench;
}

json to_json(const BenchmarkInstance& bench) {
    json doc;
    if (!bench.name.empty()) doc["name"] = bench.name;
    doc["problem"] = std::string(to_string(kind_of(bench.instance)));
    doc["data"] = instance_data_to_json(bench.instance);
    doc["reference"] = bench.reference ? json(*bench.reference) : json(nullptr);
    doc["sense"] = std::string(to_string(bench.sense));
    return doc;
}

Solution solution_from_json(ProblemKind kind, const json& doc) {
    try {
        switch (kind) {
            case ProblemKind::airland: {
                LandingSchedule s;
                s.times = doc.at("times").get<std::vector<double>>();
                if (doc.contains("runway")) s.runway = doc.at("runway").get<std::vector<int>>();
                return s;
            }
            case ProblemKind::flowshop: return JobPermutation{doc.at("permutation").get<std::vector<int>>()};
            case ProblemKind::pmedian: return MedianSet{doc.at("medians").get<std::vector<int>>()};
            case ProblemKind::epp: return GroupAssignment{doc.at("groups").get<std::vector<int>>()};
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad ") + std::string(to_string(kind)) + " solution: " + e.what(), 0);
    }
    throw ParseError("unknown problem", 0);
}

json to_json(const Solution& solution) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LandingSchedule>) {
                json doc{{"times", s.times}};
                if (!s.runway.empty()) doc["runway"] = s.runway;
                return doc;
            } else if constexpr (std::is_same_v<T, JobPermutation>) {
                return {{"permutation", s.order}};
            } else if constexpr (std::is_same_v<T, MedianSet>) {
                return {{"medians", s.vertices}};
            } else {
                return {{"groups", s.labels}};
            }
        },
        solution);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

BenchmarkInstance load_benchmark(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError(path.string() + ": " + e.what(), 0);
        }
        BenchmarkInstance bench = benchmark_from_json(doc);
        if (bench.name.empty()) bench.name = path.stem().string();
        return bench;
    }
    BenchmarkInstance bench;
    bench.name = path.stem().string();
    bench.instance = parse_airland(text);
    return bench;
}

}  // namespace promptfwa::problems
