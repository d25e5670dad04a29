#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "fusion.hpp"
#include "random.hpp"
#include "text.hpp"

namespace fgf {

// ---------------------------------------------------------------------------
// 8-digit failure mode identifiers: category, system, subsystem(2), component(2), mode(2)

struct FailureModeId {
    int category = 0;
    int system = 0;
    int subsystem = 0;
    int component = 0;
    int mode = 0;

    /// Class label: category and system digits, e.g. "11".
    std::string label() const { return std::to_string(category) + std::to_string(system); }

    friend bool operator==(const FailureModeId&, const FailureModeId&) = default;
    friend auto operator<=>(const FailureModeId&, const FailureModeId&) = default;
};

inline std::string category_name(int category)
{
    switch (category) {
    case 1: return "basic function";
    case 2: return "autonomous interaction";
    case 3: return "intelligent system";
    default: return "unknown";
    }
}

inline FailureModeId parse_id(std::string_view s)
{
    if (s.size() != 8 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw ParseError("failure mode id must be exactly 8 digits, got '" + std::string(s) + "'");
    }
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    FailureModeId id{num(0, 1), num(1, 1), num(2, 2), num(4, 2), num(6, 2)};
    if (id.category < 1 || id.category > 3) {
        throw ParseError("failure mode id '" + std::string(s) + "': category must be 1, 2 or 3");
    }
    return id;
}

inline std::string format_id(const FailureModeId& id)
{
    auto in_range = [](int v, int hi) { return v >= 0 && v <= hi; };
    if (id.category < 1 || id.category > 3 || !in_range(id.system, 9) || !in_range(id.subsystem, 99)
        || !in_range(id.component, 99) || !in_range(id.mode, 99)) {
        throw ConfigError("failure mode id field out of range");
    }
    char buf[9];
    std::snprintf(buf, sizeof buf, "%d%d%02d%02d%02d", id.category, id.system, id.subsystem, id.component, id.mode);
    return buf;
}

// ---------------------------------------------------------------------------
// CSV (RFC 4180: quoted fields, doubled quotes, embedded newlines)

inline std::vector<std::vector<std::string>> parse_csv(std::string_view in)
{
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t line = 1;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const char c = in[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < in.size() && in[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') {
                    ++line;
                }
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field.empty()) {
                throw ParseError("csv line " + std::to_string(line) + ": quote inside an unquoted field");
            }
            quoted = true;
            field_started = true;
            break;
        case ',':
            row.push_back(std::move(field));
            field.clear();
            field_started = true;
            break;
        case '\r':
            break;
        case '\n':
            if (field_started || !field.empty() || !row.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            field.clear();
            row.clear();
            field_started = false;
            ++line;
            break;
        default:
            field += c;
            field_started = true;
        }
    }
    if (quoted) {
        throw ParseError("csv: unterminated quoted field at end of input");
    }
    if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string csv_escape(std::string_view s)
{
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

// ---------------------------------------------------------------------------
// failure records

inline constexpr std::array<const char*, 8> record_fields = {
    "id", "system", "subsystem", "component", "failure_mode", "failure_reason", "failure_effect", "emergency_measure"};

struct FailureRecord {
    FailureModeId id;
    std::string system;
    std::string subsystem;
    std::string component;
    std::string failure_mode;
    std::string failure_reason;
    std::string failure_effect;
    std::string emergency_measure;

    std::string key() const { return format_id(id); }
    std::string label() const { return id.label(); }

    friend bool operator==(const FailureRecord&, const FailureRecord&) = default;
};

enum class RecordFormat { csv, jsonl };

inline RecordFormat parse_record_format(std::string_view s)
{
    if (s == "csv") return RecordFormat::csv;
    if (s == "jsonl") return RecordFormat::jsonl;
    throw ConfigError("unknown record format '" + std::string(s) + "' (expected csv or jsonl)");
}

/// Format from the file extension; `.jsonl` or `.json` means JSON lines.
inline RecordFormat record_format_for(const std::string& path)
{
    const auto ext = std::filesystem::path(path).extension().string();
    return ext == ".jsonl" || ext == ".json" ? RecordFormat::jsonl : RecordFormat::csv;
}

struct IngestResult {
    std::vector<FailureRecord> records;
    std::vector<std::string> errors; // one entry per rejected row
    std::size_t skipped() const { return errors.size(); }
};

namespace detail {

inline FailureRecord make_record(const std::array<std::string, 8>& f)
{
    FailureRecord r;
    r.id = parse_id(text::trim(f[0]));
    std::string* dst[] = {&r.system, &r.subsystem, &r.component, &r.failure_mode, &r.failure_reason, &r.failure_effect,
                          &r.emergency_measure};
    for (std::size_t i = 0; i < 7; ++i) {
        *dst[i] = std::string(text::trim(f[i + 1]));
        if (dst[i]->empty()) {
            throw ValidationError(std::string("empty field '") + record_fields[i + 1] + "'");
        }
    }
    return r;
}

} // namespace detail

/// Parses and validates failure records. In strict mode the first bad row
/// aborts with an error naming it; otherwise bad rows are skipped and listed.
/// A system code that appears under two different system names is an error
/// on the later row.
inline IngestResult parse_records(std::string_view content, RecordFormat format, bool strict = true)
{
    std::vector<std::pair<std::size_t, std::array<std::string, 8>>> raw;
    if (format == RecordFormat::csv) {
        const auto rows = parse_csv(content);
        if (rows.empty()) {
            return {};
        }
        std::vector<std::string> header;
        for (const auto& h : rows.front()) {
            header.push_back(text::casefold(text::trim(h)));
        }
        std::array<std::size_t, 8> col{};
        for (std::size_t f = 0; f < record_fields.size(); ++f) {
            const auto it = std::find(header.begin(), header.end(), record_fields[f]);
            if (it == header.end()) {
                throw ParseError(std::string("record file header lacks column '") + record_fields[f] + "'");
            }
            col[f] = static_cast<std::size_t>(it - header.begin());
        }
        for (std::size_t r = 1; r < rows.size(); ++r) {
            std::array<std::string, 8> f;
            for (std::size_t k = 0; k < 8; ++k) {
                f[k] = col[k] < rows[r].size() ? rows[r][col[k]] : std::string();
            }
            raw.emplace_back(r + 1, std::move(f));
        }
    } else {
        std::size_t line_no = 0;
        for (const auto& line : text::split(content, '\n')) {
            ++line_no;
            if (text::trim(line).empty()) {
                continue;
            }
            std::array<std::string, 8> f;
            try {
                const auto j = nlohmann::json::parse(line);
                for (std::size_t k = 0; k < 8; ++k) {
                    const auto it = j.find(record_fields[k]);
                    if (it != j.end() && it->is_string()) {
                        f[k] = it->get<std::string>();
                    } else if (it != j.end() && it->is_number_unsigned() && k == 0) {
                        f[k] = std::to_string(it->get<std::uint64_t>());
                    }
                }
            } catch (const nlohmann::json::exception& e) {
                if (strict) {
                    throw ParseError("record line " + std::to_string(line_no) + ": " + e.what());
                }
                continue;
            }
            raw.emplace_back(line_no, std::move(f));
        }
    }

    IngestResult out;
    std::set<std::string> seen;
    std::map<std::string, std::string> system_names;
    for (const auto& [row, f] : raw) {
        const auto where = (format == RecordFormat::csv ? "row " : "line ") + std::to_string(row);
        try {
            auto rec = detail::make_record(f);
            const auto key = rec.key();
            if (!seen.insert(key).second) {
                throw ValidationError("duplicate id " + key);
            }
            const auto [it, fresh] = system_names.emplace(rec.label(), rec.system);
            if (!fresh && text::casefold(it->second) != text::casefold(rec.system)) {
                throw ValidationError("system code " + rec.label() + " is '" + it->second + "' elsewhere but '" + rec.system + "' here");
            }
            out.records.push_back(std::move(rec));
        } catch (const Error& e) {
            if (strict) {
                throw ValidationError(where + ": " + e.what());
            }
            out.errors.push_back(where + ": " + e.what());
        }
    }
    return out;
}

inline IngestResult ingest_records(const std::string& path, RecordFormat format, bool strict = true)
{
    return parse_records(text::read_file(path), format, strict);
}

inline std::string serialize_records_csv(std::span<const FailureRecord> records)
{
    std::string out;
    for (std::size_t i = 0; i < record_fields.size(); ++i) {
        out += (i ? "," : "") + std::string(record_fields[i]);
    }
    out += '\n';
    for (const auto& r : records) {
        const std::string* f[] = {&r.system, &r.subsystem, &r.component, &r.failure_mode, &r.failure_reason, &r.failure_effect,
                                  &r.emergency_measure};
        out += r.key();
        for (const auto* s : f) {
            out += ',' + csv_escape(*s);
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// edges

struct Edge {
    std::string src;
    std::string dst;
    double weight = 0.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Parses a `src,dst,weight` edge list. Endpoints must be well-formed ids;
/// whether they exist is checked at assembly.
inline std::vector<Edge> parse_edges(std::string_view content)
{
    const auto rows = parse_csv(content);
    std::vector<Edge> out;
    if (rows.empty()) {
        return out;
    }
    std::size_t first = 0;
    if (!rows.front().empty() && text::casefold(text::trim(rows.front().front())) == "src") {
        first = 1;
    }
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t r = first; r < rows.size(); ++r) {
        const auto where = "edge row " + std::to_string(r + 1);
        const auto& row = rows[r];
        if (row.size() != 3) {
            throw ParseError(where + ": expected 3 columns, got " + std::to_string(row.size()));
        }
        Edge e;
        try {
            e.src = format_id(parse_id(text::trim(row[0])));
            e.dst = format_id(parse_id(text::trim(row[1])));
            e.weight = text::parse_double(row[2]);
        } catch (const ParseError& ex) {
            throw ParseError(where + ": " + ex.what());
        }
        if (!(e.weight > 0.0 && e.weight <= 1.0)) {
            throw ValidationError(where + ": weight " + std::string(text::trim(row[2])) + " outside (0, 1]");
        }
        if (e.src == e.dst) {
            throw ValidationError(where + ": self-loop on " + e.src);
        }
        if (!seen.emplace(e.src, e.dst).second) {
            throw ValidationError(where + ": duplicate edge " + e.src + " -> " + e.dst);
        }
        out.push_back(std::move(e));
    }
    return out;
}

inline std::vector<Edge> ingest_edges(const std::string& path) { return parse_edges(text::read_file(path)); }

/// Adds the reverse of every edge; a pair given in both directions keeps the larger weight.
inline std::vector<Edge> symmetrize(std::span<const Edge> edges)
{
    std::map<std::pair<std::string, std::string>, double> w;
    for (const auto& e : edges) {
        for (const auto& key : {std::pair{e.src, e.dst}, std::pair{e.dst, e.src}}) {
            auto [it, fresh] = w.emplace(key, e.weight);
            if (!fresh) {
                it->second = std::max(it->second, e.weight);
            }
        }
    }
    std::vector<Edge> out;
    out.reserve(w.size());
    for (const auto& [k, v] : w) {
        out.push_back({k.first, k.second, v});
    }
    return out;
}

// ---------------------------------------------------------------------------
// dataset assembly

enum class Split { train, val, test };

inline std::string to_string(Split s)
{
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    default: return "test";
    }
}

inline Split parse_split(std::string_view s)
{
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw ParseError("unknown split '" + std::string(s) + "'");
}

struct SplitSpec {
    double train = 0.2;
    double val = 0.2;
    double test = 0.6;

    void validate() const
    {
        if (train < 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9) {
            throw ConfigError("split fractions must be non-negative and sum to 1");
        }
    }
    std::array<double, 3> fractions() const { return {train, val, test}; }
};

struct GraphNode {
    std::string id;
    std::string label;
    Split split = Split::train;
    std::vector<double> features;

    friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphDataset {
    std::vector<GraphNode> nodes; // ordered by id
    std::vector<Edge> edges;
    std::vector<std::string> labels; // sorted distinct labels
    std::size_t d_total = 0;
    bool undirected = false;

    friend bool operator==(const GraphDataset&, const GraphDataset&) = default;
};

/// Per-class counts for each split. Global totals are apportioned first by
/// largest remainder, then each class gets floor(n_c * f_s) plus leftover
/// units handed out by descending fractional part, so every cell stays within
/// one node of its ideal share.
inline std::vector<std::array<std::size_t, 3>> stratified_counts(std::span<const std::size_t> class_sizes, const SplitSpec& spec)
{
    const auto f = spec.fractions();
    auto apportion = [&](std::size_t n) {
        std::array<std::size_t, 3> base{};
        std::array<double, 3> rem{};
        std::size_t used = 0;
        for (int s = 0; s < 3; ++s) {
            const double ideal = static_cast<double>(n) * f[s];
            base[s] = static_cast<std::size_t>(std::floor(ideal + 1e-9));
            rem[s] = ideal - static_cast<double>(base[s]);
            used += base[s];
        }
        std::array<int, 3> order{0, 1, 2};
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
        for (int i = 0; used < n; ++i, ++used) {
            ++base[order[i % 3]];
        }
        return base;
    };
    std::size_t total = 0;
    for (auto c : class_sizes) {
        total += c;
    }
    auto need = apportion(total);

    std::vector<std::array<std::size_t, 3>> out(class_sizes.size());
    std::vector<std::size_t> left(class_sizes.size());
    struct Cell {
        double frac;
        std::size_t cls;
        int split;
    };
    std::vector<Cell> cells;
    for (std::size_t c = 0; c < class_sizes.size(); ++c) {
        std::size_t used = 0;
        for (int s = 0; s < 3; ++s) {
            const double ideal = static_cast<double>(class_sizes[c]) * f[s];
            out[c][s] = static_cast<std::size_t>(std::floor(ideal + 1e-9));
            used += out[c][s];
            need[s] -= std::min(need[s], out[c][s]);
            cells.push_back({ideal - static_cast<double>(out[c][s]), c, s});
        }
        left[c] = class_sizes[c] - used;
    }
    std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.frac > b.frac; });
    for (const auto& cell : cells) {
        if (left[cell.cls] > 0 && need[cell.split] > 0 && cell.frac > 1e-9) {
            ++out[cell.cls][cell.split];
            --left[cell.cls];
            --need[cell.split];
        }
    }
    // anything the greedy pass could not place goes to the split with the most demand
    for (std::size_t c = 0; c < class_sizes.size(); ++c) {
        while (left[c] > 0) {
            int s = static_cast<int>(std::max_element(need.begin(), need.end()) - need.begin());
            ++out[c][s];
            --left[c];
            need[s] -= std::min<std::size_t>(need[s], 1);
        }
    }
    return out;
}

/// Joins records with their fused rows and the edge list. Node order follows
/// record id; the split is stratified by label and shuffled with `seed`.
inline GraphDataset assemble(std::span<const FailureRecord> records, const FusedFeatureMatrix& fused, std::span<const Edge> edges,
                             const SplitSpec& spec, std::uint64_t seed, bool undirected = false)
{
    spec.validate();
    std::unordered_map<std::string, Eigen::Index> row_of;
    for (std::size_t i = 0; i < fused.ids.size(); ++i) {
        row_of.emplace(fused.ids[i], static_cast<Eigen::Index>(i));
    }
    if (fused.ids.size() != records.size()) {
        throw AssemblyError("feature matrix has " + std::to_string(fused.ids.size()) + " rows for " + std::to_string(records.size())
                            + " records");
    }
    GraphDataset g;
    g.d_total = fused.d_total();
    g.undirected = undirected;
    std::set<std::string> ids;
    for (const auto& r : records) {
        const auto key = r.key();
        const auto it = row_of.find(key);
        if (it == row_of.end()) {
            throw AssemblyError("record " + key + " has no fused feature row");
        }
        GraphNode node;
        node.id = key;
        node.label = r.label();
        node.features.assign(fused.rows.row(it->second).begin(), fused.rows.row(it->second).end());
        g.nodes.push_back(std::move(node));
        ids.insert(key);
    }
    std::sort(g.nodes.begin(), g.nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

    std::set<std::string> dangling;
    for (const auto& e : edges) {
        for (const auto* end : {&e.src, &e.dst}) {
            if (!ids.count(*end)) {
                dangling.insert(*end);
            }
        }
    }
    if (!dangling.empty()) {
        std::string list;
        for (const auto& d : dangling) {
            list += (list.empty() ? "" : ", ") + d;
        }
        throw AssemblyError("edges reference unknown node ids: " + list);
    }
    g.edges = undirected ? symmetrize(edges) : std::vector<Edge>(edges.begin(), edges.end());

    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        by_label[g.nodes[i].label].push_back(i);
    }
    std::vector<std::size_t> sizes;
    for (const auto& [label, members] : by_label) {
        g.labels.push_back(label);
        sizes.push_back(members.size());
    }
    const auto counts = stratified_counts(sizes, spec);
    Rng rng(derive_seed(seed, 3));
    std::size_t c = 0;
    for (auto& [label, members] : by_label) {
        rng.shuffle(members.begin(), members.end());
        std::size_t pos = 0;
        for (int s = 0; s < 3; ++s) {
            for (std::size_t k = 0; k < counts[c][s]; ++k) {
                g.nodes[members[pos++]].split = static_cast<Split>(s);
            }
        }
        ++c;
    }
    return g;
}

// ---------------------------------------------------------------------------
// export

struct ExportFiles {
    std::string nodes_csv;
    std::string edges_csv;
    std::string meta_json;
};

inline ExportFiles render_export(const GraphDataset& g, const nlohmann::ordered_json& config_echo, std::uint64_t seed,
                                 const SplitSpec& spec)
{
    ExportFiles f;
    f.nodes_csv = "id,label,split";
    for (std::size_t d = 0; d < g.d_total; ++d) {
        f.nodes_csv += ",f" + std::to_string(d);
    }
    f.nodes_csv += '\n';
    std::map<std::string, std::array<std::size_t, 3>> per_label;
    for (const auto& n : g.nodes) {
        f.nodes_csv += n.id + ',' + n.label + ',' + to_string(n.split);
        for (double v : n.features) {
            f.nodes_csv += ',' + text::format_double(v);
        }
        f.nodes_csv += '\n';
        ++per_label[n.label][static_cast<int>(n.split)];
    }
    f.edges_csv = "src,dst,weight\n";
    for (const auto& e : g.edges) {
        f.edges_csv += e.src + ',' + e.dst + ',' + text::format_double(e.weight) + '\n';
    }
    nlohmann::ordered_json meta;
    meta["nodes"] = g.nodes.size();
    meta["edges"] = g.edges.size();
    meta["classes"] = g.labels.size();
    meta["d_total"] = g.d_total;
    meta["labels"] = g.labels;
    meta["undirected"] = g.undirected;
    meta["seed"] = seed;
    meta["split"] = {{"train", spec.train}, {"val", spec.val}, {"test", spec.test}};
    meta["split_method"] = "stratified by label; no synthetic oversampling";
    auto dist = nlohmann::ordered_json::object();
    for (const auto& [label, c] : per_label) {
        dist[label] = {{"train", c[0]}, {"val", c[1]}, {"test", c[2]}};
    }
    meta["split_counts"] = std::move(dist);
    meta["config"] = config_echo;
    f.meta_json = meta.dump(2) + "\n";
    return f;
}

inline void export_dataset(const GraphDataset& g, const std::filesystem::path& dir, const nlohmann::ordered_json& config_echo,
                           std::uint64_t seed, const SplitSpec& spec)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    const auto f = render_export(g, config_echo, seed, spec);
    text::write_file((dir / "nodes.csv").string(), f.nodes_csv);
    text::write_file((dir / "edges.csv").string(), f.edges_csv);
    text::write_file((dir / "meta.json").string(), f.meta_json);
}

/// Reads an exported directory back into a dataset.
inline GraphDataset load_export(const std::filesystem::path& dir)
{
    GraphDataset g;
    const auto meta = nlohmann::json::parse(text::read_file((dir / "meta.json").string()));
    g.d_total = meta.at("d_total").get<std::size_t>();
    g.labels = meta.at("labels").get<std::vector<std::string>>();
    g.undirected = meta.value("undirected", false);
    const auto rows = parse_csv(text::read_file((dir / "nodes.csv").string()));
    if (rows.empty() || rows.front().size() != 3 + g.d_total) {
        throw ParseError("nodes.csv header width does not match d_total");
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 3 + g.d_total) {
            throw ParseError("nodes.csv row " + std::to_string(r + 1) + ": wrong column count");
        }
        GraphNode n;
        n.id = rows[r][0];
        n.label = rows[r][1];
        n.split = parse_split(rows[r][2]);
        for (std::size_t d = 0; d < g.d_total; ++d) {
            n.features.push_back(text::parse_double(rows[r][3 + d]));
        }
        g.nodes.push_back(std::move(n));
    }
    g.edges = ingest_edges((dir / "edges.csv").string());
    return g;
}

} // namespace fgf
