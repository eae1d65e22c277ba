#include "flowprompt/dataset.hpp"

#include "flowprompt/csv.hpp"
#include "flowprompt/errors.hpp"
#include "flowprompt/rng.hpp"
#include "flowprompt/rounding.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace flowprompt {

namespace {

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

double parse_double(const std::string& text, size_t row, const std::string& column) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw Error(ErrorCode::BadValue,
                    "row " + std::to_string(row) + ": non-numeric value '" + text +
                        "' in column '" + column + "'");
    }
    return value;
}

std::int64_t parse_integral(const std::string& text, size_t row, const std::string& column) {
    const double value = parse_double(text, row, column);
    const double rounded = std::nearbyint(value);
    if (rounded != value || std::abs(value) > 9.0e15) {
        throw Error(ErrorCode::BadValue,
                    "row " + std::to_string(row) + ": expected integer in column '" + column +
                        "', got '" + text + "'");
    }
    return static_cast<std::int64_t>(rounded);
}

void check_categorical(const std::string& value, size_t row, const std::string& column) {
    if (value.empty())
        throw Error(ErrorCode::BadValue,
                    "row " + std::to_string(row) + ": empty categorical '" + column + "'");
    for (char c : value) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '=') {
            throw Error(ErrorCode::BadValue,
                        "row " + std::to_string(row) + ": categorical '" + column +
                            "' contains whitespace or '='");
        }
    }
}

// Ranked draw shared by sampling and splitting: order by mix64(seed, id),
// id as tiebreak, take the first k.
std::vector<std::int64_t> ranked_take(const std::vector<std::int64_t>& ids, size_t k,
                                      std::uint64_t seed) {
    std::vector<std::int64_t> pool = ids;
    std::sort(pool.begin(), pool.end());
    std::vector<std::pair<std::uint64_t, std::int64_t>> keyed;
    keyed.reserve(pool.size());
    for (std::int64_t id : pool)
        keyed.emplace_back(mix64(seed, static_cast<std::uint64_t>(id)), id);
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::int64_t> out;
    out.reserve(k);
    for (size_t i = 0; i < k && i < keyed.size(); ++i) out.push_back(keyed[i].second);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

const std::vector<std::string>& core_columns() {
    static const std::vector<std::string> cols = {
        "id",     "dur",    "proto",  "service", "state",  "spkts",
        "dpkts",  "sbytes", "dbytes", "sttl",    "dttl",   "tcprtt",
        "synack", "ackdat", "ct_state_ttl", "label",
    };
    return cols;
}

SchemaManifest SchemaManifest::load(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + json_path.string());
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, true);
    SchemaManifest manifest;
    for (auto it = doc.begin(); it != doc.end(); ++it)
        manifest.aliases[lower(it.key())] = lower(it.value().get<std::string>());
    return manifest;
}

std::string SchemaManifest::canonicalize(const std::string& column) const {
    std::string name = lower(column);
    auto it = aliases.find(name);
    return it == aliases.end() ? name : it->second;
}

Dataset load_csv(const std::filesystem::path& path, const std::vector<std::string>& schema,
                 const SchemaManifest& manifest) {
    CsvTable table = read_csv_file(path);

    std::vector<std::string> header;
    header.reserve(table.header.size());
    for (const auto& col : table.header) header.push_back(manifest.canonicalize(col));

    std::unordered_map<std::string, size_t> col_index;
    for (size_t i = 0; i < header.size(); ++i) col_index.emplace(header[i], i);

    for (const auto& required : schema) {
        if (!col_index.count(required))
            throw Error(ErrorCode::MissingColumn, "column '" + required + "' absent from " + path.string());
    }

    const std::set<std::string> core(schema.begin(), schema.end());
    Dataset data;
    std::vector<size_t> extra_cols;
    for (size_t i = 0; i < header.size(); ++i) {
        if (core.count(header[i]) || header[i] == "attack_cat") continue;
        data.extra_names.push_back(header[i]);
        extra_cols.push_back(i);
    }

    auto at = [&](const std::vector<std::string>& row, const char* name) -> const std::string& {
        return row[col_index.at(name)];
    };

    data.records.reserve(table.rows.size());
    std::unordered_set<std::int64_t> seen_ids;
    for (size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const size_t rowno = r + 2; // 1-based, after header
        if (row.size() != header.size())
            throw Error(ErrorCode::BadValue,
                        "row " + std::to_string(rowno) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(row.size()));

        FlowRecord rec;
        rec.id = parse_integral(at(row, "id"), rowno, "id");
        if (!seen_ids.insert(rec.id).second)
            throw Error(ErrorCode::BadValue, "row " + std::to_string(rowno) + ": duplicate id " +
                                                 std::to_string(rec.id));
        rec.dur = parse_double(at(row, "dur"), rowno, "dur");
        rec.proto = at(row, "proto");
        rec.service = at(row, "service");
        rec.state = at(row, "state");
        check_categorical(rec.proto, rowno, "proto");
        check_categorical(rec.service, rowno, "service");
        check_categorical(rec.state, rowno, "state");
        rec.spkts = parse_integral(at(row, "spkts"), rowno, "spkts");
        rec.dpkts = parse_integral(at(row, "dpkts"), rowno, "dpkts");
        rec.sbytes = parse_integral(at(row, "sbytes"), rowno, "sbytes");
        rec.dbytes = parse_integral(at(row, "dbytes"), rowno, "dbytes");
        rec.sttl = static_cast<int>(parse_integral(at(row, "sttl"), rowno, "sttl"));
        rec.dttl = static_cast<int>(parse_integral(at(row, "dttl"), rowno, "dttl"));
        rec.tcprtt = parse_double(at(row, "tcprtt"), rowno, "tcprtt");
        rec.synack = parse_double(at(row, "synack"), rowno, "synack");
        rec.ackdat = parse_double(at(row, "ackdat"), rowno, "ackdat");
        rec.ct_state_ttl = parse_integral(at(row, "ct_state_ttl"), rowno, "ct_state_ttl");

        const std::int64_t label = parse_integral(at(row, "label"), rowno, "label");
        if (label != 0 && label != 1)
            throw Error(ErrorCode::BadValue,
                        "row " + std::to_string(rowno) + ": label must be 0 or 1, got " +
                            std::to_string(label));
        rec.label = static_cast<int>(label);

        // Range invariants: reject, never clamp.
        auto require = [&](bool ok, const char* what) {
            if (!ok)
                throw Error(ErrorCode::BadValue,
                            "row " + std::to_string(rowno) + ": " + std::string(what));
        };
        require(rec.dur >= 0.0, "dur must be >= 0");
        require(rec.spkts >= 0 && rec.dpkts >= 0, "packet counts must be >= 0");
        require(rec.sbytes >= 0 && rec.dbytes >= 0, "byte counts must be >= 0");
        require(rec.sttl >= 0 && rec.sttl <= 255, "sttl must be in [0,255]");
        require(rec.dttl >= 0 && rec.dttl <= 255, "dttl must be in [0,255]");
        require(rec.tcprtt >= 0.0 && rec.synack >= 0.0 && rec.ackdat >= 0.0,
                "TCP timers must be >= 0");
        require(rec.ct_state_ttl >= 0, "ct_state_ttl must be >= 0");

        rec.extra_numeric.reserve(extra_cols.size());
        for (size_t i = 0; i < extra_cols.size(); ++i)
            rec.extra_numeric.push_back(parse_double(row[extra_cols[i]], rowno, data.extra_names[i]));

        data.records.push_back(std::move(rec));
    }
    return data;
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
    CsvTable table;
    table.header = {"id",    "dur",    "proto",  "service", "state",  "spkts", "dpkts",
                    "sbytes", "dbytes", "sttl",   "dttl",    "tcprtt", "synack", "ackdat",
                    "ct_state_ttl"};
    for (const auto& name : data.extra_names) table.header.push_back(name);
    table.header.push_back("label");

    table.rows.reserve(data.records.size());
    for (const auto& rec : data.records) {
        std::vector<std::string> row;
        row.reserve(table.header.size());
        row.push_back(std::to_string(rec.id));
        row.push_back(format_shortest(rec.dur));
        row.push_back(rec.proto);
        row.push_back(rec.service);
        row.push_back(rec.state);
        row.push_back(std::to_string(rec.spkts));
        row.push_back(std::to_string(rec.dpkts));
        row.push_back(std::to_string(rec.sbytes));
        row.push_back(std::to_string(rec.dbytes));
        row.push_back(std::to_string(rec.sttl));
        row.push_back(std::to_string(rec.dttl));
        row.push_back(format_shortest(rec.tcprtt));
        row.push_back(format_shortest(rec.synack));
        row.push_back(format_shortest(rec.ackdat));
        row.push_back(std::to_string(rec.ct_state_ttl));
        for (double v : rec.extra_numeric) row.push_back(format_shortest(v));
        row.push_back(std::to_string(rec.label));
        table.rows.push_back(std::move(row));
    }
    write_csv_file(path, table);
}

SubsetSelection sample_balanced(const Dataset& data, std::int64_t n, std::uint64_t seed) {
    if (n <= 0 || n % 2 != 0)
        throw Error(ErrorCode::OddN, "n must be a positive even integer, got " + std::to_string(n));

    std::vector<std::int64_t> by_class[2];
    for (const auto& rec : data.records) by_class[rec.label].push_back(rec.id);

    const size_t per_class = static_cast<size_t>(n) / 2;
    for (int c = 0; c < 2; ++c) {
        if (by_class[c].size() < per_class)
            throw Error(ErrorCode::InsufficientClass,
                        "class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                            " records, need " + std::to_string(per_class));
    }

    SubsetSelection sel;
    sel.seed = seed;
    for (int c = 0; c < 2; ++c) {
        auto picked = ranked_take(by_class[c], per_class, seed);
        sel.ids.insert(sel.ids.end(), picked.begin(), picked.end());
        sel.class_counts[c] = static_cast<std::int64_t>(picked.size());
    }
    std::sort(sel.ids.begin(), sel.ids.end());
    return sel;
}

std::pair<SubsetSelection, SubsetSelection> split_dev_test(const Dataset& data,
                                                           const SubsetSelection& subset,
                                                           std::int64_t dev_size,
                                                           std::uint64_t seed) {
    const std::int64_t total = static_cast<std::int64_t>(subset.ids.size());
    if (dev_size <= 0 || dev_size >= total)
        throw Error(ErrorCode::DevTooLarge, "dev_size " + std::to_string(dev_size) +
                                                " must be in (0, " + std::to_string(total) + ")");

    auto index = index_by_id(data);
    std::vector<std::int64_t> by_class[2];
    for (std::int64_t id : subset.ids) {
        auto it = index.find(id);
        if (it == index.end())
            throw Error(ErrorCode::BadValue, "selection id " + std::to_string(id) + " not in dataset");
        by_class[data.records[it->second].label].push_back(id);
    }

    // Largest-remainder allocation of the dev quota across classes.
    size_t quota[2];
    double remainder[2];
    size_t assigned = 0;
    for (int c = 0; c < 2; ++c) {
        const double share =
            static_cast<double>(dev_size) * static_cast<double>(by_class[c].size()) / static_cast<double>(total);
        quota[c] = static_cast<size_t>(share);
        remainder[c] = share - static_cast<double>(quota[c]);
        assigned += quota[c];
    }
    while (assigned < static_cast<size_t>(dev_size)) {
        int pick = (remainder[0] >= remainder[1]) ? 0 : 1;
        if (quota[pick] >= by_class[pick].size()) pick = 1 - pick;
        ++quota[pick];
        remainder[pick] = -1.0;
        ++assigned;
    }

    SubsetSelection dev, test;
    dev.seed = seed;
    test.seed = seed;
    for (int c = 0; c < 2; ++c) {
        auto picked = ranked_take(by_class[c], quota[c], seed);
        std::set<std::int64_t> picked_set(picked.begin(), picked.end());
        dev.ids.insert(dev.ids.end(), picked.begin(), picked.end());
        dev.class_counts[c] = static_cast<std::int64_t>(picked.size());
        std::int64_t rest = 0;
        for (std::int64_t id : by_class[c]) {
            if (!picked_set.count(id)) {
                test.ids.push_back(id);
                ++rest;
            }
        }
        test.class_counts[c] = rest;
    }
    std::sort(dev.ids.begin(), dev.ids.end());
    std::sort(test.ids.begin(), test.ids.end());
    return {std::move(dev), std::move(test)};
}

void write_ids_file(const std::filesystem::path& path, const SubsetSelection& dev,
                    const SubsetSelection& test) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << "# dev\n";
    for (std::int64_t id : dev.ids) out << id << '\n';
    out << "# test\n";
    for (std::int64_t id : test.ids) out << id << '\n';
}

std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>
read_ids_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<std::int64_t> dev, test;
    std::vector<std::int64_t>* current = nullptr;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line == "# dev") {
            current = &dev;
        } else if (line == "# test") {
            current = &test;
        } else {
            if (!current) throw Error(ErrorCode::BadValue, "ids file has data before a section header");
            current->push_back(parse_integral(line, 0, "id"));
        }
    }
    return {std::move(dev), std::move(test)};
}

std::map<std::int64_t, size_t> index_by_id(const Dataset& data) {
    std::map<std::int64_t, size_t> index;
    for (size_t i = 0; i < data.records.size(); ++i) index.emplace(data.records[i].id, i);
    return index;
}

} // namespace flowprompt
