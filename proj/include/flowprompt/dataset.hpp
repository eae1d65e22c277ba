#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace flowprompt {

/// One UNSW-NB15-style flow row. The handful of fields the text pipeline
/// uses directly are named; every other numeric column rides along in
/// `extra_numeric`, aligned with Dataset::extra_names, so the tabular
/// baseline sees the full numeric feature set.
struct FlowRecord {
    std::int64_t id = 0;
    double dur = 0.0;
    std::string proto;
    std::string service;
    std::string state;
    std::int64_t spkts = 0;
    std::int64_t dpkts = 0;
    std::int64_t sbytes = 0;
    std::int64_t dbytes = 0;
    int sttl = 0;
    int dttl = 0;
    double tcprtt = 0.0;
    double synack = 0.0;
    double ackdat = 0.0;
    std::int64_t ct_state_ttl = 0;
    std::vector<double> extra_numeric; // aligned with Dataset::extra_names
    int label = 0;                     // 0 benign, 1 attack
};

struct Dataset {
    std::vector<std::string> extra_names; // identical key set for every record
    std::vector<FlowRecord> records;

    size_t size() const { return records.size(); }
};

/// IDs drawn from one source file plus the seed that produced them.
struct SubsetSelection {
    std::vector<std::int64_t> ids; // ascending
    std::uint64_t seed = 0;
    std::map<int, std::int64_t> class_counts;

    size_t size() const { return ids.size(); }
};

/// Maps alias header spellings to canonical lower-case names. Dataset
/// mirrors disagree on casing; the manifest pins one canonical header.
struct SchemaManifest {
    std::map<std::string, std::string> aliases;

    static SchemaManifest load(const std::filesystem::path& json_path);
    std::string canonicalize(const std::string& column) const;
};

/// Canonical required columns (official UNSW-NB15 header, lower-case).
const std::vector<std::string>& core_columns();

/// Parse a CSV into records. Every core column must be present; remaining
/// columns (minus attack_cat) become extra numeric features in header
/// order. Rows violating the field invariants are rejected with their row
/// number; nothing is clamped.
Dataset load_csv(const std::filesystem::path& path,
                 const std::vector<std::string>& schema = core_columns(),
                 const SchemaManifest& manifest = {});

/// Re-serialize the canonical column subset; load_csv(write_csv(d)) is
/// field-identical to d.
void write_csv(const std::filesystem::path& path, const Dataset& data);

/// Deterministic balanced draw: n/2 ids per class, ranked by
/// mix64(seed, id) within each class, returned ascending.
SubsetSelection sample_balanced(const Dataset& data, std::int64_t n, std::uint64_t seed);

/// Split a selection into a dev slice and a test remainder. Per-class dev
/// quotas follow the parent's class proportions (largest remainder), so a
/// balanced parent yields a balanced dev slice.
std::pair<SubsetSelection, SubsetSelection> split_dev_test(const Dataset& data,
                                                           const SubsetSelection& subset,
                                                           std::int64_t dev_size,
                                                           std::uint64_t seed);

/// ids.txt: `# dev` section then `# test` section, one decimal ID per
/// line, ascending within each section.
void write_ids_file(const std::filesystem::path& path,
                    const SubsetSelection& dev,
                    const SubsetSelection& test);
std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>
read_ids_file(const std::filesystem::path& path);

/// Index lookup helpers.
std::map<std::int64_t, size_t> index_by_id(const Dataset& data);

} // namespace flowprompt
