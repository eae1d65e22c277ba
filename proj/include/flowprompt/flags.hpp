#pragma once

#include "flowprompt/dataset.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace flowprompt {

/// Epsilon-guarded numeric cues derived from a flow record.
struct DerivedCues {
    double pkt_rate = 0.0;   // (spkts+dpkts)/max(1e-6, dur)
    double byte_ratio = 1.0; // (sbytes+1)/(dbytes+1)
    double pkt_ratio = 1.0;  // (spkts+1)/(dpkts+1)
    double ttl_ratio = 1.0;  // (sttl+1)/(dttl+1)
    double dur = 0.0;
    double tcprtt = 0.0;
    double synack = 0.0;
    double ackdat = 0.0;
    std::int64_t ct_state_ttl = 0;
};

/// Cutoffs for the boolean flags. Defaults are heuristic operating values,
/// overridable via thresholds.json; they are not fitted.
struct FlagThresholds {
    double tau_br = 100.0;          // byte-ratio cutoff
    double tau_pr = 10.0;           // packet-ratio cutoff
    double tau_r = 1000.0;          // packet-rate cutoff, pkts/s
    int ttl_low = 30;               // TTL plausibility band
    int ttl_high = 255;
    double timer_min = 1e-4;        // implausibly small handshake RTT, seconds
    double timer_order_slack = 1e-3;
    double rarity_quantile = 0.05;  // fraction of categories considered rare
    double burst_dur_max = 0.1;     // seconds
    std::int64_t burst_pkts_min = 20;

    void validate() const;
    static FlagThresholds load(const std::filesystem::path& json_path);
    void save(const std::filesystem::path& json_path) const;
};

/// Empirical category frequencies fitted on training data plus the rarity
/// cutoff (the rarity_quantile-quantile of the pooled per-category
/// frequency values). A category below the cutoff, or unseen at fit time,
/// counts as rare.
struct RarityTable {
    std::map<std::string, double> service_freq;
    std::map<std::string, double> state_freq;
    double cutoff_freq = 0.0;

    static RarityTable load(const std::filesystem::path& json_path);
    void save(const std::filesystem::path& json_path) const;
};

struct FlagSet {
    bool asymmetry_high = false;
    bool pkt_rate_high = false;
    bool ttl_anomaly = false;
    bool tcp_timer_anomaly = false;
    bool rare_service_state = false;
    bool short_burst = false;

    static constexpr size_t kCount = 6;
    static const std::array<const char*, kCount>& names();
    bool get(size_t i) const;
    void set(size_t i, bool v);
    int count_true() const;
    bool operator==(const FlagSet&) const = default;
};

DerivedCues compute_cues(const FlowRecord& record);

RarityTable fit_rarity_table(const std::vector<FlowRecord>& train, const FlagThresholds& thresholds);

FlagSet compute_flags(const DerivedCues& cues, const FlowRecord& record,
                      const FlagThresholds& thresholds, const RarityTable& rarity);

} // namespace flowprompt
