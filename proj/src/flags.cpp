#include "flowprompt/flags.hpp"

#include "flowprompt/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace flowprompt {

namespace {

// Type-7 quantile (linear interpolation) over sorted values.
double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    if (values.empty()) return 0.0;
    if (values.size() == 1) return values[0];
    const double pos = q * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

bool lookup_is_rare(const std::map<std::string, double>& freq, const std::string& key,
                    double cutoff) {
    auto it = freq.find(key);
    if (it == freq.end()) return true; // unknown category => rare
    return it->second < cutoff;
}

} // namespace

const std::array<const char*, FlagSet::kCount>& FlagSet::names() {
    static const std::array<const char*, kCount> n = {
        "asymmetry_high", "pkt_rate_high",      "ttl_anomaly",
        "tcp_timer_anomaly", "rare_service_state", "short_burst",
    };
    return n;
}

bool FlagSet::get(size_t i) const {
    switch (i) {
        case 0: return asymmetry_high;
        case 1: return pkt_rate_high;
        case 2: return ttl_anomaly;
        case 3: return tcp_timer_anomaly;
        case 4: return rare_service_state;
        default: return short_burst;
    }
}

void FlagSet::set(size_t i, bool v) {
    switch (i) {
        case 0: asymmetry_high = v; break;
        case 1: pkt_rate_high = v; break;
        case 2: ttl_anomaly = v; break;
        case 3: tcp_timer_anomaly = v; break;
        case 4: rare_service_state = v; break;
        default: short_burst = v; break;
    }
}

int FlagSet::count_true() const {
    int n = 0;
    for (size_t i = 0; i < kCount; ++i) n += get(i) ? 1 : 0;
    return n;
}

void FlagThresholds::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(tau_br) || !positive(tau_pr) || !positive(tau_r) || !positive(timer_min) ||
        !positive(timer_order_slack) || !positive(burst_dur_max) || burst_pkts_min <= 0)
        throw Error(ErrorCode::BadValue, "flag cutoffs must be strictly positive");
    if (ttl_low >= ttl_high)
        throw Error(ErrorCode::BadValue, "ttl_low must be < ttl_high");
    if (!(rarity_quantile > 0.0 && rarity_quantile < 1.0))
        throw Error(ErrorCode::BadValue, "rarity_quantile must be in (0,1)");
}

FlagThresholds FlagThresholds::load(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + json_path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    FlagThresholds t; // absent keys keep defaults
    t.tau_br = doc.value("tau_br", t.tau_br);
    t.tau_pr = doc.value("tau_pr", t.tau_pr);
    t.tau_r = doc.value("tau_r", t.tau_r);
    t.ttl_low = doc.value("ttl_low", t.ttl_low);
    t.ttl_high = doc.value("ttl_high", t.ttl_high);
    t.timer_min = doc.value("timer_min", t.timer_min);
    t.timer_order_slack = doc.value("timer_order_slack", t.timer_order_slack);
    t.rarity_quantile = doc.value("rarity_quantile", t.rarity_quantile);
    t.burst_dur_max = doc.value("burst_dur_max", t.burst_dur_max);
    t.burst_pkts_min = doc.value("burst_pkts_min", t.burst_pkts_min);
    t.validate();
    return t;
}

void FlagThresholds::save(const std::filesystem::path& json_path) const {
    nlohmann::ordered_json doc;
    doc["tau_br"] = tau_br;
    doc["tau_pr"] = tau_pr;
    doc["tau_r"] = tau_r;
    doc["ttl_low"] = ttl_low;
    doc["ttl_high"] = ttl_high;
    doc["timer_min"] = timer_min;
    doc["timer_order_slack"] = timer_order_slack;
    doc["rarity_quantile"] = rarity_quantile;
    doc["burst_dur_max"] = burst_dur_max;
    doc["burst_pkts_min"] = burst_pkts_min;
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + json_path.string());
    out << doc.dump(2) << '\n';
}

RarityTable RarityTable::load(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + json_path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    RarityTable table;
    for (auto it = doc.at("service_freq").begin(); it != doc.at("service_freq").end(); ++it)
        table.service_freq[it.key()] = it.value().get<double>();
    for (auto it = doc.at("state_freq").begin(); it != doc.at("state_freq").end(); ++it)
        table.state_freq[it.key()] = it.value().get<double>();
    table.cutoff_freq = doc.at("cutoff_freq").get<double>();
    return table;
}

void RarityTable::save(const std::filesystem::path& json_path) const {
    nlohmann::ordered_json doc;
    doc["service_freq"] = service_freq;
    doc["state_freq"] = state_freq;
    doc["cutoff_freq"] = cutoff_freq;
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + json_path.string());
    out << doc.dump(2) << '\n';
}

DerivedCues compute_cues(const FlowRecord& record) {
    DerivedCues cues;
    cues.pkt_rate = static_cast<double>(record.spkts + record.dpkts) / std::max(1e-6, record.dur);
    cues.byte_ratio = static_cast<double>(record.sbytes + 1) / static_cast<double>(record.dbytes + 1);
    cues.pkt_ratio = static_cast<double>(record.spkts + 1) / static_cast<double>(record.dpkts + 1);
    cues.ttl_ratio = static_cast<double>(record.sttl + 1) / static_cast<double>(record.dttl + 1);
    cues.dur = record.dur;
    cues.tcprtt = record.tcprtt;
    cues.synack = record.synack;
    cues.ackdat = record.ackdat;
    cues.ct_state_ttl = record.ct_state_ttl;
    return cues;
}

RarityTable fit_rarity_table(const std::vector<FlowRecord>& train, const FlagThresholds& thresholds) {
    if (train.empty()) throw Error(ErrorCode::EmptyTrain, "rarity fit requires training records");
    thresholds.validate();

    RarityTable table;
    for (const auto& rec : train) {
        table.service_freq[rec.service] += 1.0;
        table.state_freq[rec.state] += 1.0;
    }
    const double n = static_cast<double>(train.size());
    std::vector<double> pooled;
    pooled.reserve(table.service_freq.size() + table.state_freq.size());
    for (auto& [_, count] : table.service_freq) {
        count /= n;
        pooled.push_back(count);
    }
    for (auto& [_, count] : table.state_freq) {
        count /= n;
        pooled.push_back(count);
    }
    table.cutoff_freq = quantile(std::move(pooled), thresholds.rarity_quantile);
    return table;
}

FlagSet compute_flags(const DerivedCues& cues, const FlowRecord& record,
                      const FlagThresholds& thresholds, const RarityTable& rarity) {
    FlagSet flags;
    flags.asymmetry_high = cues.byte_ratio > thresholds.tau_br || cues.pkt_ratio > thresholds.tau_pr;
    flags.pkt_rate_high = cues.pkt_rate > thresholds.tau_r;

    const bool sttl_bad = record.sttl < thresholds.ttl_low || record.sttl > thresholds.ttl_high;
    // dttl == 0 is a legitimately absent return path, not an anomaly
    const bool dttl_bad =
        record.dttl > 0 && (record.dttl < thresholds.ttl_low || record.dttl > thresholds.ttl_high);
    flags.ttl_anomaly = sttl_bad || dttl_bad;

    const bool rtt_tiny = record.tcprtt > 0.0 && record.tcprtt < thresholds.timer_min;
    const bool timers_inconsistent =
        record.tcprtt > 0.0 && record.synack > 0.0 && record.ackdat > 0.0 &&
        record.synack + record.ackdat > record.tcprtt + thresholds.timer_order_slack;
    flags.tcp_timer_anomaly = rtt_tiny || timers_inconsistent;

    flags.rare_service_state =
        lookup_is_rare(rarity.service_freq, record.service, rarity.cutoff_freq) ||
        lookup_is_rare(rarity.state_freq, record.state, rarity.cutoff_freq);

    flags.short_burst = record.dur <= thresholds.burst_dur_max &&
                        record.spkts + record.dpkts >= thresholds.burst_pkts_min;
    return flags;
}

} // namespace flowprompt
