#pragma once

#include "aca/audio.hpp"

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace aca {

/// Fixed parameters of the fingerprint format. Frozen: fingerprints are
/// only comparable when every constant matches, so none of this is
/// user-configurable. Version tag lives in the DB file magic.
namespace fp {
constexpr int kSampleRate = 44100;
constexpr std::size_t kFrameSize = 16384;         // 2048 samples at a 5512.5 Hz view
constexpr std::size_t kSubfingerprintsPer3s = 256; // 256 words * 32 bit = 8 Kbit
constexpr std::uint64_t kHopNumerator = 3ull * kSampleRate; // samples per 3 s
constexpr std::uint64_t kHopDenominator = kSubfingerprintsPer3s;
constexpr double kFrameHopSeconds = 3.0 / kSubfingerprintsPer3s;
constexpr std::size_t kNumBands = 33; // 33 band energies -> 32 difference bits
constexpr double kBandLowHz = 300.0;
constexpr double kBandHighHz = 2000.0;
constexpr std::size_t kBlockLength = 256; // words compared per match
} // namespace fp

struct Fingerprint {
    std::vector<std::uint32_t> subfingerprints;
    double frame_hop = fp::kFrameHopSeconds;
};

int hamming(std::uint32_t a, std::uint32_t b);

/// Band-energy-difference fingerprint: per ~11.7 ms frame, bit m encodes the
/// sign of the time derivative of the energy difference between adjacent
/// log-spaced bands in 300-2000 Hz. Requires 44.1 kHz input of at least one
/// frame (16384 samples).
Fingerprint extract_fingerprint(const AudioBuffer& buffer);

struct MatchResult {
    std::string id;
    std::string metadata;
    double offset_seconds = 0.0; // query start within the stored track
    double bit_error_rate = 0.0;
};

/// Track store plus an inverted index from sub-fingerprint words to
/// (track, position) postings. Lookup-by-content with Hamming verification.
/// Concurrent identify() calls are safe; add/save/load need exclusivity.
class FingerprintDB {
public:
    struct Posting {
        std::uint32_t track = 0;   // insertion index
        std::uint32_t position = 0;
        std::uint64_t seq = 0;     // global insertion order
    };

    FingerprintDB() = default;
    FingerprintDB(FingerprintDB&&) = default;
    FingerprintDB& operator=(FingerprintDB&&) = default;
    FingerprintDB(const FingerprintDB&) = delete;
    FingerprintDB& operator=(const FingerprintDB&) = delete;

    void add(const std::string& id, const std::string& metadata, Fingerprint fingerprint);

    /// Hash-candidate identification with Hamming verification; falls back to
    /// an exhaustive scan only when no query word hits the index. Bumps the
    /// winning track's popularity counter.
    std::optional<MatchResult> identify(const Fingerprint& query, double match_threshold = 0.35,
                                        bool allow_exhaustive_fallback = true) const;

    /// Brute-force scan over every track and alignment. Same ranking rule as
    /// identify(), no popularity side effects.
    std::optional<MatchResult> identify_exhaustive(const Fingerprint& query,
                                                   double match_threshold = 0.35) const;

    void save(const std::string& path) const;
    static FingerprintDB load(const std::string& path);

    std::size_t size() const { return tracks_.size(); }
    std::vector<std::string> track_ids() const;
    std::uint64_t popularity(const std::string& id) const;

    /// Postings for one word, ordered by descending track popularity, then
    /// insertion order.
    std::vector<Posting> postings(std::uint32_t word) const;

private:
    struct Track {
        std::string id;
        std::string metadata;
        Fingerprint fingerprint;
    };

    struct Candidate {
        std::uint32_t track;
        std::int64_t offset;
    };

    std::optional<MatchResult> best_match(const std::vector<Candidate>& candidates,
                                          const Fingerprint& query,
                                          double match_threshold) const;
    void bump_popularity(std::uint32_t track) const;

    std::vector<Track> tracks_;
    std::unordered_map<std::string, std::uint32_t> by_id_;
    std::unordered_map<std::uint32_t, std::vector<Posting>> index_;
    std::uint64_t next_seq_ = 0;
    mutable std::vector<std::uint64_t> popularity_;
    mutable std::unique_ptr<std::mutex> popularity_mutex_ = std::make_unique<std::mutex>();
};

} // namespace aca
