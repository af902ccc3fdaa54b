#include "aca/fingerprint.hpp"

#include "aca/error.hpp"
#include "aca/fft.hpp"
#include "aca/signal.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

namespace aca {

int hamming(std::uint32_t a, std::uint32_t b) {
    return std::popcount(a ^ b);
}

namespace {

std::array<double, fp::kNumBands + 1> band_edges() {
    std::array<double, fp::kNumBands + 1> edges;
    const double ratio = fp::kBandHighHz / fp::kBandLowHz;
    for (std::size_t i = 0; i <= fp::kNumBands; ++i)
        edges[i] = fp::kBandLowHz *
                   std::pow(ratio, static_cast<double>(i) / static_cast<double>(fp::kNumBands));
    return edges;
}

std::uint64_t frame_start(std::uint64_t n) {
    return n * fp::kHopNumerator / fp::kHopDenominator;
}

std::uint64_t frame_count(std::uint64_t num_samples) {
    // smallest n with frame_start(n) >= num_samples
    return (num_samples * fp::kHopDenominator + fp::kHopNumerator - 1) / fp::kHopNumerator;
}

// CRC-32 (IEEE 802.3, reflected 0xEDB88320)
std::uint32_t crc32(const unsigned char* data, std::size_t size) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < size; ++i)
        crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

class ByteReader {
public:
    ByteReader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}

    std::uint32_t u32() {
        need(4);
        const std::uint32_t v = static_cast<std::uint32_t>(data_[pos_]) |
                                (static_cast<std::uint32_t>(data_[pos_ + 1]) << 8) |
                                (static_cast<std::uint32_t>(data_[pos_ + 2]) << 16) |
                                (static_cast<std::uint32_t>(data_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }

    std::string bytes(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > size_)
            throw Error(ErrorCode::BadFormat, "fingerprint db truncated");
    }

    const unsigned char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

constexpr char kDbMagic[9] = "ACAFPDB1";

} // namespace

Fingerprint extract_fingerprint(const AudioBuffer& buffer) {
    if (buffer.sample_rate != fp::kSampleRate)
        throw Error(ErrorCode::InvalidArgument,
                    "fingerprint format is fixed at 44100 Hz, got " +
                        std::to_string(buffer.sample_rate));
    if (buffer.size() < fp::kFrameSize)
        throw Error(ErrorCode::EmptyInput, "buffer shorter than one fingerprint frame");

    const std::uint64_t frames = frame_count(buffer.size());
    const auto edges = band_edges();
    const std::vector<double> window = window_coefficients(Window::hann, fp::kFrameSize);

    // bin -> band map over the 300-2000 Hz range, -1 outside
    const double bin_hz = static_cast<double>(fp::kSampleRate) / fp::kFrameSize;
    const std::size_t num_bins = fp::kFrameSize / 2 + 1;
    std::vector<int> bin_band(num_bins, -1);
    for (std::size_t k = 0; k < num_bins; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        if (f < edges.front() || f >= edges.back())
            continue;
        const auto it = std::upper_bound(edges.begin(), edges.end(), f);
        bin_band[k] = static_cast<int>(it - edges.begin()) - 1;
    }

    Matrix energies(frames, fp::kNumBands);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(frames); ++n) {
        const std::uint64_t start = frame_start(static_cast<std::uint64_t>(n));
        std::vector<double> frame(fp::kFrameSize, 0.0);
        const std::size_t avail =
            start < buffer.size()
                ? std::min<std::size_t>(fp::kFrameSize, buffer.size() - start)
                : 0;
        for (std::size_t i = 0; i < avail; ++i)
            frame[i] = buffer.samples[start + i] * window[i];
        const std::vector<double> mags = magnitude_spectrum(frame);
        double* dst = energies.row(n);
        for (std::size_t k = 0; k < num_bins; ++k)
            if (bin_band[k] >= 0)
                dst[bin_band[k]] += mags[k] * mags[k];
    }

    Fingerprint out;
    out.subfingerprints.resize(frames);
    for (std::uint64_t n = 0; n < frames; ++n) {
        const double* cur = energies.row(n);
        const double* prev = n > 0 ? energies.row(n - 1) : nullptr;
        std::uint32_t word = 0;
        for (std::size_t m = 0; m + 1 < fp::kNumBands; ++m) {
            const double d_now = cur[m] - cur[m + 1];
            const double d_prev = prev ? prev[m] - prev[m + 1] : 0.0;
            if (d_now - d_prev > 0.0) // ties encode 0
                word |= (1u << m);
        }
        out.subfingerprints[n] = word;
    }
    return out;
}

void FingerprintDB::add(const std::string& id, const std::string& metadata,
                        Fingerprint fingerprint) {
    if (by_id_.contains(id))
        throw Error(ErrorCode::DuplicateId, "track already in database: " + id);
    if (fingerprint.subfingerprints.empty())
        throw Error(ErrorCode::EmptyInput, "empty fingerprint for track: " + id);

    const std::uint32_t track = static_cast<std::uint32_t>(tracks_.size());
    for (std::size_t pos = 0; pos < fingerprint.subfingerprints.size(); ++pos)
        index_[fingerprint.subfingerprints[pos]].push_back(
            {track, static_cast<std::uint32_t>(pos), next_seq_++});

    by_id_[id] = track;
    tracks_.push_back({id, metadata, std::move(fingerprint)});
    popularity_.push_back(0);
}

std::vector<FingerprintDB::Posting> FingerprintDB::postings(std::uint32_t word) const {
    const auto it = index_.find(word);
    if (it == index_.end())
        return {};
    std::vector<Posting> out = it->second;
    std::vector<std::uint64_t> pop_snapshot;
    {
        std::lock_guard<std::mutex> lock(*popularity_mutex_);
        pop_snapshot = popularity_;
    }
    std::stable_sort(out.begin(), out.end(), [&](const Posting& a, const Posting& b) {
        if (pop_snapshot[a.track] != pop_snapshot[b.track])
            return pop_snapshot[a.track] > pop_snapshot[b.track];
        return a.seq < b.seq;
    });
    return out;
}

std::uint64_t FingerprintDB::popularity(const std::string& id) const {
    const auto it = by_id_.find(id);
    if (it == by_id_.end())
        throw Error(ErrorCode::NotFound, "unknown track: " + id);
    std::lock_guard<std::mutex> lock(*popularity_mutex_);
    return popularity_[it->second];
}

void FingerprintDB::bump_popularity(std::uint32_t track) const {
    std::lock_guard<std::mutex> lock(*popularity_mutex_);
    ++popularity_[track];
}

std::vector<std::string> FingerprintDB::track_ids() const {
    std::vector<std::string> ids;
    ids.reserve(tracks_.size());
    for (const Track& t : tracks_)
        ids.push_back(t.id);
    return ids;
}

std::optional<MatchResult> FingerprintDB::best_match(const std::vector<Candidate>& candidates,
                                                     const Fingerprint& query,
                                                     double match_threshold) const {
    const std::size_t block_len = std::min(fp::kBlockLength, query.subfingerprints.size());

    bool have_best = false;
    Candidate best{};
    double best_ber = 0.0;
    std::size_t best_compared = 0;

    for (const Candidate& cand : candidates) {
        const std::vector<std::uint32_t>& stored =
            tracks_[cand.track].fingerprint.subfingerprints;
        std::size_t compared = 0;
        std::uint64_t errors = 0;
        for (std::size_t i = 0; i < block_len; ++i) {
            const std::int64_t pos = cand.offset + static_cast<std::int64_t>(i);
            if (pos < 0 || pos >= static_cast<std::int64_t>(stored.size()))
                continue;
            ++compared;
            errors += static_cast<std::uint64_t>(
                hamming(query.subfingerprints[i], stored[static_cast<std::size_t>(pos)]));
        }
        if (compared == 0)
            continue;
        const double ber = static_cast<double>(errors) / (32.0 * static_cast<double>(compared));

        const bool better =
            !have_best || ber < best_ber ||
            (ber == best_ber &&
             (compared > best_compared ||
              (compared == best_compared &&
               (cand.track < best.track ||
                (cand.track == best.track && cand.offset < best.offset)))));
        if (better) {
            have_best = true;
            best = cand;
            best_ber = ber;
            best_compared = compared;
        }
    }

    if (!have_best || best_ber > match_threshold)
        return std::nullopt;

    MatchResult result;
    result.id = tracks_[best.track].id;
    result.metadata = tracks_[best.track].metadata;
    result.offset_seconds = static_cast<double>(best.offset) * fp::kFrameHopSeconds;
    result.bit_error_rate = best_ber;
    return result;
}

std::optional<MatchResult> FingerprintDB::identify(const Fingerprint& query,
                                                   double match_threshold,
                                                   bool allow_exhaustive_fallback) const {
    if (query.subfingerprints.empty())
        throw Error(ErrorCode::EmptyInput, "empty query fingerprint");
    if (tracks_.empty())
        throw Error(ErrorCode::EmptyInput, "empty fingerprint database");

    const std::size_t block_len = std::min(fp::kBlockLength, query.subfingerprints.size());

    std::set<std::pair<std::uint32_t, std::int64_t>> seen;
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < block_len; ++i) {
        for (const Posting& p : postings(query.subfingerprints[i])) {
            const std::int64_t offset =
                static_cast<std::int64_t>(p.position) - static_cast<std::int64_t>(i);
            if (seen.insert({p.track, offset}).second)
                candidates.push_back({p.track, offset});
        }
    }

    std::optional<MatchResult> result;
    if (!candidates.empty())
        result = best_match(candidates, query, match_threshold);
    else if (allow_exhaustive_fallback)
        result = identify_exhaustive(query, match_threshold);

    if (result)
        bump_popularity(by_id_.at(result->id));
    return result;
}

std::optional<MatchResult> FingerprintDB::identify_exhaustive(const Fingerprint& query,
                                                              double match_threshold) const {
    if (query.subfingerprints.empty())
        throw Error(ErrorCode::EmptyInput, "empty query fingerprint");
    if (tracks_.empty())
        throw Error(ErrorCode::EmptyInput, "empty fingerprint database");

    const std::size_t block_len = std::min(fp::kBlockLength, query.subfingerprints.size());
    std::vector<Candidate> candidates;
    for (std::uint32_t t = 0; t < tracks_.size(); ++t) {
        const std::int64_t track_len =
            static_cast<std::int64_t>(tracks_[t].fingerprint.subfingerprints.size());
        for (std::int64_t o = -static_cast<std::int64_t>(block_len) + 1; o < track_len; ++o)
            candidates.push_back({t, o});
    }
    return best_match(candidates, query, match_threshold);
}

void FingerprintDB::save(const std::string& path) const {
    std::string blob;
    blob.append(kDbMagic, 8);
    put_u32(blob, static_cast<std::uint32_t>(tracks_.size()));

    std::vector<std::uint64_t> pop_snapshot;
    {
        std::lock_guard<std::mutex> lock(*popularity_mutex_);
        pop_snapshot = popularity_;
    }

    for (std::size_t t = 0; t < tracks_.size(); ++t) {
        const Track& track = tracks_[t];
        put_u32(blob, static_cast<std::uint32_t>(track.id.size()));
        blob.append(track.id);
        put_u32(blob, static_cast<std::uint32_t>(track.metadata.size()));
        blob.append(track.metadata);
        put_u32(blob, static_cast<std::uint32_t>(pop_snapshot[t]));
        put_u32(blob, static_cast<std::uint32_t>(track.fingerprint.subfingerprints.size()));
        for (std::uint32_t word : track.fingerprint.subfingerprints)
            put_u32(blob, word);
    }

    put_u32(blob, crc32(reinterpret_cast<const unsigned char*>(blob.data()), blob.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoFailure, "cannot open for writing: " + path);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out)
        throw Error(ErrorCode::IoFailure, "short write: " + path);
}

FingerprintDB FingerprintDB::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::MissingFile, "cannot open fingerprint db: " + path);
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (blob.size() < 16 || std::memcmp(blob.data(), kDbMagic, 8) != 0)
        throw Error(ErrorCode::BadFormat, "not a fingerprint db (bad magic): " + path);

    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
    const std::size_t payload = blob.size() - 4;
    const std::uint32_t stored_crc = static_cast<std::uint32_t>(bytes[payload]) |
                                     (static_cast<std::uint32_t>(bytes[payload + 1]) << 8) |
                                     (static_cast<std::uint32_t>(bytes[payload + 2]) << 16) |
                                     (static_cast<std::uint32_t>(bytes[payload + 3]) << 24);
    if (crc32(bytes, payload) != stored_crc)
        throw Error(ErrorCode::ChecksumMismatch, "fingerprint db checksum mismatch: " + path);

    ByteReader reader(bytes + 8, payload - 8);
    FingerprintDB db;
    const std::uint32_t track_count = reader.u32();
    for (std::uint32_t t = 0; t < track_count; ++t) {
        const std::string id = reader.bytes(reader.u32());
        const std::string metadata = reader.bytes(reader.u32());
        const std::uint32_t popularity = reader.u32();
        const std::uint32_t word_count = reader.u32();
        Fingerprint fingerprint;
        fingerprint.subfingerprints.reserve(word_count);
        for (std::uint32_t i = 0; i < word_count; ++i)
            fingerprint.subfingerprints.push_back(reader.u32());
        db.add(id, metadata, std::move(fingerprint));
        db.popularity_.back() = popularity;
    }
    return db;
}

} // namespace aca
