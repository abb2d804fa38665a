#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pcfl/bytes.hpp"
#include "pcfl/common.hpp"

namespace pcfl {

// ----------------------------- bitstream -----------------------------

struct Bitstream {
    std::vector<std::uint8_t> bytes;
    std::uint64_t bit_len = 0;  // <= 8 * bytes.size(), MSB-first within each byte

    void push_bit(int bit) {
        const std::size_t byte_idx = static_cast<std::size_t>(bit_len >> 3);
        if (byte_idx == bytes.size()) bytes.push_back(0);
        if (bit) bytes[byte_idx] |= static_cast<std::uint8_t>(0x80u >> (bit_len & 7));
        ++bit_len;
    }
    int bit_at(std::uint64_t i) const {
        return (bytes[static_cast<std::size_t>(i >> 3)] >> (7 - (i & 7))) & 1;
    }
    bool operator==(const Bitstream& other) const = default;
};

// Reader that treats bits past the end as zero padding, as arithmetic-coder
// termination requires, but refuses to run away on a truncated stream.
class BitstreamReader {
public:
    explicit BitstreamReader(const Bitstream& bs) : bs_(bs) {
        if (bs.bit_len > 8ull * bs.bytes.size()) {
            throw decode_error("bitstream shorter than its declared bit length");
        }
    }

    int next() {
        if (pos_ < bs_.bit_len) {
            return bs_.bit_at(pos_++);
        }
        ++pos_;
        ++overrun_;
        if (overrun_ > kMaxOverrun) {
            throw decode_error("truncated bitstream: decoder ran past the end");
        }
        return 0;
    }

private:
    // One code-register width of zero padding is legitimate termination slack.
    static constexpr std::uint64_t kMaxOverrun = 64;
    const Bitstream& bs_;
    std::uint64_t pos_ = 0;
    std::uint64_t overrun_ = 0;
};

// ----------------------------- frequency table -----------------------------

// Symbol counts for the alphabet [0, alphabet). Counts are kept in the same
// 16-bit precision that goes over the wire, so encoder and decoder always
// work from identical tables.
struct FrequencyTable {
    std::vector<std::uint32_t> counts;
    std::uint64_t total = 0;

    int alphabet() const { return static_cast<int>(counts.size()); }

    static FrequencyTable from_symbols(std::span<const int> symbols, int alphabet) {
        if (alphabet < 1) throw contract_error("frequency table needs a nonempty alphabet");
        std::vector<std::uint64_t> raw(static_cast<std::size_t>(alphabet), 0);
        for (int s : symbols) {
            if (s < 0 || s >= alphabet) {
                throw contract_error("symbol " + std::to_string(s) + " outside alphabet [0," +
                                     std::to_string(alphabet) + ")");
            }
            ++raw[static_cast<std::size_t>(s)];
        }
        const std::uint64_t max_count = raw.empty() ? 0 : *std::max_element(raw.begin(), raw.end());
        FrequencyTable table;
        table.counts.resize(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            std::uint64_t c = raw[i];
            if (max_count > 0xffffu) {
                // Proportional rescale into 16 bits; occurring symbols keep count >= 1.
                c = c == 0 ? 0 : std::max<std::uint64_t>(1, (c * 0xffffu) / max_count);
            }
            table.counts[i] = static_cast<std::uint32_t>(c);
        }
        if (symbols.empty()) table.counts[0] = 1;  // degenerate but valid
        table.total = std::accumulate(table.counts.begin(), table.counts.end(), std::uint64_t{0});
        return table;
    }

    // Wire format: alphabet-many 16-bit big-endian counts.
    std::vector<std::uint8_t> serialize() const {
        ByteWriter w;
        for (std::uint32_t c : counts) w.u16be(static_cast<std::uint16_t>(c));
        return w.bytes;
    }

    static FrequencyTable deserialize(std::span<const std::uint8_t> bytes, int alphabet) {
        if (bytes.size() != static_cast<std::size_t>(alphabet) * 2) {
            throw decode_error("frequency table has wrong byte length");
        }
        ByteReader r(bytes);
        FrequencyTable table;
        table.counts.resize(static_cast<std::size_t>(alphabet));
        for (auto& c : table.counts) c = r.u16be("frequency table");
        table.total = std::accumulate(table.counts.begin(), table.counts.end(), std::uint64_t{0});
        if (table.total == 0) throw decode_error("frequency table is all zero");
        return table;
    }

    std::vector<std::uint64_t> cumulative() const {
        std::vector<std::uint64_t> cum(counts.size() + 1, 0);
        for (std::size_t i = 0; i < counts.size(); ++i) cum[i + 1] = cum[i] + counts[i];
        return cum;
    }
};

// ----------------------------- arithmetic coder -----------------------------

// Static-model integer arithmetic coder, 32-bit range with E1/E2/E3
// renormalization. The decoder needs the same table and the symbol count.
namespace detail {
constexpr std::uint64_t kCodeMask = 0xffffffffull;
constexpr std::uint64_t kHalf = 0x80000000ull;
constexpr std::uint64_t kQuarter = 0x40000000ull;
constexpr std::uint64_t kThreeQuarters = 0xc0000000ull;
}  // namespace detail

inline Bitstream arithmetic_encode(std::span<const int> symbols, const FrequencyTable& table) {
    if (table.total == 0 || table.total > detail::kQuarter) {
        throw contract_error("frequency table total out of range for the 32-bit coder");
    }
    const auto cum = table.cumulative();
    Bitstream out;
    std::uint64_t low = 0, high = detail::kCodeMask, pending = 0;

    auto emit = [&](int bit) {
        out.push_bit(bit);
        for (; pending > 0; --pending) out.push_bit(!bit);
    };

    for (int s : symbols) {
        if (s < 0 || s >= table.alphabet() || table.counts[static_cast<std::size_t>(s)] == 0) {
            throw contract_error("cannot encode symbol with zero frequency");
        }
        const std::uint64_t range = high - low + 1;
        high = low + (range * cum[static_cast<std::size_t>(s) + 1]) / table.total - 1;
        low = low + (range * cum[static_cast<std::size_t>(s)]) / table.total;
        for (;;) {
            if (high < detail::kHalf) {
                emit(0);
            } else if (low >= detail::kHalf) {
                emit(1);
                low -= detail::kHalf;
                high -= detail::kHalf;
            } else if (low >= detail::kQuarter && high < detail::kThreeQuarters) {
                ++pending;
                low -= detail::kQuarter;
                high -= detail::kQuarter;
            } else {
                break;
            }
            low <<= 1;
            high = (high << 1) | 1;
        }
    }
    // Terminate by disambiguating the final interval.
    ++pending;
    emit(low >= detail::kQuarter ? 1 : 0);
    return out;
}

inline std::vector<int> arithmetic_decode(const Bitstream& bits, const FrequencyTable& table,
                                          std::size_t n) {
    if (table.total == 0 || table.total > detail::kQuarter) {
        throw decode_error("frequency table total out of range for the 32-bit coder");
    }
    const auto cum = table.cumulative();
    BitstreamReader reader(bits);

    std::uint64_t low = 0, high = detail::kCodeMask, value = 0;
    for (int i = 0; i < 32; ++i) value = (value << 1) | static_cast<std::uint64_t>(reader.next());

    std::vector<int> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint64_t range = high - low + 1;
        const std::uint64_t scaled = ((value - low + 1) * table.total - 1) / range;
        // cum is nondecreasing; find the symbol whose slot contains `scaled`.
        const auto it = std::upper_bound(cum.begin(), cum.end(), scaled);
        const int sym = static_cast<int>(std::distance(cum.begin(), it)) - 1;
        if (sym < 0 || sym >= table.alphabet() || table.counts[static_cast<std::size_t>(sym)] == 0) {
            throw decode_error("arithmetic decoder desynchronized");
        }
        out.push_back(sym);

        high = low + (range * cum[static_cast<std::size_t>(sym) + 1]) / table.total - 1;
        low = low + (range * cum[static_cast<std::size_t>(sym)]) / table.total;
        for (;;) {
            if (high < detail::kHalf) {
            } else if (low >= detail::kHalf) {
                low -= detail::kHalf;
                high -= detail::kHalf;
                value -= detail::kHalf;
            } else if (low >= detail::kQuarter && high < detail::kThreeQuarters) {
                low -= detail::kQuarter;
                high -= detail::kQuarter;
                value -= detail::kQuarter;
            } else {
                break;
            }
            low <<= 1;
            high = (high << 1) | 1;
            value = (value << 1) | static_cast<std::uint64_t>(reader.next());
        }
    }
    return out;
}

// ----------------------------- entropy estimation -----------------------------

// Plug-in entropy of the empirical symbol distribution, in bits per symbol.
inline double empirical_entropy(std::span<const int> symbols) {
    if (symbols.empty()) throw contract_error("empirical_entropy: empty sequence");
    const int max_sym = *std::max_element(symbols.begin(), symbols.end());
    const int min_sym = *std::min_element(symbols.begin(), symbols.end());
    if (min_sym < 0) throw contract_error("empirical_entropy: negative symbol");
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(max_sym) + 1, 0);
    for (int s : symbols) ++counts[static_cast<std::size_t>(s)];
    const double n = static_cast<double>(symbols.size());
    double h = 0.0;
    for (std::uint64_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

// ----------------------------- codeword-length gap -----------------------------

// Average-codeword-length gap between (a) coding the sign-interleaved symbols
// and (b) coding magnitudes plus one sign bit, for a symmetric level
// distribution P(|level| = j) = 2*p_j (j >= 1), P(level = 0) = p0.
// The gap H(|level|) + 1 - H(interleaved) collapses to p0 analytically.
inline double interleave_length_gap(double p0, std::span<const double> side_probs) {
    double sum = p0;
    for (double pj : side_probs) {
        if (pj < 0.0) throw contract_error("length gap: negative probability");
        sum += 2.0 * pj;
    }
    if (p0 < 0.0 || std::fabs(sum - 1.0) > 1e-9) {
        throw contract_error("length gap: probabilities must satisfy p0 + 2*sum(pj) = 1");
    }
    double h_interleaved = 0.0;  // H(h): symbol 0 w.p. p0, two symbols w.p. p_j each
    double h_magnitude = 0.0;    // H(|level|): 0 w.p. p0, j w.p. 2*p_j
    if (p0 > 0.0) {
        h_interleaved -= p0 * std::log2(p0);
        h_magnitude -= p0 * std::log2(p0);
    }
    for (double pj : side_probs) {
        if (pj <= 0.0) continue;
        h_interleaved -= 2.0 * pj * std::log2(pj);
        h_magnitude -= 2.0 * pj * std::log2(2.0 * pj);
    }
    const double l_interleaved = h_interleaved;
    const double l_split = h_magnitude + 1.0;  // extra bit for the sign
    return l_split - l_interleaved;
}

}  // namespace pcfl
