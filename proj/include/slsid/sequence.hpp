#pragma once

// Switch sequences and their canonical integer index.
//
// A sequence is stored in written order: labels[0] is the most recent switch
// and labels.back() the earliest, so {theta_k, ..., theta_1}. The index is
//
//   L(seq) = theta_k * s^(k-1) + ... + theta_2 * s + theta_1,   L({}) = 0,
//
// i.e. bijective base-s numeration with digits 1..s. Sequences of length
// 0..N occupy exactly the indices 0..s_N-1 where s_N = (s^(N+1)-1)/(s-1).

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "slsid/errors.hpp"

namespace slsid {

using SeqIndex = std::uint64_t;

struct SwitchSequence {
    std::vector<int> labels;

    SwitchSequence() = default;
    SwitchSequence(std::initializer_list<int> l) : labels(l) {}
    explicit SwitchSequence(std::vector<int> l) : labels(std::move(l)) {}

    [[nodiscard]] int length() const noexcept { return static_cast<int>(labels.size()); }
    [[nodiscard]] bool empty() const noexcept { return labels.empty(); }

    friend bool operator==(const SwitchSequence&, const SwitchSequence&) = default;
};

// a:b, with every label of b earlier in time than every label of a.
inline SwitchSequence concat(const SwitchSequence& a, const SwitchSequence& b) {
    SwitchSequence out = a;
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    return out;
}

inline std::string to_string(const SwitchSequence& seq) {
    std::string out = "{";
    for (std::size_t i = 0; i < seq.labels.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(seq.labels[i]);
    }
    return out + "}";
}

inline std::uint64_t ipow(std::uint64_t base, int exp) {
    std::uint64_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

// Number of sequences of length 0..d, (s^(d+1)-1)/(s-1); d+1 for s == 1.
inline std::uint64_t sequence_count(int s, int d) {
    require(s >= 1, Errc::InvalidArgument, "mode count must be >= 1");
    require(d >= 0, Errc::InvalidArgument, "sequence length bound must be >= 0");
    if (s == 1) return static_cast<std::uint64_t>(d) + 1;
    return (ipow(static_cast<std::uint64_t>(s), d + 1) - 1) / static_cast<std::uint64_t>(s - 1);
}

inline SeqIndex sequence_index(const SwitchSequence& seq, int s) {
    require(s >= 1, Errc::InvalidArgument, "mode count must be >= 1");
    SeqIndex idx = 0;
    for (int label : seq.labels) {
        if (label < 1 || label > s)
            throw Error(Errc::LabelOutOfRange,
                        "label " + std::to_string(label) + " outside 1.." + std::to_string(s));
        idx = idx * static_cast<SeqIndex>(s) + static_cast<SeqIndex>(label);
    }
    return idx;
}

inline SwitchSequence sequence_from_index(int s, SeqIndex idx) {
    require(s >= 1, Errc::InvalidArgument, "mode count must be >= 1");
    SwitchSequence seq;
    if (s == 1) {
        seq.labels.assign(idx, 1);
        return seq;
    }
    const auto base = static_cast<SeqIndex>(s);
    while (idx > 0) {
        const SeqIndex digit = (idx - 1) % base + 1;
        seq.labels.push_back(static_cast<int>(digit));
        idx = (idx - digit) / base;
    }
    std::reverse(seq.labels.begin(), seq.labels.end());
    return seq;
}

inline int sequence_length_of_index(int s, SeqIndex idx) {
    if (s == 1) return static_cast<int>(idx);
    int len = 0;
    while (idx >= sequence_count(s, len)) ++len;
    return len;
}

// Index of a:b from the indices of a and b and the length of b.
inline SeqIndex concat_index(SeqIndex a, SeqIndex b, int len_b, int s) {
    return a * ipow(static_cast<std::uint64_t>(s), len_b) + b;
}

// Index of the sequence with its earliest label removed, and that label.
struct IndexSplit {
    SeqIndex prefix;
    int last;
};

inline IndexSplit split_last(SeqIndex idx, int s) {
    if (s == 1) return {idx - 1, 1};
    const auto base = static_cast<SeqIndex>(s);
    const SeqIndex digit = (idx - 1) % base + 1;
    return {(idx - digit) / base, static_cast<int>(digit)};
}

// All sequences of length 0..max_len in index order.
inline std::vector<SwitchSequence> all_sequences(int s, int max_len) {
    const auto count = sequence_count(s, max_len);
    std::vector<SwitchSequence> out;
    out.reserve(count);
    for (SeqIndex i = 0; i < count; ++i) out.push_back(sequence_from_index(s, i));
    return out;
}

}  // namespace slsid
