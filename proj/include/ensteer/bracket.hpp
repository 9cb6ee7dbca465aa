#pragma once

// Lie brackets and right-nested iterated brackets of smooth fields.
// Convention: [X, Y] = DY.X - DX.Y, which reproduces ad^k f1 f2 as the
// k-th derivative profile for the two-channel gaussian family.

#include "ensteer/field.hpp"

namespace ensteer {

inline constexpr int kDefaultBracketDepthCap = 8;

inline SmoothField bracket(const SmoothField& x_field, const SmoothField& y_field) {
    if (x_field.dim() != y_field.dim())
        throw StructuralError("bracket: fields live on different dimensions (" +
                              std::to_string(x_field.dim()) + " vs " +
                              std::to_string(y_field.dim()) + ")");
    if (x_field.max_jet_order() < 1 || y_field.max_jet_order() < 1)
        throw CapabilityError("bracket: both fields must admit jet order >= 1");
    const int n = x_field.dim();
    std::vector<GaussPoly> comps;
    comps.reserve(n);
    for (int i = 0; i < n; ++i) {
        GaussPoly c(n);
        for (int j = 0; j < n; ++j) {
            c += y_field.jacobian_entry(i, j) * x_field.component(j);
            c -= x_field.jacobian_entry(i, j) * y_field.component(j);
        }
        comps.push_back(c);
    }
    const int order = std::min(x_field.max_jet_order(), y_field.max_jet_order()) - 1;
    return SmoothField(std::move(comps),
                       "[" + x_field.label() + "," + y_field.label() + "]", order);
}

// ---------------------------------------------------------------------------
// BracketWord
// ---------------------------------------------------------------------------

struct BracketWord {
    std::vector<int> indices;  // 1-based channel indices

    BracketWord() = default;
    explicit BracketWord(std::vector<int> idx) : indices(std::move(idx)) {
        if (indices.empty()) throw StructuralError("BracketWord: empty word");
    }

    /// Parse digits, e.g. "112" -> (1,1,2). Channel count must be <= 9.
    static BracketWord parse(const std::string& digits) {
        std::vector<int> idx;
        for (char c : digits) {
            if (c < '1' || c > '9')
                throw StructuralError("BracketWord: bad digit '" + std::string(1, c) + "'");
            idx.push_back(c - '0');
        }
        return BracketWord(std::move(idx));
    }

    int depth() const { return static_cast<int>(indices.size()); }

    int head() const { return indices.front(); }

    BracketWord tail() const {
        if (depth() < 2) throw StructuralError("BracketWord: depth-1 word has no tail");
        return BracketWord(std::vector<int>(indices.begin() + 1, indices.end()));
    }

    std::string spelled() const {
        std::string s;
        for (int i : indices) {
            if (i > 9) throw StructuralError("BracketWord: cannot spell index > 9");
            s += static_cast<char>('0' + i);
        }
        return s;
    }

    bool operator==(const BracketWord& o) const { return indices == o.indices; }
    bool operator<(const BracketWord& o) const { return indices < o.indices; }

    void validate(const FieldFamily& family) const {
        for (int i : indices)
            if (i < 1 || i > family.size())
                throw StructuralError("BracketWord '" + spelled() +
                                      "': index out of range for family of size " +
                                      std::to_string(family.size()));
    }
};

/// Right-nested bracket of the family along a word.
inline SmoothField iterated_bracket(const FieldFamily& family, const BracketWord& word,
                                    int depth_cap = kDefaultBracketDepthCap) {
    word.validate(family);
    if (word.depth() > depth_cap)
        throw CapabilityError("iterated_bracket: word '" + word.spelled() + "' has depth " +
                              std::to_string(word.depth()) + " above the cap " +
                              std::to_string(depth_cap) +
                              " (pass an explicit override to go deeper)");
    for (const auto& f : family.members)
        if (f.max_jet_order() < word.depth())
            throw CapabilityError("iterated_bracket: word '" + word.spelled() +
                                  "' requires jet order >= " + std::to_string(word.depth()) +
                                  " but field '" + f.label() + "' admits only " +
                                  std::to_string(f.max_jet_order()));
    SmoothField acc = family[word.indices.back() - 1];
    for (int k = word.depth() - 2; k >= 0; --k)
        acc = bracket(family[word.indices[k] - 1], acc);
    return acc;
}

/// ad_X^k Y: ad^0 = Y, ad^k = [X, ad^{k-1}].
inline SmoothField ad_pow(const SmoothField& x_field, int k, const SmoothField& y_field) {
    if (k < 0) throw StructuralError("ad_pow: negative power");
    SmoothField acc = y_field;
    for (int i = 0; i < k; ++i) acc = bracket(x_field, acc);
    return acc;
}

}  // namespace ensteer
