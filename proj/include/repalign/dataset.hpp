#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "repalign/errors.hpp"
#include "repalign/matrix.hpp"

namespace repalign {

enum class Split { common, unique, test };

inline std::string to_string(Split s) {
    switch (s) {
        case Split::common: return "common";
        case Split::unique: return "unique";
        case Split::test: return "test";
    }
    throw value_error("unknown split tag");
}

inline Split split_from_string(const std::string& s) {
    if (s == "common") return Split::common;
    if (s == "unique") return Split::unique;
    if (s == "test") return Split::test;
    throw value_error("unknown split tag: " + s);
}

// One subject's embeddings with global item identifiers and the
// common/unique/test partition. Row i of `embeddings` is item `item_ids[i]`
// with tag `split[i]`. Common items appear in the same order across all
// subjects of a benchmark.
struct SubjectDataset {
    std::string subject_id;
    Matrix embeddings;
    std::vector<std::uint64_t> item_ids;
    std::vector<Split> split;

    void validate() const {
        if (item_ids.size() != embeddings.rows() || split.size() != embeddings.rows())
            throw dim_error("SubjectDataset " + subject_id + ": row metadata mismatch");
        std::vector<std::uint64_t> ids = item_ids;
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            throw value_error("SubjectDataset " + subject_id + ": duplicate item ids");
    }

    std::vector<std::size_t> rows_with(Split tag) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < split.size(); ++i)
            if (split[i] == tag) out.push_back(i);
        return out;
    }

    std::vector<std::size_t> train_rows() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < split.size(); ++i)
            if (split[i] != Split::test) out.push_back(i);
        return out;
    }
};

}  // namespace repalign
