#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "repalign/alignment.hpp"
#include "repalign/matrix.hpp"
#include "repalign/selection.hpp"

namespace repalign {

using json = nlohmann::json;

inline json matrix_to_nested(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json alignment_report_to_json(const AlignmentReport& r) {
    return json{{"subjects", r.subject_ids},
                {"cosine", matrix_to_nested(r.cosine_matrix)},
                {"mse", matrix_to_nested(r.mse)},
                {"knn_k", r.knn_k},
                {"knn", matrix_to_nested(r.knn)},
                {"eig_k", r.eig_k},
                {"eig_sim", r.eigvec_sim}};
}

// SelectionResult plus the binning configuration that produced it, so a
// selection file is self-describing.
inline json selection_to_json(const SelectionResult& r, const BinnedUniverse& u,
                              std::size_t d, long long w) {
    return json{{"chosen", r.chosen},
                {"gap_trace", r.gap_trace},
                {"empty_total", r.empty_total},
                {"empty_uncoverable", r.empty_uncoverable},
                {"termination", to_string(r.termination)},
                {"d", d},
                {"w", w},
                {"bin_counts", u.bin_counts},
                {"skipped_dims", u.skipped_dims}};
}

inline SelectionResult selection_from_json(const json& j) {
    SelectionResult r;
    r.chosen = j.at("chosen").get<std::vector<std::size_t>>();
    r.gap_trace = j.at("gap_trace").get<std::vector<long long>>();
    r.empty_total = j.at("empty_total").get<long long>();
    r.empty_uncoverable = j.at("empty_uncoverable").get<long long>();
    r.termination = termination_from_string(j.at("termination").get<std::string>());
    return r;
}

}  // namespace repalign
