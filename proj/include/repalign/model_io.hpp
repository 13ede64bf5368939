#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "repalign/base64.hpp"
#include "repalign/errors.hpp"
#include "repalign/matrix.hpp"
#include "repalign/models.hpp"
#include "repalign/ramx.hpp"
#include "repalign/training.hpp"

namespace repalign {

using json = nlohmann::json;

inline json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()},
                {"ramx_b64", base64_encode(matrix_to_ramx(m))}};
}

inline Matrix matrix_from_json(const json& j) {
    const Matrix m = matrix_from_ramx(base64_decode(j.at("ramx_b64").get<std::string>()));
    if (m.rows() != j.at("rows").get<std::size_t>() ||
        m.cols() != j.at("cols").get<std::size_t>())
        throw load_error("matrix payload shape disagrees with metadata");
    return m;
}

inline json vector_to_json(const std::vector<double>& v) {
    return matrix_to_json(Matrix(1, v.size(), v));
}

inline std::vector<double> vector_from_json(const json& j) {
    return matrix_from_json(j).data();
}

inline json adapter_to_json(const AdapterModel& a, const std::string& subject_id = "") {
    a.validate();
    json j{{"kind", to_string(a.kind)},
           {"in_dim", a.in_dim()},
           {"out_dim", a.out_dim()},
           {"w1", matrix_to_json(a.w1)},
           {"b1", vector_to_json(a.b1)}};
    if (a.w2) {
        j["hidden_dim"] = a.w1.rows();
        j["w2"] = matrix_to_json(*a.w2);
        j["b2"] = vector_to_json(*a.b2);
    }
    if (!subject_id.empty()) j["subject"] = subject_id;
    return j;
}

inline AdapterModel adapter_from_json(const json& j) {
    AdapterModel a{adapter_kind_from_string(j.at("kind").get<std::string>()),
                   matrix_from_json(j.at("w1")), vector_from_json(j.at("b1")), std::nullopt,
                   std::nullopt};
    if (j.contains("w2")) {
        a.w2 = matrix_from_json(j.at("w2"));
        a.b2 = vector_from_json(j.at("b2"));
    }
    a.validate();
    return a;
}

inline json mapper_to_json(const MapperModel& m) {
    m.validate();
    return json{{"kind", "mapper"},
                {"common_dim", m.in_dim()},
                {"hidden_dim", m.hidden_dim()},
                {"target_dim", m.out_dim()},
                {"residual", m.residual},
                {"w_h", matrix_to_json(m.w_h)},
                {"b_h", vector_to_json(m.b_h)},
                {"w_o", matrix_to_json(m.w_o)},
                {"b_o", vector_to_json(m.b_o)}};
}

inline MapperModel mapper_from_json(const json& j) {
    MapperModel m{matrix_from_json(j.at("w_h")), vector_from_json(j.at("b_h")),
                  matrix_from_json(j.at("w_o")), vector_from_json(j.at("b_o")),
                  j.at("residual").get<bool>()};
    m.validate();
    return m;
}

inline void write_json_file(const json& j, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open " + path + " for writing");
    f << j.dump(2) << '\n';
    if (!f) throw io_error("write failed for " + path);
}

inline json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw load_error(path + ": " + e.what());
    }
    return j;
}

inline void save_adapter(const AdapterModel& a, const std::string& path,
                         const std::string& subject_id = "") {
    write_json_file(adapter_to_json(a, subject_id), path);
}

inline AdapterModel load_adapter(const std::string& path) {
    return adapter_from_json(read_json_file(path));
}

inline void save_mapper(const MapperModel& m, const std::string& path) {
    write_json_file(mapper_to_json(m), path);
}

inline MapperModel load_mapper(const std::string& path) {
    return mapper_from_json(read_json_file(path));
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void save_trace_csv(const TrainTrace& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open " + path + " for writing");
    f << "epoch,total_loss,output_mse,adapter_mse\n";
    for (const TraceRow& r : trace.rows)
        f << r.epoch << ',' << format_double(r.total_loss) << ',' << format_double(r.output_mse)
          << ',' << format_double(r.adapter_mse) << '\n';
    if (!f) throw io_error("write failed for " + path);
}

}  // namespace repalign
