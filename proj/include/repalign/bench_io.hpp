#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "repalign/dataset.hpp"
#include "repalign/errors.hpp"
#include "repalign/model_io.hpp"
#include "repalign/ramx.hpp"
#include "repalign/synth.hpp"

namespace repalign {

inline json synth_config_to_json(const SynthConfig& c) {
    return json{{"n_subjects", c.n_subjects}, {"n_common", c.n_common},
                {"n_unique", c.n_unique},     {"n_test", c.n_test},
                {"latent_dim", c.latent_dim}, {"subject_dim", c.subject_dim},
                {"transform", to_string(c.transform)},
                {"noise_sigma", c.noise_sigma},
                {"n_categories", c.n_categories},
                {"seed", c.seed}};
}

inline SynthConfig synth_config_from_json(const json& j) {
    SynthConfig c;
    c.n_subjects = j.at("n_subjects").get<std::size_t>();
    c.n_common = j.at("n_common").get<std::size_t>();
    c.n_unique = j.at("n_unique").get<std::size_t>();
    c.n_test = j.at("n_test").get<std::size_t>();
    c.latent_dim = j.at("latent_dim").get<std::size_t>();
    c.subject_dim = j.at("subject_dim").get<std::size_t>();
    c.transform = transform_from_string(j.at("transform").get<std::string>());
    c.noise_sigma = j.at("noise_sigma").get<double>();
    c.n_categories = j.at("n_categories").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

// Benchmark directory layout:
//   latents.ramx, targets.ramx, categories.csv, config.json,
//   subj_<id>/embeddings.ramx, subj_<id>/split.csv
inline void save_benchmark(const Benchmark& bench, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    save_matrix(bench.latents, dir + "/latents.ramx");
    save_matrix(bench.targets, dir + "/targets.ramx");
    {
        std::ofstream f(dir + "/categories.csv");
        if (!f) throw io_error("cannot write " + dir + "/categories.csv");
        f << "item_id,category\n";
        for (std::size_t i = 0; i < bench.categories.size(); ++i)
            f << i << ',' << bench.categories[i] << '\n';
    }
    write_json_file(synth_config_to_json(bench.config), dir + "/config.json");
    for (const SubjectDataset& s : bench.subjects) {
        const std::string sdir = dir + "/subj_" + s.subject_id;
        fs::create_directories(sdir);
        save_matrix(s.embeddings, sdir + "/embeddings.ramx");
        std::ofstream f(sdir + "/split.csv");
        if (!f) throw io_error("cannot write " + sdir + "/split.csv");
        f << "item_id,split\n";
        for (std::size_t i = 0; i < s.item_ids.size(); ++i)
            f << s.item_ids[i] << ',' << to_string(s.split[i]) << '\n';
    }
}

inline Benchmark load_benchmark(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw io_error("benchmark directory not found: " + dir);
    Benchmark bench{synth_config_from_json(read_json_file(dir + "/config.json")),
                    load_matrix(dir + "/latents.ramx"), load_matrix(dir + "/targets.ramx"),
                    {}, {}};
    {
        std::ifstream f(dir + "/categories.csv");
        if (!f) throw io_error("cannot open " + dir + "/categories.csv");
        std::string line;
        std::getline(f, line);  // header
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos) throw load_error(dir + "/categories.csv: bad row");
            bench.categories.push_back(std::stoi(line.substr(comma + 1)));
        }
    }
    for (std::size_t s = 1; s <= bench.config.n_subjects; ++s) {
        const std::string sdir = dir + "/subj_" + std::to_string(s);
        SubjectDataset subj{std::to_string(s), load_matrix(sdir + "/embeddings.ramx"), {}, {}};
        std::ifstream f(sdir + "/split.csv");
        if (!f) throw io_error("cannot open " + sdir + "/split.csv");
        std::string line;
        std::getline(f, line);  // header
        while (std::getline(f, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos) throw load_error(sdir + "/split.csv: bad row");
            subj.item_ids.push_back(std::stoull(line.substr(0, comma)));
            subj.split.push_back(split_from_string(line.substr(comma + 1)));
        }
        subj.validate();
        bench.subjects.push_back(std::move(subj));
    }
    return bench;
}

}  // namespace repalign
