#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gast/data.hpp"
#include "gast/model.hpp"
#include "gast/trainer.hpp"

namespace gast {

struct DataConfig {
    std::string source = "synthetic"; // "synthetic" | "file"
    std::string path;
    FileFormat format = FileFormat::Csv;
    SyntheticSpec synthetic;
    SplitFractions fractions;
};

struct CompareConfig {
    std::vector<std::string> strategies = {"dense",    "gast:8",   "layer:0.5",
                                           "data:0.5", "topk:8",   "random:8"};
    std::vector<std::uint64_t> seeds; // empty: fall back to the run seed
};

struct TheoryKnobs {
    std::size_t grad_check_pairs = 20;
    std::size_t smoothness_probes = 50;
    double smoothness_radius = 1e-2;
    std::vector<double> etas = {1e-2, 5e-3, 2.5e-3};
    std::size_t descent_trials = 200;
    double descent_eta = 1e-3;
    std::size_t hybrid_rows = 1000;
    std::size_t hybrid_trials = 1000;
};

// Full experiment description. Every key has a default except seed and
// out_dir, which must come from the file or the command line.
struct RunConfig {
    ModelConfig model = default_model();
    TrainConfig train;
    DataConfig data;
    CompareConfig compare;
    TheoryKnobs theory;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::string out_dir;

    static ModelConfig default_model();
    void validate() const; // cross-field checks; names the offending key
};

// Strict parse: any unrecognized key raises ConfigError naming it.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);

// Canonical sorted-key serialization of the fully defaulted config; the hash
// is FNV-1a over those bytes.
std::string config_canonical(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

} // namespace gast
