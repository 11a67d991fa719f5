#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fpd::cli {

struct SynthOptions {
    std::string kind = "solar";
    std::size_t days = 30;
    std::string resolution = "5min";
    std::uint64_t seed = 0;
    std::string out;
    std::optional<int> label;
};

struct TrainOptions {
    std::vector<std::string> data;
    std::vector<std::string> levels{"hourly", "daily"};
    std::size_t epochs = 20;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    std::optional<std::size_t> classes;
    double validation_fraction = 0.1;
    bool no_mixed_inputs = false;
    std::size_t channels = 8;
    std::size_t width = 32;
    std::size_t blocks = 2;
    bool average_pool = false;
    std::string out;
    std::string history;
    std::string log;
    bool quiet = false;
};

struct EvaluateOptions {
    std::string model;
    std::string a;
    std::string b;
    std::string entry;  ///< empty: the resolution of the data
    std::string target = "daily";
    std::string metrics = "all";
    std::uint64_t seed = 0;
    std::string pairing = "random";
    std::optional<double> bandwidth;
    bool textbook_mmd = false;
    std::string out;
};

struct DisturbOptions {
    std::string data;
    std::string kind;
    std::optional<double> alpha;
    std::uint64_t seed = 0;
    std::string aux;
    bool point = false;
    double low = 0.2;
    double high = 0.8;
    std::string preset;
    std::string out;
};

struct BenchmarkOptions {
    std::string model;
    std::string data;
    std::string aux;
    std::string preset = "fig2";
    std::uint64_t seed = 0;
    std::size_t seeds = 1;
    std::string entry;
    std::string target = "daily";
    std::string metrics = "fpd,js,mmd_rbf,mmd_linear";
    std::string out_dir;
};

struct GradcheckOptions {
    std::uint64_t seed = 0;
    std::size_t seeds = 1;
    double tolerance = 1e-4;
    std::string corrupt;
};

int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err);
int cmd_disturb(const DisturbOptions& o, std::ostream& out, std::ostream& err);
int cmd_benchmark(const BenchmarkOptions& o, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckOptions& o, std::ostream& out, std::ostream& err);

}  // namespace fpd::cli
