#pragma once

#include <array>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "fpd/hierarchy.hpp"
#include "fpd/io/synth.hpp"
#include "fpd/training.hpp"

namespace fixture {

/// Fresh scratch directory per call, under the gtest temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::path(::testing::TempDir()) / ("fpd_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline fpd::TrainConfig small_config(std::size_t epochs = 2) {
    fpd::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = 3;
    return cfg;
}

/// Hourly + daily levels trained briefly on a four-kind corpus.
inline fpd::ExtractorStack train_small(std::size_t days_per_kind = 20, std::size_t epochs = 2) {
    const std::array kinds{fpd::io::SourceKind::Solar, fpd::io::SourceKind::Wind,
                           fpd::io::SourceKind::Load, fpd::io::SourceKind::Ev};
    const fpd::SeriesBatch corpus =
        fpd::io::synth_corpus(kinds, days_per_kind, fpd::Resolution::FiveMin, 7);
    const fpd::TrainConfig cfg = small_config(epochs);
    auto stack = fpd::ExtractorStack::create(fpd::ArchitectureConfig{}, cfg.levels, cfg.seed);
    for (fpd::Resolution level : cfg.levels) {
        const auto views = fpd::training_views(corpus, level, cfg.mixed_inputs);
        fpd::train_level(stack, level, views, cfg);
    }
    fpd::finalize(stack);
    return stack;
}

/// Shared finalized stack; built once per test binary.
inline const fpd::ExtractorStack& small_stack() {
    static const fpd::ExtractorStack stack = train_small();
    return stack;
}

/// The default experiment recipe (150 days per kind, 10 epochs) for
/// properties that only hold once the extractors have actually learned.
inline const fpd::ExtractorStack& trained_stack() {
    static const fpd::ExtractorStack stack = train_small(150, 10);
    return stack;
}

}  // namespace fixture
