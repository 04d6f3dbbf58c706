#pragma once

#include "popcal/cli/config.hpp"

namespace popcal::cli {

// Each command reads its inputs from the config, writes its artifacts and a
// manifest.json into cfg.out_dir, and throws DataError, UsageError or
// NumericalError on failure.
void run_simulate(const PipelineConfig& cfg);
void run_impute(const PipelineConfig& cfg);
void run_ingest(const PipelineConfig& cfg);
void run_fit(const PipelineConfig& cfg, uptake::ModelKind kind);
void run_evaluate(const PipelineConfig& cfg);
void run_diagnose(const PipelineConfig& cfg);
/// simulate -> impute -> ingest -> fit (every model) -> evaluate -> diagnose
/// in sub-directories of cfg.out_dir.
void run_pipeline(const PipelineConfig& cfg);

/// Command-line entry point. Exit codes: 0 success, 1 data or numerical
/// error, 2 usage error.
int main(int argc, char** argv);

} // namespace popcal::cli
