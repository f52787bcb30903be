#pragma once

// Dataset files: a JSON header line followed by one JSON record per line.
// Channel spectra are base64 little-endian float64 with (re, im) interleaved.
// A sidecar "<path>.sum" lists "<index> <fnv1a64 hex>" for every record line.

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wtdiag/scenario.hpp"

namespace wtdiag {

inline constexpr int dataset_format_version = 1;

struct DatasetHeader {
    int version = dataset_format_version;
    DatasetKind kind = DatasetKind::identify;
    int observer = 0;
    std::size_t count = 0;
    std::uint64_t first = 0;  // draw index of the first record
    ScenarioConfig config;
    FrequencyGrid grid = FrequencyGrid::plc_band();
};

struct Dataset {
    DatasetHeader header;
    std::vector<LabeledSample> samples;
};

nlohmann::json to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NetworkScenario& scn);
NetworkScenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Labels& l);
Labels labels_from_json(const nlohmann::json& j);

std::string encode_record(std::size_t index, const LabeledSample& sample);
LabeledSample decode_record(std::size_t index, const std::string& line, const FrequencyGrid& grid);

/// Streams records to disk; the record count is fixed by the header.
class DatasetWriter {
public:
    DatasetWriter(const std::filesystem::path& path, const DatasetHeader& header);
    void write(const LabeledSample& sample);
    /// Flushes both files; throws if fewer records than announced were written.
    void close();
    ~DatasetWriter();

private:
    std::filesystem::path path_;
    std::ofstream data_;
    std::ofstream sums_;
    std::size_t expected_ = 0;
    std::size_t written_ = 0;
    bool closed_ = false;
};

void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

/// Reads records one at a time without holding the whole file.
void for_each_record(const std::filesystem::path& path,
                     const std::function<void(const DatasetHeader&)>& on_header,
                     const std::function<void(std::size_t, LabeledSample&&)>& on_record);

/// Generates and writes samples [first, first + n) of the given kind.
DatasetHeader generate_dataset(const ScenarioConfig& cfg, DatasetKind kind, int observer,
                               std::size_t n, const std::filesystem::path& path,
                               std::uint64_t first = 0);

}  // namespace wtdiag
