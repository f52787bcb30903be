#pragma once

// A trained learner together with its feature definition and standardizer.
//
// Model file layout (all little-endian): magic "WTDMODEL", u32 version, then
// length-prefixed strings and float64 arrays. Counts are u64.

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "wtdiag/boosting.hpp"
#include "wtdiag/features.hpp"
#include "wtdiag/standardizer.hpp"
#include "wtdiag/svm.hpp"

namespace wtdiag {

inline constexpr std::uint32_t model_format_version = 1;

enum class ModelKind { svc, svr, adaboost, l2boost };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);
bool is_classifier(ModelKind k);

struct LearnerParams {
    SvmParams svm{};
    AdaBoostParams adaboost{};
    L2BoostParams l2boost{};
};

struct TrainedModel {
    ModelKind kind = ModelKind::adaboost;
    std::string task;
    std::vector<std::string> feature_names;
    Standardizer standardizer;
    double target_mean = 0.0;   // regression targets are z-scored before fitting
    double target_scale = 1.0;
    std::variant<SvmModel, AdaBoostModel, L2BoostModel> body;
    std::uint64_t n_train = 0;
    std::uint64_t seed = 0;
    double kkt_violation = 0.0;  // audited after SVC training

    /// Classification: signed decision value; regression: target estimate.
    double predict(const std::vector<double>& features) const;
    int classify(const std::vector<double>& features) const;
    std::size_t dimension() const { return standardizer.dimension(); }
    bool operator==(const TrainedModel&) const = default;
};

/// Classification labels are taken as y >= 0.5 -> +1, otherwise -1.
TrainedModel train_model(ModelKind kind, const std::string& task,
                         const std::vector<std::string>& feature_names, const Matrix& x,
                         const std::vector<double>& y, const LearnerParams& params,
                         std::uint64_t seed = 0);

std::vector<std::uint8_t> serialize_model(const TrainedModel& m);
TrainedModel deserialize_model(const std::vector<std::uint8_t>& bytes);
void save_model(const std::filesystem::path& path, const TrainedModel& m);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace wtdiag
