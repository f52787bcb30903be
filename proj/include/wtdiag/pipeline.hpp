#pragma once

// Multi-stage diagnosis: per-modem LD identification, cooperative branch
// disambiguation, then severity and position regressions at the modem next
// to the LD, or an equivalent-age estimate when every modem reports no LD.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wtdiag/metrics.hpp"
#include "wtdiag/model.hpp"

namespace wtdiag {

/// Which dataset kind feeds a task.
DatasetKind dataset_kind_for(Task t);

/// Training label of a task for the modem of interest.
double task_label(Task t, int observer, const Labels& l);

/// Feature matrix and labels of one task at one modem.
struct TaskSamples {
    Task task = Task::identify;
    int observer = 0;
    FeatureSpec spec;
    Matrix x;
    std::vector<double> y;
    std::vector<Labels> labels;  // kept for per-severity breakdowns
    std::vector<std::string> names;

    void add(const LabeledSample& s);
    std::size_t size() const { return x.size(); }
};

struct PipelineConfig {
    ScenarioConfig scenario;
    LearnerParams learner;
    FeatureSet stage1_features = FeatureSet::jtfdr;
    ModelKind stage1_model = ModelKind::adaboost;
    ModelKind branch_model = ModelKind::adaboost;
    ModelKind gamma_homo_model = ModelKind::l2boost;
    ModelKind gamma_local_model = ModelKind::l2boost;
    ModelKind target_model = ModelKind::svr;
    KernelType target_kernel = KernelType::linear;
    ModelKind product_model = ModelKind::l2boost;
    std::size_t n_train = 2000;
    std::size_t n_test = 500;
    double min_samples_per_feature = 10.0;
    double max_majority_fraction = 0.8;  // classification class-balance bound
    std::size_t jobs = 1;

    void validate() const;
    FeatureSpec spec_for(Task t) const;
    ModelKind model_for(Task t) const;
    LearnerParams learner_for(Task t) const;
};

nlohmann::json to_json(const PipelineConfig& c);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// Generates `n` samples of the kind feeding `tasks` (which must share one
/// dataset kind) at draw indices [first, first + n) and extracts every task.
/// Work is split over `jobs` threads; the result does not depend on `jobs`.
std::vector<TaskSamples> generate_task_samples(const PipelineConfig& cfg,
                                               const ScenarioConfig& scenario,
                                               const std::vector<Task>& tasks, int observer,
                                               std::size_t n, std::uint64_t first);

/// Extracts tasks from a dataset file. The file's kind must feed every task
/// and its scenario config must equal `cfg.scenario`.
std::vector<TaskSamples> load_task_samples(const PipelineConfig& cfg, const std::vector<Task>& tasks,
                                           const std::filesystem::path& path);

/// Draw-index offset of held-out samples, far from any training range.
inline constexpr std::uint64_t test_index_offset = 1'000'000'000ULL;

struct EvalResult {
    std::string name;
    bool classification = false;
    ClassificationMetrics cls{};
    RegressionMetrics reg{};
    double samples_per_feature = 0.0;
};

EvalResult evaluate(const TrainedModel& m, const TaskSamples& test);

/// Equivalent-age fidelity of a gamma_homo model: predictions converted with
/// nominal parameters and compared with the t_eq labels.
EvalResult evaluate_t_eq(const TrainedModel& m, const TaskSamples& test, const CableSpec& cable);

/// Stage-1 detection split by LD severity: positives with gamma_local in
/// [lo, hi) against all negatives.
ClassificationMetrics detection_in_band(const TrainedModel& m, const TaskSamples& test, double lo,
                                        double hi);

struct ModelBundle {
    PipelineConfig config;
    std::array<TrainedModel, modem_count> identify;
    std::array<TrainedModel, modem_count> branch;
    TrainedModel gamma_homo;
    TrainedModel gamma_local;
    TrainedModel target;
    TrainedModel product;
    std::vector<EvalResult> metrics;
};

/// Checks the sample-count rule and class balance, then fits one model.
TrainedModel train_task(const PipelineConfig& cfg, const TaskSamples& train);

struct TrainingSet {
    std::array<TaskSamples, modem_count> identify;
    std::array<TaskSamples, modem_count> branch;
    TaskSamples gamma_homo;
    TaskSamples gamma_local;
    TaskSamples target;
    TaskSamples product;
};

TrainingSet generate_training_set(const PipelineConfig& cfg, std::size_t n, std::uint64_t first);

/// Dataset file names of a training set, relative to its directory.
std::vector<std::pair<std::string, std::pair<DatasetKind, int>>> training_set_files(const std::string& split);

void write_training_set(const PipelineConfig& cfg, const std::filesystem::path& dir, const std::string& split,
                        std::size_t n, std::uint64_t first);
TrainingSet read_training_set(const PipelineConfig& cfg, const std::filesystem::path& dir,
                              const std::string& split);

ModelBundle train_pipeline(const TrainingSet& train, const TrainingSet* test,
                           const PipelineConfig& cfg);

/// Generates train and held-out sets from the config and trains every model.
ModelBundle train_pipeline(const PipelineConfig& cfg);

void save_bundle(const std::filesystem::path& dir, const ModelBundle& b);
ModelBundle load_bundle(const std::filesystem::path& dir);

enum class ProfileType { homogeneous, localized };

struct DiagnosisReport {
    ProfileType profile = ProfileType::homogeneous;
    std::array<bool, modem_count> votes{};
    std::array<double, modem_count> scores{};
    std::optional<int> branch;  // LD branch index when localized
    std::optional<double> gamma_homo;
    std::optional<double> t_eq;
    std::optional<double> gamma_local;
    std::optional<double> target_m;
    std::optional<double> lwt_m;
    std::vector<std::string> provenance;

    /// Exactly one verdict path populated, lwt_m > 0 when present.
    bool consistent() const;
};

/// `observations[i]` must be the observation at modem i. Two LD votes are
/// resolved toward the larger stage-1 score (lower index on ties); three
/// raise AmbiguousDiagnosisError.
DiagnosisReport diagnose(const std::vector<ChannelObservation>& observations, const ModelBundle& b);

/// Severity and length from predicted (or labelled) gamma_local and product.
double length_from_product(double product, double gamma_local);

std::string branch_name(int branch);
std::string to_text(const DiagnosisReport& r);
std::string to_line(const DiagnosisReport& r);
DiagnosisReport report_from_line(const std::string& line);

struct SweepRow {
    std::size_t n_train = 0;
    double metric = 0.0;     // detection (classification) or R^2 (regression)
    double secondary = 0.0;  // false alarm or slope
    bool saturated = false;
};

struct SweepTable {
    Task task = Task::identify;
    std::string metric_name;
    std::vector<SweepRow> rows;
    std::optional<std::size_t> saturation_n;  // first n within delta of the final value
};

SweepTable ntr_sweep(Task task, const std::vector<std::size_t>& grid, std::size_t n_test,
                     const PipelineConfig& cfg, double delta = 0.02);

struct PerturbationSpec {
    Range magnitude{1.0, 1.0};
    Range loss_tangent{0.8, 1.2};
};

struct RobustnessReport {
    PerturbationSpec perturbation;
    std::vector<EvalResult> nominal;
    std::vector<EvalResult> perturbed;
};

/// Train-on-nominal, test-on-perturbed for target location, t_eq, gamma_local
/// and product; nominal test sets use the same draw indices.
RobustnessReport robustness_eval(const ModelBundle& b, const PerturbationSpec& p, std::size_t n_test);

}  // namespace wtdiag
