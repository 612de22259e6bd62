#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "riskgraph/data_model.hpp"
#include "riskgraph/model.hpp"

namespace riskgraph {

enum class Optimizer { adam, sgd };

struct TrainConfig {
  std::size_t epochs = 60;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  std::size_t class_count = 0;  // 0: taken from the dataset labels
  std::size_t batch_size = 64;  // 0: full batch
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t patience = 0;  // epochs without improvement before stopping; 0 disables
  bool class_balanced = true;

  std::size_t lstm_hidden = kLstmHiddenWidth;
  std::size_t attention_hidden = kAttentionHiddenWidth;
  Aggregation aggregation = Aggregation::sigmoid;

  bool disable_neighbour_attention = false;
  bool disable_property_attention = false;
  // disabled categories, without_kg and knockouts live here
  FeatureConfig features;

  bool operator==(const TrainConfig&) const = default;
};

/// Dataset turned into network inputs once: post rows, the static part of
/// every property vector, and the follow graph.
struct CohortInputs {
  PropertyLayout layout;
  std::vector<Matrix> sequences;
  std::vector<Vector> static_properties;
  std::vector<std::vector<std::size_t>> neighbours;
  std::vector<int> labels;
  std::vector<std::string> warnings;
};

CohortInputs prepare_inputs(const CohortDataset& dataset, const FeatureConfig& features);

/// Property vectors (post behaviour filled in) for `users`, in that order.
std::vector<Vector> property_vectors(const Model& model, const CohortInputs& inputs,
                                     std::span<const std::size_t> users);

struct ModelGradients {
  LstmGradients lstm;
  AttentionGradients attn;

  explicit ModelGradients(const Model& model);
  void set_zero();
  // Same order as tensors(Model&).
  std::vector<std::span<double>> views();
};

// n_train / (C * n_c) per class when balanced, else all ones.
Vector class_weights(const CohortInputs& inputs, std::span<const std::size_t> train_users,
                     std::size_t class_count, bool balanced);

/// Mean weighted cross-entropy over `batch`; exact gradients accumulate into `grads`,
/// including the post encoder path of every neighbour involved.
double batch_loss_and_gradients(const Model& model, const CohortInputs& inputs,
                                std::span<const std::size_t> batch,
                                std::span<const double> class_weights, ModelGradients& grads);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_f1 = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0: the initial parameters were kept
};

TrainResult train(const CohortDataset& dataset, const TrainConfig& config);
// `epoch,train_loss,val_accuracy,val_f1` lines with a header.
std::string training_log_csv(const std::vector<EpochLog>& log);

/// counts(true, predicted)
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 2) : classes_(classes), counts_(classes * classes, 0) {}

  void add(std::size_t truth, std::size_t predicted, std::int64_t n = 1);
  std::size_t classes() const { return classes_; }
  std::int64_t count(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_ + predicted];
  }
  std::int64_t total() const;

  // One-vs-rest counts for class c.
  std::int64_t tp(std::size_t c) const;
  std::int64_t fp(std::size_t c) const;
  std::int64_t fn(std::size_t c) const;
  std::int64_t tn(std::size_t c) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t classes_;
  std::vector<std::int64_t> counts_;
};

/// Binary: precision/recall/f1 of class 1. More classes: unweighted means of
/// the one-vs-rest values, and f1 == macro_f1.
struct MetricsReport {
  std::size_t classes = 2;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> class_precision, class_recall, class_f1;
  bool zero_division = false;  // some precision or recall had an empty denominator
  std::int64_t support = 0;
};

MetricsReport compute_metrics(const ConfusionMatrix& cm);
// Flat `key = value` text, one metric per line.
std::string format_report(const MetricsReport& report, const ConfusionMatrix& cm);

struct Predictions {
  std::vector<std::size_t> users;
  std::vector<int> labels;
  std::vector<std::size_t> predicted;
  std::vector<Vector> probs;
  double mean_loss = 0.0;  // unweighted cross-entropy
};

Predictions predict_users(const Model& model, const CohortInputs& inputs,
                          std::span<const std::size_t> users);

// Full forward trace (attention weights included) of one user.
ForwardTrace trace_user(const Model& model, const CohortInputs& inputs, std::size_t user);

struct Evaluation {
  MetricsReport report;
  ConfusionMatrix confusion;
};

Evaluation evaluate(const Model& model, const CohortDataset& dataset, Split split);
Evaluation evaluate(const Model& model, const CohortInputs& inputs,
                    std::span<const std::size_t> users);

// ---------------------------------------------------------------------------
// Information gain

double entropy(std::span<const int> labels);
/// H(y) - H(y|F) in bits.
double info_gain(std::span<const int> labels, std::span<const int> feature_classes);

enum class DiscretizeKind { mean_split, categorical, text_polarity, image_bw };

/// image_bw reads brightness from `values` and warmth from `secondary`.
std::vector<int> discretize_feature(std::span<const double> values, DiscretizeKind kind,
                                    std::span<const double> secondary = {});

struct PropertySpec {
  std::string name;
  Category category;
  DiscretizeKind kind;
};

// The 23 knowledge-graph properties; names are valid knockout targets.
const std::vector<PropertySpec>& property_catalog();

std::vector<int> property_classes(const CohortDataset& dataset, const PropertySpec& spec);

struct PropertyGain {
  std::string name;
  Category category;
  double gain = 0.0;
};

struct CategoryGain {
  Category category;
  double mean_gain = 0.0;
};

struct InfoGainReport {
  std::vector<PropertyGain> properties;  // descending gain, ties by name
  std::vector<CategoryGain> categories;  // descending mean gain
};

/// Labels are the model's predictions when a model is given, else the true labels.
InfoGainReport rank_categories(const CohortDataset& dataset, const Model* model = nullptr);
std::string info_gain_csv(const InfoGainReport& report);

struct KnockoutResult {
  std::size_t top_x = 0;
  std::vector<std::string> removed;
  Evaluation test;
};

/// Retrains with the top-x properties of `ranking` zeroed and evaluates on the test split.
KnockoutResult feature_knockout(const CohortDataset& dataset, const TrainConfig& config,
                                std::size_t top_x, const InfoGainReport& ranking);

}  // namespace riskgraph
