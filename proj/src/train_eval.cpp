#include "riskgraph/train_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "riskgraph/io_util.hpp"
#include "riskgraph/kernels.hpp"

namespace riskgraph {

namespace {

constexpr std::size_t kEncodeChunk = 256;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Post encoder state for a set of users whose post rows share one input projection.
struct EncodedUsers {
  std::vector<std::size_t> users;
  std::vector<std::size_t> slot_of;  // dataset index -> position in `users`, kNone if absent
  Matrix stacked;
  LstmCache cache;
  std::vector<Vector> properties;
};

EncodedUsers encode_users(const Model& model, const CohortInputs& in,
                          std::vector<std::size_t> users) {
  EncodedUsers e;
  e.users = std::move(users);
  e.slot_of.assign(in.static_properties.size(), kNone);
  for (std::size_t s = 0; s < e.users.size(); ++s) e.slot_of[e.users[s]] = s;
  e.properties.reserve(e.users.size());
  for (std::size_t u : e.users) e.properties.push_back(in.static_properties[u]);
  if (!model.uses_post_encoder() || e.users.empty()) return e;

  SequenceSpans spans;
  for (std::size_t u : e.users) spans.add(in.sequences[u].rows());
  e.stacked = Matrix(spans.rows(), kPostInputWidth);
  for (std::size_t s = 0; s < e.users.size(); ++s) {
    const auto& seq = in.sequences[e.users[s]];
    std::copy(seq.flat().begin(), seq.flat().end(),
              e.stacked.flat().begin() +
                  static_cast<std::ptrdiff_t>(spans.first_row[s] * kPostInputWidth));
  }
  const Matrix behaviour =
      lstm_encode_batch(lstm_input_projection(e.stacked, model.lstm), spans, model.lstm, e.cache);
  for (std::size_t s = 0; s < e.users.size(); ++s) {
    insert_post_behavior(e.properties[s], behaviour.row(s), model.layout);
  }
  return e;
}

std::vector<std::size_t> with_neighbours(const Model& model, const CohortInputs& in,
                                         std::span<const std::size_t> users) {
  std::vector<std::size_t> out(users.begin(), users.end());
  if (model.attention.neighbour_attention) {
    for (std::size_t u : users) {
      out.insert(out.end(), in.neighbours[u].begin(), in.neighbours[u].end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ForwardTrace forward_one(const Model& model, const CohortInputs& in, std::size_t u,
                         const std::vector<const Vector*>& props_of) {
  NodeState center = encode_node(*props_of[u], model.attn, model.attention);
  std::vector<NodeState> nbs;
  if (model.attention.neighbour_attention) {
    for (std::size_t v : in.neighbours[u]) {
      nbs.push_back(encode_node(*props_of[v], model.attn, model.attention));
    }
  }
  ForwardTrace t = forward_from_states(std::move(center), std::move(nbs), model.attn, model.attention);
  if (model.attention.neighbour_attention) t.neighbour_ids = in.neighbours[u];
  return t;
}

void check_compatible(const Model& model, const CohortInputs& in) {
  model.check();
  if (!(model.layout == in.layout)) {
    throw UsageError("layout mismatch: model has " + model.layout.describe() + "; data built with " +
                     in.layout.describe());
  }
  for (int label : in.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= model.attention.class_count) {
      throw IntegrityError("label " + std::to_string(label) + " outside the model's " +
                           std::to_string(model.attention.class_count) + " classes");
    }
  }
}

double macro_or_binary_f1(const MetricsReport& r) { return r.f1; }

void adam_update(std::span<double> p, std::span<const double> g, Vector& m, Vector& v,
                 const TrainConfig& c, std::size_t step) {
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double mh = m[i] / bc1;
    const double vh = v[i] / bc2;
    p[i] -= c.learning_rate * mh / (std::sqrt(vh) + c.epsilon);
  }
}

}  // namespace

CohortInputs prepare_inputs(const CohortDataset& dataset, const FeatureConfig& features) {
  CohortInputs in;
  in.layout = PropertyLayout::build(features);
  std::map<std::string, Vector> by_id;
  in.sequences.reserve(dataset.users.size());
  for (const auto& u : dataset.users) {
    in.sequences.push_back(build_post_sequence(u, features));
    in.static_properties.push_back(encode_static_properties(u, in.layout, features));
    in.labels.push_back(u.label);
    by_id.emplace(u.user_id, in.static_properties.back());
  }
  const KnowledgeGraph graph = build_graph(dataset, by_id);
  for (std::size_t i = 0; i < graph.size(); ++i) in.neighbours.push_back(graph.neighbours(i));
  in.warnings = graph.warnings();
  return in;
}

std::vector<Vector> property_vectors(const Model& model, const CohortInputs& in,
                                     std::span<const std::size_t> users) {
  std::vector<Vector> out;
  out.reserve(users.size());
  for (std::size_t start = 0; start < users.size(); start += kEncodeChunk) {
    const auto chunk = users.subspan(start, std::min(kEncodeChunk, users.size() - start));
    std::vector<std::size_t> sorted(chunk.begin(), chunk.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    auto enc = encode_users(model, in, sorted);
    for (std::size_t u : chunk) out.push_back(enc.properties[enc.slot_of[u]]);
  }
  return out;
}

ModelGradients::ModelGradients(const Model& model)
    : lstm(model.lstm, 0), attn(model.attention) {}

void ModelGradients::set_zero() {
  lstm.set_zero();
  attn.set_zero();
}

std::vector<std::span<double>> ModelGradients::views() {
  return {lstm.w_ih.flat(), lstm.w_hh.flat(), lstm.bias,     lstm.w_out.flat(),
          lstm.b_out,       attn.w1.flat(),   attn.b1,       attn.w2.flat(),
          attn.b2,          attn.w3,          {&attn.b3, 1}, attn.w4.flat(),
          attn.b4,          attn.w5.flat(),   attn.b5};
}

Vector class_weights(const CohortInputs& in, std::span<const std::size_t> train_users,
                     std::size_t class_count, bool balanced) {
  Vector w(class_count, 1.0);
  if (!balanced || train_users.empty()) return w;
  std::vector<std::size_t> counts(class_count, 0);
  for (std::size_t u : train_users) ++counts[static_cast<std::size_t>(in.labels[u])];
  const double n = static_cast<double>(train_users.size());
  for (std::size_t c = 0; c < class_count; ++c) {
    w[c] = counts[c] ? n / (static_cast<double>(class_count) * static_cast<double>(counts[c])) : 0.0;
  }
  return w;
}

double batch_loss_and_gradients(const Model& model, const CohortInputs& in,
                                std::span<const std::size_t> batch,
                                std::span<const double> weights, ModelGradients& grads) {
  if (batch.empty()) return 0.0;
  require_shape(weights.size() == model.attention.class_count, "class weight count");
  auto enc = encode_users(model, in, with_neighbours(model, in, batch));
  std::vector<const Vector*> props_of(in.static_properties.size(), nullptr);
  for (std::size_t s = 0; s < enc.users.size(); ++s) props_of[enc.users[s]] = &enc.properties[s];

  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<Vector> d_props(enc.users.size(), Vector(model.layout.total_width(), 0.0));
  double loss = 0.0;
  for (std::size_t u : batch) {
    const auto label = static_cast<std::size_t>(in.labels[u]);
    const ForwardTrace trace = forward_one(model, in, u, props_of);
    const auto back = backward_user(trace, label, weights[label] * scale, model.attn,
                                    model.attention, grads.attn);
    loss += back.loss;
    kernels::axpy(1.0, back.d_center_p, d_props[enc.slot_of[u]]);
    for (std::size_t k = 0; k < trace.neighbour_ids.size(); ++k) {
      kernels::axpy(1.0, back.d_neighbour_p[k], d_props[enc.slot_of[trace.neighbour_ids[k]]]);
    }
  }

  if (model.uses_post_encoder()) {
    const auto& pb = model.layout.at("post_behavior");
    Matrix upstream(enc.users.size(), pb.width);
    for (std::size_t s = 0; s < enc.users.size(); ++s) {
      std::copy_n(d_props[s].begin() + static_cast<std::ptrdiff_t>(pb.offset), pb.width,
                  upstream.row(s).begin());
    }
    lstm_backward_batch(enc.stacked, model.lstm, enc.cache, upstream, grads.lstm);
  }
  return loss;
}

Predictions predict_users(const Model& model, const CohortInputs& in,
                          std::span<const std::size_t> users) {
  check_compatible(model, in);
  Predictions out;
  out.users.assign(users.begin(), users.end());
  out.labels.resize(users.size());
  out.predicted.resize(users.size());
  out.probs.resize(users.size());
  if (users.empty()) return out;

  const auto needed = with_neighbours(model, in, users);
  const auto vectors = property_vectors(model, in, needed);
  std::vector<const Vector*> props_of(in.static_properties.size(), nullptr);
  for (std::size_t i = 0; i < needed.size(); ++i) props_of[needed[i]] = &vectors[i];

  const std::size_t n = users.size();
  std::vector<double> losses(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t u = users[i];
    const ForwardTrace t = forward_one(model, in, u, props_of);
    out.labels[i] = in.labels[u];
    out.predicted[i] = t.output.predicted;
    out.probs[i] = t.output.probs;
    losses[i] = -std::log(std::max(t.output.probs[static_cast<std::size_t>(in.labels[u])],
                                   std::numeric_limits<double>::min()));
  }
  double total = 0.0;
  for (double l : losses) total += l;
  out.mean_loss = total / static_cast<double>(n);
  return out;
}

ForwardTrace trace_user(const Model& model, const CohortInputs& in, std::size_t user) {
  check_compatible(model, in);
  if (user >= in.static_properties.size()) throw UsageError("user index out of range");
  const std::size_t one[] = {user};
  const auto needed = with_neighbours(model, in, one);
  const auto vectors = property_vectors(model, in, needed);
  std::vector<const Vector*> props_of(in.static_properties.size(), nullptr);
  for (std::size_t i = 0; i < needed.size(); ++i) props_of[needed[i]] = &vectors[i];
  return forward_one(model, in, user, props_of);
}

Evaluation evaluate(const Model& model, const CohortInputs& in,
                    std::span<const std::size_t> users) {
  if (users.empty()) throw UsageError("evaluation split is empty");
  const auto p = predict_users(model, in, users);
  ConfusionMatrix cm(model.attention.class_count);
  for (std::size_t i = 0; i < users.size(); ++i) {
    cm.add(static_cast<std::size_t>(p.labels[i]), p.predicted[i]);
  }
  return {compute_metrics(cm), cm};
}

Evaluation evaluate(const Model& model, const CohortDataset& dataset, Split split) {
  const auto in = prepare_inputs(dataset, model.features);
  const auto users = dataset.users_in(split);
  if (users.empty()) {
    throw LoadError("split '" + std::string(to_string(split)) + "' has no users");
  }
  return evaluate(model, in, users);
}

TrainResult train(const CohortDataset& dataset, const TrainConfig& config) {
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  const std::size_t classes =
      config.class_count ? config.class_count : static_cast<std::size_t>(dataset.class_count());
  if (classes != 2 && classes != 5) {
    throw ConfigError("class count must be 2 or 5, got " + std::to_string(classes));
  }
  const auto in = prepare_inputs(dataset, config.features);
  const auto train_users = dataset.users_in(Split::train);
  const auto val_users = dataset.users_in(Split::validation);
  if (train_users.empty()) throw LoadError("training split is empty");
  if (val_users.empty()) throw LoadError("validation split is empty");

  Rng rng(config.seed);
  Rng init_rng = rng.fork(1);
  Rng order_rng = rng.fork(2);
  TrainResult result;
  result.model = Model::initialized(config.features, classes, config.lstm_hidden,
                                    config.attention_hidden, config.aggregation,
                                    !config.disable_property_attention,
                                    !config.disable_neighbour_attention, init_rng);
  check_compatible(result.model, in);
  if (config.epochs == 0) return result;

  Model model = result.model;
  const Vector weights = class_weights(in, train_users, classes, config.class_balanced);
  ModelGradients grads(model);
  auto params = tensors(model);
  std::vector<Vector> m1, m2;
  for (const auto& t : params) {
    m1.emplace_back(t.values.size(), 0.0);
    m2.emplace_back(t.values.size(), 0.0);
  }

  const std::size_t batch = config.batch_size ? config.batch_size : train_users.size();
  std::vector<std::size_t> order = train_users;
  std::size_t step = 0;
  double best_f1 = -1.0, best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::span<const std::size_t> b(order.data() + start,
                                           std::min(batch, order.size() - start));
      grads.set_zero();
      const double loss = batch_loss_and_gradients(model, in, b, weights, grads);
      epoch_loss += loss * static_cast<double>(b.size());
      ++step;
      auto gviews = grads.views();
      for (std::size_t t = 0; t < params.size(); ++t) {
        if (config.optimizer == Optimizer::adam) {
          adam_update(params[t].values, gviews[t], m1[t], m2[t], config, step);
        } else {
          kernels::axpy(-config.learning_rate, gviews[t], params[t].values);
        }
      }
    }
    EpochLog row;
    row.epoch = epoch;
    row.train_loss = epoch_loss / static_cast<double>(order.size());
    if (!std::isfinite(row.train_loss)) {
      throw Error("training diverged at epoch " + std::to_string(epoch) +
                  ": loss is not finite (try a smaller learning_rate)");
    }
    const auto val = predict_users(model, in, val_users);
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < val_users.size(); ++i) {
      cm.add(static_cast<std::size_t>(val.labels[i]), val.predicted[i]);
    }
    const auto report = compute_metrics(cm);
    row.val_accuracy = report.accuracy;
    row.val_f1 = macro_or_binary_f1(report);
    row.val_loss = val.mean_loss;
    result.log.push_back(row);

    if (row.val_f1 > best_f1 || (row.val_f1 == best_f1 && row.val_loss < best_loss)) {
      best_f1 = row.val_f1;
      best_loss = row.val_loss;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (config.patience && ++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,train_loss,val_accuracy,val_f1\n";
  for (const auto& r : log) {
    out += std::to_string(r.epoch) + "," + format_double(r.train_loss) + "," +
           format_double(r.val_accuracy) + "," + format_double(r.val_f1) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::int64_t n) {
  if (truth >= classes_ || predicted >= classes_) {
    throw UsageError("confusion matrix index outside " + std::to_string(classes_) + " classes");
  }
  if (n < 0) throw UsageError("negative confusion count");
  counts_[truth * classes_ + predicted] += n;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::int64_t ConfusionMatrix::tp(std::size_t c) const { return count(c, c); }

std::int64_t ConfusionMatrix::fp(std::size_t c) const {
  std::int64_t s = 0;
  for (std::size_t t = 0; t < classes_; ++t) {
    if (t != c) s += count(t, c);
  }
  return s;
}

std::int64_t ConfusionMatrix::fn(std::size_t c) const {
  std::int64_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p) {
    if (p != c) s += count(c, p);
  }
  return s;
}

std::int64_t ConfusionMatrix::tn(std::size_t c) const { return total() - tp(c) - fp(c) - fn(c); }

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.classes = cm.classes();
  r.support = cm.total();
  std::int64_t correct = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) correct += cm.tp(c);
  if (r.support > 0) {
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.support);
  } else {
    r.zero_division = true;
  }
  auto ratio = [&r](std::int64_t num, std::int64_t den) {
    if (den == 0) {
      r.zero_division = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const double p = ratio(cm.tp(c), cm.tp(c) + cm.fp(c));
    const double q = ratio(cm.tp(c), cm.tp(c) + cm.fn(c));
    r.class_precision.push_back(p);
    r.class_recall.push_back(q);
    r.class_f1.push_back(p + q > 0.0 ? 2.0 * p * q / (p + q) : 0.0);
  }
  const double k = static_cast<double>(cm.classes());
  double sp = 0.0, sr = 0.0, sf = 0.0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    sp += r.class_precision[c];
    sr += r.class_recall[c];
    sf += r.class_f1[c];
  }
  r.macro_f1 = sf / k;
  if (cm.classes() == 2) {
    r.precision = r.class_precision[1];
    r.recall = r.class_recall[1];
    r.f1 = r.class_f1[1];
  } else {
    r.precision = sp / k;
    r.recall = sr / k;
    r.f1 = r.macro_f1;
  }
  return r;
}

std::string format_report(const MetricsReport& r, const ConfusionMatrix& cm) {
  std::ostringstream out;
  out << "classes = " << r.classes << "\n";
  out << "support = " << r.support << "\n";
  out << "accuracy = " << format_double(r.accuracy) << "\n";
  const char* avg = r.classes == 2 ? "" : "macro_";
  out << avg << "precision = " << format_double(r.precision) << "\n";
  out << avg << "recall = " << format_double(r.recall) << "\n";
  out << "f1 = " << format_double(r.f1) << "\n";
  if (r.classes != 2) out << "macro_f1 = " << format_double(r.macro_f1) << "\n";
  out << "zero_division = " << (r.zero_division ? "true" : "false") << "\n";
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    for (std::size_t p = 0; p < cm.classes(); ++p) {
      out << "confusion." << t << "." << p << " = " << cm.count(t, p) << "\n";
    }
  }
  return out.str();
}

}  // namespace riskgraph
