#include "daef/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "daef/model.hpp"
#include "daef/synth.hpp"

namespace daef {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 1.0 : num / den; }

struct Point {
  long y, x;
};

std::vector<Point> boundary(std::span<const int> mask, std::size_t h, std::size_t w) {
  std::vector<Point> pts;
  auto member = [&](long y, long x) {
    if (y < 0 || x < 0 || y >= static_cast<long>(h) || x >= static_cast<long>(w)) return false;
    return mask[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] != 0;
  };
  for (long y = 0; y < static_cast<long>(h); ++y) {
    for (long x = 0; x < static_cast<long>(w); ++x) {
      if (!member(y, x)) continue;
      if (!member(y - 1, x) || !member(y + 1, x) || !member(y, x - 1) || !member(y, x + 1)) {
        pts.push_back({y, x});
      }
    }
  }
  return pts;
}

double directed(const std::vector<Point>& from, const std::vector<Point>& to) {
  long worst = 0;
  for (const Point& p : from) {
    long best = std::numeric_limits<long>::max();
    for (const Point& q : to) {
      const long dy = p.y - q.y, dx = p.x - q.x;
      best = std::min(best, dy * dy + dx * dx);
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(static_cast<double>(worst));
}

}  // namespace

double hausdorff_distance(std::span<const int> a, std::span<const int> b, std::size_t height,
                          std::size_t width) {
  if (a.size() != height * width || b.size() != height * width) {
    throw std::invalid_argument("hausdorff_distance: mask size does not match grid");
  }
  const auto ba = boundary(a, height, width);
  const auto bb = boundary(b, height, width);
  if (ba.empty() || bb.empty()) throw std::invalid_argument("hausdorff_distance: empty mask");
  return std::max(directed(ba, bb), directed(bb, ba));
}

MetricReport evaluate_masks(std::span<const int> prediction, std::span<const int> truth,
                            std::size_t batch, std::size_t height, std::size_t width,
                            std::size_t num_classes) {
  const std::size_t pixels = height * width;
  if (prediction.size() != batch * pixels || truth.size() != batch * pixels) {
    throw std::invalid_argument("evaluate_masks: mask sizes do not match batch geometry");
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (prediction[i] < 0 || truth[i] < 0 || static_cast<std::size_t>(prediction[i]) >= num_classes ||
        static_cast<std::size_t>(truth[i]) >= num_classes) {
      throw std::invalid_argument("evaluate_masks: label out of range");
    }
  }

  MetricReport report;
  double hd_sum = 0.0;
  std::size_t hd_classes = 0;
  std::vector<int> pa(pixels), ta(pixels);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const int label = static_cast<int>(c);
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool p = prediction[i] == label, t = truth[i] == label;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
      tn += !p && !t;
    }
    if (tp + fp + fn == 0) continue;

    ClassMetrics m;
    m.label = label;
    m.dsc = ratio(2 * tp, 2 * tp + fp + fn);
    m.sensitivity = ratio(tp, tp + fn);
    m.specificity = ratio(tn, tn + fp);
    m.accuracy = ratio(tp + tn, tp + tn + fp + fn);

    double hd = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      bool any_p = false, any_t = false;
      for (std::size_t i = 0; i < pixels; ++i) {
        pa[i] = prediction[b * pixels + i] == label;
        ta[i] = truth[b * pixels + i] == label;
        any_p = any_p || pa[i];
        any_t = any_t || ta[i];
      }
      if (!any_p || !any_t) continue;
      hd += hausdorff_distance(pa, ta, height, width);
      ++m.hausdorff_pairs;
    }
    if (m.hausdorff_pairs > 0) {
      m.hausdorff = hd / static_cast<double>(m.hausdorff_pairs);
      hd_sum += m.hausdorff;
      ++hd_classes;
    }
    report.per_class.push_back(m);
  }

  if (!report.per_class.empty()) {
    const double k = static_cast<double>(report.per_class.size());
    report.dsc = report.sensitivity = report.specificity = report.accuracy = 0.0;
    for (const auto& m : report.per_class) {
      report.dsc += m.dsc / k;
      report.sensitivity += m.sensitivity / k;
      report.specificity += m.specificity / k;
      report.accuracy += m.accuracy / k;
    }
  }
  report.hausdorff = hd_classes > 0 ? hd_sum / static_cast<double>(hd_classes) : 0.0;
  return report;
}

std::vector<int> predict_masks(const Model& model, const SegBatch& batch) {
  const std::size_t pixels = batch.height() * batch.width();
  const std::size_t k = model.config().num_classes;
  std::vector<int> out(batch.batch() * pixels);
  for (std::size_t b = 0; b < batch.batch(); ++b) {
    Tensor logits = model.forward_tokens(batch.image(b));
    auto v = logits.data();
    for (std::size_t i = 0; i < pixels; ++i) {
      const double* row = v.data() + i * k;
      out[b * pixels + i] = static_cast<int>(std::max_element(row, row + k) - row);
    }
  }
  return out;
}

MetricReport evaluate(const Model& model, const SegBatch& batch) {
  if (batch.num_classes != model.config().num_classes) {
    throw std::invalid_argument("evaluate: batch has " + std::to_string(batch.num_classes) +
                                " classes, model has " +
                                std::to_string(model.config().num_classes));
  }
  const auto pred = predict_masks(model, batch);
  return evaluate_masks(pred, batch.masks, batch.batch(), batch.height(), batch.width(),
                        batch.num_classes);
}

void write_metric_csv(std::ostream& out, const MetricReport& report) {
  out << "class,dsc,se,sp,acc,hd\n";
  auto row = [&](const std::string& name, double dsc, double se, double sp, double acc, double hd) {
    out << name << ',' << dsc << ',' << se << ',' << sp << ',' << acc << ',' << hd << '\n';
  };
  const auto prec = out.precision(10);
  for (const auto& m : report.per_class) {
    row(std::to_string(m.label), m.dsc, m.sensitivity, m.specificity, m.accuracy, m.hausdorff);
  }
  row("macro", report.dsc, report.sensitivity, report.specificity, report.accuracy,
      report.hausdorff);
  out.precision(prec);
}

}  // namespace daef
