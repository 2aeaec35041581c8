#pragma once
// Evaluation and accounting: confusion-matrix IoU metrics over predicted vs
// ground-truth labels, serialized-size memory reports, wall-time profiling,
// and the CSV row format shared by the CLI subcommands.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gdfusion/oracle.hpp"
#include "gdfusion/pipeline.hpp"
#include "gdfusion/synthworld.hpp"
#include "gdfusion/tensor.hpp"

namespace gdfusion::metrics {

// ============================================================================
// Confusion matrix and IoU
// ============================================================================

struct ConfusionMatrix {
    std::size_t num_classes = 0;
    std::vector<std::uint64_t> counts;  // rows = ground truth

    explicit ConfusionMatrix(std::size_t classes)
        : num_classes(classes), counts(classes * classes, 0) {}

    void add(const std::vector<int>& pred, const std::vector<int>& gt) {
        if (pred.size() != gt.size())
            throw std::invalid_argument("ConfusionMatrix: length mismatch");
        for (std::size_t i = 0; i < pred.size(); ++i)
            ++counts[static_cast<std::size_t>(gt[i]) * num_classes +
                     static_cast<std::size_t>(pred[i])];
    }

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto v : counts) t += v;
        return t;
    }

    std::uint64_t tp(std::size_t c) const { return counts[c * num_classes + c]; }
    std::uint64_t fp(std::size_t c) const {
        std::uint64_t s = 0;
        for (std::size_t g = 0; g < num_classes; ++g)
            if (g != c) s += counts[g * num_classes + c];
        return s;
    }
    std::uint64_t fn(std::size_t c) const {
        std::uint64_t s = 0;
        for (std::size_t p = 0; p < num_classes; ++p)
            if (p != c) s += counts[c * num_classes + p];
        return s;
    }
};

struct IouReport {
    double miou = 0.0;
    std::vector<std::optional<double>> per_class;  // empty class and absent classes unset
};

// Mean IoU over semantic classes, excluding the empty class (index 0) and
// any class absent from both prediction and ground truth.
inline IouReport miou(const ConfusionMatrix& cm) {
    IouReport r;
    r.per_class.assign(cm.num_classes, std::nullopt);
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t c = 1; c < cm.num_classes; ++c) {
        const std::uint64_t tp = cm.tp(c), fp = cm.fp(c), fn = cm.fn(c);
        if (tp + fp + fn == 0) continue;
        const double iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
        r.per_class[c] = iou;
        sum += iou;
        ++counted;
    }
    r.miou = counted == 0 ? 0.0 : sum / static_cast<double>(counted);
    return r;
}

inline IouReport miou(const std::vector<int>& pred, const std::vector<int>& gt,
                      std::size_t num_classes) {
    ConfusionMatrix cm(num_classes);
    cm.add(pred, gt);
    return miou(cm);
}

// mIoU restricted to dynamic classes; absent when the world has none.
inline std::optional<double> miou_dynamic(const ConfusionMatrix& cm,
                                          const std::vector<synth::ClassDef>& classes) {
    double sum = 0.0;
    std::size_t counted = 0;
    bool any_dynamic = false;
    for (std::size_t c = 1; c < cm.num_classes && c < classes.size(); ++c) {
        if (!classes[c].dynamic) continue;
        any_dynamic = true;
        const std::uint64_t tp = cm.tp(c), fp = cm.fp(c), fn = cm.fn(c);
        if (tp + fp + fn == 0) continue;
        sum += static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
        ++counted;
    }
    if (!any_dynamic || counted == 0) return std::nullopt;
    return sum / static_cast<double>(counted);
}

// Category-agnostic occupied-vs-empty IoU.
inline double iou_binary(const std::vector<int>& pred, const std::vector<int>& gt) {
    if (pred.size() != gt.size()) throw std::invalid_argument("iou_binary: length mismatch");
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0, g = gt[i] != 0;
        if (p && g) ++tp;
        else if (p && !g) ++fp;
        else if (!p && g) ++fn;
    }
    return tp + fp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
}

// ============================================================================
// Memory accounting
// ============================================================================

struct MemoryReport {
    std::vector<std::pair<std::string, std::size_t>> components;

    std::size_t total() const {
        std::size_t t = 0;
        for (const auto& [name, bytes] : components) t += bytes;
        return t;
    }
};

inline MemoryReport memory_report(const pipeline::HiddenStateBundle& bundle) {
    return {pipeline::bundle_component_bytes(bundle)};
}

inline MemoryReport memory_report(const oracle::StackingState& state) {
    return {{{"queue", state.history_bytes()}}};
}

// ============================================================================
// Runtime profiling
// ============================================================================

struct TimedOp {
    std::string name;
    std::function<void()> fn;
};

struct ProfileRow {
    std::string name;
    double median_ms = 0.0;
    double share = 0.0;  // of the reference total
};

// Warmup runs followed by repeats; the median is reported. total_ms, when
// positive, is the denominator for shares (e.g. a full pipeline step);
// otherwise the sum of medians is used.
inline std::vector<ProfileRow> runtime_profile(const std::vector<TimedOp>& ops,
                                               int warmup = 3, int repeats = 11,
                                               double total_ms = 0.0) {
    using clock = std::chrono::steady_clock;
    std::vector<ProfileRow> rows;
    rows.reserve(ops.size());
    for (const auto& op : ops) {
        for (int i = 0; i < warmup; ++i) op.fn();
        std::vector<double> times;
        times.reserve(static_cast<std::size_t>(repeats));
        for (int i = 0; i < repeats; ++i) {
            const auto start = clock::now();
            op.fn();
            const auto stop = clock::now();
            times.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
        }
        std::sort(times.begin(), times.end());
        rows.push_back({op.name, times[times.size() / 2], 0.0});
    }
    double denom = total_ms;
    if (denom <= 0.0) {
        for (const auto& r : rows) denom += r.median_ms;
    }
    if (denom > 0.0)
        for (auto& r : rows) r.share = r.median_ms / denom;
    return rows;
}

// ============================================================================
// CSV rows (run_id, frame, metric, value)
// ============================================================================

struct CsvRow {
    std::string run_id;
    std::size_t frame = 0;  // 0 = whole-sequence aggregate
    std::string metric;
    double value = 0.0;
};

inline std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(std::ostream& os, const std::vector<CsvRow>& rows) {
    os << "run_id,frame,metric,value\n";
    for (const auto& r : rows)
        os << r.run_id << ',' << r.frame << ',' << r.metric << ',' << format_value(r.value)
           << '\n';
}

}  // namespace gdfusion::metrics
