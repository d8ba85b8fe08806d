#pragma once

// Iteration-level solver records and their "calculation window" rendering.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "sld/error.hpp"

namespace sld {

struct MatrixPayload {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    friend bool operator==(const MatrixPayload&, const MatrixPayload&) = default;
};

using PayloadValue = std::variant<double, std::vector<double>, MatrixPayload, std::string>;

struct PayloadItem {
    std::string name;
    PayloadValue value;
    std::string unit;

    friend bool operator==(const PayloadItem&, const PayloadItem&) = default;
};

struct TraceRecord {
    std::size_t step_index = 0;
    std::string phase;
    std::vector<PayloadItem> payload;
    std::string message;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct TraceOutcome {
    bool converged = false;
    std::size_t iterations = 0;
    std::string summary;

    friend bool operator==(const TraceOutcome&, const TraceOutcome&) = default;
};

class SolveTrace {
  public:
    SolveTrace() = default;
    SolveTrace(std::string solver, std::vector<std::pair<std::string, std::string>> config)
        : solver_(std::move(solver)), config_(std::move(config)) {}

    const std::string& solver() const { return solver_; }
    const std::vector<std::pair<std::string, std::string>>& config() const { return config_; }
    const std::vector<TraceRecord>& records() const { return records_; }
    const std::optional<TraceOutcome>& outcome() const { return outcome_; }
    bool closed() const { return outcome_.has_value(); }

    SolveTrace& record(std::string phase, std::vector<PayloadItem> payload, std::string message = {}) {
        if (closed()) fail(ErrorCode::TraceClosed, "trace for " + solver_ + " already finalized");
        records_.push_back({records_.size(), std::move(phase), std::move(payload), std::move(message)});
        return *this;
    }

    void finalize(TraceOutcome outcome) {
        if (closed()) fail(ErrorCode::TraceClosed, "trace for " + solver_ + " already finalized");
        outcome_ = std::move(outcome);
    }

    std::size_t count(std::string_view phase) const {
        return static_cast<std::size_t>(
            std::count_if(records_.begin(), records_.end(), [&](const TraceRecord& r) { return r.phase == phase; }));
    }

    friend bool operator==(const SolveTrace&, const SolveTrace&) = default;

  private:
    std::string solver_;
    std::vector<std::pair<std::string, std::string>> config_;
    std::vector<TraceRecord> records_;
    std::optional<TraceOutcome> outcome_;
};

/// Thrown when a solver gives up; carries what it had traced so far.
class SolveFailure : public Error {
  public:
    SolveFailure(ErrorCode code, const std::string& detail, SolveTrace trace)
        : Error(code, detail), trace_(std::move(trace)) {}

    const SolveTrace& trace() const noexcept { return trace_; }

  private:
    SolveTrace trace_;
};

inline PayloadItem scalar(std::string name, double v, std::string unit = {}) {
    return {std::move(name), v, std::move(unit)};
}

inline PayloadItem vector_item(std::string name, std::vector<double> v, std::string unit = {}) {
    return {std::move(name), std::move(v), std::move(unit)};
}

inline PayloadItem text_item(std::string name, std::string v) { return {std::move(name), std::move(v), {}}; }

inline constexpr std::size_t kMaxRenderedMatrix = 20;

namespace detail {

inline std::string fixed(double v, int precision) {
    if (v == 0.0) v = 0.0;
    std::string s = fmt::format("{:.{}f}", v, precision);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

inline std::string label(const PayloadItem& item) {
    return item.unit.empty() ? item.name : item.name + " [" + item.unit + "]";
}

inline void render_matrix(std::string& out, const PayloadItem& item, const MatrixPayload& m, int precision) {
    if (m.rows > kMaxRenderedMatrix || m.cols > kMaxRenderedMatrix) {
        double norm = 0.0;
        for (double v : m.data) norm += v * v;
        out += fmt::format("  {}: {}x{} matrix, Frobenius norm {}\n", label(item), m.rows, m.cols,
                           fixed(std::sqrt(norm), precision));
        return;
    }
    out += fmt::format("  {}: {}x{}\n", label(item), m.rows, m.cols);
    std::vector<std::string> cells(m.data.size());
    std::size_t width = 0;
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        cells[i] = fixed(m.data[i], precision);
        width = std::max(width, cells[i].size());
    }
    for (std::size_t r = 0; r < m.rows; ++r) {
        out += "   ";
        for (std::size_t c = 0; c < m.cols; ++c) out += fmt::format(" {:>{}}", cells[r * m.cols + c], width);
        out += '\n';
    }
}

}  // namespace detail

/// Fixed-precision text for the calculation window. A pure function of its
/// arguments.
inline std::string render_text(const SolveTrace& trace, int precision = 6) {
    std::string out;
    out += fmt::format("=== {} ===\n", trace.solver());
    for (const auto& [key, value] : trace.config()) out += fmt::format("{} = {}\n", key, value);
    for (const auto& rec : trace.records()) {
        out += fmt::format("\n[{}] {}", rec.step_index, rec.phase);
        if (!rec.message.empty()) out += ": " + rec.message;
        out += '\n';
        for (const auto& item : rec.payload) {
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        out += fmt::format("  {} = {}\n", detail::label(item), detail::fixed(v, precision));
                    } else if constexpr (std::is_same_v<T, std::string>) {
                        out += fmt::format("  {} = {}\n", detail::label(item), v);
                    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
                        out += fmt::format("  {} =", detail::label(item));
                        for (double x : v) out += " " + detail::fixed(x, precision);
                        out += '\n';
                    } else {
                        detail::render_matrix(out, item, v, precision);
                    }
                },
                item.value);
        }
    }
    out += "\n--- outcome ---\n";
    if (const auto& o = trace.outcome()) {
        out += fmt::format("converged = {}\niterations = {}\n", o->converged ? "yes" : "no", o->iterations);
        if (!o->summary.empty()) out += o->summary + '\n';
    } else {
        out += "unfinished\n";
    }
    return out;
}

}  // namespace sld
