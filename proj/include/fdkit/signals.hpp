#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fdkit/errors.hpp"

namespace fdkit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Uniformly sampled (u, y) trajectory segment. Immutable after construction.
struct SignalWindow {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<VectorXd> u_samples;
    std::vector<VectorXd> y_samples;

    int count() const { return static_cast<int>(u_samples.size()); }
    int p() const { return u_samples.empty() ? 0 : static_cast<int>(u_samples.front().size()); }
    int m() const { return y_samples.empty() ? 0 : static_cast<int>(y_samples.front().size()); }
    double t(int k) const { return t0 + dt * k; }

    // joint sample z(k) = (u(k); y(k))
    VectorXd z(int k) const {
        VectorXd out(p() + m());
        out << u_samples[k], y_samples[k];
        return out;
    }

    static SignalWindow make(double t0, double dt,
                             std::vector<VectorXd> u, std::vector<VectorXd> y) {
        if (u.size() != y.size())
            throw LengthMismatch("u and y sample counts differ");
        if (u.empty())
            throw EmptyWindow("window must hold at least one sample");
        if (!(dt > 0.0))
            throw NonUniformGrid("dt must be positive");
        for (const auto& v : u)
            if (!v.allFinite()) throw NonFiniteValue("u sample");
        for (const auto& v : y)
            if (!v.allFinite()) throw NonFiniteValue("y sample");
        SignalWindow w;
        w.t0 = t0;
        w.dt = dt;
        w.u_samples = std::move(u);
        w.y_samples = std::move(y);
        return w;
    }

    SignalWindow slice(int first, int count_) const {
        std::vector<VectorXd> u(u_samples.begin() + first, u_samples.begin() + first + count_);
        std::vector<VectorXd> y(y_samples.begin() + first, y_samples.begin() + first + count_);
        return make(t(first), dt, std::move(u), std::move(y));
    }
};

/// Latent (v) or residual (r) trajectory segment on a uniform grid.
struct LatentWindow {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<VectorXd> samples;

    int count() const { return static_cast<int>(samples.size()); }
    int dim() const { return samples.empty() ? 0 : static_cast<int>(samples.front().size()); }
    double t(int k) const { return t0 + dt * k; }

    static LatentWindow make(double t0, double dt, std::vector<VectorXd> s) {
        if (s.empty())
            throw EmptyWindow("latent window must hold at least one sample");
        if (!(dt > 0.0))
            throw NonUniformGrid("dt must be positive");
        for (const auto& v : s)
            if (!v.allFinite()) throw NonFiniteValue("latent sample");
        LatentWindow w;
        w.t0 = t0;
        w.dt = dt;
        w.samples = std::move(s);
        return w;
    }
};

/// Stacked window vector: blocks z(k)/sqrt(M) in sample order, so the squared
/// norm equals the per-sample mean of ||z(k)||^2.
struct StackedVector {
    VectorXd entries;

    double squared_norm() const { return entries.squaredNorm(); }
};

inline StackedVector stack(const SignalWindow& w) {
    const int M = w.count();
    const int d = w.p() + w.m();
    const double scale = 1.0 / std::sqrt(static_cast<double>(M));
    StackedVector s;
    s.entries.resize(static_cast<Eigen::Index>(M) * d);
    for (int k = 0; k < M; ++k)
        s.entries.segment(static_cast<Eigen::Index>(k) * d, d) = scale * w.z(k);
    return s;
}

inline StackedVector stack_sequence(const std::vector<VectorXd>& seq) {
    if (seq.empty())
        throw EmptyWindow("cannot stack an empty sequence");
    const int M = static_cast<int>(seq.size());
    const int d = static_cast<int>(seq.front().size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(M));
    StackedVector s;
    s.entries.resize(static_cast<Eigen::Index>(M) * d);
    for (int k = 0; k < M; ++k) {
        if (seq[k].size() != d)
            throw DimensionMismatch("ragged sequence in stack");
        s.entries.segment(static_cast<Eigen::Index>(k) * d, d) = scale * seq[k];
    }
    return s;
}

inline double half_energy(const StackedVector& v) { return 0.5 * v.squared_norm(); }

// ---------------------------------------------------------------------------
// CSV ingestion and emission. Fixed column order `t,u_1..u_p,y_1..y_m`,
// decimal floats, LF line endings.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& tok, std::size_t line_no) {
    double val = 0.0;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    auto res = std::from_chars(b, e, val);
    if (res.ec != std::errc{} || res.ptr != e)
        throw MalformedHeader("unparsable number '" + tok + "' on line " + std::to_string(line_no));
    if (!std::isfinite(val))
        throw NonFiniteValue("line " + std::to_string(line_no));
    return val;
}

inline void format_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

} // namespace detail

/// Parse `t,u_1..u_p,y_1..y_m` header; p and m inferred from column names.
inline std::pair<int, int> parse_csv_header(const std::string& header) {
    auto cols = detail::split_csv_line(header);
    if (cols.empty() || cols[0] != "t")
        throw MalformedHeader("first column must be 't'");
    int p = 0, m = 0;
    std::size_t i = 1;
    for (; i < cols.size(); ++i) {
        if (cols[i] == "u_" + std::to_string(p + 1)) ++p;
        else break;
    }
    for (; i < cols.size(); ++i) {
        if (cols[i] == "y_" + std::to_string(m + 1)) ++m;
        else break;
    }
    if (i != cols.size() || p == 0 || m == 0)
        throw MalformedHeader("expected t,u_1..u_p,y_1..y_m, got '" + header + "'");
    return {p, m};
}

inline SignalWindow load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw MalformedHeader("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw MalformedHeader("missing header row");
    auto [p, m] = parse_csv_header(line);

    std::vector<double> times;
    std::vector<VectorXd> us, ys;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cols = detail::split_csv_line(line);
        if (static_cast<int>(cols.size()) != 1 + p + m)
            throw MalformedHeader("wrong column count on line " + std::to_string(line_no));
        times.push_back(detail::parse_double(cols[0], line_no));
        VectorXd u(p), y(m);
        for (int j = 0; j < p; ++j) u(j) = detail::parse_double(cols[1 + j], line_no);
        for (int j = 0; j < m; ++j) y(j) = detail::parse_double(cols[1 + p + j], line_no);
        us.push_back(std::move(u));
        ys.push_back(std::move(y));
    }
    if (times.empty())
        throw EmptyWindow("no data rows in '" + path + "'");
    double dt = 0.0;
    if (times.size() >= 2) {
        dt = times[1] - times[0];
        if (!(dt > 0.0))
            throw NonUniformGrid("t column must be strictly increasing");
        for (std::size_t k = 1; k + 1 < times.size(); ++k) {
            const double step = times[k + 1] - times[k];
            if (std::abs(step - dt) > 1e-9 * dt)
                throw NonUniformGrid("step " + std::to_string(step) + " at row " +
                                     std::to_string(k + 2) + " differs from " + std::to_string(dt));
        }
    } else {
        dt = 1.0; // single row: nominal unit step
    }
    return SignalWindow::make(times[0], dt, std::move(us), std::move(ys));
}

inline void save_csv(const std::string& path, const SignalWindow& w) {
    std::string out;
    out += "t";
    for (int j = 0; j < w.p(); ++j) out += ",u_" + std::to_string(j + 1);
    for (int j = 0; j < w.m(); ++j) out += ",y_" + std::to_string(j + 1);
    out += '\n';
    for (int k = 0; k < w.count(); ++k) {
        detail::format_double(out, w.t(k));
        for (int j = 0; j < w.p(); ++j) { out += ','; detail::format_double(out, w.u_samples[k](j)); }
        for (int j = 0; j < w.m(); ++j) { out += ','; detail::format_double(out, w.y_samples[k](j)); }
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ConfigInvalid("cannot write '" + path + "'");
    f << out;
}

/// Generic series writer: header `t,<name>_1..` (or explicit names), one row
/// per sample. Used for zhat/zdelta/residual/divergence exports.
inline void save_series_csv(const std::string& path, double t0, double dt,
                            const std::vector<std::string>& names,
                            const std::vector<VectorXd>& rows) {
    std::string out;
    out += "t";
    for (const auto& n : names) out += "," + n;
    out += '\n';
    for (std::size_t k = 0; k < rows.size(); ++k) {
        detail::format_double(out, t0 + dt * static_cast<double>(k));
        for (Eigen::Index j = 0; j < rows[k].size(); ++j) {
            out += ',';
            detail::format_double(out, rows[k](j));
        }
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ConfigInvalid("cannot write '" + path + "'");
    f << out;
}

} // namespace fdkit
