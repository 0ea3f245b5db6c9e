#include "mfdr/load_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mfdr/csv.hpp"
#include "mfdr/errors.hpp"

namespace mfdr {

namespace {

constexpr double kRowSumTolerance = 1e-12;

// Iterative Tarjan on the support graph; returns the number of SCCs.
std::size_t count_components(const Matrix& P, double edge_tolerance) {
    const auto n = static_cast<std::size_t>(P.rows());
    constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::size_t next_index = 0, components = 0;

    struct Frame {
        std::size_t node;
        std::size_t next_child;
    };

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != kUnvisited) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto& frame = call.back();
            const std::size_t v = frame.node;
            bool descended = false;
            while (frame.next_child < n) {
                const std::size_t w = frame.next_child++;
                if (!(P(v, w) > edge_tolerance)) continue;
                if (index[w] == kUnvisited) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[v] = std::min(low[v], index[w]);
            }
            if (descended) continue;
            if (low[v] == index[v]) {
                ++components;
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                } while (w != v);
            }
            call.pop_back();
            if (!call.empty()) {
                const std::size_t parent = call.back().node;
                low[parent] = std::min(low[parent], low[v]);
            }
        }
    }
    return components;
}

std::string pool_label(PumpMode mode, int bin) {
    return std::string(mode == PumpMode::On ? "on" : "off") + ":" + std::to_string(bin);
}

}  // namespace

double rho_s(double x, double gamma) {
    if (!(gamma > 1.0)) throw ArgumentError("rho_s: gamma must exceed 1");
    if (!(x >= 0.0 && x <= 1.0)) throw ArgumentError("rho_s: x must lie in [0, 1]");
    const double scale = std::pow(2.0, gamma - 1.0);
    if (x <= 0.5) return scale * std::pow(x, gamma);
    return 1.0 - scale * std::pow(1.0 - x, gamma);
}

void SwitchingCurve::validate() const {
    if (!(gamma > 1.0)) throw ArgumentError("switching curve: gamma must exceed 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("switching curve: alpha must lie in (0, 1)");
    if (bins < 1) throw ArgumentError("switching curve: bins must be positive");
}

// (1-α)^{δ+} = 1/2, so rho_s(x^{δ+}) crosses 1/2 at x = 1-α.
double SwitchingCurve::on_exponent() const { return -1.0 / std::log2(1.0 - alpha); }

double SwitchingCurve::off_exponent() const { return -1.0 / std::log2(alpha); }

double SwitchingCurve::switch_on_probability(int i) const {
    const double x = static_cast<double>(i) / bins;
    return rho_s(std::pow(x, on_exponent()), gamma);
}

double SwitchingCurve::switch_off_probability(int i) const {
    const double x = static_cast<double>(i) / bins;
    return rho_s(std::pow(x, off_exponent()), gamma);
}

StateIndex LoadModel::pool_index(PumpMode mode, int bin, int bins) {
    const auto offset = mode == PumpMode::On ? static_cast<StateIndex>(bins) : 0;
    return offset + static_cast<StateIndex>(bin - 1);
}

PoolState LoadModel::pool_state(StateIndex index, int bins) {
    const auto T = static_cast<StateIndex>(bins);
    if (index < T) return {PumpMode::Off, static_cast<int>(index) + 1};
    return {PumpMode::On, static_cast<int>(index - T) + 1};
}

LoadModel build_pool_model(const SwitchingCurve& curve, double sample_period_minutes) {
    curve.validate();
    const int T = curve.bins;
    const auto d = static_cast<Eigen::Index>(2 * T);
    Matrix P = Matrix::Zero(d, d);
    Vector U = Vector::Zero(d);
    std::vector<std::string> labels(static_cast<std::size_t>(d));

    for (int i = 1; i <= T; ++i) {
        const auto off = static_cast<Eigen::Index>(LoadModel::pool_index(PumpMode::Off, i, T));
        const auto on = static_cast<Eigen::Index>(LoadModel::pool_index(PumpMode::On, i, T));
        const auto off_next = static_cast<Eigen::Index>(LoadModel::pool_index(PumpMode::Off, std::min(i + 1, T), T));
        const auto on_next = static_cast<Eigen::Index>(LoadModel::pool_index(PumpMode::On, std::min(i + 1, T), T));
        const auto on_first = static_cast<Eigen::Index>(LoadModel::pool_index(PumpMode::On, 1, T));
        const auto off_first = static_cast<Eigen::Index>(LoadModel::pool_index(PumpMode::Off, 1, T));

        const double p_on = curve.switch_on_probability(i);
        const double p_off = curve.switch_off_probability(i);
        // At i = T the "advance" target is the state itself (self-loop fallback).
        P(off, on_first) += p_on;
        P(off, off_next) += 1.0 - p_on;
        P(on, off_first) += p_off;
        P(on, on_next) += 1.0 - p_off;

        U(on) = 1.0;
        labels[static_cast<std::size_t>(off)] = pool_label(PumpMode::Off, i);
        labels[static_cast<std::size_t>(on)] = pool_label(PumpMode::On, i);
    }

    LoadModel model = build_custom_model(std::move(P), std::move(U),
                                         LoadModel::pool_index(PumpMode::On, 1, T), sample_period_minutes);
    model.labels_ = std::move(labels);
    model.curve_ = curve;
    return model;
}

LoadModel build_custom_model(Matrix P0, Vector utility, StateIndex anchor, double sample_period_minutes) {
    if (P0.rows() == 0 || P0.rows() != P0.cols())
        throw DimensionError("transition matrix must be square and non-empty");
    if (utility.size() != P0.rows()) throw DimensionError("utility length does not match transition matrix");
    if (anchor >= static_cast<StateIndex>(P0.rows())) throw DimensionError("anchor index out of range");
    if (!(sample_period_minutes > 0.0)) throw ArgumentError("sample period must be positive");

    for (Eigen::Index i = 0; i < P0.rows(); ++i) {
        if ((P0.row(i).array() < 0.0).any() || !P0.row(i).allFinite())
            throw StochasticityError("row " + std::to_string(i) + " has a negative or non-finite entry");
        const double sum = P0.row(i).sum();
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "row " << i << " sums to " << sum;
            throw StochasticityError(msg.str());
        }
    }
    if (!(utility.array() >= 0.0 && utility.array() <= 1.0).all())
        throw ArgumentError("utility entries must lie in [0, 1]");
    if (!is_irreducible(P0)) throw ReducibleChainError("transition matrix is reducible");

    LoadModel model;
    model.transition_ = std::move(P0);
    model.utility_ = std::move(utility);
    model.anchor_ = anchor;
    model.sample_period_minutes_ = sample_period_minutes;
    model.labels_.resize(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) model.labels_[i] = std::to_string(i);
    return model;
}

bool is_irreducible(const Matrix& P, double edge_tolerance) {
    return P.rows() > 0 && count_components(P, edge_tolerance) == 1;
}

void export_model(const LoadModel& model, const std::filesystem::path& stem) {
    auto csv_path = stem;
    csv_path += ".csv";
    write_matrix_csv(csv_path, model.transition());

    auto header_path = stem;
    header_path += ".txt";
    std::ofstream out(header_path);
    if (!out) throw ArgumentError("cannot write " + header_path.string());
    out.precision(17);
    if (const auto& c = model.curve()) {
        out << "T = " << c->bins << "\n";
        out << "gamma = " << c->gamma << "\n";
        out << "alpha = " << c->alpha << "\n";
    }
    out << "anchor = " << model.anchor() << "\n";
    out << "sample_period_minutes = " << model.sample_period_minutes() << "\n";
    out << "utility =";
    for (Eigen::Index i = 0; i < model.utility().size(); ++i) out << ' ' << model.utility()(i);
    out << "\n";
}

LoadModel import_model(const std::filesystem::path& stem) {
    auto csv_path = stem;
    csv_path += ".csv";
    Matrix P = read_matrix_csv(csv_path);

    auto header_path = stem;
    header_path += ".txt";
    std::ifstream in(header_path);
    if (!in) throw ArgumentError("cannot read " + header_path.string());

    std::optional<SwitchingCurve> curve;
    SwitchingCurve c;
    bool has_T = false, has_gamma = false, has_alpha = false;
    StateIndex anchor = 0;
    double period = 30.0;
    Vector utility;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
        std::istringstream value(line.substr(eq + 1));
        if (key == "T") has_T = static_cast<bool>(value >> c.bins);
        else if (key == "gamma") has_gamma = static_cast<bool>(value >> c.gamma);
        else if (key == "alpha") has_alpha = static_cast<bool>(value >> c.alpha);
        else if (key == "anchor") value >> anchor;
        else if (key == "sample_period_minutes") value >> period;
        else if (key == "utility") {
            std::vector<double> u;
            double x;
            while (value >> x) u.push_back(x);
            utility = Eigen::Map<Vector>(u.data(), static_cast<Eigen::Index>(u.size()));
        } else {
            throw ParseError("unknown model header key '" + key + "'", line_no);
        }
    }
    if (has_T && has_gamma && has_alpha) {
        LoadModel pool = build_pool_model(c, period);
        if (pool.size() != static_cast<std::size_t>(P.rows()) || (pool.transition() - P).cwiseAbs().maxCoeff() > 1e-12)
            throw ModelError("model CSV does not match its pool header");
        return pool;
    }
    return build_custom_model(std::move(P), std::move(utility), anchor, period);
}

}  // namespace mfdr
