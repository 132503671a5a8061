#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "fpt/error.hpp"
#include "fpt/harness.hpp"
#include "config_text.hpp"

namespace fpt {
namespace detail {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_number(std::string_view s, const std::string& key) {
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw Error(Errc::ConfigError, key + ": '" + std::string(s) + "' is not a number");
    return v;
}

std::map<std::string, Entry> tokenize(std::string_view text) {
    std::map<std::string, Entry> out;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(Errc::ConfigError, "line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view rhs = trim(line.substr(eq + 1));
        if (key.empty() || rhs.empty())
            throw Error(Errc::ConfigError, "line " + std::to_string(line_no) + ": empty key or value");

        // The unit is the last whitespace-separated token when it does not parse as a number.
        Entry e;
        e.line = line_no;
        e.value = std::string(rhs);
        if (const auto sp = rhs.find_last_of(" \t"); sp != std::string_view::npos) {
            const std::string_view last = rhs.substr(sp + 1);
            double probe = 0.0;
            const auto [ptr, ec] = std::from_chars(last.data(), last.data() + last.size(), probe);
            const bool numeric = ec == std::errc() && ptr == last.data() + last.size();
            if (!numeric && last.front() != ',' && rhs[sp - 1] != ',') {
                e.value = std::string(trim(rhs.substr(0, sp)));
                e.unit = std::string(last);
            }
        }
        if (!out.emplace(key, e).second)
            throw Error(Errc::ConfigError, "line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    return out;
}

double Reader::number(const std::string& key, double fallback, std::string_view unit) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    used_.insert(key);
    if (it->second.unit != unit)
        throw Error(Errc::ConfigError, key + " needs unit '" + std::string(unit) + "', got '" + it->second.unit + "'");
    return parse_number(it->second.value, key);
}

long long Reader::integer(const std::string& key, long long fallback) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    used_.insert(key);
    const auto& v = it->second.value;
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (!it->second.unit.empty() || ec != std::errc() || ptr != v.data() + v.size())
        throw Error(Errc::ConfigError, key + ": '" + v + "' is not an integer");
    return out;
}

std::uint64_t Reader::u64(const std::string& key, std::uint64_t fallback) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    used_.insert(key);
    const auto& v = it->second.value;
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (!it->second.unit.empty() || ec != std::errc() || ptr != v.data() + v.size())
        throw Error(Errc::ConfigError, key + ": '" + v + "' is not an unsigned integer");
    return out;
}

bool Reader::boolean(const std::string& key, bool fallback) {
    const auto w = word(key, fallback ? "true" : "false", {"true", "false"});
    return w == "true";
}

std::string Reader::word(const std::string& key, std::string fallback, std::initializer_list<std::string_view> allowed) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    used_.insert(key);
    // A word may itself contain spaces (labels), so the unit split is undone.
    std::string v = it->second.unit.empty() ? it->second.value : it->second.value + " " + it->second.unit;
    if (allowed.size() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
        std::string list;
        for (auto a : allowed) list += (list.empty() ? "" : "|") + std::string(a);
        throw Error(Errc::ConfigError, key + ": '" + v + "' is not one of " + list);
    }
    return v;
}

std::vector<double> Reader::list(const std::string& key, std::vector<double> fallback, std::string_view unit) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    used_.insert(key);
    if (it->second.unit != unit)
        throw Error(Errc::ConfigError, key + " needs unit '" + std::string(unit) + "', got '" + it->second.unit + "'");
    std::vector<double> out;
    std::string_view rest = it->second.value;
    while (true) {
        const auto comma = rest.find(',');
        out.push_back(parse_number(rest.substr(0, comma), key));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return out;
}

std::optional<Entry> Reader::raw(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
}

void Reader::finish(const std::function<std::string(const std::string&)>& explain) const {
    for (const auto& [key, e] : entries_)
        if (!used_.count(key))
            throw Error(Errc::ConfigError, "line " + std::to_string(e.line) + ": " + explain(key));
}

}  // namespace detail

namespace {

using detail::format_number;
using detail::Reader;

constexpr std::string_view kFreq = "omega_R";
constexpr std::string_view kTime = "1/omega_R";

const std::set<std::string> kKnownKeys = {
    "label", "run", "output_dir",
    "model.delta", "model.omega_R", "model.g", "model.kappa", "model.G", "model.theta", "model.eta", "model.N",
    "kernel.type", "kernel.h0", "kernel.t0", "kernel.s", "kernel.amplitude", "kernel.rate", "kernel.weight",
    "kernel.period", "kernel.term_count", "kernel.times", "kernel.values", "kernel.tail_exponent",
    "kernel.delta_weight",
    "spectrum.omega_min", "spectrum.omega_max", "spectrum.points",
    "critical.ratios",
    "sweep.ratios", "sweep.fit",
    "traj.engine", "traj.dt", "traj.t_max", "traj.seed", "traj.fock_dim", "traj.memory_horizon", "traj.tilt",
    "traj.measurement_noise", "traj.record_stride", "traj.overflow_guard", "traj.fock_leakage_limit",
    "traj.check_invariants", "traj.signal_file",
    "ensemble.n_traj", "ensemble.reducer", "ensemble.observable", "ensemble.fit_from", "ensemble.growth_window",
    "ensemble.threads",
    "bath.s", "bath.kappa_R", "bath.omega_c", "bath.cutoff", "bath.map", "bath.omega_min", "bath.omega_max",
    "bath.points",
};

std::vector<double> default_critical_ratios() {
    return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999, 1.05, 1.2, 1.5, 2.0};
}

}  // namespace

// u = 1 - G/G_crit geometric from 0.2 to 0.001, 16 points.
std::vector<double> default_sweep_ratios() {
    std::vector<double> r;
    for (int i = 0; i < 16; ++i) r.push_back(1.0 - 0.2 * std::pow(0.001 / 0.2, i / 15.0));
    return r;
}

FeedbackKernel KernelSpec::build() const {
    if (delta_weight == 0.0) return FeedbackKernel(term);
    return FeedbackKernel(std::vector<KernelTerm>{term, DeltaPulse{delta_weight}});
}

std::string_view run_name(const RunSpec& run) {
    constexpr std::string_view names[] = {"spectrum", "critical", "variance-sweep", "traj", "ensemble", "bath-compare"};
    return names[run.index()];
}

namespace {

KernelSpec read_kernel(Reader& r) {
    KernelSpec k;
    const auto type = r.word("kernel.type", "power_law", {"power_law", "exponential", "delta", "comb", "tabulated"});
    if (type == "power_law") {
        PowerLaw pl;
        pl.h0 = r.number("kernel.h0", pl.h0, kFreq);
        pl.t0 = r.number("kernel.t0", pl.t0, kTime);
        pl.s = r.number("kernel.s", pl.s, "");
        k.term = pl;
    } else if (type == "exponential") {
        Exponential e;
        e.amplitude = r.number("kernel.amplitude", e.amplitude, kFreq);
        e.rate = r.number("kernel.rate", e.rate, kFreq);
        k.term = e;
    } else if (type == "delta") {
        k.term = DeltaPulse{r.number("kernel.weight", 1.0, "")};
    } else if (type == "comb") {
        Comb c;
        c.period = r.number("kernel.period", c.period, kTime);
        c.s = r.number("kernel.s", c.s, "");
        c.weight = r.number("kernel.weight", c.weight, "");
        c.term_count = static_cast<int>(r.integer("kernel.term_count", c.term_count));
        k.term = c;
    } else {
        Tabulated t;
        t.times = r.list("kernel.times", {}, kTime);
        t.values = r.list("kernel.values", {}, kFreq);
        t.tail_exponent = r.number("kernel.tail_exponent", t.tail_exponent, "");
        k.term = t;
    }
    if (type != "delta") k.delta_weight = r.number("kernel.delta_weight", 0.0, "");
    return k;
}

TrajectoryConfig read_traj(Reader& r) {
    TrajectoryConfig t;
    t.engine = r.word("traj.engine", "reduced", {"reduced", "sme"}) == "sme" ? Engine::FullSME : Engine::Reduced;
    t.dt = r.number("traj.dt", t.dt, kTime);
    t.t_max = r.number("traj.t_max", t.t_max, kTime);
    t.seed = r.u64("traj.seed", t.seed);
    t.fock_dim = static_cast<int>(r.integer("traj.fock_dim", t.fock_dim));
    t.memory_horizon = r.number("traj.memory_horizon", t.t_max, kTime);
    if (const auto tilt = r.raw("traj.tilt")) {
        if (!tilt->unit.empty()) throw Error(Errc::ConfigError, "traj.tilt is dimensionless");
        t.initial_state = CoherentTilt{detail::parse_number(tilt->value, "traj.tilt")};
    }
    t.measurement_noise = r.boolean("traj.measurement_noise", t.measurement_noise);
    t.record_stride = static_cast<int>(r.integer("traj.record_stride", t.record_stride));
    t.overflow_guard = r.number("traj.overflow_guard", t.overflow_guard, "");
    t.fock_leakage_limit = r.number("traj.fock_leakage_limit", t.fock_leakage_limit, "");
    t.check_invariants = r.boolean("traj.check_invariants", t.check_invariants);
    return t;
}

std::string explain_unused(const std::string& key, std::string_view run, std::string_view kernel_type) {
    if (!kKnownKeys.count(key)) return "unknown key " + key;
    if (key.rfind("kernel.", 0) == 0) return key + " does not apply to kernel.type = " + std::string(kernel_type);
    return key + " does not apply to run = " + std::string(run);
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, std::string_view run) {
    Reader r(detail::tokenize(text));
    ExperimentConfig cfg;
    cfg.label = r.word("label", cfg.label, {});
    for (char c : cfg.label)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
            throw Error(Errc::ConfigError, "label '" + cfg.label + "' may only use letters, digits, '_', '-', '.'");
    if (cfg.label.empty()) throw Error(Errc::ConfigError, "label must not be empty");
    cfg.output_dir = r.word("output_dir", ".", {});

    std::string run_key =
        r.word("run", std::string(run), {"spectrum", "critical", "variance-sweep", "traj", "ensemble", "bath-compare"});
    if (!run.empty() && run_key != run)
        throw Error(Errc::ConfigError, "config says run = " + run_key + " but '" + std::string(run) + "' was requested");
    if (run_key.empty()) throw Error(Errc::ConfigError, "no run given (key 'run' or a subcommand)");

    auto& m = cfg.model;
    m.delta = r.number("model.delta", m.delta, kFreq);
    m.omega_R = r.number("model.omega_R", m.omega_R, kFreq);
    m.g = r.number("model.g", m.g, kFreq);
    m.kappa = r.number("model.kappa", m.kappa, kFreq);
    m.theta = r.number("model.theta", m.theta, "rad");
    m.eta = r.number("model.eta", m.eta, "");
    m.N = static_cast<int>(r.integer("model.N", m.N));
    cfg.kernel = read_kernel(r);
    const auto kernel_type = r.word("kernel.type", "power_law", {});

    if (const auto G = r.raw("model.G")) {
        const double v = detail::parse_number(G->value, "model.G");
        if (G->unit == kFreq) {
            m.G = v;
        } else if (G->unit == "G_crit") {
            m.G = v * critical_gain(m, cfg.kernel.build());
        } else {
            throw Error(Errc::ConfigError, "model.G needs unit 'omega_R' or 'G_crit', got '" + G->unit + "'");
        }
    }

    if (run_key == "spectrum") {
        SpectrumRun s;
        s.omega_min = r.number("spectrum.omega_min", s.omega_min, kFreq);
        s.omega_max = r.number("spectrum.omega_max", s.omega_max, kFreq);
        s.points = static_cast<int>(r.integer("spectrum.points", s.points));
        if (!(s.omega_max > s.omega_min) || s.points < 2)
            throw Error(Errc::ConfigError, "spectrum grid needs omega_max > omega_min and points >= 2");
        cfg.run = s;
    } else if (run_key == "critical") {
        cfg.run = CriticalScanRun{r.list("critical.ratios", default_critical_ratios(), "")};
    } else if (run_key == "variance-sweep") {
        VarianceSweepRun s;
        s.ratios = r.list("sweep.ratios", default_sweep_ratios(), "");
        s.fit = r.boolean("sweep.fit", s.fit);
        for (double x : s.ratios)
            if (!(x > 0.0 && x < 1.0)) throw Error(Errc::ConfigError, "sweep.ratios must lie in (0, 1)");
        cfg.run = s;
    } else if (run_key == "traj") {
        TrajectoryRun t;
        t.traj = read_traj(r);
        t.signal_file = r.boolean("traj.signal_file", t.signal_file);
        cfg.run = t;
    } else if (run_key == "ensemble") {
        EnsembleRun e;
        e.traj = read_traj(r);
        e.n_traj = static_cast<int>(r.integer("ensemble.n_traj", e.n_traj));
        const auto red = r.word("ensemble.reducer", "mean", {"mean", "frequency", "growth", "late_abs_mean"});
        e.reducer = red == "mean"        ? Reducer::MeanObservable
                    : red == "frequency" ? Reducer::FrequencyFit
                    : red == "growth"    ? Reducer::GrowthFit
                                         : Reducer::LateAbsMean;
        const auto obs = r.word("ensemble.observable", "auto", {"auto", "X", "Sx", "Sy", "Sz"});
        e.options.observable = obs == "auto" ? Observable::Auto
                               : obs == "X"  ? Observable::X
                               : obs == "Sx" ? Observable::Sx
                               : obs == "Sy" ? Observable::Sy
                                             : Observable::Sz;
        e.options.fit_from = r.number("ensemble.fit_from", e.options.fit_from, kTime);
        e.options.growth_window = r.number("ensemble.growth_window", e.options.growth_window, "");
        e.options.threads = static_cast<unsigned>(r.integer("ensemble.threads", e.options.threads));
        cfg.run = e;
    } else {
        BathCompareRun b;
        b.map_from_kernel = r.boolean("bath.map", b.map_from_kernel);
        if (!b.map_from_kernel) {
            b.bath.s = r.number("bath.s", b.bath.s, "");
            b.bath.kappa_R = r.number("bath.kappa_R", b.bath.kappa_R, kFreq);
            b.bath.omega_c = r.number("bath.omega_c", b.bath.omega_c, kFreq);
            b.bath.cutoff = r.word("bath.cutoff", "exponential", {"hard", "exponential"}) == "hard"
                                ? Cutoff::Hard
                                : Cutoff::Exponential;
        }
        b.omega_min = r.number("bath.omega_min", b.omega_min, kFreq);
        b.omega_max = r.number("bath.omega_max", b.omega_max, kFreq);
        b.points = static_cast<int>(r.integer("bath.points", b.points));
        if (!(b.omega_max > b.omega_min) || b.points < 2)
            throw Error(Errc::ConfigError, "bath grid needs omega_max > omega_min and points >= 2");
        cfg.run = b;
    }
    r.finish([&](const std::string& key) { return explain_unused(key, run_key, kernel_type); });
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file, std::string_view run) {
    std::ifstream in(file);
    if (!in) throw Error(Errc::IoError, "cannot read " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), run);
}

namespace {

struct Echo {
    std::string text;
    void line(std::string_view key, const std::string& value, std::string_view unit = {}) {
        text += std::string(key) + " = " + value;
        if (!unit.empty()) text += " " + std::string(unit);
        text += '\n';
    }
    void num(std::string_view key, double v, std::string_view unit = {}) { line(key, format_number(v), unit); }
    void list(std::string_view key, const std::vector<double>& v, std::string_view unit = {}) {
        if (v.empty()) throw Error(Errc::ConfigError, std::string(key) + " is empty");
        std::string s;
        for (double x : v) s += (s.empty() ? "" : ", ") + format_number(x);
        line(key, s, unit);
    }
    void flag(std::string_view key, bool v) { line(key, v ? "true" : "false"); }
};

void echo_traj(Echo& e, const TrajectoryConfig& t) {
    e.line("traj.engine", t.engine == Engine::FullSME ? "sme" : "reduced");
    e.num("traj.dt", t.dt, kTime);
    e.num("traj.t_max", t.t_max, kTime);
    e.line("traj.seed", std::to_string(t.seed));
    e.line("traj.fock_dim", std::to_string(t.fock_dim));
    e.num("traj.memory_horizon", t.memory_horizon, kTime);
    if (const auto* tilt = std::get_if<CoherentTilt>(&t.initial_state)) e.num("traj.tilt", tilt->epsilon);
    e.flag("traj.measurement_noise", t.measurement_noise);
    e.line("traj.record_stride", std::to_string(t.record_stride));
    e.num("traj.overflow_guard", t.overflow_guard);
    e.num("traj.fock_leakage_limit", t.fock_leakage_limit);
    e.flag("traj.check_invariants", t.check_invariants);
}

}  // namespace

std::string to_config_text(const ExperimentConfig& cfg) {
    Echo e;
    e.line("label", cfg.label);
    e.line("run", std::string(run_name(cfg.run)));
    const auto& m = cfg.model;
    e.num("model.delta", m.delta, kFreq);
    e.num("model.omega_R", m.omega_R, kFreq);
    e.num("model.g", m.g, kFreq);
    e.num("model.kappa", m.kappa, kFreq);
    e.num("model.G", m.G, kFreq);
    e.num("model.theta", m.theta, "rad");
    e.num("model.eta", m.eta);
    e.line("model.N", std::to_string(m.N));

    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, PowerLaw>) {
                e.line("kernel.type", "power_law");
                e.num("kernel.h0", k.h0, kFreq);
                e.num("kernel.t0", k.t0, kTime);
                e.num("kernel.s", k.s);
            } else if constexpr (std::is_same_v<T, Exponential>) {
                e.line("kernel.type", "exponential");
                e.num("kernel.amplitude", k.amplitude, kFreq);
                e.num("kernel.rate", k.rate, kFreq);
            } else if constexpr (std::is_same_v<T, DeltaPulse>) {
                e.line("kernel.type", "delta");
                e.num("kernel.weight", k.weight);
            } else if constexpr (std::is_same_v<T, Comb>) {
                e.line("kernel.type", "comb");
                e.num("kernel.period", k.period, kTime);
                e.num("kernel.s", k.s);
                e.num("kernel.weight", k.weight);
                e.line("kernel.term_count", std::to_string(k.term_count));
            } else {
                e.line("kernel.type", "tabulated");
                e.list("kernel.times", k.times, kTime);
                e.list("kernel.values", k.values, kFreq);
                e.num("kernel.tail_exponent", k.tail_exponent);
            }
        },
        cfg.kernel.term);
    if (!std::holds_alternative<DeltaPulse>(cfg.kernel.term)) e.num("kernel.delta_weight", cfg.kernel.delta_weight);
    else if (cfg.kernel.delta_weight != 0.0)
        throw Error(Errc::ConfigError, "a delta kernel carries its weight in kernel.weight");

    std::visit(
        [&](const auto& run) {
            using T = std::decay_t<decltype(run)>;
            if constexpr (std::is_same_v<T, SpectrumRun>) {
                e.num("spectrum.omega_min", run.omega_min, kFreq);
                e.num("spectrum.omega_max", run.omega_max, kFreq);
                e.line("spectrum.points", std::to_string(run.points));
            } else if constexpr (std::is_same_v<T, CriticalScanRun>) {
                e.list("critical.ratios", run.ratios);
            } else if constexpr (std::is_same_v<T, VarianceSweepRun>) {
                e.list("sweep.ratios", run.ratios);
                e.flag("sweep.fit", run.fit);
            } else if constexpr (std::is_same_v<T, TrajectoryRun>) {
                echo_traj(e, run.traj);
                e.flag("traj.signal_file", run.signal_file);
            } else if constexpr (std::is_same_v<T, EnsembleRun>) {
                echo_traj(e, run.traj);
                e.line("ensemble.n_traj", std::to_string(run.n_traj));
                constexpr std::string_view reducers[] = {"mean", "frequency", "growth", "late_abs_mean"};
                e.line("ensemble.reducer", std::string(reducers[static_cast<int>(run.reducer)]));
                constexpr std::string_view observables[] = {"auto", "X", "Sx", "Sy", "Sz"};
                e.line("ensemble.observable", std::string(observables[static_cast<int>(run.options.observable)]));
                e.num("ensemble.fit_from", run.options.fit_from, kTime);
                e.num("ensemble.growth_window", run.options.growth_window);
                e.line("ensemble.threads", std::to_string(run.options.threads));
            } else {
                e.flag("bath.map", run.map_from_kernel);
                if (!run.map_from_kernel) {
                    e.num("bath.s", run.bath.s);
                    e.num("bath.kappa_R", run.bath.kappa_R, kFreq);
                    e.num("bath.omega_c", run.bath.omega_c, kFreq);
                    e.line("bath.cutoff", run.bath.cutoff == Cutoff::Hard ? "hard" : "exponential");
                }
                e.num("bath.omega_min", run.omega_min, kFreq);
                e.num("bath.omega_max", run.omega_max, kFreq);
                e.line("bath.points", std::to_string(run.points));
            }
        },
        cfg.run);
    return e.text;
}

ExperimentConfig config_from_csv_header(std::istream& csv) {
    constexpr std::string_view tag = "# config ";
    std::string line, text;
    while (std::getline(csv, line)) {
        if (line.empty() || line.front() != '#') break;
        if (line.rfind(tag, 0) == 0) text += line.substr(tag.size()) + '\n';
    }
    if (text.empty()) throw Error(Errc::ConfigError, "no '# config' lines in the CSV header");
    return parse_config(text);
}

}  // namespace fpt
