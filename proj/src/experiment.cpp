#include "adabatch/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace adabatch {

const char* objectiveName(ObjectiveKind k) {
    return k == ObjectiveKind::Quad3 ? "quad3" : "quad2";
}

ObjectiveKind parseObjective(const std::string& name) {
    if (name == "quad3") return ObjectiveKind::Quad3;
    if (name == "quad2") return ObjectiveKind::Quad2;
    throw ConfigError("unknown objective: " + name);
}

std::vector<ToleranceConfig> table1Cases(bool strict) {
    struct Row {
        double eps, theta, nu;
    };
    static constexpr Row rows[] = {
        {0.1, 0.05, 0.087}, {0.5, 0.25, 0.43}, {1.0, 0.5, 0.87}, {5.91, 0.9, 5.84}};
    std::vector<ToleranceConfig> out;
    out.reserve(4);
    for (const Row& r : rows) {
        out.push_back(strict ? ToleranceConfig::strictFromEpsilonTheta(r.eps, r.theta)
                             : ToleranceConfig::coupled(r.eps, r.theta, r.nu));
    }
    return out;
}

Vector defaultXi0(ObjectiveKind k) {
    if (k == ObjectiveKind::Quad3) return {0.225, -0.2, 0.1};
    return {20.0, 50.0};
}

std::unique_ptr<StochasticObjective> makeObjective(const ExperimentSpec& spec) {
    if (spec.objective == ObjectiveKind::Quad3) return std::make_unique<Quadratic3Objective>();
    return std::make_unique<Quadratic2Objective>(spec.kappa);
}

std::vector<long long> logCostGrid(long long b0, long long budget, int points) {
    if (b0 < 1 || budget < b0) throw Error("need 1 <= b0 <= budget");
    if (points < 2) throw Error("need at least 2 grid points");
    std::vector<long long> grid;
    grid.reserve(points);
    const double lo = std::log(static_cast<double>(b0));
    const double hi = std::log(static_cast<double>(budget));
    for (int i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(points - 1);
        const long long c = static_cast<long long>(std::llround(std::exp(lo + t * (hi - lo))));
        if (grid.empty() || c > grid.back()) grid.push_back(c);
    }
    if (grid.front() != b0) grid.front() = b0;
    if (grid.back() != budget) grid.push_back(budget);
    return grid;
}

std::vector<double> interpolateGapOnGrid(const RunRecord& rec, const std::vector<long long>& grid) {
    std::vector<double> out(grid.size(), std::numeric_limits<double>::quiet_NaN());
    std::size_t row = 0;
    double last = std::numeric_limits<double>::quiet_NaN();
    bool seen = false;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        while (row < rec.iterations.size() && rec.iterations[row].cumulativeCost <= grid[g]) {
            last = rec.iterations[row].gap;
            seen = true;
            ++row;
        }
        if (seen) out[g] = last;
    }
    return out;
}

double percentileSorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw Error("percentile of empty sample");
    const double n = static_cast<double>(sorted.size());
    const long long idx = std::max<long long>(0, static_cast<long long>(std::ceil(q * n)) - 1);
    return sorted[std::min<std::size_t>(sorted.size() - 1, static_cast<std::size_t>(idx))];
}

int resolveThreadCount(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ADABATCH_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 0) throw ConfigError("bad ADABATCH_THREADS value");
        if (v > 0) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallelFor(long long n, int threads, const std::function<void(long long)>& fn) {
    if (n <= 0) return;
    threads = std::min<long long>(std::max(threads, 1), n);
    if (threads == 1) {
        for (long long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long long> next{0};
    std::exception_ptr firstError;
    std::mutex errorMutex;
    auto worker = [&] {
        for (;;) {
            const long long i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(errorMutex);
                if (!firstError) firstError = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (firstError) std::rethrow_exception(firstError);
}

CurveMap runExperiment(const ExperimentSpec& spec) {
    if (spec.replications < 2) throw Error("need at least 2 replications");
    if (spec.cases.empty() || spec.controllers.empty()) throw Error("empty experiment spec");
    const std::unique_ptr<StochasticObjective> obj = makeObjective(spec);
    const Vector xi0 = spec.xi0.dim() > 0 ? spec.xi0 : defaultXi0(spec.objective);

    const std::vector<long long> grid = logCostGrid(spec.b0, spec.budget, spec.gridPoints);
    const int threads = resolveThreadCount(spec.threads);

    struct Cell {
        CellKey key;
        ToleranceConfig tol;
    };
    std::vector<Cell> cells;
    for (std::size_t ci = 0; ci < spec.cases.size(); ++ci)
        for (ControllerKind c : spec.controllers)
            cells.push_back({{c, static_cast<int>(ci) + 1}, spec.cases[ci]});

    const long long reps = spec.replications;
    // gaps[cell][rep] is the gap row on the grid, or empty if the run failed.
    std::vector<std::vector<std::vector<double>>> gaps(cells.size());
    std::vector<std::vector<std::string>> failures(cells.size());
    for (auto& g : gaps) g.resize(reps);
    for (auto& f : failures) f.resize(reps);

    parallelFor(static_cast<long long>(cells.size()) * reps, threads, [&](long long task) {
        const std::size_t cell = static_cast<std::size_t>(task / reps);
        const long long rep = task % reps;
        SgdConfig cfg;
        cfg.controller = cells[cell].key.controller;
        cfg.tolerances = cells[cell].tol;
        cfg.mode = spec.mode;
        cfg.maxIterations = spec.maxIterations;
        cfg.maxGradientEvals = spec.budget;
        cfg.b0 = spec.b0;
        cfg.seed = spec.baseSeed + static_cast<std::uint64_t>(rep);
        try {
            const RunRecord rec = runSgd(*obj, cfg, xi0);
            gaps[cell][rep] = interpolateGapOnGrid(rec, grid);
        } catch (const std::exception& e) {
            failures[cell][rep] = e.what();
        }
    });

    CurveMap out;
    for (std::size_t cell = 0; cell < cells.size(); ++cell) {
        AggregateCurve curve;
        curve.costGrid = grid;
        curve.median.resize(grid.size());
        curve.lo95.resize(grid.size());
        curve.hi95.resize(grid.size());
        long long ok = 0;
        for (long long r = 0; r < reps; ++r)
            if (!gaps[cell][r].empty()) ++ok;
        if (ok == 0) {
            throw Error("all replications failed for " +
                        std::string(controllerName(cells[cell].key.controller)) + " case #" +
                        std::to_string(cells[cell].key.caseIndex) + ": " + failures[cell][0]);
        }
        curve.replications = ok;
        std::vector<double> column;
        column.reserve(ok);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            column.clear();
            for (long long r = 0; r < reps; ++r)
                if (!gaps[cell][r].empty()) column.push_back(gaps[cell][r][g]);
            std::sort(column.begin(), column.end());
            curve.lo95[g] = percentileSorted(column, 0.025);
            curve.median[g] = percentileSorted(column, 0.5);
            curve.hi95[g] = percentileSorted(column, 0.975);
        }
        out.emplace(cells[cell].key, std::move(curve));
    }
    return out;
}

double bandIntersectFraction(const AggregateCurve& a, const AggregateCurve& b, std::size_t from,
                             std::size_t to) {
    if (a.costGrid != b.costGrid) throw Error("curves are on different grids");
    to = std::min(to, a.costGrid.size());
    if (from >= to) throw Error("empty grid range");
    std::size_t hits = 0;
    for (std::size_t g = from; g < to; ++g) {
        if (std::max(a.lo95[g], b.lo95[g]) <= std::min(a.hi95[g], b.hi95[g])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(to - from);
}

namespace {

std::string formatDouble(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void atomicWrite(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp);
        out << content;
        if (!out.flush()) throw IoError("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename to " + path + " failed: " + ec.message());
}

std::vector<std::string> splitCsvLine(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

std::string curvesToCsv(const CurveMap& curves) {
    std::string out = "controller,case,cost,gap_lo,gap_med,gap_hi\n";
    for (const auto& [key, curve] : curves) {
        for (std::size_t g = 0; g < curve.costGrid.size(); ++g) {
            out += controllerName(key.controller);
            out += ',';
            out += std::to_string(key.caseIndex);
            out += ',';
            out += std::to_string(curve.costGrid[g]);
            out += ',';
            out += formatDouble(curve.lo95[g]);
            out += ',';
            out += formatDouble(curve.median[g]);
            out += ',';
            out += formatDouble(curve.hi95[g]);
            out += '\n';
        }
    }
    return out;
}

void emitCsv(const CurveMap& curves, const std::string& path) {
    if (curves.empty()) throw Error("no curves to emit");
    atomicWrite(path, curvesToCsv(curves));
}

CurveMap parseCsv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "controller,case,cost,gap_lo,gap_med,gap_hi")
        throw IoError("bad CSV header in " + path);
    CurveMap out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = splitCsvLine(line);
        if (f.size() != 6) throw IoError("bad CSV row in " + path);
        CellKey key{parseController(f[0]), std::stoi(f[1])};
        AggregateCurve& curve = out[key];
        curve.costGrid.push_back(std::stoll(f[2]));
        curve.lo95.push_back(std::stod(f[3]));
        curve.median.push_back(std::stod(f[4]));
        curve.hi95.push_back(std::stod(f[5]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// SVG rendering
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::string curvesToSvg(const CurveMap& curves, const std::string& title) {
    if (curves.empty()) throw Error("no curves to render");

    const double width = 880, height = 580;
    const double left = 80, right = 220, top = 50, bottom = 60;
    const double plotW = width - left - right;
    const double plotH = height - top - bottom;

    // log-log ranges, gaps clamped to a positive floor
    double xLo = std::numeric_limits<double>::max(), xHi = 0;
    double yLo = std::numeric_limits<double>::max(), yHi = 0;
    double positiveFloor = std::numeric_limits<double>::max();
    for (const auto& [key, c] : curves) {
        xLo = std::min(xLo, static_cast<double>(c.costGrid.front()));
        xHi = std::max(xHi, static_cast<double>(c.costGrid.back()));
        for (std::size_t g = 0; g < c.costGrid.size(); ++g) {
            for (double v : {c.lo95[g], c.median[g], c.hi95[g]}) {
                if (std::isfinite(v) && v > 0.0) {
                    positiveFloor = std::min(positiveFloor, v);
                    yHi = std::max(yHi, v);
                }
            }
        }
    }
    if (yHi <= 0.0) {
        positiveFloor = 1e-16;
        yHi = 1.0;
    }
    yLo = positiveFloor;
    const double clampFloor = yLo;
    const double lx0 = std::log10(xLo), lx1 = std::log10(xHi);
    double ly0 = std::floor(std::log10(yLo)), ly1 = std::ceil(std::log10(yHi));
    if (ly1 <= ly0) ly1 = ly0 + 1;

    auto xOf = [&](double cost) {
        return left + (std::log10(cost) - lx0) / (lx1 - lx0) * plotW;
    };
    auto yOf = [&](double gap) {
        const double v = std::log10(std::max(gap, clampFloor));
        return top + (ly1 - v) / (ly1 - ly0) * plotH;
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << left << "\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n";

    // axes frame
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plotW << "\" height=\""
        << plotH << "\" fill=\"none\" stroke=\"black\"/>\n";

    // decade ticks
    for (int e = static_cast<int>(std::ceil(lx0)); e <= static_cast<int>(std::floor(lx1)); ++e) {
        const double x = xOf(std::pow(10.0, e));
        svg << "<line x1=\"" << fmt2(x) << "\" y1=\"" << top << "\" x2=\"" << fmt2(x) << "\" y2=\""
            << top + plotH << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << fmt2(x) << "\" y=\"" << top + plotH + 20
            << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">1e" << e
            << "</text>\n";
    }
    for (int e = static_cast<int>(ly0); e <= static_cast<int>(ly1); ++e) {
        const double y = yOf(std::pow(10.0, e));
        svg << "<line x1=\"" << left << "\" y1=\"" << fmt2(y) << "\" x2=\"" << left + plotW
            << "\" y2=\"" << fmt2(y) << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << left - 8 << "\" y=\"" << fmt2(y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">1e" << e
            << "</text>\n";
    }
    svg << "<text x=\"" << left + plotW / 2 << "\" y=\"" << height - 14
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
        << "gradient evaluations</text>\n";
    svg << "<text x=\"20\" y=\"" << top + plotH / 2
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
        << "transform=\"rotate(-90 20 " << top + plotH / 2 << ")\">optimality gap</text>\n";

    int idx = 0;
    for (const auto& [key, c] : curves) {
        const char* color = kPalette[idx % 8];
        // shaded band: hi forward, lo backward
        svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
        for (std::size_t g = 0; g < c.costGrid.size(); ++g)
            svg << fmt2(xOf(c.costGrid[g])) << ',' << fmt2(yOf(c.hi95[g])) << ' ';
        for (std::size_t g = c.costGrid.size(); g-- > 0;)
            svg << fmt2(xOf(c.costGrid[g])) << ',' << fmt2(yOf(c.lo95[g])) << ' ';
        svg << "\"/>\n";
        // median line
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t g = 0; g < c.costGrid.size(); ++g)
            svg << fmt2(xOf(c.costGrid[g])) << ',' << fmt2(yOf(c.median[g])) << ' ';
        svg << "\"/>\n";
        // legend entry
        const double ly = top + 12 + 18 * idx;
        svg << "<line x1=\"" << left + plotW + 12 << "\" y1=\"" << fmt2(ly) << "\" x2=\""
            << left + plotW + 34 << "\" y2=\"" << fmt2(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << left + plotW + 40 << "\" y=\"" << fmt2(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << controllerName(key.controller)
            << " #" << key.caseIndex << "</text>\n";
        ++idx;
    }
    svg << "</svg>\n";
    return svg.str();
}

void emitSvg(const CurveMap& curves, const std::string& path, const std::string& title) {
    if (curves.empty()) throw Error("no curves to emit");
    atomicWrite(path, curvesToSvg(curves, title));
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> splitList(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double parseReal(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + key + ": " + v);
    }
}

long long parseInt(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("bad integer value for " + key + ": " + v);
    }
}

}  // namespace

ExperimentSpec parseExperimentConfig(const std::string& text) {
    ExperimentSpec spec;
    bool strict = false;
    std::vector<int> caseIndices;
    std::vector<ToleranceConfig> customCases;

    std::istringstream in(text);
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineNo) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(lineNo) + ": empty key or value");

        if (key == "objective") {
            spec.objective = parseObjective(value);
        } else if (key == "kappa") {
            spec.kappa = parseReal(key, value);
        } else if (key == "controllers") {
            spec.controllers.clear();
            for (const auto& name : splitList(value, ','))
                spec.controllers.push_back(parseController(name));
        } else if (key == "cases") {
            for (const auto& s : splitList(value, ',')) {
                const long long i = parseInt(key, s);
                if (i < 1 || i > 4) throw ConfigError("case index out of range 1..4: " + s);
                caseIndices.push_back(static_cast<int>(i));
            }
        } else if (key == "case") {
            const auto parts = splitList(value, ' ');
            if (parts.size() != 3) throw ConfigError("case wants: epsilon theta nu");
            customCases.push_back(ToleranceConfig::coupled(parseReal(key, parts[0]),
                                                           parseReal(key, parts[1]),
                                                           parseReal(key, parts[2])));
        } else if (key == "strict_coupling") {
            if (value != "true" && value != "false") throw ConfigError("strict_coupling: true|false");
            strict = value == "true";
        } else if (key == "replications") {
            spec.replications = parseInt(key, value);
        } else if (key == "base_seed") {
            spec.baseSeed = static_cast<std::uint64_t>(parseInt(key, value));
        } else if (key == "budget") {
            spec.budget = parseInt(key, value);
        } else if (key == "b0") {
            spec.b0 = parseInt(key, value);
        } else if (key == "grid_points") {
            spec.gridPoints = static_cast<int>(parseInt(key, value));
        } else if (key == "max_iterations") {
            spec.maxIterations = parseInt(key, value);
        } else if (key == "threads") {
            spec.threads = static_cast<int>(parseInt(key, value));
        } else if (key == "mode") {
            if (value == "oracle")
                spec.mode = DecisionMode::Oracle;
            else if (value == "plugin")
                spec.mode = DecisionMode::Plugin;
            else
                throw ConfigError("mode: oracle|plugin");
        } else if (key == "xi0") {
            std::vector<double> xs;
            for (const auto& s : splitList(value, ',')) xs.push_back(parseReal(key, s));
            spec.xi0 = Vector::fromStd(xs);
        } else {
            throw ConfigError("line " + std::to_string(lineNo) + ": unknown key " + key);
        }
    }

    if (!caseIndices.empty() || !customCases.empty()) {
        const std::vector<ToleranceConfig> table = table1Cases(strict);
        spec.cases.clear();
        for (int i : caseIndices) spec.cases.push_back(table[i - 1]);
        for (const auto& c : customCases) spec.cases.push_back(c);
    } else if (strict) {
        spec.cases = table1Cases(true);
    }
    return spec;
}

ExperimentSpec loadExperimentConfig(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parseExperimentConfig(buf.str());
}

}  // namespace adabatch
