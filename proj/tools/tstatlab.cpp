// Command-line front end: runs the simulation, classification, concentration,
// geometry and convergence experiments and writes CSV/JSON result tables.

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tstatlab/classify.hpp"
#include "tstatlab/distribution.hpp"
#include "tstatlab/exact.hpp"
#include "tstatlab/geometry.hpp"
#include "tstatlab/io.hpp"
#include "tstatlab/mc.hpp"
#include "tstatlab/selfnorm.hpp"

namespace {

using tstatlab::DistributionSpec;
namespace io = tstatlab::io;

constexpr int kExitValidation = 2;
constexpr int kExitBudget = 3;

std::vector<int> parse_int_grid(const std::string& text) {
    std::vector<int> out;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const int lo = std::stoi(text.substr(0, dots));
        const int hi = std::stoi(text.substr(dots + 2));
        if (hi < lo) throw std::invalid_argument("grid range is empty: " + text);
        for (int v = lo; v <= hi; ++v) out.push_back(v);
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    if (out.empty()) throw std::invalid_argument("empty grid: " + text);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<double> parse_double_grid(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw std::invalid_argument("empty grid: " + text);
    std::sort(out.begin(), out.end());
    return out;
}

struct OutputSink {
    std::string path;    // empty -> stdout
    std::string format;  // csv | json

    void emit(const io::Table& table) const {
        const std::string body =
            format == "json" ? table.to_json().dump(2) + "\n" : table.to_csv();
        if (path.empty()) std::cout << body;
        else io::write_file_atomic(path, body);
    }
    void emit_json(const nlohmann::json& j) const {
        const std::string body = j.dump(2) + "\n";
        if (path.empty()) std::cout << body;
        else io::write_file_atomic(path, body);
    }
};

std::string bool_name(bool b) { return b ? "true" : "false"; }

int run_simulate(const DistributionSpec& dist, int n, std::size_t count, std::uint64_t seed,
                 int threads, const OutputSink& sink) {
    const auto summaries = tstatlab::simulate_tstat(dist, n, count, seed, threads);
    io::Table t;
    t.columns = {"index", "n", "S", "V", "sigmaHat", "t", "uStar", "degenerateAllEqual",
                 "degenerateAllZero"};
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        const auto& s = summaries[i];
        t.add_row({std::to_string(i), std::to_string(s.n), io::format_double(s.sum),
                   io::format_double(s.vnorm), io::format_double(s.sigma_hat),
                   io::format_double(s.t), io::format_double(s.u_star),
                   bool_name(s.degenerate_all_equal), bool_name(s.degenerate_all_zero)});
    }
    sink.emit(t);
    double mean_t = 0.0;
    for (const auto& s : summaries) mean_t += s.t;
    mean_t /= static_cast<double>(summaries.size());
    std::cerr << "simulate: n=" << n << " count=" << count << " mean_t=" << mean_t << "\n";
    return 0;
}

int run_moments(const DistributionSpec& dist, int n, const std::vector<double>& r_grid,
                std::size_t count, std::uint64_t seed, int threads, int tail_k,
                const OutputSink& sink) {
    const auto summaries = tstatlab::simulate_tstat(dist, n, count, seed, threads);
    std::vector<double> tvals(summaries.size());
    for (std::size_t i = 0; i < summaries.size(); ++i) tvals[i] = summaries[i].t;
    const int k = tail_k > 0 ? tail_k : tstatlab::default_tail_k(count);
    std::optional<tstatlab::TailIndexEstimate> tail;
    try {
        tail = tstatlab::estimate_tail_index(tvals, k);
    } catch (const std::invalid_argument&) {
        // not enough tail data (degenerate laws); leave the columns empty
    }

    io::Table t;
    t.columns = {"r",        "n",       "count",     "value",    "stdError",
                 "divergenceFlag", "tailIndex", "tailCiLow", "tailCiHigh", "tailK"};
    for (double r : r_grid) {
        const auto est = tstatlab::estimate_moment(summaries, r);
        t.add_row({io::format_double(r), std::to_string(n), std::to_string(count),
                   io::format_double(est.value), io::format_double(est.std_error),
                   bool_name(est.divergence_flag),
                   tail ? io::format_double(tail->index) : "",
                   tail ? io::format_double(tail->ci_low) : "",
                   tail ? io::format_double(tail->ci_high) : "",
                   tail ? std::to_string(tail->k) : ""});
        std::cerr << "moments: n=" << n << " r=" << r << " value=" << est.value
                  << " stderr=" << est.std_error
                  << " divergence=" << bool_name(est.divergence_flag) << "\n";
    }
    sink.emit(t);
    return 0;
}

int run_classify(const DistributionSpec& dist, const std::vector<int>& n_grid,
                 const std::vector<double>& r_grid, const OutputSink& sink) {
    const auto verdicts = tstatlab::classify_grid(dist, n_grid, r_grid);
    if (verdicts.size() == 1 && sink.format == "json") {
        sink.emit_json(io::verdict_to_json(verdicts[0]));
    } else if (sink.format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : verdicts) arr.push_back(io::verdict_to_json(v));
        sink.emit_json(arr);
    } else {
        io::Table t;
        t.columns = {"n", "r", "verdict", "rStarLow", "rStarHigh", "rules"};
        for (const auto& v : verdicts) {
            std::string rules;
            for (const auto& e : v.evidence) {
                if (!rules.empty()) rules += ';';
                rules += e.rule;
            }
            const bool ind = v.verdict == tstatlab::Verdict::indeterminate;
            t.add_row({std::to_string(v.n), io::format_double(v.r), verdict_name(v.verdict),
                       ind ? io::format_double(v.r_star_low) : "",
                       ind ? io::format_double(v.r_star_high) : "", rules});
        }
        sink.emit(t);
    }
    for (const auto& v : verdicts) {
        std::cerr << "classify: E|T_" << v.n << "|^" << v.r << " -> " << verdict_name(v.verdict);
        if (!v.evidence.empty())
            std::cerr << " [" << v.evidence.back().rule << ": " << v.evidence.back().statement
                      << "]";
        std::cerr << "\n";
    }
    return 0;
}

int run_concentration(const DistributionSpec& dist, const std::vector<double>& h_grid,
                      const OutputSink& sink) {
    const auto profile = tstatlab::make_concentration_profile(dist, h_grid);
    if (sink.format == "json") {
        nlohmann::json j{{"schema", "tstatlab.concentration.v1"},
                         {"hGrid", profile.h_grid},
                         {"qValues", profile.q_values},
                         {"QValues", profile.Q_values},
                         {"fittedLambdaq", profile.fitted_lambda_q},
                         {"fittedLambdaQ", profile.fitted_lambda_Q},
                         {"fitResidualq", profile.fit_residual_q},
                         {"fitResidualQ", profile.fit_residual_Q},
                         {"exact", profile.exact}};
        sink.emit_json(j);
    } else {
        io::Table t;
        t.columns = {"h", "q", "Q"};
        for (std::size_t i = 0; i < profile.h_grid.size(); ++i)
            t.add_row({io::format_double(profile.h_grid[i]), io::format_double(profile.q_values[i]),
                       io::format_double(profile.Q_values[i])});
        sink.emit(t);
    }
    std::cerr << "concentration: lambda_q=" << profile.fitted_lambda_q
              << " lambda_Q=" << profile.fitted_lambda_Q << (profile.exact ? " (exact)" : "")
              << "\n";
    return 0;
}

int run_geometry(const std::string& mode, const std::vector<int>& n_grid,
                 const std::vector<double>& h_grid, double c2, const OutputSink& sink) {
    io::Table t;
    t.columns = {"n", "h", "mode", "c2", "numeric", "analytic", "gap", "pass"};
    bool all_pass = true;
    for (int n : n_grid) {
        for (double h : h_grid) {
            if (mode == "lemma1") {
                const auto rep = tstatlab::lemma1_verify(n, h);
                t.add_row({std::to_string(n), io::format_double(h), "lemma1", "",
                           io::format_double(rep.numeric_extremum),
                           io::format_double(rep.analytic_extremum), io::format_double(rep.gap),
                           bool_name(rep.pass)});
                all_pass = all_pass && rep.pass;
            } else if (mode == "lemma2") {
                const auto rep = tstatlab::lemma2_verify(n, h, c2);
                t.add_row({std::to_string(n), io::format_double(h), "lemma2",
                           io::format_double(c2), io::format_double(rep.numeric_extremum),
                           io::format_double(rep.analytic_extremum), io::format_double(rep.gap),
                           bool_name(rep.pass)});
                all_pass = all_pass && rep.pass;
            } else if (mode == "interior") {
                const bool ok = tstatlab::interior_stationarity_check(n, h, c2);
                t.add_row({std::to_string(n), io::format_double(h), "interior",
                           io::format_double(c2), "", "", "", bool_name(ok)});
                all_pass = all_pass && ok;
            } else {
                throw std::invalid_argument("geometry: unknown mode " + mode);
            }
        }
    }
    sink.emit(t);
    std::cerr << "geometry: mode=" << mode << " cells=" << t.rows.size()
              << " all_pass=" << bool_name(all_pass) << "\n";
    return all_pass ? 0 : 1;
}

int run_convergence(const DistributionSpec& dist, double r, const std::vector<int>& n_grid,
                    std::size_t count, std::uint64_t seed, int threads, const OutputSink& sink) {
    const auto table = tstatlab::convergence_experiment(dist, r, n_grid, count, seed, threads);
    io::Table t;
    t.columns = {"n", "estimate", "stdError", "limitReference"};
    for (const auto& row : table.rows)
        t.add_row({std::to_string(row.n), io::format_double(row.estimate),
                   io::format_double(row.std_error), io::format_double(table.limit_reference)});
    sink.emit(t);
    std::cerr << "convergence: r=" << r << " limit=" << table.limit_reference
              << " max_dev_top_quartile=" << table.max_deviation_top_quartile << "\n";
    return 0;
}

int run_neardeg(const DistributionSpec& dist, int n, const std::vector<double>& h_grid,
                std::size_t count, std::uint64_t seed, bool stratified, int threads,
                const OutputSink& sink) {
    const auto mode = stratified ? tstatlab::NearDegeneracyMode::stratified
                                 : tstatlab::NearDegeneracyMode::direct;
    const auto points = tstatlab::near_degeneracy_probe(dist, n, h_grid, count, seed, mode, threads);
    io::Table t;
    t.columns = {"h", "probability", "ciLow", "ciHigh", "mode"};
    for (const auto& p : points)
        t.add_row({io::format_double(p.h), io::format_double(p.probability),
                   io::format_double(p.ci_low), io::format_double(p.ci_high),
                   stratified ? "stratified" : "direct"});
    sink.emit(t);
    std::cerr << "neardeg: n=" << n << " points=" << points.size() << "\n";
    return 0;
}

int run_subgaussian(const DistributionSpec& dist, const std::vector<int>& n_grid,
                    const std::vector<double>& t_grid, std::size_t count, std::uint64_t seed,
                    int threads, const OutputSink& sink) {
    const auto rep = tstatlab::subgaussian_probe(dist, n_grid, t_grid, count, seed, threads);
    io::Table t;
    t.columns = {"n", "t", "mgf", "stdError", "fittedCn", "fittedCJoint"};
    for (std::size_t ni = 0; ni < rep.n_list.size(); ++ni)
        for (std::size_t ti = 0; ti < rep.t_grid.size(); ++ti)
            t.add_row({std::to_string(rep.n_list[ni]), io::format_double(rep.t_grid[ti]),
                       io::format_double(rep.mgf[ni][ti]), io::format_double(rep.std_error[ni][ti]),
                       io::format_double(rep.fitted_c_per_n[ni]), io::format_double(rep.fitted_c)});
    sink.emit(t);
    std::cerr << "subgaussian: fitted C=" << rep.fitted_c << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"t-statistic moment and tail laboratory"};
    app.require_subcommand(1);

    std::string dist_path, n_grid_text, r_grid_text, h_grid_text, t_grid_text, mode, out_path;
    std::string format = "csv";
    int n = 0;
    double r = 0.0;
    double c2 = 1.0;
    std::size_t count = 100000;
    std::uint64_t seed = 0;
    bool have_seed = false;
    int threads = 0;
    int tail_k = 0;
    bool stratified = false;

    auto add_common = [&](CLI::App* cmd, bool needs_dist, bool stochastic) {
        if (needs_dist)
            cmd->add_option("--dist", dist_path, "path to a distribution spec JSON file")
                ->required();
        cmd->add_option("--out", out_path, "output file (default: stdout)");
        cmd->add_option("--format", format, "output format")
            ->check(CLI::IsMember({"csv", "json"}));
        cmd->add_option("--threads", threads, "worker thread cap (default TSTATLAB_THREADS)");
        if (stochastic) {
            cmd->add_option("--count", count, "number of Monte Carlo samples");
            cmd->add_option("--seed", seed, "RNG seed (required)")->required();
            cmd->callback([&] { have_seed = true; });
        }
    };

    CLI::App* c_sim = app.add_subcommand("simulate", "sample T-statistic summaries");
    c_sim->add_option("--n", n, "sample size")->required();
    add_common(c_sim, true, true);

    CLI::App* c_mom = app.add_subcommand("moments", "estimate E|T_n|^r with diagnostics");
    c_mom->add_option("--n", n, "sample size")->required();
    c_mom->add_option("--r", r, "moment order");
    c_mom->add_option("--r-grid", r_grid_text, "comma-separated moment orders");
    c_mom->add_option("--tail-k", tail_k, "order statistics for the tail index (default sqrt(N))");
    add_common(c_mom, true, true);

    CLI::App* c_cls = app.add_subcommand("classify", "finiteness verdict for E|T_n|^r");
    c_cls->add_option("--n", n, "sample size");
    c_cls->add_option("--n-grid", n_grid_text, "sample sizes, e.g. 2..6 or 3,5,9");
    c_cls->add_option("--r", r, "moment order");
    c_cls->add_option("--r-grid", r_grid_text, "comma-separated moment orders");
    add_common(c_cls, true, false);

    CLI::App* c_con = app.add_subcommand("concentration", "q/Q profile with fitted exponents");
    c_con->add_option("--h-grid", h_grid_text, "comma-separated window half-widths");
    add_common(c_con, true, false);

    CLI::App* c_geo = app.add_subcommand("geometry", "extremal verification reports");
    c_geo->add_option("--mode", mode, "lemma1 | lemma2 | interior")->required();
    c_geo->add_option("--n-grid", n_grid_text, "sample sizes, e.g. 2..8")->required();
    c_geo->add_option("--h-grid", h_grid_text, "window parameters in (0,1)")->required();
    c_geo->add_option("--c2", c2, "relative window constant (lemma2/interior)");
    add_common(c_geo, false, false);

    CLI::App* c_cnv = app.add_subcommand("convergence", "E|T_n|^r along an n grid vs the limit");
    c_cnv->add_option("--r", r, "moment order")->required();
    c_cnv->add_option("--n-grid", n_grid_text, "sample sizes")->required();
    add_common(c_cnv, true, true);

    CLI::App* c_ndg = app.add_subcommand("neardeg", "near-degeneracy probability probe");
    c_ndg->add_option("--n", n, "sample size")->required();
    c_ndg->add_option("--h-grid", h_grid_text, "h grid in (0,1)")->required();
    c_ndg->add_flag("--stratified", stratified, "conditional variance-reduction mode");
    add_common(c_ndg, true, true);

    CLI::App* c_sub = app.add_subcommand("subgaussian", "empirical MGF envelope probe");
    c_sub->add_option("--n-grid", n_grid_text, "sample sizes")->required();
    c_sub->add_option("--t-grid", t_grid_text, "MGF arguments, |t| <= 3")->required();
    add_common(c_sub, true, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        OutputSink sink{out_path, format};
        std::optional<DistributionSpec> dist;
        if (!dist_path.empty()) dist = io::parse_dist_file(dist_path);

        if (app.got_subcommand(c_sim)) {
            return run_simulate(*dist, n, count, seed, threads, sink);
        }
        if (app.got_subcommand(c_mom)) {
            std::vector<double> rg =
                r_grid_text.empty() ? std::vector<double>{r} : parse_double_grid(r_grid_text);
            if (r_grid_text.empty() && !(r > 0.0))
                throw std::invalid_argument("moments: provide --r or --r-grid");
            return run_moments(*dist, n, rg, count, seed, threads, tail_k, sink);
        }
        if (app.got_subcommand(c_cls)) {
            std::vector<int> ng = n_grid_text.empty() ? std::vector<int>{n}
                                                      : parse_int_grid(n_grid_text);
            std::vector<double> rg =
                r_grid_text.empty() ? std::vector<double>{r} : parse_double_grid(r_grid_text);
            if (n_grid_text.empty() && n < 2)
                throw std::invalid_argument("classify: provide --n or --n-grid");
            if (r_grid_text.empty() && !(r > 0.0))
                throw std::invalid_argument("classify: provide --r or --r-grid");
            return run_classify(*dist, ng, rg, sink);
        }
        if (app.got_subcommand(c_con)) {
            std::vector<double> hg;
            if (h_grid_text.empty())
                for (int e = 1; e <= 10; ++e) hg.push_back(std::pow(2.0, -e));
            else hg = parse_double_grid(h_grid_text);
            return run_concentration(*dist, hg, sink);
        }
        if (app.got_subcommand(c_geo)) {
            return run_geometry(mode, parse_int_grid(n_grid_text), parse_double_grid(h_grid_text),
                                c2, sink);
        }
        if (app.got_subcommand(c_cnv)) {
            return run_convergence(*dist, r, parse_int_grid(n_grid_text), count, seed, threads,
                                   sink);
        }
        if (app.got_subcommand(c_ndg)) {
            return run_neardeg(*dist, n, parse_double_grid(h_grid_text), count, seed, stratified,
                               threads, sink);
        }
        if (app.got_subcommand(c_sub)) {
            return run_subgaussian(*dist, parse_int_grid(n_grid_text),
                                   parse_double_grid(t_grid_text), count, seed, threads, sink);
        }
        throw std::invalid_argument("unknown command");
    } catch (const tstatlab::enumeration_budget_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBudget;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
