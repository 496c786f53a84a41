// covest: least-squares covariance estimation with penalized model
// selection, plus a simulation lab for the supporting risk identities.
//
// Subcommands: estimate | select | simulate | eval
// Exit codes: 0 ok, 2 parse/validation error, 3 numerical failure,
//             4 Monte-Carlo assertion failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "covest/estimator.hpp"
#include "covest/io.hpp"
#include "covest/selection.hpp"
#include "covest/simlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace covest;

namespace {

constexpr const char* kVersion = "covest 1.0.0";

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    bool center = false;
    int threads = 0;
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io::ParseError("cannot open config: " + path, 0);
    json cfg;
    in >> cfg;
    return cfg;
}

BasisFamily parse_basis(const json& j) {
    BasisFamily f;
    f.kind = basis_kind_from_string(j.value("kind", "fourier"));
    f.a = j.value("a", 0.0);
    f.b = j.value("b", 1.0);
    f.max_size = j.value("max_size", 64);
    if (!(f.b > f.a)) throw std::invalid_argument("basis: need b > a");
    return f;
}

json basis_to_json(const BasisFamily& f) {
    return {{"kind", to_string(f.kind)}, {"a", f.a}, {"b", f.b}, {"max_size", f.max_size}};
}

std::vector<double> grid_points(const BasisFamily& f, int n) {
    // midpoint grid; keeps Fourier columns near-orthogonal
    std::vector<double> pts(n);
    for (int j = 0; j < n; ++j)
        pts[j] = f.a + (f.b - f.a) * (j + 0.5) / static_cast<double>(n);
    return pts;
}

std::vector<DesignMatrix> parse_models(const json& cfg, const BasisFamily& family,
                                       const std::vector<double>& points) {
    std::vector<DesignMatrix> designs;
    if (cfg.contains("model_sizes")) {
        const std::vector<int> sizes = cfg.at("model_sizes").get<std::vector<int>>();
        for (const ModelSpec& ms : nested_model_family(family, sizes))
            designs.push_back(design_matrix(family, ms, points));
    } else if (cfg.contains("models")) {
        std::set<std::string> ids;
        for (const json& jm : cfg.at("models")) {
            ModelSpec ms;
            ms.id = jm.at("id").get<std::string>();
            ms.indices = jm.at("indices").get<std::vector<int>>();
            if (!ids.insert(ms.id).second)
                throw std::invalid_argument("duplicate model_id: " + ms.id);
            designs.push_back(design_matrix(family, ms, points));
        }
    } else {
        throw std::invalid_argument("config needs model_sizes or models");
    }
    if (designs.empty()) throw std::invalid_argument("empty model collection");
    return designs;
}

TrueProcessSpec parse_process(const json& j, std::uint64_t seed) {
    TrueProcessSpec spec;
    spec.kind = process_kind_from_string(j.value("kind", "kl_process"));
    spec.alpha = j.value("alpha", 1.0);
    spec.truncation = j.value("truncation", 64);
    spec.t_dof = j.value("t_dof", 5.0);
    spec.seed = seed;
    if (j.contains("gammas")) spec.gammas = j.at("gammas").get<std::vector<double>>();
    if (j.contains("basis")) spec.family = parse_basis(j.at("basis"));
    if (j.contains("sigma")) {
        const auto rows = j.at("sigma").get<std::vector<std::vector<double>>>();
        spec.sigma.resize(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(rows.at(0).size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < rows[r].size(); ++c)
                spec.sigma(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    rows[r][c];
    }
    return spec;
}

std::string out_path(const json& cfg, const std::string& name) {
    const std::string dir = cfg.value("output_dir", ".");
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

void write_json(const std::string& path, const json& j) {
    io::write_text(path, j.dump(2) + "\n");
}

ObservationSet load_observations(const json& cfg) {
    ObservationSet obs;
    obs.points = io::read_points_csv(cfg.at("points").get<std::string>());
    obs.data = io::read_matrix_csv(cfg.at("data").get<std::string>());
    if (static_cast<std::size_t>(obs.data.cols()) != obs.points.size())
        throw std::invalid_argument("data has " + std::to_string(obs.data.cols()) +
                                    " columns but points file lists " +
                                    std::to_string(obs.points.size()));
    if (cfg.contains("n") && cfg.at("n").get<Eigen::Index>() != obs.data.cols())
        throw std::invalid_argument("declared n does not match data");
    if (cfg.contains("N") && cfg.at("N").get<Eigen::Index>() != obs.data.rows())
        throw std::invalid_argument("declared N does not match data");
    obs.validate();
    return obs;
}

json diagnostics_json(const CovarianceEstimate& est) {
    return {{"psi_clip", est.diag.psi_clip},
            {"sigma_clip", est.diag.sigma_clip},
            {"design_rank", est.diag.design_rank}};
}

json model_to_json(const ModelSpec& m) {
    return {{"id", m.id}, {"indices", m.indices}};
}

std::string timestamp_utc() {
    char buf[32];
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int cmd_estimate(const json& cfg, const CliOverrides& ov) {
    const BasisFamily family = parse_basis(cfg.at("basis"));
    ObservationSet obs = load_observations(cfg);
    const bool center = ov.center || cfg.value("center", false);

    ModelSpec model;
    if (cfg.at("model").is_number_integer()) {
        const int m = cfg.at("model").get<int>();
        model = nested_model_family(family, {m}).front();
    } else {
        model.id = cfg.at("model").value("id", "m");
        model.indices = cfg.at("model").at("indices").get<std::vector<int>>();
    }
    const DesignMatrix design = design_matrix(family, model, obs.points);
    const MomentEstimates moments = sample_second_moment(obs, center);
    const CovarianceEstimate est = fit_model(moments, design, family);

    io::write_matrix_csv(out_path(cfg, "psi_hat.csv"), est.psi_hat);
    io::write_matrix_csv(out_path(cfg, "sigma_hat.csv"), est.sigma_hat);
    json result = {{"version", kVersion},
                   {"timestamp", timestamp_utc()},
                   {"command", "estimate"},
                   {"config", cfg},
                   {"centered", center},
                   {"basis", basis_to_json(family)},
                   {"model", model_to_json(model)},
                   {"diagnostics", diagnostics_json(est)},
                   {"files", {{"psi_hat", "psi_hat.csv"}, {"sigma_hat", "sigma_hat.csv"}}}};
    write_json(out_path(cfg, "result.json"), result);
    return 0;
}

std::string selection_table_csv(const SelectionResult& res) {
    std::ostringstream out;
    out << "model_id,m,D_m,delta_sq,contrast,pen,criterion,chosen\n";
    for (const SelectionEntry& e : res.table) {
        out << e.model_id << ',' << e.m << ',' << io::fmt(e.D) << ',' << io::fmt(e.delta_sq)
            << ',' << io::fmt(e.contrast) << ',' << io::fmt(e.pen) << ','
            << io::fmt(e.criterion) << ',' << (e.chosen ? 1 : 0) << '\n';
    }
    return out.str();
}

int cmd_select(const json& cfg, const CliOverrides& ov) {
    const BasisFamily family = parse_basis(cfg.at("basis"));
    ObservationSet obs = load_observations(cfg);
    if (ov.center || cfg.value("center", false)) {
        const Vector xbar = obs.data.colwise().mean();
        obs.data.rowwise() -= xbar.transpose();
        obs.centered = true;
    }
    const std::vector<DesignMatrix> designs = parse_models(cfg, family, obs.points);
    const double theta = cfg.value("theta", 1.0);
    const PenaltyMode mode = cfg.value("penalty_mode", std::string("delta_m")) == "lambda_max"
                                 ? PenaltyMode::lambda_max
                                 : PenaltyMode::delta_m;

    const SelectionResult res = select(obs, designs, theta, mode, family);

    io::write_text(out_path(cfg, "selection_table.csv"), selection_table_csv(res));
    io::write_matrix_csv(out_path(cfg, "psi_hat.csv"), res.chosen.psi_hat);
    io::write_matrix_csv(out_path(cfg, "sigma_hat.csv"), res.chosen.sigma_hat);

    json table = json::array();
    for (const SelectionEntry& e : res.table)
        table.push_back({{"model_id", e.model_id},
                         {"m", e.m},
                         {"D_m", e.D},
                         {"delta_sq", e.delta_sq},
                         {"contrast", e.contrast},
                         {"pen", e.pen},
                         {"criterion", e.criterion},
                         {"chosen", e.chosen}});
    json result = {{"version", kVersion},
                   {"timestamp", timestamp_utc()},
                   {"command", "select"},
                   {"config", cfg},
                   {"theta", theta},
                   {"penalty_mode", mode == PenaltyMode::lambda_max ? "lambda_max" : "delta_m"},
                   {"lambda_max_phi", res.lambda_max_phi},
                   {"tie_broken", res.tie_broken},
                   {"basis", basis_to_json(family)},
                   {"model", model_to_json(res.chosen.model)},
                   {"selection_table", table},
                   {"diagnostics", diagnostics_json(res.chosen)},
                   {"files",
                    {{"psi_hat", "psi_hat.csv"},
                     {"sigma_hat", "sigma_hat.csv"},
                     {"selection_table", "selection_table.csv"}}}};
    write_json(out_path(cfg, "result.json"), result);
    return 0;
}

int cmd_eval(const json& cfg, const CliOverrides&) {
    const std::string result_path = cfg.at("result").get<std::string>();
    std::ifstream in(result_path);
    if (!in) throw io::ParseError("cannot open result bundle: " + result_path, 0);
    json result;
    in >> result;

    const BasisFamily family = parse_basis(result.at("basis"));
    CovarianceEstimate est;
    est.family = family;
    est.model.id = result.at("model").at("id").get<std::string>();
    est.model.indices = result.at("model").at("indices").get<std::vector<int>>();
    const fs::path dir = fs::path(result_path).parent_path();
    est.psi_hat = io::read_matrix_csv(
        (dir / result.at("files").at("psi_hat").get<std::string>()).string());

    const Matrix pairs = io::read_matrix_csv(cfg.at("pairs").get<std::string>());
    if (pairs.cols() != 2) throw std::invalid_argument("pairs file must have two columns (s,t)");

    std::ostringstream out;
    out << "s,t,sigma_hat\n";
    for (Eigen::Index i = 0; i < pairs.rows(); ++i) {
        double v;
        try {
            v = eval_cov_fn(est, pairs(i, 0), pairs(i, 1));
        } catch (const std::domain_error&) {
            throw std::invalid_argument("pair " + std::to_string(i + 1) +
                                        " is outside the basis domain");
        }
        out << io::fmt(pairs(i, 0)) << ',' << io::fmt(pairs(i, 1)) << ',' << io::fmt(v) << '\n';
    }
    io::write_text(out_path(cfg, cfg.value("output", "cov_pairs.csv")), out.str());
    return 0;
}

// ---- simulate ----

json risk_report_json(const RiskReport& rep) {
    json rows = json::array();
    for (const ModelRiskRow& r : rep.rows)
        rows.push_back({{"model_id", r.model_id},
                        {"D", r.D},
                        {"mc_risk", r.mc_risk},
                        {"mc_se", r.mc_se},
                        {"bias", r.bias},
                        {"variance_term", r.variance_term},
                        {"identity_pass", r.identity_pass},
                        {"trace_cov_scaled", r.trace_cov_scaled},
                        {"trace_cov_se", r.trace_cov_se},
                        {"gamma_sq_true", r.gamma_sq_true},
                        {"variance_identity_pass", r.variance_identity_pass}});
    return {{"N", rep.N},
            {"R", rep.R},
            {"rows", rows},
            {"variance_bound_max_ratio", rep.variance_bound_max_ratio},
            {"all_pass", rep.all_pass()}};
}

int simulate_risk_decomposition(const json& cfg, std::uint64_t seed, json& report,
                                std::string& plotdata) {
    const TrueProcessSpec spec = parse_process(cfg.at("process"), seed);
    const int n = cfg.value("n", 6);
    const std::vector<double> points = grid_points(spec.family, n);
    const std::vector<DesignMatrix> designs = parse_models(cfg, spec.family, points);
    const Eigen::Index N = cfg.value("N", 500);
    const int R = cfg.value("R", 400);

    const RiskReport rep = risk_decomposition_check(spec, designs, N, R, seed);
    report = risk_report_json(rep);

    std::ostringstream pd;
    pd << "x,empirical,target\n";
    for (const ModelRiskRow& r : rep.rows)
        pd << io::fmt(r.D) << ',' << io::fmt(r.mc_risk) << ','
           << io::fmt(r.bias + r.variance_term) << '\n';
    plotdata = pd.str();
    return rep.all_pass() ? 0 : 4;
}

int simulate_oracle(const json& cfg, std::uint64_t seed, json& report, std::string& plotdata) {
    const TrueProcessSpec spec = parse_process(cfg.at("process"), seed);
    const int n = cfg.value("n", 6);
    const std::vector<double> points = grid_points(spec.family, n);
    const std::vector<DesignMatrix> designs = parse_models(cfg, spec.family, points);
    const Eigen::Index N = cfg.value("N", 1000);
    const int R = cfg.value("R", 200);
    std::vector<double> thetas = {1.0};
    if (cfg.contains("thetas")) thetas = cfg.at("thetas").get<std::vector<double>>();

    bool all_pass = true;
    json sweeps = json::array();
    std::ostringstream pd;
    pd << "x,empirical,bound\n";
    for (double theta : thetas) {
        const OracleReport rep =
            oracle_inequality_check(spec, designs, theta, N, R, seed);
        all_pass = all_pass && rep.pass;
        sweeps.push_back({{"theta", rep.theta},
                          {"K_theta", rep.k_theta},
                          {"selected_risk", rep.selected_risk},
                          {"selected_se", rep.selected_se},
                          {"model_risks", rep.model_risks},
                          {"model_ses", rep.model_ses},
                          {"min_model_risk", rep.min_model_risk},
                          {"empirical_ratio", rep.empirical_ratio},
                          {"variance_bound_max_ratio", rep.variance_bound_max_ratio},
                          {"pass", rep.pass}});
        pd << io::fmt(theta) << ',' << io::fmt(rep.empirical_ratio) << ','
           << io::fmt(rep.k_theta) << '\n';
    }
    report = {{"N", N}, {"R", R}, {"sweeps", sweeps}, {"all_pass", all_pass}};
    plotdata = pd.str();
    return all_pass ? 0 : 4;
}

int simulate_rate(const json& cfg, std::uint64_t seed, json& report, std::string& plotdata) {
    const TrueProcessSpec spec = parse_process(cfg.at("process"), seed);
    const std::vector<Eigen::Index> Ns = cfg.at("Ns").get<std::vector<Eigen::Index>>();
    std::vector<int> mmax;
    if (cfg.contains("m_max"))
        mmax = cfg.at("m_max").get<std::vector<int>>();
    else
        for (Eigen::Index N : Ns)
            mmax.push_back(std::max(2, static_cast<int>(
                                           std::lround(std::pow(static_cast<double>(N), 2.0 / 9.0)))));
    int n = cfg.value("n", 0);
    if (n == 0) {
        int top = 2;
        for (int m : mmax) top = std::max(top, m);
        n = 2 * top + 4;
    }
    const std::vector<double> points = grid_points(spec.family, n);
    const int R = cfg.value("R", 100);
    const double theta = cfg.value("theta", 1.0);
    const double target = -2.0 * spec.alpha / (2.0 * spec.alpha + 1.0);
    const double lo = cfg.value("slope_lo", target - 0.2);
    const double hi = cfg.value("slope_hi", target + 0.2);
    const bool assert_slope = cfg.value("assert", true);

    const RateReport rep = rate_check(spec, points, Ns, mmax, R, theta, lo, hi, seed);
    json pts = json::array();
    std::ostringstream pd;
    pd << "x,empirical,target\n";
    const double c0 = rep.points.front().mean_risk /
                      std::pow(static_cast<double>(rep.points.front().N), target);
    for (const RatePoint& p : rep.points) {
        pts.push_back({{"N", p.N}, {"m_max", p.m_max}, {"mean_risk", p.mean_risk}, {"se", p.se}});
        pd << p.N << ',' << io::fmt(p.mean_risk) << ','
           << io::fmt(c0 * std::pow(static_cast<double>(p.N), target)) << '\n';
    }
    report = {{"points", pts},
              {"slope", rep.slope},
              {"slope_window", {lo, hi}},
              {"target_slope", target},
              {"saturation_flag", rep.saturation_flag},
              {"variance_bound_max_ratio", rep.variance_bound_max_ratio},
              {"pass", rep.pass},
              {"asserted", assert_slope}};
    plotdata = pd.str();
    return (!assert_slope || rep.pass) ? 0 : 4;
}

int simulate_concentration(const json& cfg, std::uint64_t seed, json& report,
                           std::string& plotdata) {
    const TrueProcessSpec spec = parse_process(cfg.at("process"), seed);
    const int n = cfg.value("n", 3);
    const std::vector<double> points = grid_points(spec.family, n);
    const Matrix sigma = true_sigma(spec, points);
    const Matrix phi = true_phi_gaussian(sigma);
    const Eigen::Index N = cfg.value("N", 8);
    const double p = cfg.value("p", 4.0);
    const int R = cfg.value("R", 20000);
    std::vector<double> xs = {0.25, 0.5, 1.0, 2.0, 4.0};
    if (cfg.contains("xs")) xs = cfg.at("xs").get<std::vector<double>>();
    const ErrorKind kind = cfg.value("error", std::string("gaussian")) == "student_t"
                               ? ErrorKind::student_t
                               : ErrorKind::gaussian;
    const double dof = cfg.value("t_dof", 5.0);
    const int m = cfg.value("m", 2);

    // A-tilde = projector onto V_N(G): (1_N 1_N^T / N) (x) (Pi (x) Pi)
    const DesignMatrix design =
        design_matrix(spec.family, nested_model_family(spec.family, {m}).front(), points);
    const Matrix pi = projector(design.G);
    const Matrix ones = Matrix::Constant(N, N, 1.0 / static_cast<double>(N));
    const Matrix a_tilde = kron(ones, kron(pi, pi));

    const ConcentrationReport rep =
        concentration_check(phi, a_tilde, N, p, R, xs, kind, dof, seed);

    json pts = json::array();
    std::ostringstream pd;
    pd << "x,empirical,bound\n";
    for (const ConcentrationPoint& pt : rep.points) {
        pts.push_back({{"x", pt.x}, {"threshold", pt.threshold}, {"tail", pt.empirical_tail}});
        pd << io::fmt(pt.x) << ',' << io::fmt(pt.empirical_tail) << ','
           << io::fmt(std::pow(pt.x, -p / 2.0)) << '\n';
    }
    report = {{"delta_sq", rep.delta_sq}, {"gamma_sq", rep.gamma_sq},
              {"trace_A", rep.trace_A},   {"points", pts},
              {"tail_slope", rep.tail_slope}, {"p", p},
              {"pass", rep.pass}};
    plotdata = pd.str();
    return rep.pass ? 0 : 4;
}

int cmd_simulate(const json& cfg, const CliOverrides& ov) {
    const std::string experiment = cfg.at("experiment").get<std::string>();
    const std::uint64_t seed = ov.seed.value_or(cfg.value("seed", 0ULL));

    json report;
    std::string plotdata;
    int code;
    if (experiment == "risk_decomposition")
        code = simulate_risk_decomposition(cfg, seed, report, plotdata);
    else if (experiment == "oracle")
        code = simulate_oracle(cfg, seed, report, plotdata);
    else if (experiment == "rate")
        code = simulate_rate(cfg, seed, report, plotdata);
    else if (experiment == "concentration")
        code = simulate_concentration(cfg, seed, report, plotdata);
    else
        throw std::invalid_argument("unknown experiment: " + experiment);

    json full = {{"version", kVersion},
                 {"experiment", experiment},
                 {"seed", seed},
                 {"config", cfg},
                 {"report", report}};
    write_json(out_path(cfg, "report.json"), full);
    io::write_text(out_path(cfg, "plotdata_" + experiment + ".csv"), plotdata);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{kVersion};
    app.require_subcommand(1);

    std::string config_path;
    CliOverrides ov;
    std::uint64_t seed_flag = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config path")->required();
        sub->add_option("--threads", ov.threads, "worker threads (default: all cores)");
        sub->add_flag("--center", ov.center, "subtract the sample mean first");
        sub->add_option("--seed", seed_flag, "override the config seed")
            ->each([&](const std::string&) { seed_set = true; });
    };
    CLI::App* est = app.add_subcommand("estimate", "fit one model");
    CLI::App* sel = app.add_subcommand("select", "penalized model selection");
    CLI::App* sim = app.add_subcommand("simulate", "Monte-Carlo experiments");
    CLI::App* evl = app.add_subcommand("eval", "evaluate sigma_hat(s,t) at pairs");
    for (CLI::App* sub : {est, sel, sim, evl}) add_common(sub);

    CLI11_PARSE(app, argc, argv);
    if (seed_set) ov.seed = seed_flag;
#ifdef _OPENMP
    if (ov.threads > 0) omp_set_num_threads(ov.threads);
#endif

    try {
        const json cfg = load_config(config_path);
        if (est->parsed()) return cmd_estimate(cfg, ov);
        if (sel->parsed()) return cmd_select(cfg, ov);
        if (sim->parsed()) return cmd_simulate(cfg, ov);
        if (evl->parsed()) return cmd_eval(cfg, ov);
        return 2;
    } catch (const io::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
}
