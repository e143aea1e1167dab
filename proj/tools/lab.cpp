// lab: command-line front end for the focklab diagnostics and experiment catalog.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "focklab/experiments.hpp"

using namespace focklab;

namespace {

constexpr int kOk = 0, kVerdictFail = 1, kUsage = 2;

struct Options {
    std::string op, z, w, out, csv, name;
    bool all = false;
    std::uint64_t seed = ExperimentConfig{}.seed;
    int threads = 0;
    int hermite_order = 0, legendre_order = 0;
    double panel_width = 0.0, rel_tol = 0.0;
};

/// Inline JSON when the argument starts with '{', otherwise a file path.
OperatorSpec load_operator(const std::string& arg) {
    if (arg.empty()) throw SpecError("--op is required");
    if (arg.front() == '{') return operator_from_string(arg);
    std::ifstream in(arg);
    if (!in) throw SpecError("cannot read operator file: " + arg);
    std::stringstream ss;
    ss << in.rdbuf();
    return operator_from_string(ss.str());
}

QuadratureConfig quadrature(const Options& o) {
    QuadratureConfig q;
    if (o.hermite_order > 0) q.hermite_order = o.hermite_order;
    if (o.legendre_order > 0) q.legendre_order = o.legendre_order;
    if (o.panel_width > 0) q.panel_width = o.panel_width;
    if (o.rel_tol > 0) q.rel_tol = o.rel_tol;
    q.validate();
    return q;
}

void emit(const Json& j, const std::string& path) {
    if (path.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream os(path, std::ios::binary);
    os << j.dump(2) << '\n';
    if (!os) throw LabError("cannot write " + path);
}

int cmd_pairing(const Options& o) {
    OperatorSpec op = load_operator(o.op);
    CPoint z = parse_point(o.z), w = parse_point(o.w);
    PairingValue pv = pairing(op, z, w, quadrature(o));
    const char* method = pv.method == PairingValue::Method::closed_form ? "closed_form" : "quadrature";
    emit(Json{{"abs", num(pv.value.abs())}, {"log_abs", num(pv.value.log_mag)}, {"value", to_json(pv.value.to_complex())},
              {"method", method}, {"est_rel_err", num(pv.est_rel_err)}},
         o.out);
    return kOk;
}

int cmd_berezin(const Options& o) {
    OperatorSpec op = load_operator(o.op);
    LogComplex b = berezin(op, parse_point(o.z), quadrature(o));
    emit(Json{{"abs", num(b.abs())}, {"log_abs", num(b.log_mag)}, {"value", to_json(b.to_complex())}}, o.out);
    return kOk;
}

int cmd_report(const Options& o) {
    OperatorSpec op = load_operator(o.op);
    LabConfig cfg;
    cfg.quad = quadrature(o);
    LocalizationReport r = build_report(op, cfg);
    emit(to_json(r), o.out);
    if (!o.csv.empty()) {
        std::ofstream os(o.csv, std::ios::binary);
        write_csv(os, report_rows(r));
        if (!os) throw LabError("cannot write " + o.csv);
    }
    return kOk;
}

int cmd_experiment(const Options& o) {
    if (o.all == !o.name.empty()) throw CLI::ValidationError("experiment", "give one experiment name or --all");
    ExperimentConfig cfg;
    cfg.seed = o.seed;
    cfg.lab.quad = quadrature(o);
    const std::string dir = o.out.empty() ? "results" : o.out;
    std::vector<std::string> names = o.all ? experiment_names() : std::vector<std::string>{o.name};
    int code = kOk;
    for (const auto& n : names) {
        ExperimentResult r = run_experiment(n, cfg);
        write_experiment(r, dir);
        const char* v = r.exploratory ? "exploratory" : r.pass ? "pass" : "fail";
        std::cout << n << ": " << v << " (" << r.failures() << " failed checks, " << r.runtime_seconds << " s)" << std::endl;
        if (!r.exploratory && !r.pass) code = kVerdictFail;
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Localization diagnostics for operators on the Fock space"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--seed", o.seed, "seed for experiments")->capture_default_str();
    app.add_option("--threads", o.threads, "worker threads (sets LAB_THREADS)")->check(CLI::PositiveNumber);
    app.add_option("--hermite-order", o.hermite_order, "Gauss-Hermite order")->check(CLI::PositiveNumber);
    app.add_option("--legendre-order", o.legendre_order, "Gauss-Legendre order")->check(CLI::PositiveNumber);
    app.add_option("--panel-width", o.panel_width, "quadrature panel width")->check(CLI::PositiveNumber);
    app.add_option("--rel-tol", o.rel_tol, "relative tolerance of the integrators")->check(CLI::PositiveNumber);

    auto* pairing_cmd = app.add_subcommand("pairing", "|<T k_z, k_w>| and its value");
    pairing_cmd->add_option("--op", o.op, "operator JSON or path")->required();
    pairing_cmd->add_option("--z", o.z, "point, e.g. 1,0 or 1,0;0,2")->required();
    pairing_cmd->add_option("--w", o.w, "point")->required();
    pairing_cmd->add_option("--out", o.out, "output file (default stdout)");

    auto* berezin_cmd = app.add_subcommand("berezin", "Berezin transform <T k_z, k_z>");
    berezin_cmd->add_option("--op", o.op, "operator JSON or path")->required();
    berezin_cmd->add_option("--z", o.z, "point")->required();
    berezin_cmd->add_option("--out", o.out, "output file (default stdout)");

    auto* report_cmd = app.add_subcommand("report", "full localization report as JSON");
    report_cmd->add_option("--op", o.op, "operator JSON or path")->required();
    report_cmd->add_option("--out", o.out, "output file (default stdout)");
    report_cmd->add_option("--csv", o.csv, "also write the report rows as CSV");

    auto* exp_cmd = app.add_subcommand("experiment", "run catalog experiments");
    exp_cmd->add_option("name", o.name, "experiment name");
    exp_cmd->add_flag("--all", o.all, "run the whole catalog");
    exp_cmd->add_option("--out", o.out, "output directory (default results)");

    auto* list_cmd = app.add_subcommand("list", "list catalog experiments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }
    if (o.threads > 0) setenv("LAB_THREADS", std::to_string(o.threads).c_str(), 1);

    try {
        if (*list_cmd) {
            for (const auto& n : experiment_names()) std::cout << n << '\n';
            return kOk;
        }
        if (*pairing_cmd) return cmd_pairing(o);
        if (*berezin_cmd) return cmd_berezin(o);
        if (*report_cmd) return cmd_report(o);
        if (*exp_cmd) return cmd_experiment(o);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
