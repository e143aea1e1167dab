#include "focklab/json_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace focklab {

namespace {

template <class F>
auto wrap(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("bad ") + what + " JSON: " + e.what());
    }
}

const Json& need(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw SpecError(std::string("missing field: ") + key);
    return j.at(key);
}

double get_or(const Json& j, const char* key, double dflt) { return j.contains(key) ? to_double(j.at(key)) : dflt; }

cplx cget_or(const Json& j, const char* key, cplx dflt) { return j.contains(key) ? complex_from_json(j.at(key)) : dflt; }

Family family_from(const std::string& s) {
    if (s == "identity") return Family::identity;
    if (s == "translation") return Family::translation;
    if (s == "dilation") return Family::dilation;
    if (s == "affine_composition" || s == "affine") return Family::affine;
    if (s == "lacunary") return Family::lacunary;
    if (s == "convolution_symbol" || s == "convolution") return Family::convolution;
    if (s == "toeplitz_measure" || s == "toeplitz") return Family::toeplitz;
    throw SpecError("unknown operator family: " + s);
}

}  // namespace

Json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

double to_double(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw SpecError("expected a number, got " + j.dump());
}

Json to_json(cplx z) { return Json::array({num(z.real()), num(z.imag())}); }

Json to_json(const CPoint& p) {
    Json a = Json::array();
    for (int i = 0; i < p.n; ++i) a.push_back(to_json(p[i]));
    return a;
}

Json to_json(const CMatrix& M) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(to_json(M(i, k)));
        rows.push_back(row);
    }
    return rows;
}

Json to_json(const RealFn& f) {
    Json j{{"kind", f.kind}};
    if (f.kind == "sum") {
        Json t = Json::array();
        for (const auto& x : f.terms) t.push_back(to_json(x));
        j["terms"] = t;
        return j;
    }
    j["value"] = to_json(f.value);
    if (f.kind == "indicator") {
        j["lo"] = num(f.lo);
        j["hi"] = num(f.hi);
    } else if (f.kind == "gaussian" || f.kind == "rational") {
        j["center"] = num(f.center);
        j["width"] = num(f.width);
    } else if (f.kind == "cexp") {
        j["freq"] = num(f.freq);
    }
    return j;
}

Json to_json(const PhiSpec& p) {
    Json j;
    switch (p.kind) {
        case PhiSpec::Kind::multiplier:
            j["kind"] = "multiplier";
            j["m"] = to_json(p.fn);
            break;
        case PhiSpec::Kind::density:
            j["kind"] = "density";
            j["g"] = to_json(p.fn);
            break;
        default:
            j["kind"] = "closed_form";
            j["name"] = p.name;
            if (p.name == "exponential") j["a"] = to_json(p.a);
            if (p.name == "sinc_beta") j["beta"] = p.beta;
            if (p.name == "erf_antiderivative") {
                j["coef"] = to_json(p.coef);
                j["scale"] = num(p.scale);
            }
    }
    if (p.reflect_conj) j["reflect_conj"] = true;
    return j;
}

Json to_json(const MeasureSpec& m) {
    Json j{{"kind", m.kind}, {"n", m.n}};
    if (m.kind == "discrete") {
        Json pts = Json::array(), ws = Json::array();
        for (const auto& p : m.points) pts.push_back(to_json(p));
        for (auto w : m.weights) ws.push_back(to_json(w));
        j["points"] = pts;
        j["weights"] = ws;
    } else if (m.kind == "lattice") {
        j["spacing"] = num(m.spacing);
        j["value"] = to_json(m.value);
    } else {
        j["density"] = m.density;
        j["value"] = to_json(m.value);
        if (m.density == "exp_abs") j["kappa"] = num(m.kappa);
    }
    return j;
}

Json to_json(const GammaSpec& g) {
    Json j{{"kind", g.kind}};
    if (g.kind == "list") {
        Json l = Json::array();
        for (auto v : g.list) l.push_back(to_json(v));
        j["list"] = l;
        j["tail"] = to_json(g.tail);
    } else {
        j["value"] = to_json(g.value);
        if (g.kind == "geometric") j["ratio"] = num(g.ratio);
    }
    return j;
}

Json to_json(const OperatorSpec& op) {
    Json j{{"schema", kSchema}, {"family", to_string(op.family)}, {"n", op.n}};
    switch (op.family) {
        case Family::translation: j["a"] = to_json(op.a); break;
        case Family::dilation: j["r"] = num(op.r); break;
        case Family::affine:
            j["A"] = to_json(op.A);
            j["B"] = to_json(op.B);
            break;
        case Family::lacunary: j["gamma"] = to_json(op.gamma); break;
        case Family::convolution: j["phi"] = to_json(op.phi); break;
        case Family::toeplitz: j["measure"] = to_json(op.measure); break;
        default: break;
    }
    if (op.adjoint) j["adjoint"] = true;
    return j;
}

cplx complex_from_json(const Json& j) {
    if (j.is_number() || j.is_string()) return {to_double(j), 0.0};
    if (!j.is_array() || j.size() != 2) throw SpecError("complex numbers are [re, im] pairs: " + j.dump());
    return {to_double(j[0]), to_double(j[1])};
}

CPoint point_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw SpecError("points are non-empty lists of [re, im] pairs");
    CPoint p(static_cast<int>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) p[static_cast<int>(i)] = complex_from_json(j[i]);
    return p;
}

CMatrix matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw SpecError("matrices are lists of rows");
    const auto n = static_cast<Eigen::Index>(j.size());
    CMatrix M(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) throw SpecError("matrix must be square");
        for (Eigen::Index k = 0; k < n; ++k) M(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
    }
    return M;
}

RealFn realfn_from_json(const Json& j) {
    return wrap("function", [&] {
        RealFn f;
        f.kind = need(j, "kind").get<std::string>();
        if (f.kind == "sum") {
            f.value = 1.0;
            for (const auto& t : need(j, "terms")) f.terms.push_back(realfn_from_json(t));
            return f;
        }
        f.value = cget_or(j, "value", 1.0);
        if (f.kind == "indicator") {
            f.lo = to_double(need(j, "lo"));
            f.hi = to_double(need(j, "hi"));
            if (!(f.hi > f.lo)) throw SpecError("indicator needs lo < hi");
        } else if (f.kind == "gaussian" || f.kind == "rational") {
            f.center = get_or(j, "center", 0.0);
            f.width = get_or(j, "width", 1.0);
            if (!(f.width > 0)) throw SpecError("width must be positive");
        } else if (f.kind == "cexp") {
            f.freq = to_double(need(j, "freq"));
        } else if (f.kind != "constant" && f.kind != "sign") {
            throw SpecError("unknown function kind: " + f.kind);
        }
        return f;
    });
}

PhiSpec phi_from_json(const Json& j) {
    return wrap("phi", [&] {
        const std::string kind = j.value("kind", std::string("closed_form"));
        PhiSpec p;
        if (kind == "multiplier") {
            p = PhiSpec::from_multiplier(realfn_from_json(need(j, "m")));
        } else if (kind == "density") {
            p = PhiSpec::from_density(realfn_from_json(need(j, "g")));
        } else if (kind == "closed_form") {
            const std::string name = need(j, "name").get<std::string>();
            if (name == "one")
                p = PhiSpec::one();
            else if (name == "exponential")
                p = PhiSpec::exponential(complex_from_json(need(j, "a")));
            else if (name == "sinc_beta")
                p = PhiSpec::sinc_beta(need(j, "beta").get<int>());
            else if (name == "erf_antiderivative")
                p = PhiSpec::erf_antiderivative(cget_or(j, "coef", 1.0), get_or(j, "scale", 1.0));
            else if (name == "hilbert")
                p = PhiSpec::hilbert();
            else
                throw SpecError("unknown phi name: " + name);
        } else {
            throw SpecError("unknown phi kind: " + kind);
        }
        p.reflect_conj = j.value("reflect_conj", false);
        return p;
    });
}

MeasureSpec measure_from_json(const Json& j) {
    return wrap("measure", [&] {
        MeasureSpec m;
        m.kind = need(j, "kind").get<std::string>();
        if (m.kind == "discrete") {
            for (const auto& p : need(j, "points")) m.points.push_back(point_from_json(p));
            for (const auto& w : need(j, "weights")) m.weights.push_back(complex_from_json(w));
            if (m.points.empty()) throw SpecError("discrete measure needs at least one point");
            m.n = j.value("n", m.points.front().n);
        } else if (m.kind == "lattice") {
            m.spacing = get_or(j, "spacing", 1.0);
            m.value = cget_or(j, "value", 1.0);
            m.n = j.value("n", 1);
        } else if (m.kind == "density") {
            m.density = j.value("density", std::string("constant"));
            m.value = cget_or(j, "value", 1.0);
            m.kappa = get_or(j, "kappa", 0.0);
            m.n = j.value("n", 1);
        } else {
            throw SpecError("unknown measure kind: " + m.kind);
        }
        m.validate();
        return m;
    });
}

GammaSpec gamma_from_json(const Json& j) {
    return wrap("gamma", [&] {
        GammaSpec g;
        g.kind = j.value("kind", std::string("constant"));
        if (g.kind == "list") {
            for (const auto& v : need(j, "list")) g.list.push_back(complex_from_json(v));
            g.tail = cget_or(j, "tail", 0.0);
        } else if (g.kind == "constant" || g.kind == "geometric") {
            g.value = cget_or(j, "value", 1.0);
            g.ratio = get_or(j, "ratio", 0.5);
        } else {
            throw SpecError("unknown gamma kind: " + g.kind);
        }
        return g;
    });
}

OperatorSpec operator_from_json(const Json& j) {
    return wrap("operator", [&] {
        if (!j.is_object()) throw SpecError("operator spec must be a JSON object");
        if (j.contains("schema") && j.at("schema") != kSchema) throw SpecError("unsupported schema: " + j.at("schema").dump());
        OperatorSpec op;
        op.family = family_from(need(j, "family").get<std::string>());
        const int n = j.value("n", 1);
        switch (op.family) {
            case Family::identity: op = OperatorSpec::identity(n); break;
            case Family::translation: op = OperatorSpec::translation(point_from_json(need(j, "a"))); break;
            case Family::dilation: op = OperatorSpec::dilation(to_double(need(j, "r"))); break;
            case Family::affine: {
                CMatrix A = matrix_from_json(need(j, "A"));
                CPoint B = j.contains("B") ? point_from_json(j.at("B")) : CPoint::zero(static_cast<int>(A.rows()));
                op = OperatorSpec::affine(A, B);
                break;
            }
            case Family::lacunary: op = OperatorSpec::lacunary(j.contains("gamma") ? gamma_from_json(j.at("gamma")) : GammaSpec{}); break;
            case Family::convolution: op = OperatorSpec::convolution(phi_from_json(need(j, "phi")), n); break;
            case Family::toeplitz: op = OperatorSpec::toeplitz(measure_from_json(need(j, "measure"))); break;
        }
        if (j.contains("n") && op.n != n) throw DimMismatch("declared n does not match the parameters");
        op.adjoint = j.value("adjoint", false);
        op.validate();
        return op;
    });
}

OperatorSpec operator_from_string(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("operator JSON does not parse: ") + e.what());
    }
    return operator_from_json(j);
}

CPoint parse_point(const std::string& text) {
    std::vector<cplx> coords;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ';')) {
        double re = 0, im = 0;
        char tail = 0;
        if (std::sscanf(part.c_str(), " %lf , %lf %c", &re, &im, &tail) != 2)
            throw SpecError("points are 'x,y' pairs separated by ';': " + text);
        coords.emplace_back(re, im);
    }
    if (coords.empty() || coords.size() > static_cast<std::size_t>(kMaxDim)) throw SpecError("bad point: " + text);
    CPoint p(static_cast<int>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) p[static_cast<int>(i)] = coords[i];
    if (!p.finite()) throw SpecError("point must be finite: " + text);
    return p;
}

std::string param_hash(const OperatorSpec& op) {
    const std::string s = to_json(op).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

Json to_json(const DecayFit& f, const char* rate_name) {
    Json d = Json::array(), m = Json::array();
    for (double x : f.d) d.push_back(num(x));
    for (double x : f.log_M) m.push_back(num(x));
    return Json{{rate_name, num(f.rate)}, {"C", num(f.C())},       {"log_C", num(f.log_C)}, {"residual", num(f.residual)},
                {"verdict", f.pass ? "pass" : "fail"}, {"d", d}, {"log_M", m}};
}

Json to_json(const WLProbe& w) {
    auto curve = [](const WLCurve& c) {
        Json a = Json::array();
        for (std::size_t i = 0; i < c.r.size(); ++i)
            a.push_back(Json{{"r", num(c.r[i])}, {"sup_tail", num(c.sup_tail[i])}, {"argmax", to_json(c.argmax[i])}});
        return a;
    };
    return Json{{"verdict", to_string(w.verdict)}, {"forward", curve(w.forward)}, {"adjoint", curve(w.adjoint)}};
}

Json to_json(const VanishProbe& v) {
    Json s = Json::array();
    for (const auto& x : v.samples) s.push_back(Json::array({x.ray, num(x.radius), num(x.log_q)}));
    return Json{{"verdict", to_string(v.verdict)}, {"witness_ray", v.witness_ray}, {"samples", s}};
}

Json report_verdicts(const LocalizationReport& r) {
    bool any_bounded = false, all_div = !r.p_results.empty();
    for (const auto& p : r.p_results) {
        if (p.p > 2 && p.kind == SupKind::bounded) any_bounded = true;
        if (p.kind != SupKind::divergent) all_div = false;
    }
    const char* pl = any_bounded ? "pass" : all_div ? "fail" : "inconclusive";
    const char* wl = r.wl.verdict == WLVerdict::WL ? "pass" : r.wl.verdict == WLVerdict::not_WL ? "fail" : "inconclusive";
    return Json{{"p_localization", pl}, {"xz", r.xz.pass ? "pass" : "fail"}, {"sl", r.sl.pass ? "pass" : "fail"}, {"wl", wl}};
}

Json to_json(const LocalizationReport& r) {
    Json ps = Json::array();
    for (const auto& p : r.p_results) {
        Json curve = Json::array();
        for (const auto& s : p.evidence.samples) curve.push_back(Json::array({s.ray, num(s.radius), num(s.log_q)}));
        ps.push_back(Json{{"p", num(p.p)},
                          {"classification", to_string(p.kind)},
                          {"log_sup_estimate", num(p.evidence.log_estimate)},
                          {"witness_ray", p.evidence.witness_ray},
                          {"curve", curve}});
    }
    Json notes = Json::array();
    for (const auto& n : r.notes) notes.push_back(n);
    return Json{{"schema", kSchema},
                {"operator", to_json(r.op)},
                {"param_hash", param_hash(r.op)},
                {"verdicts", report_verdicts(r)},
                {"p_results", ps},
                {"wl", to_json(r.wl)},
                {"xz_fit", to_json(r.xz, "beta_hat")},
                {"sl_fit", to_json(r.sl, "eps_hat")},
                {"berezin_probe", to_json(r.berezin_probe)},
                {"invariants_ok", r.invariants_ok},
                {"notes", notes}};
}

std::string fmt_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

CsvRow make_row(const OperatorSpec& op, std::string diagnostic, std::string grid, double result, std::string cls) {
    return CsvRow{to_string(op.family), op.n, param_hash(op), std::move(diagnostic), std::move(grid), fmt_double(result), std::move(cls)};
}

std::vector<CsvRow> report_rows(const LocalizationReport& r) {
    std::vector<CsvRow> rows;
    const auto& op = r.op;
    for (const auto& p : r.p_results)
        rows.push_back(make_row(op, "p_localization_log_sup", fmt_double(p.p), p.evidence.log_estimate, to_string(p.kind)));
    const char* wl = to_string(r.wl.verdict);
    for (std::size_t i = 0; i < r.wl.forward.r.size(); ++i)
        rows.push_back(make_row(op, "wl_tail_forward", fmt_double(r.wl.forward.r[i]), r.wl.forward.sup_tail[i], wl));
    for (std::size_t i = 0; i < r.wl.adjoint.r.size(); ++i)
        rows.push_back(make_row(op, "wl_tail_adjoint", fmt_double(r.wl.adjoint.r[i]), r.wl.adjoint.sup_tail[i], wl));
    const char* xz = r.xz.pass ? "pass" : "fail";
    const char* sl = r.sl.pass ? "pass" : "fail";
    for (std::size_t i = 0; i < r.xz.d.size(); ++i)
        rows.push_back(make_row(op, "decay_log_M", fmt_double(r.xz.d[i]), r.xz.log_M[i], ""));
    rows.push_back(make_row(op, "xz_beta_hat", "", r.xz.rate, xz));
    rows.push_back(make_row(op, "sl_eps_hat", "", r.sl.rate, sl));
    rows.push_back(make_row(op, "berezin_probe_witness_ray", "", r.berezin_probe.witness_ray, to_string(r.berezin_probe.verdict)));
    rows.push_back(make_row(op, "inclusion_chain", "", r.invariants_ok ? 1.0 : 0.0, r.invariants_ok ? "pass" : "fail"));
    return rows;
}

void write_csv(std::ostream& os, const std::vector<CsvRow>& rows) {
    auto field = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    os << kCsvHeader << '\n';
    for (const auto& r : rows)
        os << field(r.family) << ',' << r.n << ',' << r.param_hash << ',' << field(r.diagnostic) << ',' << field(r.grid_value)
           << ',' << field(r.result) << ',' << field(r.classification) << '\n';
}

}  // namespace focklab
