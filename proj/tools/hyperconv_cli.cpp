// Command-line front end: model inspection, translation kernels, generalized
// translations, eigenfunctions, boundary coefficients, asymptotic measures,
// regime classification, and the verification battery.
//
// Exit codes: 0 success, 1 parse/validation error, 2 numerical-regime error,
// 3 verification failures.

#include <CLI11.hpp>
#include <json.hpp>

#include <hyperconv/asymptotics.hpp>
#include <hyperconv/eigen.hpp>
#include <hyperconv/expr.hpp>
#include <hyperconv/kernel.hpp>
#include <hyperconv/measure.hpp>
#include <hyperconv/model.hpp>
#include <hyperconv/verify.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

const char* to_string(hyperconv::KernelMethod m) {
    switch (m) {
        case hyperconv::KernelMethod::automatic: return "automatic";
        case hyperconv::KernelMethod::closed_form: return "closed-form";
        case hyperconv::KernelMethod::marched: return "marched";
        case hyperconv::KernelMethod::transmuted: return "transmuted";
    }
    return "?";
}

const char* to_string(hyperconv::NuMethod m) {
    switch (m) {
        case hyperconv::NuMethod::automatic: return "automatic";
        case hyperconv::NuMethod::closed_form: return "closed-form";
        case hyperconv::NuMethod::recursion: return "recursion";
    }
    return "?";
}

const char* to_string(hyperconv::NuInftyMethod m) {
    return m == hyperconv::NuInftyMethod::limit ? "limit" : "neumann";
}

hyperconv::KernelMethod parse_kernel_method(const std::string& s) {
    if (s == "automatic") return hyperconv::KernelMethod::automatic;
    if (s == "closed-form") return hyperconv::KernelMethod::closed_form;
    if (s == "marched") return hyperconv::KernelMethod::marched;
    if (s == "transmuted") return hyperconv::KernelMethod::transmuted;
    throw hyperconv::parse_error("unknown kernel method '" + s + "'");
}

hyperconv::NuMethod parse_nu_method(const std::string& s) {
    if (s == "automatic") return hyperconv::NuMethod::automatic;
    if (s == "closed-form") return hyperconv::NuMethod::closed_form;
    if (s == "recursion") return hyperconv::NuMethod::recursion;
    throw hyperconv::parse_error("unknown nu method '" + s + "'");
}

// HYPERCONV_THREADS caps the worker count. Every sweep here runs
// sequentially, so any positive cap is honored; validate for early feedback.
int worker_cap() {
    const char* env = std::getenv("HYPERCONV_THREADS");
    if (!env || !*env) return 1;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
        throw hyperconv::parse_error("HYPERCONV_THREADS must be a positive integer");
    return int(std::min(v, 256L));
}

// Output routing: stdout by default, <dir>/<name>.<format> with --out.
struct Output {
    std::string dir;
    std::string format = "csv";

    void write(const std::string& name, const std::string& csv, const json& j) const {
        std::string body = format == "json" ? j.dump(2) + "\n" : csv;
        if (dir.empty()) {
            std::fwrite(body.data(), 1, body.size(), stdout);
            return;
        }
        std::filesystem::create_directories(dir);
        auto path = std::filesystem::path(dir) / (name + "." + format);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw hyperconv::parse_error("cannot write '" + path.string() + "'");
        out.write(body.data(), std::streamsize(body.size()));
        std::fprintf(stderr, "wrote %s\n", path.string().c_str());
    }
};

// Two-column table for external plotters.
std::string grid_csv(const char* col_x, const char* col_v, double origin, double step,
                     const std::vector<double>& values) {
    std::ostringstream os;
    os << col_x << ',' << col_v << '\n';
    for (std::size_t i = 0; i < values.size(); ++i)
        os << fmt(origin + double(i) * step) << ',' << fmt(values[i]) << '\n';
    return os.str();
}

json measure_json(const hyperconv::GridMeasure& mu) {
    json j;
    j["origin"] = mu.origin;
    j["step"] = mu.step;
    j["density"] = mu.density;
    json atoms = json::array();
    for (const auto& a : mu.atoms) atoms.push_back({a.first, a.second});
    j["atoms"] = atoms;
    j["mass"] = mu.mass();
    return j;
}

struct Common {
    std::string model;
    Output out;
};

void add_common(CLI::App* sub, Common& c, bool needs_model = true) {
    // --h is a step option here, so help stays on --help alone
    sub->set_help_flag("--help", "print help and exit");
    auto* m = sub->add_option("--model", c.model, "builtin alias or model file path");
    if (needs_model) m->required();
    sub->add_option("--out", c.out.dir, "write outputs into this directory");
    sub->add_option("--format", c.out.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sturm-Liouville hypergroup computations on the half line"};
    app.set_help_flag("--help", "print help and exit");
    app.require_subcommand(1);

    // model validate
    Common mv;
    auto* model_cmd = app.add_subcommand("model", "model file and alias utilities");
    model_cmd->set_help_flag("--help", "print help and exit");
    model_cmd->require_subcommand(1);
    auto* validate_cmd =
        model_cmd->add_subcommand("validate", "check the Sturm-Liouville conditions");
    add_common(validate_cmd, mv);

    // kernel
    Common kc;
    double k_x = 0.0, k_y = 0.0, k_h = 1e-3;
    std::string k_method = "automatic";
    auto* kernel_cmd = app.add_subcommand("kernel", "translation kernel density of delta_x * delta_y");
    add_common(kernel_cmd, kc);
    kernel_cmd->add_option("--x", k_x, "left translation parameter")->required();
    kernel_cmd->add_option("--y", k_y, "right translation parameter")->required();
    kernel_cmd->add_option("--h", k_h, "grid step")->capture_default_str();
    kernel_cmd->add_option("--method", k_method, "automatic | closed-form | marched | transmuted")
        ->capture_default_str();

    // translate
    Common tc;
    double t_y = 0.0, t_h = 1e-3, t_xmax = 4.0;
    std::string t_f = "exp(-x)";
    auto* translate_cmd = app.add_subcommand("translate", "generalized translation T_y f");
    add_common(translate_cmd, tc);
    translate_cmd->add_option("--y", t_y, "translation parameter")->required();
    translate_cmd->add_option("--f", t_f, "expression for f(x)")->capture_default_str();
    translate_cmd->add_option("--h", t_h, "grid step")->capture_default_str();
    translate_cmd->add_option("--xmax", t_xmax, "report T_y f on [0, xmax]")->capture_default_str();

    // eigen
    Common ec;
    double e_lam = 0.0, e_lam_im = 0.0, e_xmax = 10.0, e_h = 1e-2;
    auto* eigen_cmd = app.add_subcommand("eigen", "eigenfunction phi_lambda on [0, xmax]");
    add_common(eigen_cmd, ec);
    eigen_cmd->add_option("--lambda", e_lam, "spectral parameter (real part)")->required();
    eigen_cmd->add_option("--lambda-im", e_lam_im, "spectral parameter (imaginary part)")
        ->capture_default_str();
    eigen_cmd->add_option("--xmax", e_xmax, "right end of the sample window")->capture_default_str();
    eigen_cmd->add_option("--h", e_h, "sample step")->capture_default_str();

    // cfun
    Common cc;
    double c_lam = 0.0, c_xfit = 30.0;
    auto* cfun_cmd = app.add_subcommand("cfun", "boundary coefficient c(lambda) at infinity");
    add_common(cfun_cmd, cc);
    cfun_cmd->add_option("--lambda", c_lam, "spectral parameter (real, nonzero)")->required();
    cfun_cmd->add_option("--xfit", c_xfit, "fit abscissa for the asymptotic matching")
        ->capture_default_str();

    // nu
    Common nc;
    double n_y = 0.0, n_h = 2e-3;
    std::string n_method = "automatic";
    auto* nu_cmd = app.add_subcommand("nu", "asymptotic measure nu_y on [-y, y]");
    add_common(nu_cmd, nc);
    nu_cmd->add_option("--y", n_y, "family parameter")->required();
    nu_cmd->add_option("--h", n_h, "grid step")->capture_default_str();
    nu_cmd->add_option("--method", n_method, "automatic | closed-form | recursion")
        ->capture_default_str();

    // nu-infty
    Common ic;
    double i_h = 2e-3, i_ymax = 12.0;
    std::string i_method = "limit";
    auto* ninf_cmd = app.add_subcommand("nu-infty", "limit measure nu_infty (needs rho > 0)");
    add_common(ninf_cmd, ic);
    ninf_cmd->add_option("--h", i_h, "grid step")->capture_default_str();
    ninf_cmd->add_option("--ymax", i_ymax, "largest centering parameter for the limit route")
        ->capture_default_str();
    ninf_cmd->add_option("--method", i_method, "limit | neumann")->capture_default_str();

    // distances
    Common dc;
    double d_x = 0.0, d_ymax = 8.0, d_h = 2e-3;
    auto* dist_cmd =
        app.add_subcommand("distances", "invariance and centering diagnostics over y = 2, 4, ...");
    add_common(dist_cmd, dc);
    dist_cmd->add_option("--x", d_x, "probe translation")->required();
    dist_cmd->add_option("--ymax", d_ymax, "largest family parameter")->capture_default_str();
    dist_cmd->add_option("--h", d_h, "grid step")->capture_default_str();

    // classify
    Common gc;
    double g_h = 2e-3;
    auto* classify_cmd = app.add_subcommand("classify", "growth class and asymptotic regime verdict");
    add_common(classify_cmd, gc);
    classify_cmd->add_option("--h", g_h, "grid step for the diagnostics")->capture_default_str();

    // verify
    Common vc;
    std::vector<int> v_only;
    std::vector<std::string> v_tols;
    double v_h = 1e-3;
    auto* verify_cmd = app.add_subcommand("verify", "run the acceptance battery");
    add_common(verify_cmd, vc, /*needs_model=*/false);
    verify_cmd->add_option("--criterion", v_only, "run only these criterion ids (1-12)");
    verify_cmd->add_option("--tol", v_tols, "override a headline tolerance, name=value or id=value");
    verify_cmd->add_option("--h", v_h, "finest step of the march-fidelity ladder")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        (void)worker_cap();

        if (validate_cmd->parsed()) {
            auto m = hyperconv::resolve_model(mv.model);
            auto rep = hyperconv::validate_model(m);
            std::ostringstream csv;
            csv << "field,value\n";
            csv << "label," << m.label << '\n';
            csv << "alpha0," << fmt(rep.alpha0) << '\n';
            csv << "rho," << fmt(rep.rho) << '\n';
            csv << "growth," << hyperconv::to_string(rep.growth) << '\n';
            csv << "haar_scale," << fmt(rep.haar_scale) << '\n';
            csv << "ok," << (rep.ok ? "true" : "false") << '\n';
            for (const auto& c : rep.checks)
                csv << "check:" << c.name << ',' << (c.passed ? "pass" : "fail") << '\n';
            json j;
            j["label"] = m.label;
            j["alpha0"] = rep.alpha0;
            j["rho"] = rep.rho;
            j["growth"] = hyperconv::to_string(rep.growth);
            j["haar_scale"] = rep.haar_scale;
            j["ok"] = rep.ok;
            j["checks"] = json::array();
            for (const auto& c : rep.checks)
                j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
            mv.out.write("model-validate", csv.str(), j);
            return rep.ok ? 0 : 1;
        }

        if (kernel_cmd->parsed()) {
            auto m = hyperconv::resolve_model(kc.model);
            auto ker = hyperconv::kernel_density(m, k_x, k_y, k_h, parse_kernel_method(k_method));
            json j;
            j["model"] = m.label;
            j["x"] = ker.x;
            j["y"] = ker.y;
            j["h"] = k_h;
            j["method"] = to_string(ker.method);
            j["support"] = {ker.support_lo, ker.support_hi};
            j["raw_mass"] = ker.raw_mass;
            j["refine_l1"] = ker.refine_l1;
            j["clipped_outside"] = ker.clipped_outside;
            j["clipped_negative"] = ker.clipped_negative;
            j["renorm_factor"] = ker.renorm_factor;
            j["measure"] = measure_json(ker.density);
            kc.out.write("kernel",
                         grid_csv("t", "density", ker.density.origin, ker.density.step,
                                  ker.density.density),
                         j);
            return 0;
        }

        if (translate_cmd->parsed()) {
            auto m = hyperconv::resolve_model(tc.model);
            auto node = hyperconv::expr::parse(t_f);
            hyperconv::TranslateOptions opt;
            opt.h = t_h;
            opt.x_out = t_xmax;
            auto res = hyperconv::translate_function(
                m, [&node](double x) { return node->eval(x); }, t_y, opt);
            json j;
            j["model"] = m.label;
            j["y"] = t_y;
            j["f"] = t_f;
            j["h"] = t_h;
            j["step"] = res.step;
            j["h_y"] = res.h_y;
            j["sup_ratio"] = res.sup_ratio;
            j["values"] = res.values;
            tc.out.write("translate", grid_csv("x", "value", 0.0, res.step, res.values), j);
            return 0;
        }

        if (eigen_cmd->parsed()) {
            auto m = hyperconv::resolve_model(ec.model);
            auto sol = hyperconv::phi_lambda(m, {e_lam, e_lam_im}, e_xmax, e_h);
            std::ostringstream csv;
            csv << "x,re,im\n";
            json phi = json::array();
            for (std::size_t k = 0; k < sol.phi.size(); ++k) {
                csv << fmt(sol.x_at(k)) << ',' << fmt(sol.phi[k].real()) << ','
                    << fmt(sol.phi[k].imag()) << '\n';
                phi.push_back({sol.phi[k].real(), sol.phi[k].imag()});
            }
            json j;
            j["model"] = m.label;
            j["lambda"] = {e_lam, e_lam_im};
            j["step"] = sol.step;
            j["phi"] = phi;
            ec.out.write("eigen", csv.str(), j);
            return 0;
        }

        if (cfun_cmd->parsed()) {
            auto m = hyperconv::resolve_model(cc.model);
            auto est = hyperconv::c_function(m, c_lam, c_xfit);
            auto sh = hyperconv::c_shifted(m, c_lam, c_xfit);
            std::ostringstream csv;
            csv << "field,value\n";
            csv << "lambda," << fmt(c_lam) << '\n';
            csv << "c_plus_re," << fmt(est.c_plus.real()) << '\n';
            csv << "c_plus_im," << fmt(est.c_plus.imag()) << '\n';
            csv << "c_plus_abs," << fmt(std::abs(est.c_plus)) << '\n';
            csv << "c_minus_re," << fmt(est.c_minus.real()) << '\n';
            csv << "c_minus_im," << fmt(est.c_minus.imag()) << '\n';
            csv << "residual," << fmt(est.residual) << '\n';
            csv << "shifted_re," << fmt(sh.c_plus.real()) << '\n';
            csv << "shifted_im," << fmt(sh.c_plus.imag()) << '\n';
            csv << "shifted_residual," << fmt(sh.residual) << '\n';
            json j;
            j["model"] = m.label;
            j["lambda"] = c_lam;
            j["c_plus"] = {{"re", est.c_plus.real()},
                           {"im", est.c_plus.imag()},
                           {"abs", std::abs(est.c_plus)}};
            j["c_minus"] = {{"re", est.c_minus.real()}, {"im", est.c_minus.imag()}};
            j["residual"] = est.residual;
            j["shifted"] = {{"re", sh.c_plus.real()},
                            {"im", sh.c_plus.imag()},
                            {"residual", sh.residual}};
            cc.out.write("cfun", csv.str(), j);
            return 0;
        }

        if (nu_cmd->parsed()) {
            auto m = hyperconv::resolve_model(nc.model);
            auto nu = hyperconv::nu_measure(m, n_y, n_h, parse_nu_method(n_method));
            json j;
            j["model"] = m.label;
            j["y"] = n_y;
            j["h"] = n_h;
            j["method"] = n_method;
            j["measure"] = measure_json(nu);
            nc.out.write("nu", grid_csv("t", "density", nu.origin, nu.step, nu.density), j);
            return 0;
        }

        if (ninf_cmd->parsed()) {
            auto m = hyperconv::resolve_model(ic.model);
            auto method = i_method == "neumann" ? hyperconv::NuInftyMethod::neumann
                        : i_method == "limit"   ? hyperconv::NuInftyMethod::limit
                                                : throw hyperconv::parse_error(
                                                      "unknown nu-infty method '" + i_method + "'");
            auto res = hyperconv::nu_infty(m, method, i_h, i_ymax);
            json j;
            j["model"] = m.label;
            j["method"] = to_string(res.method);
            j["h"] = i_h;
            j["ymax"] = i_ymax;
            j["residual"] = res.residual;
            json curve = json::array();
            for (const auto& p : res.curve) curve.push_back({p.first, p.second});
            j["curve"] = curve;
            j["measure"] = measure_json(res.nu);
            ic.out.write("nu-infty", grid_csv("t", "density", res.nu.origin, res.nu.step, res.nu.density),
                         j);
            return 0;
        }

        if (dist_cmd->parsed()) {
            auto m = hyperconv::resolve_model(dc.model);
            if (!(d_ymax >= 2.0))
                throw hyperconv::domain_error("distances: need --ymax >= 2");
            std::vector<double> ys;
            for (double y = 2.0; y <= d_ymax + 1e-9; y += 2.0) ys.push_back(y);
            auto rows = hyperconv::asymptotic_distances(m, d_x, ys, d_h);
            std::ostringstream csv;
            csv << "y,d_inv,d_shift,d_center,weakstar\n";
            json arr = json::array();
            for (const auto& r : rows) {
                csv << fmt(r.y) << ',' << fmt(r.d_inv) << ',' << fmt(r.d_shift) << ','
                    << fmt(r.d_center) << ',' << fmt(r.weakstar) << '\n';
                arr.push_back({{"y", r.y},
                               {"d_inv", r.d_inv},
                               {"d_shift", r.d_shift},
                               {"d_center", r.d_center},
                               {"weakstar", r.weakstar}});
            }
            json j;
            j["model"] = m.label;
            j["x"] = d_x;
            j["h"] = d_h;
            j["rows"] = arr;
            dc.out.write("distances", csv.str(), j);
            return 0;
        }

        if (classify_cmd->parsed()) {
            auto m = hyperconv::resolve_model(gc.model);
            auto rep = hyperconv::classify(m, g_h);
            std::ostringstream csv;
            csv << "field,value\n";
            csv << "label," << rep.label << '\n';
            csv << "alpha0," << fmt(rep.alpha0) << '\n';
            csv << "rho," << fmt(rep.rho) << '\n';
            csv << "growth," << hyperconv::to_string(rep.growth) << '\n';
            csv << "x_probe," << fmt(rep.x_probe) << '\n';
            csv << "ft_min," << fmt(rep.ft_min) << '\n';
            csv << "verdict," << rep.verdict << '\n';
            for (const auto& n : rep.notes) csv << "note," << n << '\n';
            json j;
            j["label"] = rep.label;
            j["alpha0"] = rep.alpha0;
            j["rho"] = rep.rho;
            j["growth"] = hyperconv::to_string(rep.growth);
            j["x_probe"] = rep.x_probe;
            j["ft_min"] = rep.ft_min;
            j["verdict"] = rep.verdict;
            j["notes"] = rep.notes;
            json arr = json::array();
            for (const auto& r : rep.rows)
                arr.push_back({{"y", r.y},
                               {"d_inv", r.d_inv},
                               {"d_shift", r.d_shift},
                               {"d_center", r.d_center},
                               {"weakstar", r.weakstar}});
            j["rows"] = arr;
            gc.out.write("classify", csv.str(), j);
            return 0;
        }

        if (verify_cmd->parsed()) {
            if (!(v_h > 0.0)) throw hyperconv::domain_error("verify: need --h > 0");
            std::map<std::string, double> tols;
            for (const auto& spec : v_tols) {
                auto eq = spec.find('=');
                if (eq == std::string::npos || eq == 0)
                    throw hyperconv::parse_error("--tol expects name=value, got '" + spec + "'");
                try {
                    std::size_t used = 0;
                    double val = std::stod(spec.substr(eq + 1), &used);
                    if (used != spec.size() - eq - 1) throw std::invalid_argument(spec);
                    tols[spec.substr(0, eq)] = val;
                } catch (const std::exception&) {
                    throw hyperconv::parse_error("--tol expects name=value, got '" + spec + "'");
                }
            }
            std::setvbuf(stderr, nullptr, _IONBF, 0);
            int failures = 0;
            auto results = hyperconv::verify::run_criteria(
                [&failures](const hyperconv::verify::CriterionResult& r) {
                    std::fprintf(stderr, "%s\n", hyperconv::verify::format_line(r).c_str());
                    if (!r.pass) ++failures;
                },
                v_only, tols, v_h / 1e-3);
            auto dc_rep = hyperconv::verify::d_center_naimark();
            bool dc_pass = std::abs(dc_rep.measured - dc_rep.expected) <= 0.1 * dc_rep.expected;

            std::ostringstream csv;
            csv << "criterion,name,measured,expected,tolerance,provenance,pass\n";
            json arr = json::array();
            for (const auto& r : results) {
                csv << r.id << ',' << r.name << ',' << fmt(r.measured) << ',' << fmt(r.expected)
                    << ',' << fmt(r.tolerance) << ',' << r.provenance << ','
                    << (r.pass ? "true" : "false") << '\n';
                arr.push_back({{"criterion", r.id},
                               {"name", r.name},
                               {"measured", r.measured},
                               {"expected", r.expected},
                               {"tolerance", r.tolerance},
                               {"provenance", r.provenance},
                               {"pass", r.pass},
                               {"detail", r.detail}});
            }
            // centered third-convolution defect at (x, y) = (1, 5), closed-form rate at 10%
            csv << "0,d-center-x1-y5," << fmt(dc_rep.measured) << ',' << fmt(dc_rep.expected) << ','
                << fmt(0.1 * dc_rep.expected) << ",closed-form," << (dc_pass ? "true" : "false")
                << '\n';
            json j;
            j["criteria"] = arr;
            j["d_center"] = {{"x", dc_rep.x},
                             {"y", dc_rep.y},
                             {"measured", dc_rep.measured},
                             {"expected", dc_rep.expected},
                             {"tolerance", 0.1 * dc_rep.expected},
                             {"pass", dc_pass}};
            j["failures"] = failures;
            vc.out.write("verify", csv.str(), j);
            return failures == 0 ? 0 : 3;
        }
    } catch (const hyperconv::regime_error& e) {
        std::fprintf(stderr, "hyperconv: %s\n", e.what());
        return 2;
    } catch (const hyperconv::numeric_error& e) {
        std::fprintf(stderr, "hyperconv: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "hyperconv: %s\n", e.what());
        return 1;
    }
    return 0;
}
