#include "carlevel/compare.hpp"

#include "carlevel/errors.hpp"
#include "carlevel/textio.hpp"

#include <algorithm>
#include <cmath>

namespace carlevel {

BiasRmse bias_rmse(const std::vector<double>& estimates, double truth) {
    if (estimates.empty()) {
        throw ValidationError("bias/RMSE needs at least one estimate");
    }
    if (!std::isfinite(truth)) {
        throw ValidationError("truth must be finite");
    }
    const double n = static_cast<double>(estimates.size());
    double mean = 0.0;
    for (double e : estimates) {
        mean += e;
    }
    mean /= n;
    BiasRmse out;
    out.bias = std::abs(mean - truth);
    if (estimates.size() < 2) {
        out.bias_only = true;
        out.rmse = out.bias;
        return out;
    }
    double ss = 0.0;
    for (double e : estimates) {
        ss += (e - mean) * (e - mean);
    }
    out.variance = ss / (n - 1.0);
    out.rmse = std::sqrt(out.bias * out.bias + out.variance);
    return out;
}

DicResult dic(const std::vector<double>& deviance_draws, double deviance_at_posterior_mean) {
    if (deviance_draws.empty()) {
        throw ValidationError("DIC needs at least one deviance draw");
    }
    double sum = 0.0;
    for (double d : deviance_draws) {
        sum += d;
    }
    DicResult out;
    out.mean_deviance = sum / static_cast<double>(deviance_draws.size());
    out.p_d = out.mean_deviance - deviance_at_posterior_mean;
    out.dic = out.mean_deviance + out.p_d;
    return out;
}

double coverage(const std::vector<std::pair<double, double>>& intervals, double truth) {
    if (intervals.empty()) {
        throw ValidationError("coverage needs at least one interval");
    }
    int hits = 0;
    for (const auto& [lo, hi] : intervals) {
        if (!(lo <= hi)) {
            throw ValidationError("malformed interval: lower bound exceeds upper bound");
        }
        hits += (lo <= truth && truth <= hi) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(intervals.size());
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) {
        throw ValidationError("quantile of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

PosteriorSummary summarize_posterior(const std::vector<double>& draws) {
    if (draws.size() < 40) {
        throw ValidationError("posterior summary needs at least 40 draws");
    }
    return {quantile(draws, 0.5), quantile(draws, 0.025), quantile(draws, 0.975)};
}

namespace {

template <class T>
void add_unique(std::vector<T>& v, const T& x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) {
        v.push_back(x);
    }
}

double median_of(const std::vector<double>& v) { return quantile(v, 0.5); }

}  // namespace

ComparisonReport build_report(const std::vector<ReplicateFit>& fits,
                              const std::map<std::string, std::map<std::string, double>>& truth) {
    ComparisonReport report;
    std::vector<std::string> scenarios;
    std::vector<std::string> models;
    for (const auto& f : fits) {
        add_unique(scenarios, f.scenario);
        add_unique(models, f.model);
    }
    for (const auto& s : scenarios) {
        const auto t = truth.find(s);
        for (const auto& m : models) {
            std::vector<const ReplicateFit*> group;
            for (const auto& f : fits) {
                if (f.scenario == s && f.model == m) {
                    group.push_back(&f);
                }
            }
            if (group.empty()) {
                continue;
            }
            ModelMetrics mm;
            mm.scenario = s;
            mm.model = m;
            mm.replicates = static_cast<int>(group.size());
            std::vector<double> dics, pds, devs, lls;
            for (const auto* f : group) {
                dics.push_back(f->dic.dic);
                pds.push_back(f->dic.p_d);
                devs.push_back(f->dic.mean_deviance);
                lls.push_back(f->max_posterior_loglik);
                mm.not_converged += f->converged ? 0 : 1;
            }
            mm.dic = median_of(dics);
            mm.p_d = median_of(pds);
            mm.mean_deviance = median_of(devs);
            mm.max_posterior_loglik = median_of(lls);
            report.models.push_back(mm);
            if (group.size() < 2) {
                report.warnings.push_back("scenario " + s + ", model " + m +
                                          ": fewer than two replicates, RMSE reduced to bias only");
            }
            if (t == truth.end()) {
                continue;
            }
            std::vector<std::string> coefs;
            for (const auto& [name, summary] : group.front()->coefficients) {
                add_unique(coefs, name);
            }
            for (const auto& c : coefs) {
                const auto tv = t->second.find(c);
                if (tv == t->second.end()) {
                    continue;
                }
                std::vector<double> est, lo, hi;
                std::vector<std::pair<double, double>> intervals;
                for (const auto* f : group) {
                    const auto& ps = f->coefficients.at(c);
                    est.push_back(ps.median);
                    lo.push_back(ps.q2_5);
                    hi.push_back(ps.q97_5);
                    intervals.emplace_back(ps.q2_5, ps.q97_5);
                }
                const auto br = bias_rmse(est, tv->second);
                CoefficientMetrics cm;
                cm.scenario = s;
                cm.model = m;
                cm.coefficient = c;
                cm.truth = tv->second;
                cm.replicates = static_cast<int>(group.size());
                cm.bias = br.bias;
                cm.rmse = br.rmse;
                cm.bias_only = br.bias_only;
                cm.coverage_95 = coverage(intervals, tv->second);
                cm.posterior_median = median_of(est);
                cm.ci_2_5 = median_of(lo);
                cm.ci_97_5 = median_of(hi);
                report.coefficients.push_back(cm);
            }
        }
    }
    return report;
}

const CoefficientMetrics& ComparisonReport::find(const std::string& scenario, const std::string& model,
                                                 const std::string& coefficient) const {
    for (const auto& c : coefficients) {
        if (c.scenario == scenario && c.model == model && c.coefficient == coefficient) {
            return c;
        }
    }
    throw ValidationError("no metrics for scenario " + scenario + ", model " + model + ", coefficient " +
                          coefficient);
}

const ModelMetrics& ComparisonReport::find(const std::string& scenario, const std::string& model) const {
    for (const auto& m : models) {
        if (m.scenario == scenario && m.model == model) {
            return m;
        }
    }
    throw ValidationError("no metrics for scenario " + scenario + ", model " + model);
}

namespace {

template <class Getter>
std::string wide_table(const ComparisonReport& r, Getter get) {
    std::vector<std::string> models;
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& c : r.coefficients) {
        add_unique(models, c.model);
        add_unique(rows, std::pair{c.scenario, c.coefficient});
    }
    std::string out = "scenario,coefficient,truth,replicates";
    for (const auto& m : models) {
        out += "," + m;
    }
    out += '\n';
    for (const auto& [s, coef] : rows) {
        std::string cells;
        double truth = 0.0;
        int reps = 0;
        for (const auto& m : models) {
            cells += ',';
            for (const auto& c : r.coefficients) {
                if (c.scenario == s && c.coefficient == coef && c.model == m) {
                    cells += format_double(get(c));
                    truth = c.truth;
                    reps = std::max(reps, c.replicates);
                }
            }
        }
        out += s + "," + coef + "," + format_double(truth) + "," + std::to_string(reps) + cells + "\n";
    }
    return out;
}

}  // namespace

std::string ComparisonReport::rmse_csv() const {
    return wide_table(*this, [](const CoefficientMetrics& c) { return c.rmse; });
}

std::string ComparisonReport::bias_csv() const {
    return wide_table(*this, [](const CoefficientMetrics& c) { return c.bias; });
}

std::string ComparisonReport::coverage_csv() const {
    return wide_table(*this, [](const CoefficientMetrics& c) { return c.coverage_95; });
}

std::string ComparisonReport::dic_csv() const {
    std::string out = "scenario,model,replicates,dic,p_d,mean_deviance,max_posterior_loglik,not_converged\n";
    for (const auto& m : models) {
        out += m.scenario + "," + m.model + "," + std::to_string(m.replicates) + "," + format_double(m.dic) + "," +
               format_double(m.p_d) + "," + format_double(m.mean_deviance) + "," +
               format_double(m.max_posterior_loglik) + "," + std::to_string(m.not_converged) + "\n";
    }
    return out;
}

std::string fits_csv(const std::vector<ReplicateFit>& fits) {
    std::string out =
        "scenario,replicate,model,coefficient,median,q2_5,q97_5,dic,p_d,max_posterior_loglik,converged,max_r_hat\n";
    for (const auto& f : fits) {
        for (const auto& [name, s] : f.coefficients) {
            out += f.scenario + "," + std::to_string(f.replicate) + "," + f.model + "," + name + "," +
                   format_double(s.median) + "," + format_double(s.q2_5) + "," + format_double(s.q97_5) + "," +
                   format_double(f.dic.dic) + "," + format_double(f.dic.p_d) + "," +
                   format_double(f.max_posterior_loglik) + "," + (f.converged ? "true" : "false") + "," +
                   format_double(f.max_r_hat) + "\n";
        }
    }
    return out;
}

}  // namespace carlevel
