#include "popcal/eval/metrics.hpp"

#include "popcal/common/csv.hpp"
#include "popcal/common/error.hpp"
#include "popcal/common/math.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace popcal::eval {

double aemed(std::span<const double> samples, double observed)
{
    if (samples.empty()) {
        throw std::invalid_argument("AEMed needs at least one sample");
    }
    return std::fabs(observed - median(samples));
}

double semean(std::span<const double> samples, double observed)
{
    if (samples.empty()) {
        throw std::invalid_argument("SEMean needs at least one sample");
    }
    const double d = observed - mean(samples);
    return d * d;
}

double crps(std::span<const double> samples, double observed)
{
    if (samples.size() < 2) {
        throw std::invalid_argument("CRPS needs at least two samples");
    }
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double m = static_cast<double>(x.size());
    double abs_err = 0.0;
    double spread = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        abs_err += std::fabs(x[i] - observed);
        // sum_{i,j} |x_i - x_j| = 2 sum_i (2i - m + 1) x_(i) for sorted x.
        spread += (2.0 * static_cast<double>(i) - m + 1.0) * x[i];
    }
    return abs_err / m - spread / (m * m);
}

MetricReport report(std::span<const ModelPredictions> models)
{
    MetricReport out;
    for (const auto& mp : models) {
        const std::size_t n = mp.observed.size();
        if (mp.unit_ids.size() != n || mp.ducs.size() != n || mp.samples.size() != n) {
            throw std::invalid_argument("prediction arrays differ in length for model " + mp.model);
        }
        for (auto duc : uptake::kAllDucs) {
            double sum_ae = 0.0;
            double sum_se = 0.0;
            double sum_crps = 0.0;
            double sum_rate = 0.0;
            std::size_t count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (mp.ducs[i] != duc) {
                    continue;
                }
                sum_ae += aemed(mp.samples[i], mp.observed[i]);
                sum_se += semean(mp.samples[i], mp.observed[i]);
                sum_crps += crps(mp.samples[i], mp.observed[i]);
                sum_rate += mp.observed[i];
                ++count;
            }
            if (count == 0) {
                out.warnings.push_back("model " + mp.model + ": no test units in DUC " +
                                       std::string(uptake::duc_name(duc)) + "; stratum omitted");
                continue;
            }
            const double c = static_cast<double>(count);
            const double rate = sum_rate / c;
            auto pct = [&](double v) { return rate > 0.0 ? 100.0 * v / rate : std::numeric_limits<double>::quiet_NaN(); };
            const double ae = sum_ae / c;
            const double se = std::sqrt(sum_se / c);
            const double cr = sum_crps / c;
            out.rows.push_back({duc, "AEMed", mp.model, ae, pct(ae)});
            out.rows.push_back({duc, "SEMean", mp.model, se, pct(se)});
            out.rows.push_back({duc, "CRPS", mp.model, cr, pct(cr)});
        }
    }
    return out;
}

void add_loo(MetricReport& report, std::span<const std::string> models, std::span<const LooResult> results)
{
    if (models.size() != results.size()) {
        throw std::invalid_argument("model names and LOO results differ in length");
    }
    for (std::size_t m = 0; m < models.size(); ++m) {
        report.loo.push_back({models[m], results[m].elpd, results[m].se, results[m].k_brackets()});
    }
    for (std::size_t a = 0; a < models.size(); ++a) {
        for (std::size_t b = a + 1; b < models.size(); ++b) {
            const auto& ea = results[a].elpd_i;
            const auto& eb = results[b].elpd_i;
            if (ea.size() != eb.size()) {
                throw std::invalid_argument("LOO results cover different units");
            }
            std::vector<double> diff(ea.size());
            for (std::size_t i = 0; i < ea.size(); ++i) {
                diff[i] = ea[i] - eb[i];
            }
            const double n = static_cast<double>(diff.size());
            LooDifference d{models[a], models[b], results[a].elpd - results[b].elpd, 0.0};
            if (diff.size() > 1) {
                d.se_diff = std::sqrt(n * sample_variance(diff));
            }
            report.loo_differences.push_back(d);
        }
    }
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRow> rows)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << "duc,metric,model,value,value_pct\n";
    for (const auto& r : rows) {
        out << uptake::duc_name(r.duc) << ',' << r.metric << ',' << r.model << ',' << csv::format_real(r.value) << ','
            << csv::format_real(r.value_pct) << '\n';
    }
}

} // namespace popcal::eval
