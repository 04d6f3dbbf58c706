#include "popcal/eval/sweep.hpp"

#include "popcal/common/csv.hpp"
#include "popcal/common/error.hpp"
#include "popcal/common/log.hpp"
#include "popcal/eval/psis.hpp"
#include "popcal/uptake/predict.hpp"

#include <fstream>

namespace popcal::eval {

namespace {

constexpr const char* kMetricNames[] = {"AEMed", "SEMean", "CRPS"};

} // namespace

ModelPredictions test_predictions(const uptake::UptakeModel& model, const mcmc::PosteriorDraws& draws,
                                  std::uint64_t seed)
{
    const auto& data = model.data();
    const auto test = data.indices(uptake::Split::Test);
    auto pred = uptake::posterior_predict(model, draws, test, seed);
    ModelPredictions out;
    out.model = std::string(uptake::model_name(model.kind()));
    for (std::size_t k = 0; k < test.size(); ++k) {
        const auto& u = data.units[test[k]];
        out.unit_ids.push_back(u.unit_id);
        out.ducs.push_back(u.duc);
        out.observed.push_back(u.rate());
    }
    out.samples = std::move(pred.rates);
    return out;
}

std::vector<SweepRow> basis_sweep(const uptake::UptakeDataset& data, std::span<const int> n_basis,
                                  const mcmc::SamplerConfig& sampler, std::uint64_t predict_seed)
{
    std::vector<SweepRow> rows;
    for (int nb : n_basis) {
        if (nb < 1) {
            throw UsageError("basis count must be at least 1");
        }
        uptake::ModelOptions opts;
        opts.kind = uptake::ModelKind::Full;
        opts.hsgp.n_basis = nb;
        const uptake::UptakeModel model(data, opts);
        log::info("basis sweep: fitting n_b = " + std::to_string(nb));
        const auto draws = mcmc::sample(model, sampler);
        const auto loo = psis_loo(uptake::pointwise_log_likelihood(model, draws));
        const auto preds = test_predictions(model, draws, predict_seed);
        SweepRow row;
        row.n_basis = nb;
        row.elpd_loo = loo.elpd;
        row.elpd_se = loo.se;
        row.pareto_k_high = loo.k_brackets()[2];
        auto rep = report(std::span<const ModelPredictions>(&preds, 1));
        for (const auto& w : rep.warnings) {
            log::warn(w);
        }
        row.metrics = std::move(rep.rows);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::string> sweep_columns()
{
    std::vector<std::string> cols{"n_basis", "elpd_loo", "elpd_se", "pareto_k_high"};
    for (auto duc : uptake::kAllDucs) {
        for (const char* m : kMetricNames) {
            const std::string base = std::string(uptake::duc_name(duc)) + "_" + m;
            cols.push_back(base);
            cols.push_back(base + "_pct");
        }
    }
    return cols;
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    const auto cols = sweep_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out << (i ? "," : "") << cols[i];
    }
    out << '\n';
    for (const auto& r : rows) {
        out << r.n_basis << ',' << csv::format_real(r.elpd_loo) << ',' << csv::format_real(r.elpd_se) << ','
            << r.pareto_k_high;
        for (auto duc : uptake::kAllDucs) {
            for (const char* m : kMetricNames) {
                const MetricRow* hit = nullptr;
                for (const auto& mr : r.metrics) {
                    if (mr.duc == duc && mr.metric == m) {
                        hit = &mr;
                    }
                }
                if (hit) {
                    out << ',' << csv::format_real(hit->value) << ',' << csv::format_real(hit->value_pct);
                } else {
                    out << ",,";
                }
            }
        }
        out << '\n';
    }
}

} // namespace popcal::eval
