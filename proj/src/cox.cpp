#include "gazelab/cox.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gazelab {

namespace {

struct EventGroup {
    double time = 0.0;
    std::vector<int> members;  // record indices with event at this time
};

// One stratum's records with sweep orderings and tied-event groups.
struct Stratum {
    std::string name;
    std::vector<int> records;        // indices into the full record array
    std::vector<int> by_stop_desc;   // records ordered by stop descending
    std::vector<int> by_start_desc;  // records ordered by start descending
    std::vector<EventGroup> events;  // descending time
    Eigen::Index n_events = 0;
};

struct CoxProblem {
    const std::vector<SurvivalRecord>* records = nullptr;
    std::vector<std::string> names;
    Eigen::MatrixXd z;  // n x q covariates
    std::vector<Stratum> strata;
};

struct Accumulated {
    double lpl = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;  // negative second derivative (information)
};

CoxProblem build_problem(const std::vector<SurvivalRecord>& records,
                         const std::vector<std::string>& names) {
    CoxProblem prob;
    prob.records = &records;
    prob.names = names;
    const Eigen::Index n = static_cast<Eigen::Index>(records.size());
    const Eigen::Index q = static_cast<Eigen::Index>(names.size());
    prob.z.setZero(n, q);
    for (Eigen::Index i = 0; i < n; ++i) {
        const SurvivalRecord& rec = records[static_cast<std::size_t>(i)];
        if (!(rec.start < rec.stop))
            throw StructuralError("survival record " + std::to_string(i) +
                                  " violates start < stop");
        for (const auto& [name, value] : rec.covariates) {
            for (Eigen::Index k = 0; k < q; ++k)
                if (names[static_cast<std::size_t>(k)] == name) {
                    prob.z(i, k) = value;
                    break;
                }
        }
    }

    for (Transition t : {Transition::to_target, Transition::from_target}) {
        Stratum stratum;
        stratum.name = to_string(t);
        for (Eigen::Index i = 0; i < n; ++i)
            if (records[static_cast<std::size_t>(i)].stratum == t)
                stratum.records.push_back(static_cast<int>(i));
        if (stratum.records.empty()) continue;

        stratum.by_stop_desc = stratum.records;
        std::stable_sort(stratum.by_stop_desc.begin(), stratum.by_stop_desc.end(),
                         [&](int a, int b) { return records[a].stop > records[b].stop; });
        stratum.by_start_desc = stratum.records;
        std::stable_sort(stratum.by_start_desc.begin(), stratum.by_start_desc.end(),
                         [&](int a, int b) { return records[a].start > records[b].start; });

        // Tied events grouped by exact stop time, descending.
        std::vector<int> event_records;
        for (int i : stratum.by_stop_desc)
            if (records[i].event == 1) event_records.push_back(i);
        for (std::size_t j = 0; j < event_records.size();) {
            EventGroup group;
            group.time = records[event_records[j]].stop;
            while (j < event_records.size() && records[event_records[j]].stop == group.time)
                group.members.push_back(event_records[j++]);
            stratum.n_events += static_cast<Eigen::Index>(group.members.size());
            stratum.events.push_back(std::move(group));
        }
        if (stratum.events.empty())
            throw StratumError("stratum " + stratum.name + " has records but no events");
        prob.strata.push_back(std::move(stratum));
    }
    if (prob.strata.empty()) throw EmptyInputError("fit_cox: no records");
    return prob;
}

// Sweeps a stratum once, evaluating the partial likelihood and optionally its
// derivatives and per-record score residuals.
void sweep_stratum(const CoxProblem& prob, const Stratum& stratum, const Eigen::VectorXd& eta,
                   const Eigen::VectorXd& risk, TieMethod ties, Accumulated* acc,
                   Eigen::MatrixXd* score_residuals) {
    const std::vector<SurvivalRecord>& records = *prob.records;
    const Eigen::Index q = prob.z.cols();
    const bool derivs = acc != nullptr && acc->gradient.size() > 0;

    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(q);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(q, q);

    std::size_t add_ptr = 0, remove_ptr = 0;
    // Ascending-time prefixes for the score residuals; filled while sweeping
    // descending and fixed up afterwards.
    struct EventTerms {
        double time;
        double h0 = 0.0;              // sum_k 1/S0_k
        Eigen::VectorXd h1;           // sum_k m_k / S0_k
        double corr0 = 0.0;           // sum_k (k/d) / S0_k
        Eigen::VectorXd corr1;        // sum_k (k/d) m_k / S0_k
        Eigen::VectorXd event_mean;   // (1/d) sum_k m_k
    };
    std::vector<EventTerms> terms;
    if (score_residuals) terms.reserve(stratum.events.size());

    for (const EventGroup& group : stratum.events) {
        const double t = group.time;
        while (add_ptr < stratum.by_stop_desc.size()) {
            const int i = stratum.by_stop_desc[add_ptr];
            if (records[i].stop < t) break;
            s0 += risk[i];
            if (derivs || score_residuals) {
                s1 += risk[i] * prob.z.row(i).transpose();
                if (derivs)
                    s2 += risk[i] * (prob.z.row(i).transpose() * prob.z.row(i));
            }
            ++add_ptr;
        }
        while (remove_ptr < stratum.by_start_desc.size()) {
            const int i = stratum.by_start_desc[remove_ptr];
            if (records[i].start < t) break;
            s0 -= risk[i];
            if (derivs || score_residuals) {
                s1 -= risk[i] * prob.z.row(i).transpose();
                if (derivs)
                    s2 -= risk[i] * (prob.z.row(i).transpose() * prob.z.row(i));
            }
            ++remove_ptr;
        }

        const double d = static_cast<double>(group.members.size());
        double s0d = 0.0;
        Eigen::VectorXd s1d = Eigen::VectorXd::Zero(q);
        Eigen::MatrixXd s2d = Eigen::MatrixXd::Zero(q, q);
        for (int i : group.members) {
            s0d += risk[i];
            if (derivs || score_residuals) {
                s1d += risk[i] * prob.z.row(i).transpose();
                if (derivs)
                    s2d += risk[i] * (prob.z.row(i).transpose() * prob.z.row(i));
            }
        }

        EventTerms term;
        term.time = t;
        if (score_residuals) {
            term.h1 = Eigen::VectorXd::Zero(q);
            term.corr1 = Eigen::VectorXd::Zero(q);
            term.event_mean = Eigen::VectorXd::Zero(q);
        }

        const int subterms = ties == TieMethod::efron ? static_cast<int>(d) : 1;
        for (int k = 0; k < subterms; ++k) {
            const double frac = ties == TieMethod::efron ? static_cast<double>(k) / d : 0.0;
            const double s0k = s0 - frac * s0d;
            if (s0k <= 0.0)
                throw SingularityError("fit_cox: empty risk set at event time " +
                                       std::to_string(t) + " in stratum " + stratum.name);
            if (acc) acc->lpl -= (ties == TieMethod::efron ? 1.0 : d) * std::log(s0k);
            if (derivs || score_residuals) {
                const Eigen::VectorXd m = (s1 - frac * s1d) / s0k;
                const double weight = ties == TieMethod::efron ? 1.0 : d;
                if (derivs) {
                    acc->gradient -= weight * m;
                    acc->hessian +=
                        weight * ((s2 - frac * s2d) / s0k - m * m.transpose());
                }
                if (score_residuals) {
                    term.h0 += weight / s0k;
                    term.h1 += weight * m / s0k;
                    term.corr0 += frac / s0k;
                    term.corr1 += frac * m / s0k;
                    term.event_mean += m / d * (ties == TieMethod::efron ? 1.0 : d);
                }
            }
        }
        for (int i : group.members) {
            if (acc) acc->lpl += eta[i];
            if (derivs) acc->gradient += prob.z.row(i).transpose();
        }
        if (score_residuals) terms.push_back(std::move(term));
    }

    if (!score_residuals) return;

    // Prefix sums in ascending time order for interval lookups.
    std::reverse(terms.begin(), terms.end());
    std::vector<double> times(terms.size());
    std::vector<double> p0(terms.size() + 1, 0.0);
    std::vector<Eigen::VectorXd> p1(terms.size() + 1, Eigen::VectorXd::Zero(q));
    for (std::size_t j = 0; j < terms.size(); ++j) {
        times[j] = terms[j].time;
        p0[j + 1] = p0[j] + terms[j].h0;
        p1[j + 1] = p1[j] + terms[j].h1;
    }
    auto count_le = [&](double t) {
        return static_cast<std::size_t>(
            std::upper_bound(times.begin(), times.end(), t) - times.begin());
    };
    for (int i : stratum.records) {
        const SurvivalRecord& rec = records[i];
        const std::size_t hi = count_le(rec.stop);
        const std::size_t lo = count_le(rec.start);
        Eigen::VectorXd u = -risk[i] * (prob.z.row(i).transpose() * (p0[hi] - p0[lo]) -
                                        (p1[hi] - p1[lo]));
        if (rec.event == 1) {
            // Locate this record's event group (the one at its stop time).
            const std::size_t j = count_le(rec.stop) - 1;
            const EventTerms& term = terms[j];
            u += prob.z.row(i).transpose() - term.event_mean;
            u += risk[i] * (prob.z.row(i).transpose() * term.corr0 - term.corr1);
        }
        score_residuals->row(i) = u.transpose();
    }
}

void evaluate(const CoxProblem& prob, const Eigen::VectorXd& beta, TieMethod ties,
              Accumulated* acc, Eigen::MatrixXd* score_residuals) {
    const Eigen::VectorXd eta = prob.z * beta;
    const double offset = eta.size() > 0 ? eta.maxCoeff() : 0.0;
    Eigen::VectorXd risk = (eta.array() - offset).exp();
    if (acc) {
        acc->lpl = 0.0;
        if (acc->gradient.size() > 0) {
            acc->gradient.setZero();
            acc->hessian.setZero();
        }
    }
    // The offset cancels in every ratio; only the log-denominator terms keep
    // it, one per event under either tie method.
    Eigen::Index total_events = 0;
    for (const Stratum& stratum : prob.strata) {
        sweep_stratum(prob, stratum, eta, risk, ties, acc, score_residuals);
        total_events += stratum.n_events;
    }
    if (acc) acc->lpl -= static_cast<double>(total_events) * offset;
}

}  // namespace

std::vector<std::string> cox_covariate_names(const std::vector<SurvivalRecord>& records) {
    std::vector<std::string> names;
    for (const SurvivalRecord& rec : records)
        for (const auto& [name, value] : rec.covariates)
            if (std::find(names.begin(), names.end(), name) == names.end())
                names.push_back(name);
    return names;
}

double cox_log_partial_likelihood(const std::vector<SurvivalRecord>& records,
                                  const std::vector<std::string>& names,
                                  const Eigen::VectorXd& beta, TieMethod ties) {
    CoxProblem prob = build_problem(records, names);
    Accumulated acc;
    evaluate(prob, beta, ties, &acc, nullptr);
    return acc.lpl;
}

Eigen::MatrixXd cox_score_residuals(const std::vector<SurvivalRecord>& records,
                                    const std::vector<std::string>& names,
                                    const Eigen::VectorXd& beta, TieMethod ties) {
    CoxProblem prob = build_problem(records, names);
    Eigen::MatrixXd residuals(static_cast<Eigen::Index>(records.size()),
                              static_cast<Eigen::Index>(names.size()));
    residuals.setZero();
    Accumulated acc;
    evaluate(prob, beta, ties, &acc, &residuals);
    return residuals;
}

HazardFit fit_cox(const std::vector<SurvivalRecord>& records, const CoxOptions& options) {
    const std::vector<std::string> names = cox_covariate_names(records);
    CoxProblem prob = build_problem(records, names);
    const Eigen::Index q = static_cast<Eigen::Index>(names.size());

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
    Accumulated acc;
    acc.gradient.resize(q);
    acc.hessian.resize(q, q);
    evaluate(prob, beta, options.ties, &acc, nullptr);
    for (Eigen::Index k = 0; k < q; ++k)
        if (acc.hessian(k, k) <= 0.0)
            throw SingularityError("fit_cox: covariate '" + names[static_cast<std::size_t>(k)] +
                                   "' carries no information (constant within risk sets)");

    bool converged = false;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        if (acc.gradient.cwiseAbs().maxCoeff() < options.gradient_tolerance) {
            converged = true;
            break;
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(acc.hessian);
        if (ldlt.info() != Eigen::Success)
            throw SingularityError("fit_cox: singular information matrix");
        const Eigen::VectorXd step = ldlt.solve(acc.gradient);
        const double old_lpl = acc.lpl;
        double scale = 1.0;
        Eigen::VectorXd candidate;
        for (int half = 0; half < 30; ++half) {
            candidate = beta + scale * step;
            evaluate(prob, candidate, options.ties, &acc, nullptr);
            if (acc.lpl >= old_lpl - 1e-12 * (1.0 + std::abs(old_lpl))) break;
            scale *= 0.5;
        }
        beta = candidate;
        if (!beta.allFinite())
            throw SingularityError("fit_cox: non-finite coefficient update");
        if (beta.cwiseAbs().maxCoeff() > options.divergence_bound)
            throw SeparationError(
                "fit_cox: monotone partial likelihood; a coefficient exceeds " +
                std::to_string(options.divergence_bound));
    }
    if (!converged) {
        evaluate(prob, beta, options.ties, &acc, nullptr);
        if (acc.gradient.cwiseAbs().maxCoeff() < options.gradient_tolerance)
            converged = true;
        else
            throw ConvergenceError("fit_cox: no convergence after " +
                                   std::to_string(options.max_iterations) + " iterations");
    }

    HazardFit fit;
    fit.names = names;
    fit.coefficients = beta;
    fit.log_partial_likelihood = acc.lpl;
    fit.iterations = iter;
    fit.converged = converged;
    for (const Stratum& stratum : prob.strata) fit.n_events[stratum.name] = stratum.n_events;

    Eigen::LDLT<Eigen::MatrixXd> info(acc.hessian);
    if (info.info() != Eigen::Success)
        throw SingularityError("fit_cox: singular information matrix at the optimum");
    fit.covariance_model = info.solve(Eigen::MatrixXd::Identity(q, q));

    // Cluster-aggregated score residuals give the robust sandwich.
    Eigen::MatrixXd residuals(static_cast<Eigen::Index>(records.size()), q);
    residuals.setZero();
    Accumulated unused;
    evaluate(prob, beta, options.ties, &unused, &residuals);
    std::map<std::pair<std::string, std::string>, Eigen::VectorXd> cluster_scores;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto key = std::make_pair(records[i].cluster_subject, records[i].cluster_item);
        auto it = cluster_scores.find(key);
        if (it == cluster_scores.end())
            cluster_scores.emplace(key, residuals.row(static_cast<Eigen::Index>(i)).transpose());
        else
            it->second += residuals.row(static_cast<Eigen::Index>(i)).transpose();
    }
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(q, q);
    for (const auto& [key, u] : cluster_scores) meat.noalias() += u * u.transpose();
    Eigen::MatrixXd cov = info.solve(info.solve(meat).transpose());
    fit.covariance_robust = 0.5 * (cov + cov.transpose());
    return fit;
}

TotalEffect total_effect(const HazardFit& fit, const std::string& main,
                         const std::string& interaction) {
    const int a = fit.index_of(main);
    const int b = fit.index_of(interaction);
    TotalEffect out;
    out.estimate = fit.coefficients[a] + fit.coefficients[b];
    out.se = std::sqrt(fit.covariance_robust(a, a) + fit.covariance_robust(b, b) +
                       2.0 * fit.covariance_robust(a, b));
    return out;
}

}  // namespace gazelab
