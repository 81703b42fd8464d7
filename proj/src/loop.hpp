#pragma once

// Constraint-horizon loop shared by the base estimator and its extensions.

#include <algorithm>
#include <cmath>
#include <sstream>

#include "posid/errors.hpp"
#include "posid/estimator.hpp"

namespace posid::detail {

// Longest prefix of g that is ever scanned for negativity.
inline constexpr long kMaxCheckLength = 100000;

// solve_at(m, length) must return a model whose g covers `length` lags.
template <class SolveAt>
PositiveIdModel constraint_loop(const PositiveIdConfig& config, const TimeSeriesData& data, const M0Result& bound,
                                SolveAt&& solve_at) {
    const long horizon = config.horizon_for(data);
    const long check = std::min(std::max(horizon, bound.m0), kMaxCheckLength);
    long m = data.span();
    PositiveIdModel model;
    std::vector<long> history;
    int iterations = 0;
    for (;;) {
        ++iterations;
        history.push_back(m);
        model = solve_at(m, check);
        if (model.diagnostics.status == QPStatus::Infeasible) {
            std::ostringstream msg;
            msg << "constraint-horizon QP reported infeasible at m=" << m;
            throw SolverError(msg.str());
        }
        const double tol = negativity_tolerance(model.a);
        const long scan = std::min(bound.m0, check);
        double worst = 0.0;
        for (long s = 0; s < scan; ++s) worst = std::min(worst, model.g.values(s));
        if (worst >= -tol) break;
        if (m >= bound.m0) {
            model.diagnostics.forced_at_cap = true;
            std::ostringstream note;
            note << "accepted at the m0 cap with min g = " << worst << " (tolerance " << tol << ")";
            model.diagnostics.note = note.str();
            break;
        }
        m = std::min(m + config.delta_m, bound.m0);
    }
    model.diagnostics.m0 = bound.m0;
    model.diagnostics.c0 = bound.c0;
    model.diagnostics.a0 = bound.a0;
    model.diagnostics.m_initial = data.span();
    model.diagnostics.iterations = iterations;
    model.diagnostics.m_history = std::move(history);
    model.diagnostics.min_checked = model.g.values.head(check).minCoeff();
    model.g = ImpulseResponse(model.g.values.head(horizon));
    if (model.h.horizon() > horizon) model.h = ImpulseResponse(model.h.values.head(horizon));
    return model;
}

}  // namespace posid::detail

namespace posid::detail {

void record_qp(IdDiagnostics& diag, const QPSolution& sol);
double tail_bound(const PositiveIdConfig& config, const TimeSeriesData& data, double h_norm2);

}  // namespace posid::detail
