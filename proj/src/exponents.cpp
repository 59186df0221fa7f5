#include "singsys/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace singsys {

namespace {

ExponentCheck open_interval(const std::string& name, double value, double lower,
                            double upper) {
    ExponentCheck c;
    c.name = name;
    c.value = value;
    c.lower = lower;
    c.upper = upper;
    if (std::isnan(lower) || std::isnan(upper)) {
        c.slack = std::numeric_limits<double>::quiet_NaN();
        c.ok = false;
    } else {
        c.slack = std::min(value - lower, upper - value);
        c.ok = std::isfinite(c.slack) && c.slack > 0.0;
    }
    return c;
}

}  // namespace

double ExponentConfig::p_star() const {
    return static_cast<double>(N) * p / (static_cast<double>(N) - p);
}

double ExponentConfig::q_star() const {
    return static_cast<double>(N) * q / (static_cast<double>(N) - q);
}

ExponentReport check_exponents(const ExponentConfig& cfg) {
    ExponentReport rep;
    const double nd = static_cast<double>(cfg.N);
    rep.checks.push_back(open_interval("p_range", cfg.p, 1.0, nd));
    rep.checks.push_back(open_interval("q_range", cfg.q, 1.0, nd));
    rep.checks.push_back(open_interval("alpha1_range", cfg.alpha1, -1.0, 0.0));
    rep.checks.push_back(open_interval("beta2_range", cfg.beta2, -1.0, 0.0));

    const bool conjugates_defined = rep.checks[0].ok && rep.checks[1].ok;
    if (conjugates_defined) {
        const double ps = cfg.p_star();
        const double qs = cfg.q_star();
        const double beta1_cap =
            std::min(cfg.p - 1.0, (qs / ps) * (cfg.p - 1.0 - cfg.alpha1));
        const double alpha2_cap =
            std::min(cfg.q - 1.0, (ps / qs) * (cfg.q - 1.0 - cfg.beta2));
        rep.checks.push_back(
            open_interval("beta1_range", cfg.beta1, 0.0, beta1_cap));
        rep.checks.push_back(
            open_interval("alpha2_range", cfg.alpha2, 0.0, alpha2_cap));
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rep.checks.push_back(open_interval("beta1_range", cfg.beta1, 0.0, nan));
        rep.checks.push_back(
            open_interval("alpha2_range", cfg.alpha2, 0.0, nan));
    }

    rep.pass = true;
    rep.min_slack = std::numeric_limits<double>::infinity();
    for (const ExponentCheck& c : rep.checks) {
        rep.pass = rep.pass && c.ok;
        if (std::isnan(c.slack))
            rep.min_slack = std::numeric_limits<double>::quiet_NaN();
        else if (!std::isnan(rep.min_slack))
            rep.min_slack = std::min(rep.min_slack, c.slack);
    }
    return rep;
}

}  // namespace singsys
