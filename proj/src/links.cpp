#include "fragility/links.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fragility/error.hpp"
#include "fragility/rng.hpp"

namespace fragility {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Wichura (1988) AS241, accurate to about 1e-16.
double normal_quantile(double p) {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        ((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
            45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
         133.14166789178437745) * r + 3.387132872796366608;
    const double den =
        ((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
            21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
         42.313330701600911252) * r + 1.0;
    return q * num / den;
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        ((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
            1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
         4.6303378461565452959) * r + 1.42343711074968357734;
    const double den =
        ((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
            0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
         2.05319162663775882187) * r + 1.0;
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
            0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
         5.4637849111641143699) * r + 6.6579046435011037772;
    const double den =
        ((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
            7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
         0.59983220655588793769) * r + 1.0;
    value = num / den;
  }
  return q < 0 ? -value : value;
}

double normal_log_cdf(double z) {
  if (z > -37.0) return std::log(0.5 * std::erfc(-z * kInvSqrt2));
  // Mills-ratio asymptotic series; relative error below 1e-13 here.
  const double z2 = 1.0 / (z * z);
  const double series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2)));
  return -0.5 * z * z - kLogSqrt2Pi - std::log(-z) + std::log(series);
}

double logistic_log_cdf(double z) {
  return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

void require_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw InvalidArgument("link quantile requires 0 < p < 1, got " + std::to_string(p));
  }
}

}  // namespace

std::string_view to_string(Link link) {
  switch (link) {
    case Link::probit: return "probit";
    case Link::logit: return "logit";
    case Link::cloglog: return "cloglog";
  }
  return "?";
}

Link parse_link(std::string_view name) {
  if (name == "probit") return Link::probit;
  if (name == "logit") return Link::logit;
  if (name == "cloglog") return Link::cloglog;
  throw InvalidArgument("unknown link '" + std::string(name) + "' (expected probit, logit or cloglog)");
}

bool is_symmetric(Link link) { return link != Link::cloglog; }

double link_cdf(Link link, double z) {
  switch (link) {
    case Link::probit: return 0.5 * std::erfc(-z * kInvSqrt2);
    case Link::logit:
      if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
      else {
        const double e = std::exp(z);
        return e / (1.0 + e);
      }
    case Link::cloglog: return -std::expm1(-std::exp(z));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double link_ccdf(Link link, double z) {
  switch (link) {
    case Link::probit:
    case Link::logit: return link_cdf(link, -z);
    case Link::cloglog: return std::exp(-std::exp(z));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double link_log_cdf(Link link, double z) {
  switch (link) {
    case Link::probit: return normal_log_cdf(z);
    case Link::logit: return logistic_log_cdf(z);
    case Link::cloglog: {
      const double e = std::exp(z);
      return e > M_LN2 ? std::log1p(-std::exp(-e)) : std::log(-std::expm1(-e));
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double link_log_ccdf(Link link, double z) {
  switch (link) {
    case Link::probit: return normal_log_cdf(-z);
    case Link::logit: return logistic_log_cdf(-z);
    case Link::cloglog: return -std::exp(z);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double link_pdf(Link link, double z) {
  switch (link) {
    case Link::probit: return std::exp(-0.5 * z * z - kLogSqrt2Pi);
    case Link::logit: {
      const double e = std::exp(-std::fabs(z));
      return e / ((1.0 + e) * (1.0 + e));
    }
    case Link::cloglog: return std::exp(z - std::exp(z));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double link_quantile(Link link, double p) {
  require_probability(p);
  switch (link) {
    case Link::probit: return normal_quantile(p);
    case Link::logit: return std::log(p) - std::log1p(-p);
    case Link::cloglog: return std::log(-std::log1p(-p));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double link_quantile_upper(Link link, double q) {
  require_probability(q);
  switch (link) {
    case Link::probit: return -normal_quantile(q);
    case Link::logit: return std::log1p(-q) - std::log(q);
    case Link::cloglog: return std::log(-std::log(q));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double truncated_sample(Link link, double mean, double lower, double upper, Rng& rng) {
  if (!(lower < upper)) {
    throw InvalidArgument("truncated_sample requires lower < upper");
  }
  const double a = lower - mean;
  const double b = upper - mean;
  double z;
  if (a > 0.0) {
    // Upper tail: sample on the survival scale to keep precision.
    const double sa = link_ccdf(link, a);
    const double sb = link_ccdf(link, b);
    const double u = sb + (sa - sb) * rng.uniform();
    z = (u > 0.0 && u < 1.0) ? link_quantile_upper(link, u) : 0.5 * (a + b);
  } else {
    const double fa = link_cdf(link, a);
    const double fb = link_cdf(link, b);
    const double u = fa + (fb - fa) * rng.uniform();
    z = (u > 0.0 && u < 1.0) ? link_quantile(link, u) : 0.5 * (a + b);
  }
  if (!(z > a)) z = std::nextafter(a, std::numeric_limits<double>::infinity());
  if (z > b) z = b;
  return mean + z;
}

double truncated_sample(Link link, double mean, double lower, double upper,
                        unsigned long long seed) {
  Rng rng(seed);
  return truncated_sample(link, mean, lower, upper, rng);
}

}  // namespace fragility
