#pragma once

#include <string>
#include <string_view>

namespace fragility {

class Rng;

enum class Link { probit, logit, cloglog };

std::string_view to_string(Link link);
Link parse_link(std::string_view name);

// True for links whose error distribution is symmetric about zero.
bool is_symmetric(Link link);

/// Distribution function F(z) of the latent error.
double link_cdf(Link link, double z);

/// Survival function 1 - F(z), computed without cancellation.
double link_ccdf(Link link, double z);

// log F(z) and log(1 - F(z)); finite for every finite z.
double link_log_cdf(Link link, double z);
double link_log_ccdf(Link link, double z);

double link_pdf(Link link, double z);

/// Inverse of link_cdf. Throws InvalidArgument unless 0 < p < 1.
double link_quantile(Link link, double p);

/// Inverse of link_ccdf: the z with 1 - F(z) = q. Accurate in the upper tail.
double link_quantile_upper(Link link, double q);

/// Draw from the link distribution centred at `mean` (unit scale) truncated
/// to (lower, upper]. Bounds may be infinite. Uses the inverse-CDF transform,
/// switching to the survival scale when the interval sits in the upper tail.
double truncated_sample(Link link, double mean, double lower, double upper, Rng& rng);
double truncated_sample(Link link, double mean, double lower, double upper,
                        unsigned long long seed);

// Standard normal helpers used throughout.
inline double norm_cdf(double z) { return link_cdf(Link::probit, z); }
inline double norm_quantile(double p) { return link_quantile(Link::probit, p); }

}  // namespace fragility
