"""VaR, CVaR and the IPA sensitivity estimator on a toy sample."""

import numpy as np
from scipy.stats import norm

from cvarsens import LossSample, cdf_gap_bound_check, estimate_all

rng = np.random.default_rng(0)

# L = theta * Z with theta = 2, so dL/dtheta = Z
z = rng.standard_normal(100_000)
sample = LossSample(2.0 * z, z)
est = estimate_all(sample, alpha=0.95)
print(est)

# exact values for a centred normal: VaR = 2 q, CVaR = 2 phi(q)/(1-alpha), dCVaR/dtheta = CVaR/2
q = norm.ppf(0.95)
cvar = 2 * norm.pdf(q) / 0.05
print("exact VaR %.4f  CVaR %.4f  sens %.4f" % (2 * q, cvar, cvar / 2))

# the estimator plugs in the sample quantile; with the true quantile the
# empirical CDF gap stays inside b^t/n + |F_n(v) - alpha|
print("gap bound holds:", cdf_gap_bound_check(sample, 0.95, 2 * q))
