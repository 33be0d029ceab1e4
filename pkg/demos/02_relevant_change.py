"""
Is the change large enough to matter?
=====================================

A mean shift of normalised size ``||delta||^2 / p = 0.8`` sits in 100
independent series.  The question is not whether there is a change but
whether it exceeds a practically relevant threshold ``Delta``.
"""

from relcpd import DGPSpec, TestConfig, report_sqrt_scale, simulate, test_dense

spec = DGPSpec(model="IND", n=200, p=100, signal=0.8, seed=1)
X = simulate(spec)
print("true change after observation", spec.k0)

# the threshold lives on the squared scale, like the statistic itself
for delta in (0.3, 0.6, 0.9):
    r = test_dense(X, TestConfig(delta=delta))
    print(f"Delta={delta}: T={r.T:.3f} V={r.V:.3f} reject={r.reject}")

r = test_dense(X, TestConfig(delta=0.3))
print("estimated change at", r.k_hat, "with trimming lag", r.m_hat)

# Delta_alpha is the largest threshold still rejected at level alpha: every
# Delta below it is rejected, every Delta above it is not
print("Delta_alpha =", round(r.delta_alpha, 3))
print("upper CI    =", tuple(round(x, 3) for x in r.ci_upper))
print("two-sided   =", tuple(round(x, 3) for x in r.ci_two_sided))

# the same numbers on the scale of ||delta|| / sqrt(p)
root = report_sqrt_scale(r)
print("on the norm scale: Delta_alpha =", round(root.delta_alpha, 3), "true =", round(0.8**0.5, 3))
