"""Sobol' nets, their two scramblings, and the elementary-interval check."""

import numpy as np

from cvarsens import check_net_property, mc_points, scramble_linear, scramble_nested, sobol_net

# the first 8 points of the 2-d Sobol' sequence
net = sobol_net(3, 2)
print(net.values)

# both scramblings keep every elementary interval of volume 1/8 holding one point
for scramble in (scramble_linear, scramble_nested):
    pts = scramble(net, seed=7)
    print(scramble.__name__, check_net_property(pts, t=0, m=3, d=2))

# i.i.d. uniforms almost never do
print("mc", check_net_property(mc_points(8, 2, seed=7), t=0, m=3, d=2))

# a scrambled point is uniform on (0,1): look at point 1 over many seeds
first = np.array([scramble_nested(sobol_net(0, 1), s).values[0, 0] for s in range(2000)])
print("mean %.3f  var %.4f  (uniform: 0.5, 0.0833)" % (first.mean(), first.var()))

# export for plotting elsewhere
scramble_linear(sobol_net(8, 2), seed=1).to_csv("sobol_linear_m8.csv")
