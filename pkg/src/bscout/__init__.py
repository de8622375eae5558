"""Outage analysis for ambient backscatter links coexisting with a legacy link.

Closed-form outage probabilities (with Gauss-Chebyshev and high-SNR variants)
for backscatter devices that harvest their operating energy from the legacy
carrier, plus the legacy link's own outage under backscatter interference,
all validated against direct Monte Carlo simulation of the physical model.
"""

__version__ = "0.1.0"
