"""Kernel Hopfield networks, their Fisher-information geometry, and
phase-diagram sweeps over the (gamma, load) plane.

Subpackages:
    kernel_core -- pattern generation, RBF kernel, Gram matrices
    klr         -- per-neuron kernel logistic regression training
    infogeo     -- Fisher matrix, spectrum, natural gradient, norm reports
    dynamics    -- recall dynamics and overlap measurements
    sweep       -- (gamma, load) grid runner with CSV output
    svgplot     -- self-contained SVG heatmaps and spectrum plots
"""

__version__ = "0.1.0"
