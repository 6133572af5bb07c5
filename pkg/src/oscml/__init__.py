"""oscml: oscillator simulation and machine-learning toolkit.

Generates ground-truth data for a multi-force classical pendulum (RK4) and a
quantum anharmonic oscillator (finite-difference eigensolver), and trains
small from-scratch neural models (dense/conv/LSTM regressors and
physics-informed networks) on that data.
"""

__version__ = "0.1.0"
