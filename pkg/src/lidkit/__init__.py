"""lidkit: local intrinsic dimension from Gaussian and ball convolutions.

Submodules:

* ``geometry``: synthetic manifolds, densities on them, samplers.
* ``schedule``: VE and VP diffusion noise schedules.
* ``convolve``: Gaussian and ball-convolution oracles.
* ``score``: exact and numeric score fields, trace estimators.
* ``estimators``: FLIPD, ball-slope, LIDL and ball-count estimators.
* ``harness``: configs, sweeps, verification suites and the CLI.
"""

from .convolve import ConvolutionOracle, ball_probability, dlogrho_ddelta_uniform
from .estimators import FLIPD, LIDL, BallCountLID, flipd, lidl_regress, nu, uniform_slope
from .schedule import VESchedule, VPSchedule, make_schedule
from .score import MixtureScore, hutchinson_trace, score_field_for

__version__ = "0.1.0"

__all__ = [
    "ConvolutionOracle",
    "ball_probability",
    "dlogrho_ddelta_uniform",
    "FLIPD",
    "LIDL",
    "BallCountLID",
    "flipd",
    "lidl_regress",
    "nu",
    "uniform_slope",
    "VESchedule",
    "VPSchedule",
    "make_schedule",
    "MixtureScore",
    "hutchinson_trace",
    "score_field_for",
]
