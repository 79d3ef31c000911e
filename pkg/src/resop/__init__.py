"""Reservoir-operation decision toolkit.

Monthly single-reservoir water-balance environment, continuous-action
policy-gradient learners (ddpg, td3, sac18, sac19), standard-operating-
policy baselines, reliability/resilience/vulnerability/sustainability
metrics, and a synthetic streamflow generator, behind one CLI (`resop`).
"""

__version__ = "0.1.0"
