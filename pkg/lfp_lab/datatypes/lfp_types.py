"""
lfp_types.py

Records passed between the spectral, solver, oracle and bound subsystems
"""

from collections import namedtuple

MonteCarloSpec = namedtuple('MonteCarloSpec', 'samples seed')
"""
How to estimate an expectation over the initial parameter distribution

    Attributes

    - samples -- (int) Number of independent draws
    - seed -- (int) Seed of the numpy Generator, so the estimate is reproducible
"""

Neurons = namedtuple('Neurons', 'a w b')
"""
A sample of hidden neurons

    Attributes

    - a -- (m,) output weights
    - w -- (m, d) input weights
    - b -- (m,) biases
"""

EquivalenceResult = namedtuple('EquivalenceResult', 'theta_ode theta_closed gap')
"""
Outcome of comparing the long time gradient flow with the closed form minimizer

    Attributes

    - theta_ode -- Parameter vector reached by the flow at the horizon
    - theta_closed -- Minimum norm solution of the constraint system
    - gap -- Euclidean distance between the two
"""

Band = namedtuple('Band', 'low high')
"""A half open annulus low <= |k| < high on the integer lattice"""

Trajectory = namedtuple('Trajectory', 'times states data_residuals')
"""
Snapshots of a spectral gradient flow

    Attributes

    - times -- Strictly increasing flow times
    - states -- One SpectralCoefficients per time, all on the same Lattice
    - data_residuals -- (n,) array h(x_i, t) - y_i per time
"""

BoundReport = namedtuple('BoundReport', 'case Q c0 n delta rad_bound risk_bound projection_residual grid_points')
"""
An a priori generalization bound

    Attributes

    - case -- 'all_modes' or 'zero_excluded'
    - Q -- FP-norm of f - h_ini (inf when unbounded)
    - c0 -- Zero mode bound (zero_excluded case only, otherwise None)
    - n -- Training sample count
    - delta -- Confidence level
    - rad_bound -- Rademacher complexity bound
    - risk_bound -- Population risk bound
    - projection_residual -- Sup error of the lattice projection of f on the check grid
    - grid_points -- Points per dimension used for sup norms
"""

SweepRow = namedtuple('SweepRow', 'v test_loss Q risk_bound rad_bound')
"""One target frequency of a frequency sweep (test_loss is an estimate of the population risk)"""

Finding = namedtuple('Finding', 'level message')
"""A config validation result, level is 'error' or 'warning'"""

NetSpec = namedtuple('NetSpec', 'model activation m asi lr loss_tol max_steps seed')
"""
Everything needed to build and train a finite width reference network

    Attributes

    - model -- ParamModel the neurons are drawn from
    - activation -- Activation of the hidden layer
    - m -- Width
    - asi -- Antisymmetric initialization
    - lr -- Step size, None for the NTK based default
    - loss_tol -- Target training MSE
    - max_steps -- Step budget
    - seed -- Initialization seed
"""
