"""
lfp_exceptions.py – lfp-lab specific exceptions
"""

# Every lfp-lab error should have the same format
# with a standard prefix and postfix defined here
pre = "\nlfp-lab: ["
post = "]"


class LfpException(Exception):
    pass

class LfpDomainException(LfpException):
    pass

class LfpConfigException(LfpException):
    pass

class LfpNumericalException(LfpException):
    pass

class LfpIOException(LfpException):
    pass

class LfpTrainingException(LfpException):
    pass


class SpectralDomainError(LfpDomainException):
    def __init__(self, quantity: str, value):
        self.quantity = quantity
        self.value = value

    def __str__(self):
        return f'{pre}{self.quantity} must be strictly positive, got: {self.value}{post}'

class UnknownActivation(LfpDomainException):
    def __init__(self, name):
        self.name = name

    def __str__(self):
        return f'{pre}Activation "{self.name}" is not defined. Choose relu or tanh{post}'

class InvalidDataset(LfpDomainException):
    def __init__(self, reason: str):
        self.reason = reason

    def __str__(self):
        return f'{pre}Invalid dataset: {self.reason}{post}'

class HermitianViolation(LfpDomainException):
    def __init__(self, residue: float):
        self.residue = residue

    def __str__(self):
        return f'{pre}Coefficients of a real function must satisfy phi(-k) = conj(phi(k)), residue: {self.residue:.3e}{post}'

class LatticeMismatch(LfpDomainException):
    def __init__(self, left, right):
        self.left = left
        self.right = right

    def __str__(self):
        return f'{pre}Lattice mismatch: {self.left} vs {self.right}{post}'

class InvalidZeroModePolicy(LfpDomainException):
    def __init__(self, policy, reason: str):
        self.policy = policy
        self.reason = reason

    def __str__(self):
        return f'{pre}Zero mode policy "{self.policy}": {self.reason}{post}'


class MonteCarloSpecMissing(LfpConfigException):
    def __init__(self, what: str):
        self.what = what

    def __str__(self):
        return f'{pre}A Monte Carlo spec (samples, seed) is required to average over a non point mass {self.what}{post}'

class QuadratureTooCoarse(LfpConfigException):
    def __init__(self, points: int, minimum: int):
        self.points = points
        self.minimum = minimum

    def __str__(self):
        return f'{pre}Projection needs at least {self.minimum} quadrature points per axis, got: {self.points}{post}'

class UnknownExperiment(LfpConfigException):
    def __init__(self, name):
        self.name = name

    def __str__(self):
        return f'{pre}Experiment "{self.name}" is not defined{post}'

class UnknownConfigKey(LfpConfigException):
    def __init__(self, section: str, keys):
        self.section = section
        self.keys = sorted(keys)

    def __str__(self):
        return f'{pre}Unknown key(s) {self.keys} in config section "{self.section}"{post}'

class InvalidConfigValue(LfpConfigException):
    def __init__(self, key: str, value, reason: str):
        self.key = key
        self.value = value
        self.reason = reason

    def __str__(self):
        return f'{pre}Config value {self.key}={self.value!r} {self.reason}{post}'

class NyquistViolation(LfpConfigException):
    def __init__(self, v, n_train: int):
        self.v = v
        self.n_train = n_train

    def __str__(self):
        return f'{pre}Frequency v={self.v} needs 2v < n_train, but n_train={self.n_train}{post}'

class ConfigFileOpen(LfpIOException):
    def __init__(self, path):
        self.path = path

    def __str__(self):
        return f'{pre}Cannot open this config file: "{self.path}"{post}'

class CheckpointFileOpen(LfpIOException):
    def __init__(self, path):
        self.path = path

    def __str__(self):
        return f'{pre}Cannot read network checkpoint: "{self.path}"{post}'


class IllConditionedGram(LfpNumericalException):
    def __init__(self, condition: float, limit: float):
        self.condition = condition
        self.limit = limit

    def __str__(self):
        return f'{pre}Gram matrix condition estimate {self.condition:.3e} exceeds {self.limit:.0e}.' \
               f' Use a larger lattice, fewer coincident points, or allow jitter{post}'

class FactorizationFailed(LfpNumericalException):
    def __init__(self, what: str, jitter: float):
        self.what = what
        self.jitter = jitter

    def __str__(self):
        return f'{pre}Cholesky factorization of the {self.what} failed even with jitter {self.jitter:.3e}{post}'

class RankDeficientSystem(LfpNumericalException):
    def __init__(self, rank: int, rows: int):
        self.rank = rank
        self.rows = rows

    def __str__(self):
        return f'{pre}Matrix has rank {self.rank} but {self.rows} rows are required to be independent{post}'

class UnstableTimeStep(LfpNumericalException):
    def __init__(self, dt: float, bound: float):
        self.dt = dt
        self.bound = bound

    def __str__(self):
        return f'{pre}Euler step dt={self.dt:.3e} is unstable, it must be below 2/lambda_max = {self.bound:.3e}{post}'

class TrajectoryNotConverged(LfpNumericalException):
    def __init__(self, ratio: float, threshold: float):
        self.ratio = ratio
        self.threshold = threshold

    def __str__(self):
        return f'{pre}Final/initial residual ratio {self.ratio:.3e} is not below the threshold {self.threshold}{post}'

class MissingZeroModeBound(LfpNumericalException):
    def __str__(self):
        return f'{pre}The zero excluded case needs the zero mode bound c0{post}'

class EnumerationTooLarge(LfpNumericalException):
    def __init__(self, n: int, limit: int):
        self.n = n
        self.limit = limit

    def __str__(self):
        return f'{pre}Exact Rademacher enumeration supports at most {self.limit} points, got: {self.n}{post}'


class OddAsiWidth(LfpTrainingException):
    def __init__(self, m: int):
        self.m = m

    def __str__(self):
        return f'{pre}Antisymmetric initialization pairs neurons, so width must be even and >= 2, got: {self.m}{post}'

class LearningRateTooLarge(LfpTrainingException):
    def __init__(self, lr: float):
        self.lr = lr

    def __str__(self):
        return f'{pre}Loss did not decrease over the first steps with lr={self.lr:.3e}. Try lr={self.lr / 2:.3e}{post}'

class TrainingDiverged(LfpTrainingException):
    def __init__(self, step: int, loss: float, initial: float):
        self.step = step
        self.loss = loss
        self.initial = initial

    def __str__(self):
        return f'{pre}Training diverged at step {self.step}: loss {self.loss:.3e} vs initial {self.initial:.3e}{post}'


class SplineFitError(LfpDomainException):
    def __init__(self, reason: str):
        self.reason = reason

    def __str__(self):
        return f'{pre}Cannot fit spline: {self.reason}{post}'

class SplineDomainError(LfpDomainException):
    def __init__(self, x: float, low: float, high: float):
        self.x = x
        self.low = low
        self.high = high

    def __str__(self):
        return f'{pre}Spline evaluation at x={self.x} outside knot range [{self.low}, {self.high}]{post}'
