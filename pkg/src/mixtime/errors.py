"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit code 1), everything
raised while analysing a valid instance derives from
:class:`ComputationError` (exit code 2).
"""


class MixtimeError(Exception):
    pass


class InputError(MixtimeError):
    pass


class ComputationError(MixtimeError):
    pass


class ParseError(InputError):
    def __init__(self, reason, position=None, line=None):
        self.reason = reason
        self.position = position
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"position {position}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + reason)


class NotRealizable(InputError):
    pass


class NotConnected(InputError):
    pass


class NoNearPerfectMatching(InputError):
    pass


class NoPerfectMatching(InputError):
    pass


class WeightsNotFinalized(ComputationError):
    pass


class SizeCapExceeded(ComputationError):
    def __init__(self, size, cap, what="states"):
        self.size = size
        self.cap = cap
        super().__init__(f"{what}: {size} exceeds cap {cap}")


class NotErgodic(ComputationError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("chain is not ergodic: " + "; ".join(self.violations))


class NotReversible(ComputationError):
    pass


class NotUniform(ComputationError):
    pass


class LengthMismatch(ComputationError):
    pass


class EigensolverNoConvergence(ComputationError):
    def __init__(self, iterations, residual, tol):
        self.iterations = iterations
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"eigensolver did not converge after {iterations} iterations "
            f"(residual {residual:.3e}, tolerance {tol:.1e})"
        )


class SchemePathInvalid(ComputationError):
    def __init__(self, source, target, reason):
        self.source = source
        self.target = target
        super().__init__(f"invalid path {source} -> {target}: {reason}")


class Unreachable(ComputationError):
    pass
