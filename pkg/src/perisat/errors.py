"""Exception hierarchy."""


class PerisatError(Exception):
    pass


class RdeError(PerisatError):
    """A periodic Riccati solve failed."""


class NoConvergence(RdeError):
    def __init__(self, residual, periods):
        self.residual = residual
        self.periods = periods
        super().__init__(
            f"period map did not converge: residual {residual:.3e} after {periods} periods"
        )


class Blowup(RdeError):
    def __init__(self, time, reason="non-finite or runaway value"):
        self.time = time
        self.reason = reason
        super().__init__(f"{reason} at t = {time:.6g} s")


class UpperBoundInfeasible(PerisatError):
    pass


class NoBracket(PerisatError):
    pass


class SimulationBlowup(PerisatError):
    def __init__(self, time):
        self.time = time
        super().__init__(f"closed-loop simulation diverged at t = {time:.6g} s")
