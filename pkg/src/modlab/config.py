"""Default numerical tolerances, kept in one place."""

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-10       # relative ||M - M^H|| / ||M||
    reconstruction: float = 1e-10  # relative eigen / polar reconstruction
    singular_ratio: float = 1e-12  # s_min / s_max below this is singular
    identity: float = 1e-12        # exact-arithmetic identities
    spectral: float = 1e-10        # identities routed through eigh
    kms: float = 1e-9
    invariance: float = 1e-12
    interior_ccr: float = 1e-8
    grid: float = 1e-4
    tail_mass: float = 1e-6
    growth_exponent: float = 0.1
    converged_step: float = 0.05

    def scaled(self, factor: float) -> "Tolerances":
        if factor <= 0:
            raise ValueError("tolerance scale must be positive")
        return replace(self, **{f.name: getattr(self, f.name) * factor
                                for f in fields(self)
                                if f.name not in ("growth_exponent", "converged_step")})


DEFAULT = Tolerances()
