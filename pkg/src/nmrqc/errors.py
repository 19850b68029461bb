"""Exception types shared across the package.

Every error carries a short ``code`` (its class name) used by the command
line frontend, and an ``exit_code``: 1 for bad input, 2 for resource caps and
numerical failures.
"""


class NMRQCError(Exception):
    exit_code = 1

    @property
    def code(self) -> str:
        return type(self).__name__


class InputError(NMRQCError):
    exit_code = 1


class ResourceError(NMRQCError):
    exit_code = 2


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class UnknownLabel(InputError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"unknown nucleus label {label!r}")


class UnknownIsotope(InputError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown isotope {name!r}")


class DuplicateLabel(InputError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"duplicate nucleus label {label!r}")


class DuplicateCoupling(InputError):
    def __init__(self, a: str, b: str):
        self.pair = (a, b)
        super().__init__(f"conflicting duplicate coupling {a}-{b}")


class MissingShift(InputError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"nucleus {label!r} has no chemical shift")


class MissingCarrier(InputError):
    def __init__(self, isotope: str):
        self.isotope = isotope
        super().__init__(f"no carrier given for isotope {isotope}")


class QuadrupolarUnsupported(InputError):
    def __init__(self, label: str, isotope: str):
        super().__init__(
            f"nucleus {label!r}: quadrupolar isotope {isotope} unsupported (spin-1/2 only)"
        )


class EmptyChannel(InputError):
    def __init__(self, isotope: str):
        super().__init__(f"no nucleus of isotope {isotope} in system")


class InvalidGrid(InputError):
    pass


class GridMismatch(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NoCoupling(InputError):
    def __init__(self, a: str, b: str):
        self.pair = (a, b)
        super().__init__(f"no coupling between {a} and {b}")


class NoCouplingPath(InputError):
    pass


class NoFreeParameters(InputError):
    pass


class InvalidParameter(InputError):
    pass


class SizeCapExceeded(ResourceError):
    def __init__(self, n: int, cap: int):
        self.n = n
        self.cap = cap
        super().__init__(f"{n} spins exceeds the size cap of {cap} (set NMRQC_CAP to override)")


class CombinationCapExceeded(ResourceError):
    def __init__(self, needed: int, cap: int):
        self.needed = needed
        self.cap = cap
        super().__init__(f"enumeration needs {needed} subsets, cap is {cap}")


class NonFiniteObjective(ResourceError):
    def __init__(self, values):
        self.values = dict(values)
        shown = ", ".join(f"{k}={v!r}" for k, v in self.values.items())
        super().__init__(f"objective is not finite at {shown}")
