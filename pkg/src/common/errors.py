from typing import Dict, Type


class SurjectivityError(RuntimeError):
    exit_code = 2


# =========================
# RINGS
# =========================
class NonPrime(SurjectivityError):
    pass


class SizeOverflow(SurjectivityError):
    pass


class DescriptorMismatch(SurjectivityError):
    pass


class NotAUnit(SurjectivityError):
    pass


class BadLevel(SurjectivityError):
    pass


# =========================
# GROUPS / LAYERS
# =========================
class ShapeMismatch(SurjectivityError):
    pass


class NotInstantiable(SurjectivityError):
    pass


class UnsupportedFamily(SurjectivityError):
    pass


class UnknownFamily(SurjectivityError):
    pass


class NotInvertible(SurjectivityError):
    pass


class NotAMember(SurjectivityError):
    pass


class NotInKernel(SurjectivityError):
    pass


class NotInLieAlgebra(SurjectivityError):
    pass


class WrongParity(SurjectivityError):
    pass


# =========================
# DECISIONS / CRITERIA
# =========================
class HypothesisMissing(SurjectivityError):
    pass


class IncompleteDatum(SurjectivityError):
    pass


class ExceptionListHit(SurjectivityError):
    exit_code = 30

    def __init__(self, message: str, factor: str = ""):
        super().__init__(message)
        self.factor = factor


# =========================
# BUDGETS
# =========================
class TooLarge(SurjectivityError):
    exit_code = 30


class BoundExceeded(SurjectivityError):
    exit_code = 30


class BudgetExhausted(SurjectivityError):
    exit_code = 30


class BudgetExceeded(SurjectivityError):
    exit_code = 30


class NotExactFiltration(SurjectivityError):
    exit_code = 30


class FactorizationTimeout(SurjectivityError):
    exit_code = 30


# =========================
# CURVES / CLI
# =========================
class ZeroDiscriminant(SurjectivityError):
    pass


class BadPrime(SurjectivityError):
    pass


class BadDegree(SurjectivityError):
    pass


class BadReduction(SurjectivityError):
    pass


class ParseError(SurjectivityError):
    pass


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, SurjectivityError):
        return exc.exit_code
    return 2


ERRORS_BY_NAME: Dict[str, Type[SurjectivityError]] = {
    cls.__name__: cls for cls in SurjectivityError.__subclasses__()
}