class KraSatError(Exception):
    """Base class for every error the solver raises on purpose."""


class CnfError(KraSatError):
    pass


class ComplementaryPair(CnfError):
    def __init__(self, var: int):
        super().__init__(f"literal set contains both x{var} and ~x{var}")
        self.var = var


class WidthOutOfRange(CnfError):
    def __init__(self, width: int, low: int, high: int):
        super().__init__(f"width {width} outside [{low}, {high}]")
        self.width = width


class EmptyClause(CnfError):
    """An empty clause makes the whole formula unsatisfiable."""

    def __init__(self, index: int = -1):
        where = f" (clause #{index})" if index >= 0 else ""
        super().__init__(f"empty clause{where}: formula is trivially UNSAT")
        self.index = index


class DimacsSyntaxError(CnfError):
    def __init__(self, message: str, line_no: int = 0):
        prefix = f"line {line_no}: " if line_no else ""
        super().__init__(f"{prefix}{message}")
        self.line_no = line_no


class VarOutOfRange(CnfError):
    def __init__(self, literal: int, n: int):
        super().__init__(f"literal {literal} exceeds declared variable count {n}")
        self.literal = literal
        self.n = n


class InvalidParams(CnfError):
    pass


class EngineError(KraSatError):
    pass


class IterationCapExceeded(EngineError):
    def __init__(self, cap: int):
        super().__init__(f"fixpoint did not settle within {cap} worklist pops")
        self.cap = cap


class UnclassifiablePair(EngineError):
    def __init__(self, w1: int, w2: int, conclusion_width: int):
        super().__init__(
            f"no rule label for parent widths ({w1}, {w2}) "
            f"with conclusion width {conclusion_width}"
        )
        self.widths = (w1, w2)
        self.conclusion_width = conclusion_width


class OracleError(KraSatError):
    pass


class TooLarge(OracleError):
    def __init__(self, n: int, limit: int):
        super().__init__(f"n={n} exceeds brute-force limit {limit}")
        self.n = n
        self.limit = limit


class HarnessError(KraSatError):
    pass


class PredicateNotSatisfied(HarnessError):
    pass


class ProofFormatError(KraSatError):
    def __init__(self, message: str, line_no: int = 0):
        prefix = f"line {line_no}: " if line_no else ""
        super().__init__(f"{prefix}{message}")
        self.line_no = line_no
