"""
Derivation-log text format, one record per line::

    <id> <rule> <conclusion-lits> 0 [p <parent-id> ...] [c <clause-index>]

Literals are DIMACS signed integers; the empty cube prints nothing before 0.
"""

import io
from typing import Iterable, List, TextIO, Union

from kra_sat.cnf import Cube
from kra_sat.engine import Derivation, RuleId
from kra_sat.errors import ProofFormatError


def format_derivation(d: Derivation) -> str:
    parts = [str(d.id), d.rule.name]
    parts.extend(str(lit) for lit in d.conclusion.literals)
    parts.append("0")
    if d.parents:
        parts.append("p")
        parts.extend(str(p) for p in d.parents)
    if d.source_clause is not None:
        parts.extend(("c", str(d.source_clause)))
    return " ".join(parts)


def format_log(log: Iterable[Derivation]) -> str:
    return "".join(format_derivation(d) + "\n" for d in log)


def _parse_line(line: str, line_no: int) -> Derivation:
    tokens = line.split()
    if len(tokens) < 3:
        raise ProofFormatError(f"short record `{line}`", line_no)
    try:
        did = int(tokens[0])
        rule = RuleId[tokens[1]]
    except (ValueError, KeyError):
        raise ProofFormatError(f"bad id or rule in `{line}`", line_no)

    pos = 2
    lits: List[int] = []
    while True:
        if pos >= len(tokens):
            raise ProofFormatError("conclusion is not terminated by 0", line_no)
        try:
            lit = int(tokens[pos])
        except ValueError:
            raise ProofFormatError(f"bad literal `{tokens[pos]}`", line_no)
        pos += 1
        if lit == 0:
            break
        lits.append(lit)

    parents: List[int] = []
    source_clause = None
    section = None
    for token in tokens[pos:]:
        if token in ("p", "c"):
            section = token
            continue
        try:
            value = int(token)
        except ValueError:
            raise ProofFormatError(f"bad token `{token}`", line_no)
        if section == "p":
            parents.append(value)
        elif section == "c" and source_clause is None:
            source_clause = value
        else:
            raise ProofFormatError(f"unexpected token `{token}`", line_no)

    # no canonicalization: the checker must see forged literal sets as written
    return Derivation(did, Cube(tuple(lits)), rule, tuple(parents), source_clause)


def parse_log(text: Union[str, TextIO]) -> List[Derivation]:
    stream = io.StringIO(text) if isinstance(text, str) else text
    log = []
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("c "):
            continue
        log.append(_parse_line(line, line_no))
    return log
