"""Model formula parser.

Grammar (hand-rolled recursive descent):

    formula   := NAME '~' term (('+' | '-') term)*
    term      := '1'
               | NAME
               | 'C' '(' NAME [',' 'ref' '=' VALUE] ')'
               | 'center' '(' NAME ')'

'-' is only valid before '1' and removes the intercept (on by default).
NAME is an identifier ([A-Za-z_] then [A-Za-z0-9_.]); VALUE runs to the
closing ')' and is stripped of surrounding whitespace, so reference
levels may contain spaces or punctuation.
"""

from __future__ import annotations

import re

from .errors import FormulaError
from .frame import CategoricalTerm, CenteredTerm, ModelSpec, NumericTerm

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")


class _Cursor:
    def __init__(self, text):
        self.text = text
        self.i = 0

    def _skip_ws(self):
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def eof(self):
        self._skip_ws()
        return self.i >= len(self.text)

    def peek(self):
        self._skip_ws()
        return self.text[self.i] if self.i < len(self.text) else ""

    def expect(self, ch):
        if self.peek() != ch:
            found = self.peek() or "end of formula"
            raise FormulaError(f"expected {ch!r}, found {found!r} in {self.text!r}")
        self.i += 1

    def name(self):
        self._skip_ws()
        m = _NAME_RE.match(self.text, self.i)
        if m is None:
            found = self.peek() or "end of formula"
            raise FormulaError(f"expected a name, found {found!r} in {self.text!r}")
        self.i = m.end()
        return m.group()

    def until(self, stop):
        start = self.i
        while self.i < len(self.text) and self.text[self.i] != stop:
            self.i += 1
        return self.text[start:self.i].strip()


def parse_formula(text):
    """Parse a formula string into a ModelSpec."""
    cur = _Cursor(text)
    response = cur.name()
    cur.expect("~")

    intercept = True
    terms = []
    first = True
    while not cur.eof():
        sign = "+"
        if not first:
            ch = cur.peek()
            if ch not in "+-":
                raise FormulaError(f"expected '+' or '-' before {ch!r} in {text!r}")
            sign = ch
            cur.i += 1
        elif cur.peek() == "-":
            sign = "-"
            cur.i += 1
        first = False

        ch = cur.peek()
        if ch == "1":
            cur.i += 1
            intercept = sign == "+"
            continue
        if sign == "-":
            raise FormulaError("'-' may only remove the intercept ('-1')")
        name = cur.name()
        if name == "C" and cur.peek() == "(":
            cur.expect("(")
            column = cur.name()
            ref = None
            if cur.peek() == ",":
                cur.expect(",")
                key = cur.name()
                if key != "ref":
                    raise FormulaError(f"expected 'ref', found {key!r} in {text!r}")
                cur.expect("=")
                ref = cur.until(")")
                if not ref:
                    raise FormulaError(f"empty reference level in {text!r}")
            cur.expect(")")
            terms.append(CategoricalTerm(column=column, reference=ref))
        elif name == "center" and cur.peek() == "(":
            cur.expect("(")
            column = cur.name()
            cur.expect(")")
            terms.append(CenteredTerm(column=column))
        else:
            terms.append(NumericTerm(column=name))

    if first:
        raise FormulaError(f"formula {text!r} has no right-hand side")
    return ModelSpec(response=response, terms=tuple(terms), intercept=intercept)
