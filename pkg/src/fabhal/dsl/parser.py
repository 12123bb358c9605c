"""Tokenizer and recursive-descent parser for fixture-hack programs.

The grammar is line-oriented and LL(1).  Parsing never raises on malformed
input: every failure becomes a diagnostic with a source span and the parser
resynchronizes at the next statement keyword.
"""

from __future__ import annotations

from dataclasses import dataclass

from fabhal.dsl.ast import (
    AddStmt,
    BinaryOp,
    ConnectStmt,
    EndWithStmt,
    FrameLiteral,
    NamePattern,
    Number,
    ParamDecl,
    ParamRef,
    PartDecl,
    Program,
    RangeDomain,
    RepeatBlock,
    SetDomain,
    SourceDiagnostic,
    Span,
)

__all__ = ["parse", "ParseResult"]

_KEYWORDS = {
    "assembly",
    "part",
    "add",
    "connect",
    "end_with",
    "at",
    "alignment",
    "is_fixed",
    "param",
    "in",
    "repeat",
    "count",
    "step",
    "true",
    "false",
    "default",
    "flip",
}

_PUNCT = {
    "(": "lparen",
    ")": "rparen",
    "{": "lbrace",
    "}": "rbrace",
    "[": "lbracket",
    "]": "rbracket",
    ",": "comma",
    ":": "colon",
    "=": "equals",
    ".": "dot",
    "$": "dollar",
    "+": "plus",
    "-": "minus",
    "*": "star",
    "/": "slash",
}


@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, number, punct kinds, eof
    text: str
    line: int
    col: int

    def span(self) -> Span:
        return Span(self.line, self.col, self.line, self.col + max(len(self.text), 1) - 1)


def _tokenize(text: str) -> tuple[list[Token], list[SourceDiagnostic]]:
    tokens: list[Token] = []
    diags: list[SourceDiagnostic] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "keyword" if word in _KEYWORDS else "ident"
            tokens.append(Token(kind, word, line, start_col))
            col += j - i
            i = j
            continue
        if ch.isdigit() or (
            ch == "." and i + 1 < n and text[i + 1].isdigit()
        ):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    # ".." is the range operator, not a decimal point
                    if j + 1 < n and text[j + 1] == ".":
                        break
                    seen_dot = True
                j += 1
            # exponent
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            tokens.append(Token("number", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch == "." and i + 1 < n and text[i + 1] == ".":
            tokens.append(Token("dotdot", "..", line, start_col))
            i += 2
            col += 2
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, line, start_col))
            i += 1
            col += 1
            continue
        diags.append(
            SourceDiagnostic(
                "error",
                f"unexpected character {ch!r}",
                Span.point(line, start_col),
            )
        )
        i += 1
        col += 1
    tokens.append(Token("eof", "", line, col))
    return tokens, diags


@dataclass
class ParseResult:
    program: Program | None
    diagnostics: list[SourceDiagnostic]

    @property
    def ok(self) -> bool:
        return self.program is not None and not any(
            d.severity == "error" for d in self.diagnostics
        )


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diags: list[SourceDiagnostic] = []
        self._bare_params = 0  # inside ${...} identifiers are parameter refs

    # -- token helpers -----------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind: str, text: str | None = None, what: str = "") -> Token | None:
        if self.at(kind, text):
            return self.next()
        t = self.peek()
        wanted = text or what or kind
        self.error(f"expected {wanted!r}, found {t.text or 'end of file'!r}", t.span())
        return None

    def error(self, message: str, span: Span, hint: str = "") -> None:
        self.diags.append(SourceDiagnostic("error", message, span, hint))

    def synchronize(self) -> None:
        """Skip to the next statement keyword or closing brace."""
        while not self.at("eof"):
            t = self.peek()
            if t.kind == "keyword" and t.text in (
                "part",
                "add",
                "connect",
                "end_with",
                "param",
                "repeat",
            ):
                return
            if t.kind == "rbrace":
                return
            self.next()

    # -- grammar -------------------------------------------------------------

    def parse_program(self) -> Program | None:
        if not self.expect("keyword", "assembly"):
            return None
        name_tok = self.peek()
        if name_tok.kind not in ("ident", "keyword"):
            self.error("expected an assembly name", name_tok.span())
            return None
        self.next()
        prog = Program(name_tok.text)
        prog.statements = self.parse_statements(until_rbrace=False)
        return prog

    def parse_statements(self, until_rbrace: bool) -> list:
        out = []
        while not self.at("eof"):
            if until_rbrace and self.at("rbrace"):
                break
            t = self.peek()
            if t.kind != "keyword":
                self.error(f"expected a statement, found {t.text!r}", t.span())
                self.next()
                self.synchronize()
                continue
            stmt = None
            if t.text == "part":
                stmt = self.parse_part()
            elif t.text == "add":
                stmt = self.parse_add()
            elif t.text == "connect":
                stmt = self.parse_connect()
            elif t.text == "end_with":
                stmt = self.parse_end_with()
            elif t.text == "param":
                stmt = self.parse_param()
            elif t.text == "repeat":
                stmt = self.parse_repeat()
            else:
                self.error(f"unexpected keyword {t.text!r} here", t.span())
                self.next()
            if stmt is None:
                self.synchronize()
            else:
                out.append(stmt)
        return out

    def _adjacent(self, prev: Token) -> bool:
        """Is the next token glued to ``prev`` with no whitespace?"""
        t = self.peek()
        return t.line == prev.line and t.col == prev.col + len(prev.text)

    def parse_name_pattern(self) -> NamePattern | None:
        parts: list = []
        t = self.peek()
        if t.kind in ("ident", "keyword"):
            parts.append(self.next().text)
            prev = t
        elif t.kind == "dollar":
            prev = None
        else:
            self.error("expected a name", t.span())
            return None
        while self.at("dollar") and (prev is None or self._adjacent(prev)):
            dollar = self.next()
            if self.at("lbrace"):
                # ${expr}: computed name segment, e.g. ring${i - 1}
                self.next()
                self._bare_params += 1
                try:
                    expr = self.parse_expr()
                finally:
                    self._bare_params -= 1
                if expr is None:
                    return None
                close = self.expect("rbrace")
                if close is None:
                    return None
                parts.append(expr)
                prev = close
            else:
                ident = self.peek()
                if ident.kind not in ("ident", "keyword"):
                    self.error("expected a parameter name after '$'", ident.span())
                    return None
                self.next()
                parts.append(ParamRef(ident.text))
                prev = ident
            if self.peek().kind in ("ident", "keyword") and self._adjacent(prev):
                nxt = self.next()
                parts.append(nxt.text)
                prev = nxt
        return NamePattern(tuple(parts))

    def parse_part(self) -> PartDecl | None:
        start = self.next()  # 'part'
        name = self.parse_name_pattern()
        if name is None or not self.expect("colon"):
            return None
        part_id = self.parse_name_pattern()
        if part_id is None:
            return None
        overrides: list[tuple[str, object]] = []
        if self.at("lbrace"):
            self.next()
            while not self.at("rbrace") and not self.at("eof"):
                key = self.peek()
                if key.kind not in ("ident", "keyword"):
                    self.error("expected an override name", key.span())
                    break
                self.next()
                if not self.expect("colon"):
                    break
                expr = self.parse_expr()
                if expr is None:
                    break
                overrides.append((key.text, expr))
                if self.at("comma"):
                    self.next()
                else:
                    break
            self.expect("rbrace")
        return PartDecl(name, part_id, tuple(overrides), start.span())

    def parse_ref(self) -> tuple[NamePattern, str | None] | None:
        name = self.parse_name_pattern()
        if name is None:
            return None
        prim = None
        if self.at("dot"):
            self.next()
            t = self.peek()
            if t.kind not in ("ident", "keyword"):
                self.error("expected a primitive name after '.'", t.span())
                return None
            self.next()
            prim = t.text
        return name, prim

    def parse_frame(self) -> FrameLiteral | None:
        pos = self.parse_vector3()
        if pos is None or not self.expect("comma"):
            return None
        ypr = self.parse_vector3()
        if ypr is None:
            return None
        return FrameLiteral(pos, ypr)

    def parse_vector3(self):
        if not self.expect("lbracket"):
            return None
        vals = []
        for k in range(3):
            e = self.parse_expr()
            if e is None:
                return None
            vals.append(e)
            if k < 2 and not self.expect("comma"):
                return None
        if not self.expect("rbracket"):
            return None
        return tuple(vals)

    def parse_add(self) -> AddStmt | None:
        start = self.next()
        ref = self.parse_ref()
        if ref is None or not self.expect("keyword", "at"):
            return None
        frame = self.parse_frame()
        if frame is None:
            return None
        return AddStmt(ref[0], ref[1], frame, start.span())

    def parse_end_with(self) -> EndWithStmt | None:
        start = self.next()
        ref = self.parse_ref()
        if ref is None or not self.expect("keyword", "at"):
            return None
        frame = self.parse_frame()
        if frame is None:
            return None
        return EndWithStmt(ref[0], ref[1], frame, start.span())

    def parse_connect(self) -> ConnectStmt | None:
        start = self.next()
        if not self.expect("lparen"):
            return None
        a = self.parse_endpoint()
        if a is None or not self.expect("comma"):
            return None
        b = self.parse_endpoint()
        if b is None:
            return None
        alignment = "default"
        is_fixed = False
        while self.at("comma"):
            self.next()
            t = self.peek()
            if t.kind == "keyword" and t.text == "alignment":
                self.next()
                if not self.expect("equals"):
                    return None
                v = self.peek()
                if v.kind == "keyword" and v.text in ("default", "flip"):
                    self.next()
                    alignment = v.text
                else:
                    self.error(
                        "alignment must be 'default' or 'flip'", v.span()
                    )
                    return None
            elif t.kind == "keyword" and t.text == "is_fixed":
                self.next()
                is_fixed = True
                if self.at("equals"):
                    self.next()
                    v = self.peek()
                    if v.kind == "keyword" and v.text in ("true", "false"):
                        self.next()
                        is_fixed = v.text == "true"
                    else:
                        self.error("is_fixed must be true or false", v.span())
                        return None
            else:
                self.error(f"unknown connect option {t.text!r}", t.span())
                return None
        if not self.expect("rparen"):
            return None
        return ConnectStmt(a, b, alignment, is_fixed, start.span())

    def parse_endpoint(self):
        ref = self.parse_ref()
        if ref is None:
            return None
        if ref[1] is None:
            self.error(
                "a connect endpoint needs the form instance.primitive",
                self.peek().span(),
            )
            return None
        return ref

    def parse_param(self) -> ParamDecl | None:
        start = self.next()
        name = self.peek()
        if name.kind not in ("ident", "keyword"):
            self.error("expected a parameter name", name.span())
            return None
        self.next()
        if not self.expect("keyword", "in"):
            return None
        if self.at("lbrace"):
            self.next()
            values = []
            while not self.at("rbrace") and not self.at("eof"):
                t = self.peek()
                if t.kind in ("ident", "keyword", "number"):
                    values.append(self.next().text)
                else:
                    self.error("expected a value in the set", t.span())
                    return None
                if self.at("comma"):
                    self.next()
                else:
                    break
            if not self.expect("rbrace") or not values:
                return None
            return ParamDecl(name.text, SetDomain(tuple(values)), start.span())
        lo = self.parse_number_literal()
        if lo is None or not self.expect("dotdot"):
            return None
        hi = self.parse_number_literal()
        if hi is None:
            return None
        count = None
        if self.at("keyword", "count"):
            self.next()
            c = self.parse_number_literal()
            if c is None:
                return None
            count = int(c)
        elif self.at("keyword", "step"):
            self.next()
            s = self.parse_number_literal()
            if s is None or s <= 0:
                self.error("step must be positive", start.span())
                return None
            count = int(round((hi - lo) / s)) + 1
        return ParamDecl(name.text, RangeDomain(lo, hi, count), start.span())

    def parse_number_literal(self) -> float | None:
        neg = False
        if self.at("minus"):
            self.next()
            neg = True
        t = self.peek()
        if t.kind != "number":
            self.error("expected a number", t.span())
            return None
        self.next()
        try:
            v = float(t.text)
        except ValueError:
            self.error(f"bad number literal {t.text!r}", t.span())
            return None
        return -v if neg else v

    def parse_repeat(self) -> RepeatBlock | None:
        start = self.next()
        var = self.peek()
        if var.kind not in ("ident", "keyword"):
            self.error("expected a loop variable", var.span())
            return None
        self.next()
        if not self.expect("keyword", "in"):
            return None
        lo = self.parse_expr()
        if lo is None or not self.expect("dotdot"):
            return None
        hi = self.parse_expr()
        if hi is None or not self.expect("lbrace"):
            return None
        body = self.parse_statements(until_rbrace=True)
        if not self.expect("rbrace"):
            return None
        return RepeatBlock(var.text, lo, hi, tuple(body), start.span())

    # -- expressions: precedence climbing over + - * / and parens ---------------

    def parse_expr(self):
        return self.parse_additive()

    def parse_additive(self):
        left = self.parse_multiplicative()
        if left is None:
            return None
        while self.at("plus") or self.at("minus"):
            op = self.next().text
            right = self.parse_multiplicative()
            if right is None:
                return None
            left = BinaryOp(op, left, right)
        return left

    def parse_multiplicative(self):
        left = self.parse_unary()
        if left is None:
            return None
        while self.at("star") or self.at("slash"):
            op = self.next().text
            right = self.parse_unary()
            if right is None:
                return None
            left = BinaryOp(op, left, right)
        return left

    def parse_unary(self):
        if self.at("minus"):
            self.next()
            inner = self.parse_unary()
            if inner is None:
                return None
            return BinaryOp("-", Number(0.0), inner)
        if self.at("lparen"):
            self.next()
            e = self.parse_expr()
            if e is None or not self.expect("rparen"):
                return None
            return e
        if self.at("dollar"):
            self.next()
            t = self.peek()
            if t.kind not in ("ident", "keyword"):
                self.error("expected a parameter name after '$'", t.span())
                return None
            self.next()
            return ParamRef(t.text)
        t = self.peek()
        if t.kind == "number":
            self.next()
            try:
                return Number(float(t.text))
            except ValueError:
                self.error(f"bad number literal {t.text!r}", t.span())
                return None
        if self._bare_params and t.kind in ("ident", "keyword"):
            self.next()
            return ParamRef(t.text)
        self.error(f"expected a value, found {t.text or 'end of file'!r}", t.span())
        return None


def parse(text: str) -> ParseResult:
    """Parse program text; never raises on any byte sequence."""
    try:
        if isinstance(text, bytes):
            text = text.decode("utf-8", errors="replace")
        tokens, lex_diags = _tokenize(text)
        parser = _Parser(tokens)
        program = parser.parse_program()
        diags = lex_diags + parser.diags
        if program is not None and not parser.at("eof"):
            t = parser.peek()
            diags.append(
                SourceDiagnostic("error", f"unexpected trailing input {t.text!r}", t.span())
            )
        return ParseResult(program if not any(d.severity == "error" for d in diags) else program, diags)
    except RecursionError:
        return ParseResult(
            None,
            [SourceDiagnostic("error", "input nests too deeply", Span.point(1, 1))],
        )
